"""Two-block convolutional detector, training loop and stratified k-fold CV."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .nn import Adam, Conv2D, Dense, Flatten, MaxPool2D, ReLU, Sequential, Softmax
from .nn import functional as F

log = logging.getLogger(__name__)

INPUT_SIDE = 64


@dataclass
class CnnConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    rng_seed: int = 0
    fold_count: int = 5

    def __post_init__(self):
        for name in ("epochs", "batch_size", "fold_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "loss", "accuracy"])
            for i, (loss, acc) in enumerate(zip(self.loss, self.accuracy), start=1):
                w.writerow([i, f"{loss:.10g}", f"{acc:.10g}"])


def build_cnn(rng: np.random.Generator | None = None, side: int = INPUT_SIDE) -> Sequential:
    """conv(32) -> pool -> conv(64) -> pool -> dense(128) -> softmax(2)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    conv1 = Conv2D(1, 32, 3, rng=rng, input_grad=False)
    conv2 = Conv2D(32, 64, 3, rng=rng)
    pooled = ((side - 2) // 2 - 2) // 2
    flat = pooled * pooled * 64
    return Sequential([
        conv1, ReLU(), MaxPool2D(2),
        conv2, ReLU(), MaxPool2D(2),
        Flatten(),
        Dense(flat, 128, rng=rng), ReLU(),
        Dense(128, 2, rng=rng), Softmax(),
    ])


def to_input(ink: np.ndarray) -> np.ndarray:
    """Bool ink batch (N, d, d) -> float NHWC with black = 1.0, white = 0.0."""
    ink = np.asarray(ink)
    if ink.dtype != bool:
        raise TypeError("detector input must be a two-valued (bool) image batch")
    return ink.astype(np.float64)[..., None]


def _check_dataset(images: np.ndarray, labels: np.ndarray, side: int) -> None:
    if len(images) == 0:
        raise ValueError("empty training set")
    if images.shape[1:] != (side, side):
        raise ValueError(f"images must be {side}x{side}, got {images.shape[1:]}")
    if len(images) != len(labels):
        raise ValueError("images and labels differ in length")
    if len(np.unique(labels)) < 2:
        raise ValueError("training set must contain both classes")


def predict_proba(model: Sequential, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[None]
    out = []
    for start in range(0, len(images), batch_size):
        out.append(model.infer(to_input(images[start : start + batch_size])))
    return np.concatenate(out) if out else np.zeros((0, 2))


def predict(model: Sequential, image, side: int = INPUT_SIDE) -> tuple[int, np.ndarray]:
    """Class and probability pair for one image; ties go to class 0."""
    ink = image.ink if hasattr(image, "ink") else np.asarray(image)
    if ink.shape != (side, side):
        raise ValueError(f"expected a {side}x{side} image, got {ink.shape}")
    probs = predict_proba(model, ink[None])[0]
    return int(probs[1] > probs[0]), probs


def predict_classes(model: Sequential, images: np.ndarray) -> np.ndarray:
    probs = predict_proba(model, images)
    return (probs[:, 1] > probs[:, 0]).astype(np.int64)


def train_cnn(images: np.ndarray, labels: np.ndarray, config: CnnConfig,
              model: Sequential | None = None) -> tuple[Sequential, TrainHistory]:
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    side = images.shape[-1] if images.ndim == 3 else INPUT_SIDE
    _check_dataset(images, labels, side)
    rng = np.random.default_rng(config.rng_seed)
    if model is None:
        model = build_cnn(rng, side)
    opt = Adam(model.params(), config.learning_rate)
    history = TrainHistory()
    n = len(images)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x = to_input(images[idx])
            y = labels[idx]
            opt.zero_grad()
            probs = model.forward(x, training=True)
            loss = F.cross_entropy(probs, y)
            model.backward(F.cross_entropy_grad(probs, y))
            opt.step()
            total_loss += loss * len(idx)
            correct += int(((probs[:, 1] > probs[:, 0]).astype(np.int64) == y).sum())
        history.loss.append(total_loss / n)
        history.accuracy.append(correct / n)
        if not np.isfinite(history.loss[-1]):
            raise FloatingPointError(f"non-finite training loss at epoch {epoch + 1}")
        log.info("epoch %d/%d loss %.4f acc %.4f", epoch + 1, config.epochs,
                 history.loss[-1], history.accuracy[-1])
    return model, history


def stratified_folds(labels: np.ndarray, fold_count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Index arrays for each validation fold; every sample lands in exactly one."""
    labels = np.asarray(labels)
    if len(labels) < fold_count:
        raise ValueError(f"{len(labels)} samples cannot fill {fold_count} folds")
    folds: list[list[int]] = [[] for _ in range(fold_count)]
    offset = 0
    for cls in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == cls))
        for i, idx in enumerate(members):
            folds[(offset + i) % fold_count].append(int(idx))
        # keep fold sizes level across classes
        offset = (offset + len(members)) % fold_count
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def kfold_cv(images: np.ndarray, labels: np.ndarray, config: CnnConfig) -> dict:
    images = np.asarray(images)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(config.rng_seed)
    folds = stratified_folds(labels, config.fold_count, rng)
    results = []
    for i, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(labels)), val_idx)
        fold_cfg = CnnConfig(config.epochs, config.batch_size, config.learning_rate,
                             config.rng_seed + i, config.fold_count)
        model, _ = train_cnn(images[train_idx], labels[train_idx], fold_cfg)
        acc = float((predict_classes(model, images[val_idx]) == labels[val_idx]).mean())
        results.append({"fold": i, "n_validation": int(len(val_idx)), "accuracy": acc})
        log.info("fold %d accuracy %.4f", i, acc)
    return {"folds": results, "mean_accuracy": float(np.mean([r["accuracy"] for r in results]))}
