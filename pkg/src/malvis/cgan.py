"""Label-conditioned GAN over flattened two-colour images.

Images live in "GAN space" while training: black pixels are +1, white
pixels -1, matching the generator's tanh range.  Generated images are
thresholded back to two colours before anything downstream sees them.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .nn import (Adam, BatchNorm, Dense, Embedding, LeakyReLU, Sequential, Sigmoid, Tanh,
                 load_checkpoint, save_checkpoint)
from .nn import functional as F
from .prs import BinaryImage

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "d_loss_real", "d_loss_fake", "g_loss", "d_acc_real", "d_acc_fake")


class GanDivergedError(FloatingPointError):
    def __init__(self, iteration: int, trace: "GanLossTrace"):
        super().__init__(f"non-finite GAN loss at iteration {iteration}")
        self.iteration = iteration
        self.trace = trace


@dataclass
class CganConfig:
    noise_dim: int = 100
    epochs: int = 100
    batch_size: int = 128
    d_learning_rate: float = 0.0002
    g_learning_rate: float = 0.0002
    beta1: float = 0.5
    label_count: int = 2
    embedding_dim: int = 50
    d_widths: tuple[int, ...] = (128, 256, 512)
    g_widths: tuple[int, ...] = (256, 512, 1024)
    bn_momentum: float = 0.8
    leaky_slope: float = 0.2
    merge: str = "concat"  # or "multiply": label projection scales the input elementwise
    d_update: str = "joint"  # or "split": separate D steps on the real and fake halves
    rng_seed: int = 0

    def __post_init__(self):
        self.d_widths = tuple(self.d_widths)
        self.g_widths = tuple(self.g_widths)
        for name in ("noise_dim", "epochs", "batch_size", "embedding_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.d_learning_rate <= 0 or self.g_learning_rate <= 0:
            raise ValueError("learning rates must be positive")
        if self.label_count != 2:
            raise ValueError("label_count must be 2")
        if self.d_update not in ("joint", "split"):
            raise ValueError("d_update must be 'joint' or 'split'")
        if self.merge not in ("concat", "multiply"):
            raise ValueError("merge must be 'concat' or 'multiply'")
        if not all(w > 0 for w in self.d_widths + self.g_widths):
            raise ValueError("layer widths must be positive")


@dataclass
class GanLossTrace:
    d_loss_real: list[float] = field(default_factory=list)
    d_loss_fake: list[float] = field(default_factory=list)
    g_loss: list[float] = field(default_factory=list)
    d_acc_real: list[float] = field(default_factory=list)
    d_acc_fake: list[float] = field(default_factory=list)

    def __len__(self):
        return len(self.g_loss)

    def append(self, **row: float) -> None:
        for key, value in row.items():
            getattr(self, key).append(float(value))

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in TRACE_COLUMNS[1:]]) if len(self) \
            else np.zeros((0, 5))

    def tail_means(self, n: int = 100) -> dict[str, float]:
        return {c: float(np.mean(getattr(self, c)[-n:])) for c in TRACE_COLUMNS[1:]}

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for i, row in enumerate(self.as_array(), start=1):
                w.writerow([i, *(f"{v:.10g}" for v in row)])


def to_gan(ink: np.ndarray) -> np.ndarray:
    """Bool ink -> +1 (black) / -1 (white) floats."""
    return np.where(np.asarray(ink, dtype=bool), 1.0, -1.0)


def from_gan(values: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    return np.asarray(values) > threshold


def binarize(raw: np.ndarray, threshold: float = 0.0) -> BinaryImage:
    """Strictly-greater-than threshold becomes black."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 1:
        side = int(round(np.sqrt(raw.size)))
        raw = raw.reshape(side, side)
    return BinaryImage(from_gan(raw, threshold))


class _Conditioned:
    """Shared label path: embedding -> dense projection -> merged with the input.

    "concat" appends the projection after the input; "multiply" scales the
    input by it elementwise.
    """

    def __init__(self, n_labels: int, emb_dim: int, proj_dim: int, body: Sequential,
                 rng: np.random.Generator, merge: str = "concat"):
        self.label_emb = Embedding(n_labels, emb_dim, rng=rng)
        self.label_proj = Dense(emb_dim, proj_dim, rng=rng)
        self.body = body
        self.merge = merge
        self._split = None
        self._merged = None

    def modules(self) -> dict[str, Sequential]:
        return {"label_emb": Sequential([self.label_emb]),
                "label_proj": Sequential([self.label_proj]), "body": self.body}

    def params(self):
        return self.label_emb.params() + self.label_proj.params() + self.body.params()

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()

    def forward(self, x: np.ndarray, labels: np.ndarray, training: bool = True) -> np.ndarray:
        cond = self.label_proj.forward(self.label_emb.forward(labels, training), training)
        self._split = x.shape[1]
        if self.merge == "multiply":
            self._merged = (x, cond)
            return self.body.forward(x * cond, training)
        return self.body.forward(np.concatenate([x, cond], axis=1), training)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        g = self.body.backward(grad)
        split, self._split = self._split, None
        if self.merge == "multiply":
            (x, cond), self._merged = self._merged, None
            self.label_emb.backward(self.label_proj.backward(g * x))
            return g * cond
        self.label_emb.backward(self.label_proj.backward(g[:, split:]))
        return g[:, :split]

    def discard(self):
        self.body.discard()
        self.label_emb._cache = self.label_proj._cache = None
        self._split = self._merged = None

    def infer(self, x, labels):
        out = self.forward(x, labels, training=False)
        self.discard()
        return out


class Discriminator(_Conditioned):
    def __init__(self, config: CganConfig, side: int, rng: np.random.Generator):
        n_px = side * side
        layers, width = [], (2 if config.merge == "concat" else 1) * n_px
        for w in config.d_widths:
            layers += [Dense(width, w, rng=rng), LeakyReLU(config.leaky_slope)]
            width = w
        layers += [Dense(width, 1, rng=rng), Sigmoid()]
        super().__init__(config.label_count, config.embedding_dim, n_px, Sequential(layers), rng,
                         config.merge)
        self.side = side


class Generator(_Conditioned):
    def __init__(self, config: CganConfig, side: int, rng: np.random.Generator):
        layers, width = [], (2 if config.merge == "concat" else 1) * config.noise_dim
        for w in config.g_widths:
            layers += [Dense(width, w, rng=rng), LeakyReLU(config.leaky_slope),
                       BatchNorm(w, momentum=config.bn_momentum)]
            width = w
        layers += [Dense(width, side * side, rng=rng), Tanh()]
        super().__init__(config.label_count, config.embedding_dim, config.noise_dim,
                         Sequential(layers), rng, config.merge)
        self.side = side
        self.noise_dim = config.noise_dim


def build_discriminator(config: CganConfig, side: int = 64,
                        rng: np.random.Generator | None = None) -> Discriminator:
    return Discriminator(config, side, rng if rng is not None else np.random.default_rng(config.rng_seed))


def build_generator(config: CganConfig, side: int = 64,
                    rng: np.random.Generator | None = None) -> Generator:
    return Generator(config, side, rng if rng is not None else np.random.default_rng(config.rng_seed))


def sample_labels(labels: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Conditioning labels for generated samples, drawn with the training label mix.

    Uniform labels on imbalanced data would let D score the label alone:
    with 2:1 benign, "benign means real" is right on 2/3 of real samples.
    """
    return labels[rng.integers(0, len(labels), size=n)]


def _accuracy(pred: np.ndarray, target: int) -> float:
    hits = pred > 0.5 if target == 1 else pred <= 0.5
    return float(hits.mean())


def train_cgan(images: np.ndarray, labels: np.ndarray, config: CganConfig,
               progress=None) -> tuple[Generator, Discriminator, GanLossTrace]:
    """Alternating updates: one D step on a real plus a generated half-batch, then one G step.

    ``images`` is a bool ink array (N, d, d) or GAN-space floats (N, d*d).
    """
    images = np.asarray(images)
    x_all = to_gan(images) if images.dtype == bool else images.astype(np.float64)
    x_all = x_all.reshape(len(x_all), -1)
    labels = np.asarray(labels, dtype=np.int64)
    if len(np.unique(labels)) < 2:
        raise ValueError("cGAN training needs both classes")
    if config.batch_size > len(x_all):
        raise ValueError("batch_size exceeds dataset size")
    side = int(round(np.sqrt(x_all.shape[1])))
    rng = np.random.default_rng(config.rng_seed)
    gen = build_generator(config, side, rng)
    disc = build_discriminator(config, side, rng)
    d_opt = Adam(disc.params(), config.d_learning_rate, beta1=config.beta1)
    g_opt = Adam(gen.params(), config.g_learning_rate, beta1=config.beta1)
    trace = GanLossTrace()
    half = config.batch_size // 2
    # joint: one D step on the mean loss over real and fake halves
    scale = 0.5 if config.d_update == "joint" else 1.0
    per_epoch = max(1, len(x_all) // config.batch_size)
    it = 0
    for epoch in range(config.epochs):
        for _ in range(per_epoch):
            it += 1
            idx = rng.integers(0, len(x_all), size=half)
            x_real, y_real = x_all[idx], labels[idx]

            z = rng.standard_normal((half, config.noise_dim))
            y_fake = sample_labels(labels, half, rng)
            x_fake = gen.forward(z, y_fake, training=True)
            gen.discard()

            d_opt.zero_grad()
            p_real = disc.forward(x_real, y_real)
            loss_real = F.binary_cross_entropy(p_real, 1.0)
            disc.backward(scale * F.binary_cross_entropy_grad(p_real, 1.0))
            if config.d_update == "split":
                d_opt.step()
                d_opt.zero_grad()
            p_fake = disc.forward(x_fake, y_fake)
            loss_fake = F.binary_cross_entropy(p_fake, 0.0)
            disc.backward(scale * F.binary_cross_entropy_grad(p_fake, 0.0))
            d_opt.step()

            # generator step through a frozen discriminator
            z = rng.standard_normal((config.batch_size, config.noise_dim))
            y_gen = sample_labels(labels, config.batch_size, rng)
            g_opt.zero_grad()
            x_gen = gen.forward(z, y_gen, training=True)
            p_gen = disc.forward(x_gen, y_gen)
            g_loss = F.binary_cross_entropy(p_gen, 1.0)
            gen.backward(disc.backward(F.binary_cross_entropy_grad(p_gen, 1.0)))
            disc.zero_grad()
            g_opt.step()

            trace.append(d_loss_real=loss_real, d_loss_fake=loss_fake, g_loss=g_loss,
                         d_acc_real=_accuracy(p_real, 1), d_acc_fake=_accuracy(p_fake, 0))
            if not np.isfinite([loss_real, loss_fake, g_loss]).all():
                raise GanDivergedError(it, trace)
        if progress is not None:
            progress(epoch + 1, trace)
        log.info("cgan epoch %d/%d %s", epoch + 1, config.epochs, trace.tail_means(per_epoch))
    return gen, disc, trace


def generate_raw(generator: Generator, labels: np.ndarray, rng: np.random.Generator,
                 batch_size: int = 256) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = []
    for start in range(0, len(labels), batch_size):
        lab = labels[start : start + batch_size]
        z = rng.standard_normal((len(lab), generator.noise_dim))
        out.append(generator.infer(z, lab))
    if not out:
        return np.zeros((0, generator.side * generator.side))
    return np.concatenate(out)


def generate_malign(generator: Generator, count: int, rng: np.random.Generator | int = 0,
                    threshold: float = 0.0) -> list[BinaryImage]:
    """``count`` generated class-1 images, thresholded to two colours."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    raw = generate_raw(generator, np.ones(count, dtype=np.int64), rng)
    side = generator.side
    return [BinaryImage(from_gan(r.reshape(side, side), threshold)) for r in raw]


def save_generator(path: str | os.PathLike, generator: Generator, config: CganConfig) -> None:
    meta = {"config": asdict(config), "side": generator.side}
    save_checkpoint(path, generator.modules(), meta)


def load_generator(path: str | os.PathLike) -> Generator:
    modules, meta = load_checkpoint(path)
    cfg = dict(meta["config"])
    config = CganConfig(**cfg)
    gen = Generator(config, meta["side"], np.random.default_rng(0))
    gen.label_emb = modules["label_emb"].layers[0]
    gen.label_proj = modules["label_proj"].layers[0]
    gen.body = modules["body"]
    gen.merge = config.merge
    return gen
