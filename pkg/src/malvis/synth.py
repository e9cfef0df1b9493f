"""Synthetic labelled behavior-count data standing in for the unpublished collection.

Benign samples are sparse with small counts; malign samples have more
non-zero windows and heavier counts.  Nothing here models real system-call
behaviour; the generator exists so the pipeline can run end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_COUNT = 2**32 - 1


@dataclass
class SynthConfig:
    n_benign: int = 3000
    n_malign: int = 1465
    j: int = 128
    benign_sparsity: float = 0.15
    malign_sparsity: float = 0.45
    benign_scale: float = 20.0
    malign_scale: float = 2000.0
    sigma: float = 1.0  # log-normal shape
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_benign < 0 or self.n_malign < 0:
            raise ValueError("sample counts must be non-negative")
        if self.j < 1:
            raise ValueError("j must be positive")
        for name in ("benign_sparsity", "malign_sparsity"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.malign_sparsity <= self.benign_sparsity:
            raise ValueError("malign_sparsity must exceed benign_sparsity")
        if self.malign_scale <= self.benign_scale:
            raise ValueError("malign_scale must exceed benign_scale")


def _draw(rng: np.random.Generator, n: int, j: int, sparsity: float, scale: float,
          sigma: float) -> np.ndarray:
    active = rng.random((n, j)) < sparsity
    mags = np.rint(rng.lognormal(np.log(scale), sigma, size=(n, j)))
    mags = np.clip(mags, 1, MAX_COUNT)
    return np.where(active, mags, 0).astype(np.int64)


def gen_dataset(config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return (values (n, j) int64, labels (n,)), benign rows first."""
    rng = np.random.default_rng(config.rng_seed)
    benign = _draw(rng, config.n_benign, config.j, config.benign_sparsity,
                   config.benign_scale, config.sigma)
    malign = _draw(rng, config.n_malign, config.j, config.malign_sparsity,
                   config.malign_scale, config.sigma)
    X = np.concatenate([benign, malign]).reshape(-1, config.j)
    y = np.concatenate([np.zeros(config.n_benign, np.int64), np.ones(config.n_malign, np.int64)])
    return X, y


def split_train_test(X: np.ndarray, y: np.ndarray, test_per_class: int,
                     rng_seed: int = 0) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Hold out ``test_per_class`` samples of each class; the rest is training data."""
    rng = np.random.default_rng(rng_seed)
    test_idx = []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        if len(members) < test_per_class:
            raise ValueError(f"class {cls} has {len(members)} samples, need {test_per_class}")
        test_idx.extend(rng.choice(members, size=test_per_class, replace=False).tolist())
    test_idx = np.array(sorted(test_idx), dtype=np.int64)
    train_idx = np.setdiff1d(np.arange(len(y)), test_idx)
    return (X[train_idx], y[train_idx]), (X[test_idx], y[test_idx])
