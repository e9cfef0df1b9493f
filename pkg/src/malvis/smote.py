"""SMOTE oversampling of the minority class on tabular counts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .prs import SampleRecord


@dataclass
class SmoteConfig:
    k_neighbors: int = 5
    target_count: int = 3000
    rng_seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")


def interpolate(t_j: np.ndarray, t_prime: np.ndarray, alpha: float) -> np.ndarray:
    """Point ``alpha`` of the way from ``t_j`` to ``t_prime`` (before rounding)."""
    t_j = np.asarray(t_j, dtype=np.float64)
    return t_j + (np.asarray(t_prime, dtype=np.float64) - t_j) * alpha


def to_counts(points: np.ndarray) -> np.ndarray:
    return np.maximum(np.rint(points), 0).astype(np.int64)


def nearest_neighbors(X: np.ndarray, k: int) -> np.ndarray:
    """(n, k) indices of each row's k nearest other rows by Euclidean distance.

    Exhaustive scan; equal distances keep the lower index first.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n <= k:
        raise ValueError(f"need more than k={k} samples, got {n}")
    out = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        d2 = ((X - X[i]) ** 2).sum(axis=1)
        d2[i] = np.inf
        out[i] = np.argsort(d2, kind="stable")[:k]
    return out


def smote_arrays(X: np.ndarray, n_new: int, k_neighbors: int, rng_seed: int,
                 return_trace: bool = False):
    """Generate ``n_new`` synthetic rows from minority matrix ``X``.

    Base rows are taken round-robin in input order; each draws one of its
    k nearest neighbours and an interpolation weight uniformly from [0, 1].
    With ``return_trace`` the (base index, neighbour index, alpha) triples
    are returned alongside the rounded counts.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError("minority samples must share one dimension")
    if n_new < 0:
        raise ValueError("target count is below the current minority size")
    rng = np.random.default_rng(rng_seed)
    if n_new == 0:
        empty = np.zeros((0, X.shape[1]), dtype=np.int64)
        return (empty, (np.zeros(0, np.int64),) * 2 + (np.zeros(0),)) if return_trace else empty
    nn = nearest_neighbors(X, k_neighbors)
    base = np.arange(n_new) % len(X)
    choice = rng.integers(0, k_neighbors, size=n_new)
    neighbor = nn[base, choice]
    alpha = rng.random(n_new)
    Xf = X.astype(np.float64)
    points = Xf[base] + (Xf[neighbor] - Xf[base]) * alpha[:, None]
    counts = to_counts(points)
    if return_trace:
        return counts, (base, neighbor, alpha)
    return counts


def smote_oversample(minority: Sequence[SampleRecord], config: SmoteConfig) -> list[SampleRecord]:
    if not minority:
        raise ValueError("no minority samples")
    widths = {len(s.values) for s in minority}
    if len(widths) != 1:
        raise ValueError(f"minority samples have differing dimensions {sorted(widths)}")
    labels = {s.label for s in minority}
    if len(labels) != 1:
        raise ValueError("minority samples must share one label")
    if len(minority) <= config.k_neighbors:
        raise ValueError(
            f"{len(minority)} samples are too few for k_neighbors={config.k_neighbors}"
        )
    (label,) = labels
    X = np.array([s.values for s in minority], dtype=np.int64)
    new = smote_arrays(X, config.target_count - len(minority), config.k_neighbors, config.rng_seed)
    return [SampleRecord(tuple(int(v) for v in row), label) for row in new]


def balance(X: np.ndarray, y: np.ndarray, k_neighbors: int = 5,
            rng_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the smaller class until both classes have equal counts."""
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise ValueError("balance expects exactly two classes")
    minority = classes[np.argmin(counts)]
    new = smote_arrays(X[y == minority], counts.max() - counts.min(), k_neighbors, rng_seed)
    X_out = np.concatenate([X, new])
    y_out = np.concatenate([y, np.full(len(new), minority, dtype=y.dtype)])
    return X_out, y_out
