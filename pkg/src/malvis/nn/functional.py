"""Stateless forward/backward kernels on batched NHWC float64 arrays."""

from __future__ import annotations

import numpy as np

PROB_EPS = 1e-12


def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(N, H, W, C) -> (N, Ho, Wo, kh * kw * C) patch matrix, kernel-offset major."""
    n, h, w, c = x.shape
    ho, wo = h - kh + 1, w - kw + 1
    cols = np.empty((n, ho, wo, kh, kw, c))
    for p in range(kh):
        for q in range(kw):
            cols[:, :, :, p, q, :] = x[:, p : p + ho, q : q + wo, :]
    return cols.reshape(n, ho, wo, kh * kw * c)


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   cols: np.ndarray | None = None) -> np.ndarray:
    """Valid, stride-1 convolution.

    x: (N, H, W, C_in), w: (kh, kw, C_in, C_out), b: (C_out,)
    returns (N, H - kh + 1, W - kw + 1, C_out)
    """
    kh, kw, c_in, c_out = w.shape
    if x.ndim != 4 or x.shape[3] != c_in:
        raise ValueError(f"input {x.shape} does not match kernel {w.shape}")
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ValueError(f"kernel {kh}x{kw} does not fit input {x.shape[1:3]}")
    if cols is None:
        cols = im2col(x, kh, kw)
    return cols @ w.reshape(-1, c_out) + b


def conv2d_backward(
    x_shape: tuple[int, ...], cols: np.ndarray, w: np.ndarray, grad_out: np.ndarray,
    need_input_grad: bool = True,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients of a valid convolution given the forward patch matrix ``cols``."""
    kh, kw, c_in, c_out = w.shape
    g = grad_out.reshape(-1, c_out)
    dw = (cols.reshape(-1, cols.shape[-1]).T @ g).reshape(w.shape)
    db = g.sum(axis=0)
    dx = None
    if need_input_grad:
        n, ho, wo = grad_out.shape[:3]
        dcols = (g @ w.reshape(-1, c_out).T).reshape(n, ho, wo, kh, kw, c_in)
        dx = np.zeros(x_shape)
        for p in range(kh):
            for q in range(kw):
                dx[:, p : p + ho, q : q + wo, :] += dcols[:, :, :, p, q, :]
    return dx, dw, db


def maxpool2d_forward(x: np.ndarray, pool: int = 2) -> np.ndarray:
    """Floor-mode max pooling with stride equal to the pool size."""
    n, h, w, c = x.shape
    if h < pool or w < pool:
        raise ValueError(f"input {h}x{w} smaller than pool {pool}")
    ho, wo = h // pool, w // pool
    return x[:, : ho * pool, : wo * pool, :].reshape(n, ho, pool, wo, pool, c).max(axis=(2, 4))


def maxpool2d_backward(x: np.ndarray, out: np.ndarray, grad_out: np.ndarray,
                       pool: int = 2) -> np.ndarray:
    """Route each upstream gradient to the first maximal element of its window."""
    ho, wo = out.shape[1:3]
    dx = np.zeros_like(x)
    taken = np.zeros(out.shape, dtype=bool)
    for i in range(pool):
        for j in range(pool):
            hit = (x[:, i : ho * pool : pool, j : wo * pool : pool, :] == out) & ~taken
            taken |= hit
            dx[:, i : ho * pool : pool, j : wo * pool : pool, :] = np.where(hit, grad_out, 0.0)
    return dx


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.shape[-1] != w.shape[0] or b.shape != (w.shape[1],):
        raise ValueError(f"dense shapes do not conform: x {x.shape}, W {w.shape}, b {b.shape}")
    return x @ w + b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def leaky_relu(x: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def softmax(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-probability of the target class."""
    probs = np.atleast_2d(probs)
    targets = np.atleast_1d(targets)
    picked = probs[np.arange(len(targets)), targets]
    return float(-np.log(np.clip(picked, PROB_EPS, 1.0)).mean())


def cross_entropy_grad(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    probs = np.atleast_2d(probs)
    targets = np.atleast_1d(targets)
    n = len(targets)
    grad = np.zeros_like(probs)
    picked = probs[np.arange(n), targets]
    clipped = np.clip(picked, PROB_EPS, 1.0)
    grad[np.arange(n), targets] = np.where(picked > PROB_EPS, -1.0 / clipped, 0.0) / n
    return grad


def binary_cross_entropy(pred: np.ndarray, target: np.ndarray) -> float:
    p = np.clip(np.asarray(pred, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), p.shape)
    return float(-(t * np.log(p) + (1.0 - t) * np.log1p(-p)).mean())


def binary_cross_entropy_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    p = np.clip(pred, PROB_EPS, 1.0 - PROB_EPS)
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), p.shape)
    inside = (pred > PROB_EPS) & (pred < 1.0 - PROB_EPS)
    return np.where(inside, (p - t) / (p * (1.0 - p)), 0.0) / p.size
