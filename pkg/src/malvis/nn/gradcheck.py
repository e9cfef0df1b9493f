"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Layer


def numerical_grad(f: Callable[[], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """d f / d x by central differences, perturbing ``x`` in place."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        fp = f()
        x[idx] = orig - h
        fm = f()
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    num = np.linalg.norm(analytic - numeric)
    den = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(num / den)


def check_layer(layer: Layer, x: np.ndarray, rng: np.random.Generator,
                h: float = 1e-5, training: bool = True) -> dict[str, float]:
    """Relative error of the layer's input and parameter gradients.

    The scalar probed is ``sum(forward(x) * u)`` for a fixed random ``u``.
    """
    out = layer.forward(x, training)
    u = rng.normal(size=out.shape)
    for p in layer.params():
        p.zero_grad()
    layer.forward(x, training)
    dx = layer.backward(u)

    def f():
        return float((layer.forward(x, training) * u).sum())

    errors = {}
    if dx is not None and np.issubdtype(np.asarray(x).dtype, np.floating):
        errors["input"] = relative_error(dx, numerical_grad(f, x, h))
    for i, p in enumerate(layer.params()):
        analytic = p.grad.copy()
        errors[f"{p.name or 'param'}[{i}]"] = relative_error(analytic, numerical_grad(f, p.value, h))
    layer._cache = None
    return errors
