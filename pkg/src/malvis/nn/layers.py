"""Layers with cached forward state and explicit backward passes.

Every layer maps a batch to a batch.  ``forward`` records whatever the
backward pass needs; ``backward`` consumes that record, accumulates
parameter gradients into ``Tensor.grad`` and returns the gradient with
respect to the layer input.  Calling ``backward`` twice for one forward is
an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import functional as F


class BackwardError(RuntimeError):
    """Backward requested without a matching recorded forward pass."""


class Tensor:
    """A float64 array plus a same-shape gradient slot."""

    def __init__(self, value, name: str = "", requires_grad: bool = True):
        self.value = np.array(value, dtype=np.float64)
        self.name = name
        self.grad = np.zeros_like(self.value) if requires_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def __repr__(self):
        return f"Tensor({self.name or '?'}, shape={self.shape})"


@dataclass
class LayerSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    kind = "layer"

    def __init__(self):
        self._cache = None

    def params(self) -> list[Tensor]:
        return []

    def spec(self) -> LayerSpec:
        return LayerSpec(self.kind)

    def output_shape(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        return input_shape

    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _take_cache(self):
        if self._cache is None:
            raise BackwardError(f"{self.kind}: backward called without a recorded forward")
        cache, self._cache = self._cache, None
        return cache

    def __call__(self, x, training: bool = True):
        return self.forward(x, training)


class Conv2D(Layer):
    kind = "conv2d"

    def __init__(self, in_channels: int, filters: int, kernel_size: int = 3,
                 rng: np.random.Generator | None = None, input_grad: bool = True):
        super().__init__()
        if min(in_channels, filters, kernel_size) < 1:
            raise ValueError("conv2d hyperparameters must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        k = kernel_size
        self.in_channels, self.filters, self.kernel_size = in_channels, filters, k
        self.input_grad = input_grad
        shape = (k, k, in_channels, filters)
        self.weight = Tensor(glorot_uniform(rng, shape, k * k * in_channels, k * k * filters), "kernel")
        self.bias = Tensor(np.zeros(filters), "bias")

    def params(self):
        return [self.weight, self.bias]

    def spec(self):
        return LayerSpec(self.kind, {"in_channels": self.in_channels, "filters": self.filters,
                                     "kernel_size": self.kernel_size})

    def output_shape(self, s):
        h, w, _ = s
        return (h - self.kernel_size + 1, w - self.kernel_size + 1, self.filters)

    def forward(self, x, training=True):
        k = self.kernel_size
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ValueError(f"conv2d expects (N, H, W, {self.in_channels}), got {x.shape}")
        if x.shape[1] < k or x.shape[2] < k:
            raise ValueError(f"kernel {k}x{k} does not fit input {x.shape[1:3]}")
        cols = F.im2col(x, k, k)
        self._cache = (x.shape, cols)
        return F.conv2d_forward(x, self.weight.value, self.bias.value, cols)

    def backward(self, grad):
        shape, cols = self._take_cache()
        dx, dw, db = F.conv2d_backward(shape, cols, self.weight.value, grad, self.input_grad)
        self.weight.grad += dw
        self.bias.grad += db
        return dx


class MaxPool2D(Layer):
    kind = "maxpool2d"

    def __init__(self, pool: int = 2):
        super().__init__()
        if pool < 1:
            raise ValueError("pool size must be positive")
        self.pool = pool

    def spec(self):
        return LayerSpec(self.kind, {"pool": self.pool})

    def output_shape(self, s):
        h, w, c = s
        return (h // self.pool, w // self.pool, c)

    def forward(self, x, training=True):
        out = F.maxpool2d_forward(x, self.pool)
        self._cache = (x, out)
        return out

    def backward(self, grad):
        x, out = self._take_cache()
        return F.maxpool2d_backward(x, out, grad, self.pool)


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, s):
        return (int(np.prod(s)),)

    def forward(self, x, training=True):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._take_cache())


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator | None = None):
        super().__init__()
        if n_in < 1 or n_out < 1:
            raise ValueError("dense widths must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_in, self.n_out = n_in, n_out
        self.weight = Tensor(glorot_uniform(rng, (n_in, n_out), n_in, n_out), "kernel")
        self.bias = Tensor(np.zeros(n_out), "bias")

    def params(self):
        return [self.weight, self.bias]

    def spec(self):
        return LayerSpec(self.kind, {"n_in": self.n_in, "n_out": self.n_out})

    def output_shape(self, s):
        return (self.n_out,)

    def forward(self, x, training=True):
        self._cache = x
        return F.dense_forward(x, self.weight.value, self.bias.value)

    def backward(self, grad):
        x = self._take_cache()
        self.weight.grad += x.T @ grad
        self.bias.grad += grad.sum(axis=0)
        return grad @ self.weight.value.T


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, training=True):
        self._cache = x > 0
        return F.relu(x)

    def backward(self, grad):
        return grad * self._take_cache()


class LeakyReLU(Layer):
    kind = "leaky_relu"

    def __init__(self, slope: float = 0.2):
        super().__init__()
        if not 0.0 < slope < 1.0:
            raise ValueError("leaky slope must lie in (0, 1)")
        self.slope = slope

    def spec(self):
        return LayerSpec(self.kind, {"slope": self.slope})

    def forward(self, x, training=True):
        self._cache = x >= 0
        return F.leaky_relu(x, self.slope)

    def backward(self, grad):
        pos = self._take_cache()
        return np.where(pos, grad, self.slope * grad)


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, training=True):
        y = F.sigmoid(x)
        self._cache = y
        return y

    def backward(self, grad):
        y = self._take_cache()
        return grad * y * (1.0 - y)


class Tanh(Layer):
    kind = "tanh"

    def forward(self, x, training=True):
        y = F.tanh(x)
        self._cache = y
        return y

    def backward(self, grad):
        y = self._take_cache()
        return grad * (1.0 - y * y)


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, training=True):
        y = F.softmax(x)
        self._cache = y
        return y

    def backward(self, grad):
        y = self._take_cache()
        return y * (grad - (grad * y).sum(axis=-1, keepdims=True))


class BatchNorm(Layer):
    """Per-feature batch normalisation over axis 0 of an (N, features) batch."""

    kind = "batchnorm"

    def __init__(self, n_features: int, momentum: float = 0.99, eps: float = 1e-5):
        super().__init__()
        self.n_features = n_features
        self.momentum, self.eps = momentum, eps
        self.gamma = Tensor(np.ones(n_features), "gamma")
        self.beta = Tensor(np.zeros(n_features), "beta")
        self.running_mean = np.zeros(n_features)
        self.running_var = np.ones(n_features)

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def spec(self):
        return LayerSpec(self.kind, {"n_features": self.n_features, "momentum": self.momentum,
                                     "eps": self.eps})

    def forward(self, x, training=True):
        if training:
            if x.shape[0] < 2:
                raise ValueError("batchnorm needs a batch of at least 2 in training mode")
            mean = x.mean(axis=0)
            var = x.var(axis=0)
            m = self.momentum
            self.running_mean = m * self.running_mean + (1 - m) * mean
            self.running_var = m * self.running_var + (1 - m) * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, training)
        return self.gamma.value * xhat + self.beta.value

    def backward(self, grad):
        xhat, inv_std, training = self._take_cache()
        self.gamma.grad += (grad * xhat).sum(axis=0)
        self.beta.grad += grad.sum(axis=0)
        g = grad * self.gamma.value
        if not training:
            return g * inv_std
        n = grad.shape[0]
        return inv_std / n * (n * g - g.sum(axis=0) - xhat * (g * xhat).sum(axis=0))


class Embedding(Layer):
    """Lookup table mapping integer class indices to learned rows."""

    kind = "embedding"

    def __init__(self, vocab: int, dim: int, rng: np.random.Generator | None = None):
        super().__init__()
        if vocab < 1 or dim < 1:
            raise ValueError("embedding sizes must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.vocab, self.dim = vocab, dim
        self.table = Tensor(rng.normal(0.0, 0.02, size=(vocab, dim)), "embeddings")

    def params(self):
        return [self.table]

    def spec(self):
        return LayerSpec(self.kind, {"vocab": self.vocab, "dim": self.dim})

    def forward(self, labels, training=True):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.vocab):
            raise IndexError(f"label out of range for vocabulary of {self.vocab}")
        self._cache = labels
        return self.table.value[labels]

    def backward(self, grad):
        labels = self._take_cache()
        np.add.at(self.table.grad, labels, grad)
        return None


class Sequential(Layer):
    kind = "sequential"

    def __init__(self, layers: list[Layer]):
        super().__init__()
        self.layers = list(layers)
        self._recorded = False

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def spec(self):
        return LayerSpec(self.kind, {"layers": [l.spec().to_dict() for l in self.layers]})

    def output_shape(self, s):
        for layer in self.layers:
            s = layer.output_shape(s)
        return s

    def shapes(self, input_shape: tuple[int, ...]) -> list[tuple[int, ...]]:
        """Per-layer output shapes (without the batch axis)."""
        out = []
        for layer in self.layers:
            input_shape = layer.output_shape(input_shape)
            out.append(input_shape)
        return out

    def forward(self, x, training=True):
        for layer in self.layers:
            x = layer.forward(x, training)
        self._recorded = True
        return x

    def infer(self, x):
        """Forward in inference mode without keeping any backward state."""
        y = self.forward(x, training=False)
        self.discard()
        return y

    def discard(self):
        """Drop recorded forward state so a stray backward fails loudly."""
        self._recorded = False
        for layer in self.layers:
            layer._cache = None

    def backward(self, grad):
        if not self._recorded:
            raise BackwardError("backward called without a recorded forward")
        self._recorded = False
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def zero_grad(self):
        for p in self.params():
            p.zero_grad()
