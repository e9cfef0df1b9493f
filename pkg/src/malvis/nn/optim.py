"""SGD and Adam updates over lists of ``Tensor`` parameters."""

from __future__ import annotations

import numpy as np

from .layers import Tensor


class Optimizer:
    kind = "optimizer"

    def __init__(self, params: list[Tensor], learning_rate: float):
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        self.params = list(params)
        self.learning_rate = learning_rate
        self.steps = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        for p in self.params:
            if p.grad is None or p.grad.shape != p.value.shape:
                raise ValueError(f"gradient shape mismatch for {p!r}")
        self.steps += 1
        self._update()

    def _update(self) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def _update(self):
        for p in self.params:
            p.value -= self.learning_rate * p.grad


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(params, learning_rate)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def _update(self):
        t = self.steps
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self.m, self.v):
            m *= b1
            m += (1 - b1) * p.grad
            v *= b2
            v += (1 - b2) * p.grad * p.grad
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            p.value -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
