"""Parameters, the AdamW optimizer, and the linear learning-rate schedule."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .autodiff import Tensor


class Parameter:
    """Named trainable tensor. Freezing a parameter detaches it from newly
    recorded graphs (``requires_grad`` follows ``trainable``) and the
    optimizer skips it, so frozen values stay bit-identical."""

    __slots__ = ("name", "value")

    def __init__(self, name: str, data: np.ndarray, trainable: bool = True):
        self.name = name
        self.value = Tensor(np.array(data, dtype=np.float64), requires_grad=trainable)

    @property
    def data(self) -> np.ndarray:
        return self.value.data

    @property
    def trainable(self) -> bool:
        return self.value.requires_grad

    @trainable.setter
    def trainable(self, flag: bool) -> None:
        self.value.requires_grad = bool(flag)
        if not flag:
            self.value.grad = None

    @property
    def grad(self) -> np.ndarray:
        """Accumulated gradient; zeros when the parameter was never touched."""
        if self.value.grad is None:
            return np.zeros_like(self.value.data)
        return self.value.grad

    def zero_grad(self) -> None:
        self.value.grad = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.data.shape}, trainable={self.trainable})"


def set_trainable(params: Iterable[Parameter], flag: bool) -> None:
    for param in params:
        param.trainable = flag


class AdamW:
    """Adam with decoupled weight decay and bias-corrected moments.

    The decay term ``lr * weight_decay * w`` is applied separately from the
    adaptive gradient step, so zero gradients with positive decay shrink the
    weights by exactly ``(1 - lr * weight_decay)``.
    """

    def __init__(
        self,
        params: Iterable[Parameter],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names passed to AdamW")
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = {p.name: np.zeros_like(p.data) for p in self.params}
        self._v = {p.name: np.zeros_like(p.data) for p in self.params}

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self, lr: float) -> None:
        if lr < 0:
            raise ValueError(f"learning rate must be nonnegative, got {lr}")
        self.step_count += 1
        correction1 = 1.0 - self.beta1**self.step_count
        correction2 = 1.0 - self.beta2**self.step_count
        for param in self.params:
            if not param.trainable:
                continue
            grad = param.grad
            if not np.all(np.isfinite(grad)):
                raise FloatingPointError(f"non-finite gradient for parameter {param.name!r}")
            m = self._m[param.name]
            v = self._v[param.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            if self.weight_decay:
                param.value.data *= 1.0 - lr * self.weight_decay
            m_hat = m / correction1
            v_hat = v / correction2
            param.value.data -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def linear_decay(step: int, total_steps: int, lr0: float) -> float:
    """Linear schedule ``lr0 * (1 - step / total_steps)``, no warmup."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if step < 0 or step > total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return lr0 * (1.0 - step / total_steps)
