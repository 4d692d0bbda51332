"""Reverse-mode automatic differentiation over numpy arrays.

A :class:`Tensor` wraps a float64 ndarray and, when gradients are enabled,
records its parents and a closure mapping the output gradient to parent
gradients. :func:`backward` seeds a scalar loss with gradient 1 and walks the
recorded graph in reverse topological order, accumulating into ``.grad``.

Every op here is checked against central finite differences in the test
suite. Dropout takes an explicit numpy Generator so masks are a pure function
of the caller-provided stream, which keeps training runs bit-reproducible.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Iterable, Sequence

import numpy as np
from scipy.special import erf

_SQRT2 = float(np.sqrt(2.0))
_INV_SQRT_2PI = float(1.0 / np.sqrt(2.0 * np.pi))

_state = threading.local()


def _grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad():
    """Disable graph recording in this thread (evaluation-mode forwards)."""
    previous = _grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


class Tensor:
    """Node in a dynamically recorded differentiation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # operator sugar -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, scalar):
        if isinstance(scalar, Tensor):
            raise TypeError("tensor/tensor division is not supported; divide by a scalar")
        return mul(self, 1.0 / float(scalar))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data)
    if _grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def _accumulate(tensor: Tensor, grad: np.ndarray) -> None:
    if not tensor.requires_grad:
        return
    if tensor.grad is None:
        tensor.grad = np.array(grad, dtype=np.float64)
    else:
        tensor.grad += grad


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to ``shape``, inverting numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    collapse = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if collapse:
        grad = grad.sum(axis=collapse, keepdims=True)
    return grad


def backward(loss: Tensor, free_graph: bool = True) -> None:
    """Populate gradients of everything the scalar ``loss`` depends on.

    Gradients accumulate into ``.grad``; callers zero parameter grads between
    steps. ``free_graph`` releases intermediate references afterwards so long
    training runs do not retain every step's graph.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")

    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))

    _accumulate(loss, np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
        if free_graph and node._parents:
            node._parents = ()
            node._backward = None
            node.grad = None


# ---------------------------------------------------------------------------
# Primitive ops
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data + b.data

    def backward_fn(grad):
        _accumulate(a, _unbroadcast(grad, a.data.shape))
        _accumulate(b, _unbroadcast(grad, b.data.shape))

    return _node(data, (a, b), backward_fn)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    data = a.data * b.data

    def backward_fn(grad):
        _accumulate(a, _unbroadcast(grad * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(grad * a.data, b.data.shape))

    return _node(data, (a, b), backward_fn)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(
            f"matmul requires operands with ndim >= 2, got {a.data.shape} @ {b.data.shape}"
        )
    data = a.data @ b.data

    def backward_fn(grad):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(grad @ np.swapaxes(b.data, -1, -2), a.data.shape))
        if b.requires_grad:
            _accumulate(b, _unbroadcast(np.swapaxes(a.data, -1, -2) @ grad, b.data.shape))

    return _node(data, (a, b), backward_fn)


def gelu(x: Tensor) -> Tensor:
    """Exact (erf-based) Gaussian error linear unit."""
    x = as_tensor(x)
    values = x.data
    cdf = 0.5 * (1.0 + erf(values / _SQRT2))
    data = values * cdf

    def backward_fn(grad):
        pdf = np.exp(-0.5 * values * values) * _INV_SQRT_2PI
        _accumulate(x, grad * (cdf + values * pdf))

    return _node(data, (x,), backward_fn)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    data = exp / exp.sum(axis=axis, keepdims=True)

    def backward_fn(grad):
        inner = (grad * data).sum(axis=axis, keepdims=True)
        _accumulate(x, (grad - inner) * data)

    return _node(data, (x,), backward_fn)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    mean = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    normalized = (x.data - mean) * inv
    data = normalized * gain.data + bias.data

    def backward_fn(grad):
        if gain.requires_grad:
            _accumulate(gain, _unbroadcast(grad * normalized, gain.data.shape))
        if bias.requires_grad:
            _accumulate(bias, _unbroadcast(grad, bias.data.shape))
        if x.requires_grad:
            gx = grad * gain.data
            term_mean = gx.mean(axis=-1, keepdims=True)
            term_proj = (gx * normalized).mean(axis=-1, keepdims=True)
            _accumulate(x, inv * (gx - term_mean - normalized * term_proj))

    return _node(data, (x, gain, bias), backward_fn)


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when ``rng`` is None (evaluation mode)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    x = as_tensor(x)
    if rng is None or rate == 0.0:
        return x
    keep = rng.random(x.data.shape) >= rate
    scale = 1.0 / (1.0 - rate)
    data = x.data * keep * scale

    def backward_fn(grad):
        _accumulate(x, grad * keep * scale)

    return _node(data, (x,), backward_fn)


def cross_entropy(logits: Tensor, labels: Sequence[int] | np.ndarray) -> Tensor:
    """Mean negative log likelihood of integer class labels under softmax."""
    logits = as_tensor(logits)
    if logits.ndim != 2:
        raise ValueError(f"cross_entropy expects (batch, classes) logits, got {logits.shape}")
    targets = np.asarray(labels, dtype=np.int64)
    batch, n_classes = logits.shape
    if targets.shape != (batch,):
        raise ValueError(f"labels shape {targets.shape} does not match batch {batch}")
    if targets.size and (targets.min() < 0 or targets.max() >= n_classes):
        raise ValueError("label index out of range")
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z - zmax).sum(axis=1, keepdims=True)) + zmax
    rows = np.arange(batch)
    data = np.asarray((logsumexp[:, 0] - z[rows, targets]).mean())

    def backward_fn(grad):
        probs = np.exp(z - logsumexp)
        probs[rows, targets] -= 1.0
        _accumulate(logits, float(grad) * probs / batch)

    return _node(data, (logits,), backward_fn)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup into an embedding matrix; backward scatter-adds."""
    table = as_tensor(table)
    index = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ValueError(f"embedding table must be 2-d, got {table.shape}")
    if index.size and (index.min() < 0 or index.max() >= table.shape[0]):
        raise ValueError("embedding id out of range")
    data = table.data[index]

    def backward_fn(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, index.reshape(-1), grad.reshape(-1, table.data.shape[1]))
        _accumulate(table, full)

    return _node(data, (table,), backward_fn)


def getitem(x: Tensor, key) -> Tensor:
    """Basic (slice/integer/ellipsis) indexing; each element selected once."""
    x = as_tensor(x)
    data = x.data[key]

    def backward_fn(grad):
        full = np.zeros_like(x.data)
        full[key] = grad
        _accumulate(x, full)

    return _node(np.array(data), (x,), backward_fn)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ValueError("concat requires at least one tensor")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    boundaries = np.cumsum(sizes[:-1])

    def backward_fn(grad):
        for part, piece in zip(parts, np.split(grad, boundaries, axis=axis)):
            _accumulate(part, piece)

    return _node(data, tuple(parts), backward_fn)


def reduce_sum(x: Tensor, axis: int | tuple[int, ...] | None = None,
               keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(grad):
        if axis is None:
            _accumulate(x, np.broadcast_to(grad, x.data.shape))
            return
        axes = axis if isinstance(axis, tuple) else (axis,)
        expanded = grad if keepdims else np.expand_dims(grad, axes)
        _accumulate(x, np.broadcast_to(expanded, x.data.shape))

    return _node(np.array(data), (x,), backward_fn)


def reduce_mean(x: Tensor, axis: int | tuple[int, ...] | None = None,
                keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        count = x.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.data.shape[a] for a in axes]))
    return mul(reduce_sum(x, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    data = x.data.reshape(shape)

    def backward_fn(grad):
        _accumulate(x, grad.reshape(x.data.shape))

    return _node(data, (x,), backward_fn)


def swap_axes(x: Tensor, axis1: int, axis2: int) -> Tensor:
    x = as_tensor(x)
    data = np.swapaxes(x.data, axis1, axis2)

    def backward_fn(grad):
        _accumulate(x, np.swapaxes(grad, axis1, axis2))

    return _node(data, (x,), backward_fn)
