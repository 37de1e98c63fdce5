"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

A ``Tensor`` wraps an ndarray and records the operations applied to it.
Calling ``backward()`` on a scalar result walks the recorded graph in
reverse topological order and accumulates ``grad`` arrays on every tensor
created with ``requires_grad=True``.

The operator set is deliberately small: exactly what a recurrent
encoder-decoder with elementwise losses needs (arithmetic with numpy
broadcasting, 2-D matmul, tanh/sigmoid/exp/log, ramp and clamp
nonlinearities, concatenation, reshape and masked summation). All data is
kept in float64; gradient checks against central finite differences rely
on that precision.

Subgradient conventions: ``relu`` has derivative 0 at the kink, ``clamp``
propagates gradient only strictly inside the interval.
"""

from __future__ import annotations

import numpy as np


def _as_data(x):
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """Node of the autodiff graph; behaves like a read-only float64 array."""

    # Keep numpy from broadcasting over us in `ndarray <op> Tensor`
    # expressions; python then falls back to our reflected operators.
    __array_ufunc__ = None
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents: tuple = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _make(data, parents, backward):
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accumulate(self, grad):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += _unbroadcast(grad, self.data.shape)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        a, b = self, _ensure_tensor(other)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g)
            if b.requires_grad:
                b._accumulate(g)

        return Tensor._make(a.data + b.data, (a, b), backward)

    __radd__ = __add__

    def __mul__(self, other):
        a, b = self, _ensure_tensor(other)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g * b.data)
            if b.requires_grad:
                b._accumulate(g * a.data)

        return Tensor._make(a.data * b.data, (a, b), backward)

    __rmul__ = __mul__

    def __neg__(self):
        a = self

        def backward(g):
            a._accumulate(-g)

        return Tensor._make(-a.data, (a,), backward)

    def __sub__(self, other):
        a, b = self, _ensure_tensor(other)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g)
            if b.requires_grad:
                b._accumulate(-g)

        return Tensor._make(a.data - b.data, (a, b), backward)

    def __rsub__(self, other):
        return _ensure_tensor(other) - self

    def __truediv__(self, other):
        a, b = self, _ensure_tensor(other)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g / b.data)
            if b.requires_grad:
                b._accumulate(-g * a.data / (b.data * b.data))

        return Tensor._make(a.data / b.data, (a, b), backward)

    def __rtruediv__(self, other):
        return _ensure_tensor(other) / self

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a = self

        def backward(g):
            a._accumulate(g * exponent * a.data ** (exponent - 1))

        return Tensor._make(a.data ** exponent, (a,), backward)

    def __matmul__(self, other):
        a, b = self, _ensure_tensor(other)

        def backward(g):
            if a.requires_grad:
                a._accumulate(g @ b.data.T)
            if b.requires_grad:
                b._accumulate(a.data.T @ g)

        return Tensor._make(a.data @ b.data, (a, b), backward)

    def __rmatmul__(self, other):
        return _ensure_tensor(other) @ self

    # -- nonlinearities --------------------------------------------------

    def tanh(self):
        a = self
        out_data = np.tanh(a.data)

        def backward(g):
            a._accumulate(g * (1.0 - out_data * out_data))

        return Tensor._make(out_data, (a,), backward)

    def sigmoid(self):
        a = self
        out_data = 1.0 / (1.0 + np.exp(-a.data))

        def backward(g):
            a._accumulate(g * out_data * (1.0 - out_data))

        return Tensor._make(out_data, (a,), backward)

    def exp(self):
        a = self
        out_data = np.exp(a.data)

        def backward(g):
            a._accumulate(g * out_data)

        return Tensor._make(out_data, (a,), backward)

    def log(self):
        a = self

        def backward(g):
            a._accumulate(g / a.data)

        return Tensor._make(np.log(a.data), (a,), backward)

    def relu(self):
        a = self

        def backward(g):
            a._accumulate(g * (a.data > 0.0))

        return Tensor._make(np.maximum(a.data, 0.0), (a,), backward)

    def clamp(self, low: float, high: float):
        a = self

        def backward(g):
            a._accumulate(g * ((a.data > low) & (a.data < high)))

        return Tensor._make(np.clip(a.data, low, high), (a,), backward)

    # -- shape ops ---------------------------------------------------------

    def reshape(self, *shape):
        a = self
        old = a.data.shape

        def backward(g):
            a._accumulate(g.reshape(old))

        return Tensor._make(a.data.reshape(*shape), (a,), backward)

    def sum_where(self, mask) -> "Tensor":
        """Scalar sum of the entries selected by a boolean mask.

        The forward value is computed on the compacted selection, so
        appending masked-out entries leaves the result bit-identical.
        """
        a = self
        mask = np.asarray(mask, dtype=bool)

        def backward(g):
            a._accumulate(g * mask)

        return Tensor._make(a.data[mask].sum(), (a,), backward)

    def sum(self) -> "Tensor":
        a = self

        def backward(g):
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())

        return Tensor._make(a.data.sum(), (a,), backward)

    # -- backward pass ----------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        order = _topological_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)


def _ensure_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _topological_order(root: Tensor) -> list:
    """Iterative DFS post-order over the graph reachable from `root`."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def concat(parts, axis: int = 1):
    """Concatenate tensors/arrays; differentiable in the tensor parts."""
    if not any(isinstance(p, Tensor) for p in parts):
        return np.concatenate([_as_data(p) for p in parts], axis=axis)
    tensors = [_ensure_tensor(p) for p in parts]
    widths = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t._accumulate(g[tuple(sl)])

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._make(data, tensors, backward)


# Dispatch helpers: the model and loss code is written once against these
# and runs on plain ndarrays (fast inference) or Tensors (training).

def tanh(x):
    return x.tanh() if isinstance(x, Tensor) else np.tanh(x)


def sigmoid(x):
    return x.sigmoid() if isinstance(x, Tensor) else 1.0 / (1.0 + np.exp(-x))


def exp(x):
    return x.exp() if isinstance(x, Tensor) else np.exp(x)


def log(x):
    return x.log() if isinstance(x, Tensor) else np.log(x)


def relu(x):
    return x.relu() if isinstance(x, Tensor) else np.maximum(x, 0.0)


def clamp(x, low, high):
    return x.clamp(low, high) if isinstance(x, Tensor) else np.clip(x, low, high)


def sum_where(x, mask):
    if isinstance(x, Tensor):
        return x.sum_where(mask)
    return np.asarray(x, dtype=np.float64)[np.asarray(mask, dtype=bool)].sum()


def value_of(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
