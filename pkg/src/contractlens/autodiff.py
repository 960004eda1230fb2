"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced; calling
``backward()`` on a scalar loss walks the tape in reverse topological order
and accumulates gradients into every tensor created with
``requires_grad=True``.

The functional helpers (relu, sigmoid, concat, ...) accept either Tensors
or plain ndarrays and return the matching type, so forward model code is
written once and reused for both training and inference.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    # make numpy defer to our reflected operators instead of coercing
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- construction of derived tensors ---------------------------------
    @staticmethod
    def _result(data, parents, backward) -> "Tensor":
        out = Tensor(data)
        if any(p.requires_grad or p._parents for p in parents):
            out._parents = parents
            out._backward = backward
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def T(self) -> "Tensor":
        out = Tensor._result(self.data.T, (self,),
                             lambda g, a=self: _accum(a, g.T))
        return out

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = as_tensor(other)
        def back(g, a=self, b=other):
            _accum(a, _unbroadcast(g, a.data.shape))
            _accum(b, _unbroadcast(g, b.data.shape))
        return Tensor._result(self.data + other.data, (self, other), back)

    __radd__ = __add__

    def __neg__(self):
        return Tensor._result(-self.data, (self,), lambda g, a=self: _accum(a, -g))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        def back(g, a=self, b=other):
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
            _accum(b, _unbroadcast(g * a.data, b.data.shape))
        return Tensor._result(self.data * other.data, (self, other), back)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        def back(g, a=self, b=other):
            _accum(a, _unbroadcast(g / b.data, a.data.shape))
            _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))
        return Tensor._result(self.data / other.data, (self, other), back)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self, other
        def back(g, a=a, b=b):
            ad, bd = a.data, b.data
            if ad.ndim == 2 and bd.ndim == 2:
                _accum(a, g @ bd.T)
                _accum(b, ad.T @ g)
            elif ad.ndim == 2 and bd.ndim == 1:
                _accum(a, np.outer(g, bd))
                _accum(b, ad.T @ g)
            elif ad.ndim == 1 and bd.ndim == 2:
                _accum(a, bd @ g)
                _accum(b, np.outer(ad, g))
            elif ad.ndim == 1 and bd.ndim == 1:
                _accum(a, g * bd)
                _accum(b, g * ad)
            else:  # pragma: no cover - shapes outside the supported set
                raise ValueError(f"unsupported matmul grad: {ad.shape} @ {bd.shape}")
        return Tensor._result(self.data @ other.data, (self, other), back)

    def __rmatmul__(self, other):
        return as_tensor(other) @ self

    def __getitem__(self, idx):
        def back(g, a=self, idx=idx):
            full = np.zeros_like(a.data)
            full[idx] += g
            _accum(a, full)
        return Tensor._result(self.data[idx], (self,), back)

    def sum(self, axis=None):
        def back(g, a=self, axis=axis):
            if axis is None:
                _accum(a, np.full_like(a.data, 1.0) * g)
            else:
                _accum(a, np.broadcast_to(np.expand_dims(g, axis), a.data.shape).copy())
        return Tensor._result(self.data.sum(axis=axis), (self,), back)

    def mean(self, axis=None):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis) / float(count)

    def reshape(self, *shape):
        def back(g, a=self):
            _accum(a, g.reshape(a.data.shape))
        return Tensor._result(self.data.reshape(*shape), (self,), back)

    def item(self) -> float:
        return float(self.data)

    # -- backprop ---------------------------------------------------------
    def backward(self, grad: np.ndarray | None = None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without gradient needs a scalar")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.asarray(grad, dtype=np.float64)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _accum(t: Tensor, g: np.ndarray):
    if not (t.requires_grad or t._parents):
        return
    t.grad = g if t.grad is None else t.grad + g


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def is_tensor(x) -> bool:
    return isinstance(x, Tensor)


# -- dual-backend functional helpers --------------------------------------

def relu(x):
    if isinstance(x, Tensor):
        mask = x.data > 0
        return Tensor._result(x.data * mask, (x,),
                              lambda g, a=x, m=mask: _accum(a, g * m))
    return np.maximum(x, 0.0)


def sigmoid(x):
    if isinstance(x, Tensor):
        s = 1.0 / (1.0 + np.exp(-x.data))
        return Tensor._result(s, (x,),
                              lambda g, a=x, s=s: _accum(a, g * s * (1.0 - s)))
    return 1.0 / (1.0 + np.exp(-x))


def tanh(x):
    if isinstance(x, Tensor):
        t = np.tanh(x.data)
        return Tensor._result(t, (x,),
                              lambda g, a=x, t=t: _accum(a, g * (1.0 - t * t)))
    return np.tanh(x)


def exp(x):
    if isinstance(x, Tensor):
        e = np.exp(x.data)
        return Tensor._result(e, (x,), lambda g, a=x, e=e: _accum(a, g * e))
    return np.exp(x)


def log(x):
    if isinstance(x, Tensor):
        return Tensor._result(np.log(x.data), (x,),
                              lambda g, a=x: _accum(a, g / a.data))
    return np.log(x)


def clip(x, lo: float, hi: float):
    """Clamp values; gradient is passed through inside the bounds only."""
    if isinstance(x, Tensor):
        mask = (x.data >= lo) & (x.data <= hi)
        return Tensor._result(np.clip(x.data, lo, hi), (x,),
                              lambda g, a=x, m=mask: _accum(a, g * m))
    return np.clip(x, lo, hi)


def concat(parts, axis: int = 0):
    if any(isinstance(p, Tensor) for p in parts):
        parts = [as_tensor(p) for p in parts]
        sizes = [p.data.shape[axis] for p in parts]
        def back(g, parts=parts, sizes=sizes, axis=axis):
            offset = 0
            for p, n in zip(parts, sizes):
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offset, offset + n)
                _accum(p, g[tuple(sl)])
                offset += n
        return Tensor._result(np.concatenate([p.data for p in parts], axis=axis),
                              tuple(parts), back)
    return np.concatenate(parts, axis=axis)


def stack(rows):
    """Stack equal-shape vectors into a matrix (row per input)."""
    if any(isinstance(r, Tensor) for r in rows):
        rows = [as_tensor(r) for r in rows]
        def back(g, rows=rows):
            for i, r in enumerate(rows):
                _accum(r, g[i])
        return Tensor._result(np.stack([r.data for r in rows]), tuple(rows), back)
    return np.stack(rows)


def mean(x, axis=None):
    return x.mean(axis=axis) if isinstance(x, Tensor) else np.mean(x, axis=axis)


def tsum(x, axis=None):
    return x.sum(axis=axis) if isinstance(x, Tensor) else np.sum(x, axis=axis)


def zeros(shape):
    return np.zeros(shape)


def softmax_rows(x):
    """Row-wise softmax. Shift by the detached row max (exact: softmax is
    shift invariant), so the gradient is unaffected."""
    xd = x.data if isinstance(x, Tensor) else x
    shift = xd.max(axis=-1, keepdims=True)
    e = exp(x - shift)
    denom = tsum(e, axis=-1)
    if isinstance(e, Tensor):
        return e / denom.reshape(-1, 1)
    return e / np.expand_dims(denom, -1)


def dropout(x, p: float, rng: np.random.Generator | None, training: bool):
    """Inverted dropout; identity when not training or p == 0."""
    if not training or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    shape = x.data.shape if isinstance(x, Tensor) else np.shape(x)
    mask = (rng.random(shape) >= p) / (1.0 - p)
    return x * mask


def data_of(x) -> np.ndarray:
    return x.data if isinstance(x, Tensor) else np.asarray(x)
