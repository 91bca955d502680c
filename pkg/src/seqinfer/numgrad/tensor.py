"""Define-by-run reverse-mode autodiff over float64 numpy arrays.

Every op returns a new :class:`Tensor`; when any input requires a gradient
the result remembers its parents and a closure mapping the upstream
gradient to per-parent gradients. :meth:`Tensor.backward` sweeps the
recorded graph once in reverse topological order.
"""
from __future__ import annotations

import contextlib
import math
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "NonFiniteError",
    "ShapeError",
    "no_grad",
    "is_grad_enabled",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "exp",
    "log",
    "tanh",
    "sigmoid",
    "relu",
    "clip_min",
    "tsum",
    "tmax",
    "logsumexp",
    "softmax",
    "log_softmax",
    "concat",
    "stack",
    "take",
    "reshape",
    "transpose",
]


class NonFiniteError(FloatingPointError):
    """An op produced NaN or Inf."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the op."""


_grad_enabled = True


def is_grad_enabled() -> bool:
    return _grad_enabled


@contextlib.contextmanager
def no_grad():
    """Run ops without recording a graph (inference / frozen snapshots)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")
    # make ndarray <op> Tensor dispatch to Tensor's reflected operators
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self._op = ""

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _raise_item(self)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        op = f", op={self._op}" if self._op else ""
        return f"Tensor(shape={self.shape}{flag}{op})"

    def __len__(self) -> int:
        return len(self.data)

    # -- reverse sweep -------------------------------------------------
    def backward(self, grad: np.ndarray | float | None = None) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf."""
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without grad needs a scalar output")
            grad = np.ones_like(self.data)
        order = _topological_order(self)
        self.grad = np.asarray(grad, dtype=np.float64).reshape(self.shape)
        for node in reversed(order):
            if node._backward is None or node.grad is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if g is None or not parent.requires_grad:
                    continue
                parent.grad = g if parent.grad is None else parent.grad + g
            # intermediates are single-use; drop references so memory is freed
            node._backward = None
            node._parents = ()
            node.grad = None if node is not self else node.grad

    # -- operator sugar ------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return _getitem(self, idx)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def _raise_item(t: Tensor) -> float:
    raise ShapeError(f"item() needs a single-element tensor, got shape {t.shape}")


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data: np.ndarray, parents: tuple[Tensor, ...], backward: BackwardFn, op: str) -> Tensor:
    data = np.asarray(data, dtype=np.float64)
    # a sum is non-finite whenever an entry is; only overflow of the sum itself needs the full scan
    if not math.isfinite(data.sum()) and not np.isfinite(data).all():
        raise NonFiniteError(f"non-finite output from op '{op}'")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = False
    out._parents = ()
    out._backward = None
    out._op = op
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _binary(fn, a: Tensor, b: Tensor, op: str) -> np.ndarray:
    try:
        return fn(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}") from exc


# -- elementwise binary ----------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _result(_binary(np.add, a, b, "add"), (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return _result(_binary(np.subtract, a, b, "sub"), (a, b),
                   lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return _result(_binary(np.multiply, a, b, "mul"), (a, b),
                   lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)), "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    out = _binary(np.divide, a, b, "div")
    return _result(out, (a, b),
                   lambda g: (_unbroadcast(g / bd, ad.shape), _unbroadcast(-g * out / bd, bd.shape)),
                   "div")


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim not in (1, 2) or bd.ndim not in (1, 2) or ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    out = ad @ bd

    def backward(g):
        if ad.ndim == 1 and bd.ndim == 1:
            return g * bd, g * ad
        if ad.ndim == 1:
            return bd @ g, np.outer(ad, g)
        if bd.ndim == 1:
            return np.outer(g, bd), ad.T @ g
        return g @ bd.T, ad.T @ g

    return _result(np.asarray(out, dtype=np.float64), (a, b), backward, "matmul")


# -- elementwise unary -----------------------------------------------------

def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _result(out, (a,), lambda g: (g * out,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    if (ad <= 0).any():
        raise NonFiniteError("log of non-positive value")
    return _result(np.log(ad), (a,), lambda g: (g / ad,), "log")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return _result(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid(a.data)
    return _result(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return _result(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def clip_min(a, floor: float) -> Tensor:
    """max(a, floor); no gradient flows through clamped entries."""
    a = as_tensor(a)
    mask = a.data >= floor
    return _result(np.where(mask, a.data, floor), (a,), lambda g: (g * mask,), "clip_min")


# -- reductions ------------------------------------------------------------

def _expand(g: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g.reshape((1,) * len(shape)) if g.ndim == 0 else g, shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    out = np.asarray(a.data.sum(axis=axis, keepdims=keepdims), dtype=np.float64)
    return _result(out, (a,), lambda g: (_expand(g, shape, axis, keepdims).copy(),), "sum")


def tmax(a, axis: int) -> Tensor:
    """Max along ``axis``; the gradient goes to the first maximal entry."""
    a = as_tensor(a)
    ad = a.data
    idx = np.expand_dims(ad.argmax(axis=axis), axis)
    out = np.take_along_axis(ad, idx, axis=axis).squeeze(axis)

    def backward(g):
        full = np.zeros_like(ad)
        np.put_along_axis(full, idx, np.expand_dims(g, axis), axis=axis)
        return (full,)

    return _result(out, (a,), backward, "max")


def _softmax(x: np.ndarray, axis: int) -> np.ndarray:
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def logsumexp(a, axis: int = -1, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    m = ad.max(axis=axis, keepdims=True)
    z = np.exp(ad - m)
    s = z.sum(axis=axis, keepdims=True)
    out = m + np.log(s)
    probs = z / s
    if not keepdims:
        out = out.squeeze(axis)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * probs,)

    return _result(out, (a,), backward, "logsumexp")


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    out = _softmax(a.data, axis)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _result(out, (a,), backward, "softmax")


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    m = ad.max(axis=axis, keepdims=True)
    shifted = ad - m
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return _result(out, (a,), backward, "log_softmax")


# -- structural ------------------------------------------------------------

def concat(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    if not ts:
        raise ShapeError("concat of an empty list")
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: {exc}") from exc
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _result(out, ts, lambda g: tuple(np.split(g, bounds, axis=axis)), "concat")


def stack(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    if not ts:
        raise ShapeError("stack of an empty list")
    try:
        out = np.stack([t.data for t in ts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"stack: {exc}") from exc
    n = len(ts)
    return _result(out, ts,
                   lambda g: tuple(np.squeeze(p, axis) for p in np.split(g, n, axis=axis)),
                   "stack")


def _is_fancy(idx) -> bool:
    if isinstance(idx, tuple):
        return any(isinstance(i, (list, np.ndarray)) for i in idx)
    return isinstance(idx, (list, np.ndarray))


def _getitem(a: Tensor, idx) -> Tensor:
    ad = a.data
    out = ad[idx]
    fancy = _is_fancy(idx)

    def backward(g):
        full = np.zeros_like(ad)
        if fancy:
            np.add.at(full, idx, g)
        else:
            full[idx] = g
        return (full,)

    return _result(np.array(out, dtype=np.float64), (a,), backward, "getitem")


def take(table, indices) -> Tensor:
    """Row lookup ``table[indices]`` (embedding lookup); indices of any shape."""
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError("take expects a 2-D table")
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ShapeError("take: index out of range")
    td = table.data

    def backward(g):
        full = np.zeros_like(td)
        np.add.at(full, indices.reshape(-1), g.reshape(-1, td.shape[1]))
        return (full,)

    return _result(td[indices], (table,), backward, "take")


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    orig = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"reshape: {exc}") from exc
    return _result(out, (a,), lambda g: (g.reshape(orig),), "reshape")


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return _result(a.data.T, (a,), lambda g: (g.T,), "transpose")
