"""Reverse-mode autodiff on numpy arrays.

A Tensor wraps an ndarray plus an optional gradient slot. Operations build a
define-by-run graph; calling ``backward()`` on a scalar result walks the graph
in reverse topological order and accumulates gradients into every reachable
tensor with ``requires_grad``. The graph is rebuilt on every forward pass and
discarded with the loss tensor, so parameters can be updated freely between
steps.

Compute precision follows the input arrays: float32 for training, float64 for
gradient checking. Non-float inputs are cast to float32.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Disable graph construction inside the block (inference, frozen passes)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled() -> bool:
    return _GRAD_ENABLED


def _as_float_array(data) -> np.ndarray:
    arr = np.asarray(data)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return arr


class Tensor:
    """N-dimensional float array with an optional gradient slot.

    ``data`` is row-major (C-order) ndarray; ``grad`` is either None or an
    ndarray of identical shape. Tensors returned by operations are treated as
    immutable; only parameter leaves are rebound by the optimizer.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    # Keep numpy from consuming Tensors in mixed ndarray/Tensor expressions;
    # our __radd__/__rmul__ take over instead.
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_float_array(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag}, requires_grad={self.requires_grad})"

    # -- graph plumbing ------------------------------------------------

    def detach(self) -> "Tensor":
        """Same data, cut off from the graph."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Accumulate d(self)/d(x) into ``x.grad`` for every reachable tensor.

        Only defined for scalar tensors. Gradients add onto any existing
        ``grad`` content, so callers zero parameter grads between steps.
        """
        if self.data.size != 1:
            raise ValueError(
                f"backward() requires a scalar tensor, got shape {self.shape}"
            )
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and p.requires_grad:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.grad is None:
                node.grad = g.copy()
            else:
                node.grad = node.grad + g
            if node._backward is not None:
                for parent, pg in node._backward(g):
                    if not parent.requires_grad:
                        continue
                    acc = grads.get(id(parent))
                    grads[id(parent)] = pg if acc is None else acc + pg

    # -- operators -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, -_wrap(other))

    def __rsub__(self, other):
        return add(_wrap(other), -self)

    def __truediv__(self, other):
        return div(self, other)


def _wrap(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def make_op(out_data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    """Wrap an op result, attaching the backward closure when grads are on.

    ``backward_fn(g)`` must return an iterable of (parent, grad) pairs with
    each grad already shaped like its parent.
    """
    out = Tensor(out_data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, inverting numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data

    def backward(g):
        return ((a, unbroadcast(g, a.data.shape)), (b, unbroadcast(g, b.data.shape)))

    return make_op(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data * b.data

    def backward(g):
        return (
            (a, unbroadcast(g * b.data, a.data.shape)),
            (b, unbroadcast(g * a.data, b.data.shape)),
        )

    return make_op(out, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = a.data / b.data

    def backward(g):
        return (
            (a, unbroadcast(g / b.data, a.data.shape)),
            (b, unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)),
        )

    return make_op(out, (a, b), backward)
