"""Minimal reverse-mode automatic differentiation over numpy arrays.

A Tensor wraps an ndarray and records the operation that produced it.  A
backward pass walks the recorded graph in reverse topological order and
accumulates adjoints into ``grad``.  Only the operations the encoder,
decoder, and losses need are provided; all of them are array-level so a full
training batch stays a handful of graph nodes.
"""
from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum an upstream gradient down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """An ndarray node in the differentiation graph."""

    __slots__ = ("data", "grad", "_parents", "_backward", "requires_grad")

    def __init__(self, data, parents=(), backward=None, requires_grad=False):
        self.data = np.asarray(data, dtype=float)
        self.grad = None
        self._parents = tuple(parents)
        self._backward = backward
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in self._parents
        )

    @property
    def shape(self):
        return self.data.shape

    # ---- arithmetic -------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data + other.data, (self, other))

        def backward(g):
            return _unbroadcast(g, self.shape), _unbroadcast(g, other.shape)

        out._backward = backward
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, (self,))
        out._backward = lambda g: (-g,)
        return out

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __rsub__(self, other):
        return _as_tensor(other) + (-self)

    def __mul__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data * other.data, (self, other))

        def backward(g):
            return (
                _unbroadcast(g * other.data, self.shape),
                _unbroadcast(g * self.data, other.shape),
            )

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)
        out = Tensor(self.data / other.data, (self, other))

        def backward(g):
            return (
                _unbroadcast(g / other.data, self.shape),
                _unbroadcast(-g * self.data / other.data**2, other.shape),
            )

        out._backward = backward
        return out

    def __pow__(self, exponent: float):
        out = Tensor(self.data**exponent, (self,))
        out._backward = lambda g: (g * exponent * self.data ** (exponent - 1),)
        return out

    def __matmul__(self, other):
        """Matrix product with a 2-d right operand; left may carry batch dims."""
        other = _as_tensor(other)
        if other.data.ndim != 2:
            raise ValueError("matmul right operand must be 2-d")
        out = Tensor(self.data @ other.data, (self, other))

        def backward(g):
            grad_left = g @ other.data.T
            if self.data.ndim == 2:
                grad_right = self.data.T @ g
            else:
                grad_right = np.tensordot(
                    self.data, g, axes=(tuple(range(self.data.ndim - 1)),) * 2
                )
            return grad_left, grad_right

        out._backward = backward
        return out

    # ---- elementwise functions --------------------------------------

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), (self,))
        out._backward = lambda g: (g * (self.data > 0.0),)
        return out

    def exp(self):
        out = Tensor(np.exp(self.data), (self,))
        out._backward = lambda g: (g * out.data,)
        return out

    def log(self):
        out = Tensor(np.log(self.data), (self,))
        out._backward = lambda g: (g / self.data,)
        return out

    def sqrt(self):
        out = Tensor(np.sqrt(self.data), (self,))
        out._backward = lambda g: (g * 0.5 / out.data,)
        return out

    # ---- reductions and shape ops -----------------------------------

    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), (self,))

        def backward(g):
            g = np.asarray(g)
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, self.shape).copy(),)

        out._backward = backward
        return out

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def transpose(self):
        out = Tensor(self.data.T, (self,))
        out._backward = lambda g: (g.T,)
        return out

    def __getitem__(self, key):
        out = Tensor(self.data[key], (self,))

        def backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, key, g)
            return (full,)

        out._backward = backward
        return out

    def softmax(self, axis=-1):
        shifted = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=axis, keepdims=True)
        out = Tensor(y, (self,))

        def backward(g):
            inner = (g * y).sum(axis=axis, keepdims=True)
            return (y * (g - inner),)

        out._backward = backward
        return out

    # ---- graph traversal --------------------------------------------

    def backward(self):
        """Accumulate adjoints of this scalar into every reachable ``grad``."""
        if self.data.size != 1:
            raise ValueError("backward requires a scalar output")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))

        for node in order:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is None:
                continue
            grads = node._backward(node.grad)
            for parent, g in zip(node._parents, grads):
                if parent.requires_grad:
                    parent.grad = parent.grad + g if parent.grad is not None else g


def _as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data) -> Tensor:
    """A leaf tensor tracked by the backward pass."""
    return Tensor(np.array(data, dtype=float), requires_grad=True)


def constant(data) -> Tensor:
    return Tensor(data)


def stack(tensors: list[Tensor], axis: int = 0) -> Tensor:
    """Stack same-shaped tensors along a new axis."""
    out = Tensor(np.stack([t.data for t in tensors], axis=axis), tuple(tensors))

    def backward(g):
        pieces = np.split(g, len(tensors), axis=axis)
        return tuple(p.squeeze(axis=axis) for p in pieces)

    out._backward = backward
    return out


def graph_prop(adjacency: np.ndarray, h: Tensor) -> Tensor:
    """Propagate node states through a fixed matrix: out[..., i, :] = sum_j A[i, j] h[..., j, :]."""
    if h.data.ndim == 2:
        out = Tensor(adjacency @ h.data, (h,))
        out._backward = lambda g: (adjacency.T @ g,)
    else:
        out = Tensor(np.einsum("ij,sjf->sif", adjacency, h.data), (h,))
        out._backward = lambda g: (np.einsum("ij,sif->sjf", adjacency, g),)
    return out
