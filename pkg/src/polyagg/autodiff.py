"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

A :class:`Tape` records every operation of one forward pass; calling
:meth:`Tape.backward` on a scalar output propagates gradients to every
:class:`Var` created on that tape. Only first-order derivatives are
supported.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError

__all__ = ["Tape", "Var", "spmm"]


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tape:
    """Operation record for one forward pass."""

    def __init__(self):
        self._nodes = []

    def var(self, value, requires_grad=True):
        """Wrap an array as a leaf variable on this tape."""
        return Var(np.asarray(value, dtype=np.float64), self, requires_grad)

    def _record(self, node):
        self._nodes.append(node)

    def backward(self, output):
        """Accumulate gradients of scalar `output` into every tape Var."""
        if output.value.size != 1:
            raise ShapeError("backward requires a scalar output")
        if output._tape is not self:
            raise ShapeError("output was not recorded on this tape")
        output.grad = np.ones_like(output.value)
        for node in reversed(self._nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)


class Var:
    """Array-valued node of the recorded operation graph."""

    __slots__ = ("value", "grad", "_tape", "_backward", "requires_grad")

    def __init__(self, value, tape, requires_grad=True, backward=None):
        self.value = value
        self.grad = None
        self._tape = tape
        self._backward = backward
        self.requires_grad = requires_grad
        tape._record(self)

    @property
    def shape(self):
        return self.value.shape

    def _accum(self, grad):
        grad = _unbroadcast(grad, self.value.shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def _make(self, value, backward):
        return Var(value, self._tape, backward=backward)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Var):
            def bw(g):
                self._accum(g)
                other._accum(g)
            return self._make(self.value + other.value, bw)
        return self._make(self.value + other, lambda g: self._accum(g))

    __radd__ = __add__

    def __neg__(self):
        return self._make(-self.value, lambda g: self._accum(-g))

    def __sub__(self, other):
        if isinstance(other, Var):
            def bw(g):
                self._accum(g)
                other._accum(-g)
            return self._make(self.value - other.value, bw)
        return self._make(self.value - other, lambda g: self._accum(g))

    def __rsub__(self, other):
        return self._make(other - self.value, lambda g: self._accum(-g))

    def __mul__(self, other):
        if isinstance(other, Var):
            def bw(g):
                self._accum(g * other.value)
                other._accum(g * self.value)
            return self._make(self.value * other.value, bw)
        return self._make(self.value * other, lambda g: self._accum(g * other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            def bw(g):
                self._accum(g / other.value)
                other._accum(-g * self.value / other.value**2)
            return self._make(self.value / other.value, bw)
        return self._make(self.value / other, lambda g: self._accum(g / other))

    def __matmul__(self, other):
        if isinstance(other, Var):
            def bw(g):
                self._accum(g @ other.value.T)
                other._accum(self.value.T @ g)
            return self._make(self.value @ other.value, bw)
        other = np.asarray(other)
        return self._make(self.value @ other, lambda g: self._accum(g @ other.T))

    # -- nonlinearities and reductions --------------------------------------

    def tanh(self):
        out_value = np.tanh(self.value)
        return self._make(out_value, lambda g: self._accum(g * (1.0 - out_value**2)))

    def exp(self):
        out_value = np.exp(self.value)
        return self._make(out_value, lambda g: self._accum(g * out_value))

    def sum(self, axis=None, keepdims=False):
        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accum(np.broadcast_to(g, self.value.shape))
        return self._make(self.value.sum(axis=axis, keepdims=keepdims), bw)

    def gather_rows(self, index):
        """Select rows by integer index (with repetition)."""
        index = np.asarray(index, dtype=np.intp)

        def bw(g):
            full = np.zeros_like(self.value)
            np.add.at(full, index, g)
            self._accum(full)
        return self._make(self.value[index], bw)


def spmm(matrix, x):
    """Multiply a constant sparse matrix by a Var (gradient flows to `x`)."""
    return x._make(matrix @ x.value, lambda g: x._accum(matrix.T @ g))
