"""Dense 2-D float64 tensors with tape-based reverse-mode differentiation.

Every value is a matrix; row vectors are shape (1, d). Operations executed
while a Tape is active record their backward rule, and ``Tape.backward``
replays the records in exact reverse order. Forward passes are
deterministic: identical inputs produce bit-identical outputs.

Broadcasting is intentionally narrow: two operands must have equal shapes,
or one of them must be a row vector (1, n), a column vector (m, 1), or a
scalar (1, 1) matching the other.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, DimensionError

__all__ = [
    "Tensor",
    "Tape",
    "matmul",
    "add",
    "sub",
    "mul",
    "div",
    "scale",
    "relu",
    "sigmoid",
    "softmax",
    "exp",
    "log",
    "sqrt",
    "clamp",
    "concat",
    "slice_cols",
    "transpose",
    "global_add_pool",
    "sum_all",
    "stack_rows",
    "zeros",
    "ones",
]


class Tensor:
    """A (rows, cols) matrix of float64 values.

    ``requires_grad`` marks trainable leaves; their ``grad`` buffer is
    allocated eagerly so unreached parameters read as zero gradient.
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise DimensionError(f"tensors are 2-D; got ndim={arr.ndim}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(arr) if requires_grad else None
        self.name = name

    @classmethod
    def _result(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    # Operator sugar; all semantics live in the module-level functions.
    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)


class _OpRecord:
    __slots__ = ("inputs", "output", "backward")

    def __init__(self, inputs, output, backward):
        self.inputs = inputs
        self.output = output
        self.backward = backward


_ACTIVE_TAPE: Optional["Tape"] = None


class Tape:
    """Ordered record of operations for one forward pass.

    Use as a context manager around the forward computation, then call
    ``backward`` on the scalar loss. Tapes are single-threaded and never
    shared; a fresh tape is built per forward pass.
    """

    def __init__(self):
        self._records: list[_OpRecord] = []
        self._outer: Optional[Tape] = None

    def __enter__(self) -> "Tape":
        global _ACTIVE_TAPE
        self._outer = _ACTIVE_TAPE
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = self._outer
        self._outer = None

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into the ``grad`` of every leaf.

        Gradients sum across fan-out; leaves not reachable from the loss
        keep whatever their buffer already holds (zeros after zero_grad).
        """
        if loss.shape != (1, 1):
            raise ContractError(f"backward needs a 1x1 loss, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
        leaves: dict[int, Tensor] = {id(loss): loss}
        for rec in reversed(self._records):
            out_grad = grads.pop(id(rec.output), None)
            leaves.pop(id(rec.output), None)
            if out_grad is None:
                continue
            for tensor, grad in zip(rec.inputs, rec.backward(out_grad)):
                if grad is None or not tensor.requires_grad:
                    continue
                seen = grads.get(id(tensor))
                grads[id(tensor)] = grad if seen is None else seen + grad
                leaves[id(tensor)] = tensor
        for tid, grad in grads.items():
            leaf = leaves[tid]
            if leaf.requires_grad:
                leaf.grad = grad if leaf.grad is None else leaf.grad + grad


def _apply(
    inputs: Sequence[Tensor],
    out_data: np.ndarray,
    backward: Callable[[np.ndarray], tuple],
) -> Tensor:
    needs_grad = any(t.requires_grad for t in inputs)
    recording = needs_grad and _ACTIVE_TAPE is not None
    out = Tensor._result(out_data, recording)
    if recording:
        _ACTIVE_TAPE._records.append(_OpRecord(tuple(inputs), out, backward))
    return out


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> tuple[int, int]:
    (ra, ca), (rb, cb) = a.shape, b.shape
    rows_ok = ra == rb or ra == 1 or rb == 1
    cols_ok = ca == cb or ca == 1 or cb == 1
    if not (rows_ok and cols_ok):
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")
    return max(ra, rb), max(ca, cb)


def _reduce_to(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] > 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] > 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner dims differ, {a.shape} x {b.shape}")
    a_data, b_data = a.data, b.data
    a_req, b_req = a.requires_grad, b.requires_grad

    def backward(g):
        ga = g @ b_data.T if a_req else None
        gb = a_data.T @ g if b_req else None
        return ga, gb

    return _apply((a, b), a_data @ b_data, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    _check_broadcast(a, b, "add")

    def backward(g):
        return _reduce_to(g, sa), _reduce_to(g, sb)

    return _apply((a, b), a.data + b.data, backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    _check_broadcast(a, b, "sub")

    def backward(g):
        return _reduce_to(g, sa), _reduce_to(-g, sb)

    return _apply((a, b), a.data - b.data, backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product with row/column/scalar broadcasting."""
    sa, sb = a.shape, b.shape
    _check_broadcast(a, b, "mul")
    a_data, b_data = a.data, b.data

    def backward(g):
        return _reduce_to(g * b_data, sa), _reduce_to(g * a_data, sb)

    return _apply((a, b), a_data * b_data, backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    sa, sb = a.shape, b.shape
    _check_broadcast(a, b, "div")
    a_data, b_data = a.data, b.data

    def backward(g):
        ga = _reduce_to(g / b_data, sa)
        gb = _reduce_to(-g * a_data / (b_data * b_data), sb)
        return ga, gb

    return _apply((a, b), a_data / b_data, backward)


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a python float constant (not differentiated through)."""
    factor = float(factor)

    def backward(g):
        return (g * factor,)

    return _apply((x,), x.data * factor, backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return _apply((x,), x.data * mask, backward)


def sigmoid(x: Tensor) -> Tensor:
    """Elementwise 1/(1+e^-x), computed without overflow for large |x|."""
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ez = np.exp(d[~pos])
    out[~pos] = ez / (1.0 + ez)

    def backward(g):
        return (g * out * (1.0 - out),)

    return _apply((x,), out, backward)


def softmax(x: Tensor, axis: int = 1) -> Tensor:
    """Max-shifted softmax; each slice along ``axis`` sums to 1."""
    if axis not in (0, 1):
        raise DimensionError(f"softmax: axis must be 0 or 1, got {axis}")
    if x.shape[axis] == 0:
        raise DimensionError(f"softmax: empty axis {axis} in shape {x.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - inner),)

    return _apply((x,), out, backward)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)

    def backward(g):
        return (g * out,)

    return _apply((x,), out, backward)


def log(x: Tensor) -> Tensor:
    d = x.data
    if (d <= 0).any():
        raise ContractError("log: input must be strictly positive")

    def backward(g):
        return (g / d,)

    return _apply((x,), np.log(d), backward)


def sqrt(x: Tensor) -> Tensor:
    d = x.data
    if (d < 0).any():
        raise ContractError("sqrt: input must be non-negative")
    out = np.sqrt(d)

    def backward(g):
        return (g * 0.5 / out,)

    return _apply((x,), out, backward)


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clip to [lo, hi]; gradient passes only through unclipped entries."""
    d = x.data
    inside = (d > lo) & (d < hi)

    def backward(g):
        return (g * inside,)

    return _apply((x,), np.clip(d, lo, hi), backward)


def concat(a: Tensor, b: Tensor, axis: int = 0) -> Tensor:
    if axis not in (0, 1):
        raise DimensionError(f"concat: axis must be 0 or 1, got {axis}")
    other = 1 - axis
    if a.shape[other] != b.shape[other]:
        raise DimensionError(f"concat: shapes {a.shape} and {b.shape} on axis {axis}")
    split = a.shape[axis]

    def backward(g):
        if axis == 0:
            return g[:split], g[split:]
        return g[:, :split], g[:, split:]

    return _apply((a, b), np.concatenate((a.data, b.data), axis=axis), backward)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    rows, cols = x.shape
    if not (0 <= start < stop <= cols):
        raise DimensionError(f"slice_cols: [{start}:{stop}] out of range for {x.shape}")

    def backward(g):
        full = np.zeros((rows, cols))
        full[:, start:stop] = g
        return (full,)

    return _apply((x,), x.data[:, start:stop].copy(), backward)


def transpose(x: Tensor) -> Tensor:
    def backward(g):
        return (g.T.copy(),)

    return _apply((x,), x.data.T.copy(), backward)


def global_add_pool(rows: Tensor) -> Tensor:
    """Column-wise sum of an (n, d) matrix, returning a (1, d) row."""
    n = rows.shape[0]
    if n < 1:
        raise DimensionError("global_add_pool: need at least one row")

    def backward(g):
        return (np.repeat(g, n, axis=0),)

    return _apply((rows,), rows.data.sum(axis=0, keepdims=True), backward)


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape

    def backward(g):
        return (np.full(shape, g[0, 0]),)

    return _apply((x,), x.data.sum().reshape(1, 1), backward)


def stack_rows(rows: Sequence[Tensor]) -> Tensor:
    """Concatenate (1, d) rows into an (n, d) matrix."""
    if not rows:
        raise DimensionError("stack_rows: empty sequence")
    out = rows[0]
    for row in rows[1:]:
        out = concat(out, row, axis=0)
    return out


def zeros(rows: int, cols: int) -> Tensor:
    return Tensor(np.zeros((rows, cols)))


def ones(rows: int, cols: int) -> Tensor:
    return Tensor(np.ones((rows, cols)))
