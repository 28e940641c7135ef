"""Dense float tensors and the reverse-mode autodiff tape.

Every neural operator in the package is built on `apply_op`: it checks the
forward result for NaN/Inf, wraps it in an immutable `Tensor` and, when a
`Tape` is recording and any input requires a gradient, appends a node holding
the op's gradient rule. `backward` sweeps the tape in reverse.

Precision policy: float32 by default (`settings.DTYPE`), switchable to float64
with `use_dtype("float64")` for gradient checks. Reductions use numpy's fixed
pairwise order, so identical inputs give bit-identical results.
"""

from __future__ import annotations

import contextlib
import logging
from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from hybridcnn.core.config import settings
from hybridcnn.core.errors import (
    NonFiniteError,
    ShapeError,
    TapeError,
    TensorDivisionError,
)

logger = logging.getLogger(__name__)

ElementwiseOp = Literal["add", "sub", "mul", "div", "neg", "exp", "ln", "sqrt", "max"]
ReduceOp = Literal["sum", "mean", "max", "var"]
Axis = int | Sequence[int] | None
BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_DTYPES = {"float32": np.dtype(np.float32), "float64": np.dtype(np.float64)}
_dtype_stack: list[np.dtype] = [_DTYPES[settings.DTYPE]]
_tape_stack: list["Tape"] = []


# ==================== PRECISION ====================

def get_default_dtype() -> np.dtype:
    """Dtype new tensors are created with."""
    return _dtype_stack[-1]


@contextlib.contextmanager
def use_dtype(name: Literal["float32", "float64"]) -> Iterator[np.dtype]:
    """Temporarily switch the global tensor precision."""
    if name not in _DTYPES:
        raise ValueError(f"Unsupported dtype: {name}")
    _dtype_stack.append(_DTYPES[name])
    try:
        yield _dtype_stack[-1]
    finally:
        _dtype_stack.pop()


# ==================== TENSOR ====================

class Tensor:
    """
    Immutable N-dimensional float array.

    Images follow the NCHW convention. The underlying array is read-only;
    every operation returns a new tensor.
    """

    __slots__ = ("_data", "requires_grad", "name", "_tape", "_node")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        array = np.array(data, dtype=dtype or get_default_dtype())
        array.setflags(write=False)
        self._data = array
        self.requires_grad = requires_grad
        self.name = name
        self._tape: Tape | None = None
        self._node: int | None = None

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        tensor = cls.__new__(cls)
        if array.dtype not in (np.float32, np.float64):
            array = array.astype(get_default_dtype())
        array.setflags(write=False)
        tensor._data = array
        tensor.requires_grad = requires_grad
        tensor.name = None
        tensor._tape = None
        tensor._node = None
        return tensor

    # -------------------- views --------------------

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        """Writable copy of the values."""
        return self._data.copy()

    def item(self) -> float:
        if self._data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self._data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor._wrap(self._data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # -------------------- operators --------------------

    def __add__(self, other):
        return elementwise("add", self, other)

    def __radd__(self, other):
        return elementwise("add", self, other)

    def __sub__(self, other):
        return elementwise("sub", self, other)

    def __rsub__(self, other):
        return elementwise("add", elementwise("neg", self), other)

    def __mul__(self, other):
        return elementwise("mul", self, other)

    def __rmul__(self, other):
        return elementwise("mul", self, other)

    def __truediv__(self, other):
        return elementwise("div", self, other)

    def __neg__(self):
        return elementwise("neg", self)

    def __matmul__(self, other):
        return matmul(self, other)

    # -------------------- shorthands --------------------

    def exp(self) -> "Tensor":
        return elementwise("exp", self)

    def log(self) -> "Tensor":
        return elementwise("ln", self)

    def sqrt(self) -> "Tensor":
        return elementwise("sqrt", self)

    def sum(self, axis: Axis = None, keepdims: bool = False) -> "Tensor":
        return reduce("sum", self, axis, keepdims)

    def mean(self, axis: Axis = None, keepdims: bool = False) -> "Tensor":
        return reduce("mean", self, axis, keepdims)

    def max(self, axis: Axis = None, keepdims: bool = False) -> "Tensor":
        return reduce("max", self, axis, keepdims)

    def var(self, axis: Axis = None, keepdims: bool = False) -> "Tensor":
        return reduce("var", self, axis, keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        return transpose(self, axes or None)


def as_tensor(value) -> Tensor:
    """Return `value` unchanged if it is a tensor, else wrap it."""
    return value if isinstance(value, Tensor) else Tensor(value)


# ==================== TAPE ====================

@dataclass(eq=False)
class Node:
    """One recorded forward operation."""

    index: int
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn


class Tape:
    """
    Append-only record of forward operations.

    Use as a context manager to make it the recording tape:

        with Tape() as tape:
            loss = model_loss(...)
        grads = backward(tape, loss)
    """

    def __init__(self):
        self.nodes: list[Node] = []

    def __enter__(self) -> "Tape":
        _tape_stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if _tape_stack and _tape_stack[-1] is self:
            _tape_stack.pop()
        else:
            raise TapeError("tape stack corrupted: exiting a tape that is not active")

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, backward_fn: BackwardFn) -> Node:
        node = Node(len(self.nodes), op, inputs, output, backward_fn)
        self.nodes.append(node)
        output._tape = self
        output._node = node.index
        return node

    def reset(self) -> None:
        """Drop all nodes so the tape can record a new graph."""
        for node in self.nodes:
            node.output._tape = None
            node.output._node = None
        self.nodes.clear()


def current_tape() -> Tape | None:
    return _tape_stack[-1] if _tape_stack else None


@contextlib.contextmanager
def no_record() -> Iterator[None]:
    """Evaluate without recording, even inside an active tape."""
    saved = list(_tape_stack)
    _tape_stack.clear()
    try:
        yield
    finally:
        _tape_stack.extend(saved)


def apply_op(op: str, out: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """
    Wrap a forward result and record its gradient rule.

    Args:
        op: Operation name, used in diagnostics
        out: Forward result
        inputs: Tensors the result depends on
        backward_fn: Maps the output gradient to one gradient (or None) per input

    Returns:
        The result tensor

    Raises:
        NonFiniteError: If `out` contains NaN or Inf
    """
    if not np.all(np.isfinite(out)):
        bad = int(np.size(out) - np.count_nonzero(np.isfinite(out)))
        raise NonFiniteError(op, f"{bad} of {np.size(out)} elements")
    inputs = tuple(inputs)
    tape = current_tape()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    result = Tensor._wrap(np.asarray(out), requires_grad=tracked)
    if tracked:
        tape.record(op, inputs, result, backward_fn)
    return result


# ==================== BROADCASTING ====================

def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a: Tensor, b: Tensor) -> None:
    try:
        out_shape = np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}") from None
    if out_shape != a.shape:
        raise ShapeError(f"operand of shape {b.shape} cannot broadcast into {a.shape}")


# ==================== ELEMENTWISE ====================

def elementwise(op: ElementwiseOp, a: Tensor, b: Tensor | float | None = None) -> Tensor:
    """
    Per-element arithmetic.

    Binary ops accept a tensor of identical shape, a scalar, or a tensor
    broadcastable into `a` along size-1 (or missing leading) axes. `max` is
    max-with-scalar and requires a scalar `b`.

    Raises:
        ShapeError: On incompatible shapes
        TensorDivisionError: Division by an exact zero in strict mode
        NonFiniteError: If the result is not finite
    """
    a = as_tensor(a)
    x = a.data

    if op == "neg":
        return apply_op("neg", -x, (a,), lambda g: (-g,))
    if op == "exp":
        out = np.exp(x)
        return apply_op("exp", out, (a,), lambda g: (g * out,))
    if op == "ln":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(x)
        return apply_op("ln", out, (a,), lambda g: (g / x,))
    if op == "sqrt":
        with np.errstate(invalid="ignore"):
            out = np.sqrt(x)
        return apply_op("sqrt", out, (a,), lambda g: (g * 0.5 / out,))
    if op == "max":
        if isinstance(b, Tensor):
            raise ShapeError("max-with-scalar requires a scalar operand")
        threshold = float(b)
        out = np.maximum(x, x.dtype.type(threshold))
        mask = x > threshold
        return apply_op("max", out, (a,), lambda g: (g * mask,))

    if b is None:
        raise ShapeError(f"binary op '{op}' needs a second operand")

    if isinstance(b, Tensor):
        _check_broadcast(a, b)
        y = b.data
        inputs: tuple[Tensor, ...] = (a, b)
    else:
        y = x.dtype.type(b)
        inputs = (a,)
    b_shape = b.shape if isinstance(b, Tensor) else None

    def _grads(ga: np.ndarray, gb: np.ndarray | None):
        if b_shape is None:
            return (ga,)
        return (ga, _unbroadcast(gb, b_shape))

    if op == "add":
        return apply_op("add", x + y, inputs, lambda g: _grads(g, g))
    if op == "sub":
        return apply_op("sub", x - y, inputs, lambda g: _grads(g, -g))
    if op == "mul":
        return apply_op("mul", x * y, inputs, lambda g: _grads(g * y, g * x))
    if op == "div":
        if settings.STRICT_MODE and np.any(y == 0):
            raise TensorDivisionError("division by zero in strict mode")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = x / y
        return apply_op("div", out, inputs, lambda g: _grads(g / y, -g * x / (y * y)))
    raise ValueError(f"Unknown elementwise op: {op}")


# ==================== MATMUL ====================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of `[m,k]` and `[k,n]` tensors."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    x, y = a.data, b.data
    return apply_op("matmul", x @ y, (a, b), lambda g: (g @ y.T, x.T @ g))


# ==================== REDUCTIONS ====================

def _normalize_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    if not axes:
        raise ShapeError("empty axis")
    normalized = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise ShapeError(f"axis {ax} out of range for rank {ndim}")
        normalized.append(ax % ndim)
    if len(set(normalized)) != len(normalized):
        raise ShapeError(f"repeated axis in {axes}")
    return tuple(sorted(normalized))


def _expand(g: np.ndarray, axes: tuple[int, ...], keepdims: bool) -> np.ndarray:
    return g if keepdims else np.expand_dims(g, axes)


def reduce(op: ReduceOp, a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """
    Reduce over one or more axes.

    `var` is the population variance (divides by the count). The gradient of
    `max` goes to the arg-max element, first flat index on ties.

    Raises:
        ShapeError: On an invalid or empty axis
    """
    x = a.data
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[ax] for ax in axes])) if axes else 1
    if any(x.shape[ax] == 0 for ax in axes):
        raise ShapeError("empty axis")

    if op == "sum":
        out = x.sum(axis=axes, keepdims=keepdims)
        return apply_op("sum", out, (a,), lambda g: (np.broadcast_to(_expand(g, axes, keepdims), x.shape).copy(),))
    if op == "mean":
        out = x.mean(axis=axes, keepdims=keepdims)
        return apply_op(
            "mean", out, (a,),
            lambda g: (np.broadcast_to(_expand(g, axes, keepdims) / count, x.shape).copy(),),
        )
    if op == "var":
        centered = x - x.mean(axis=axes, keepdims=True)
        out = (centered * centered).mean(axis=axes, keepdims=keepdims)
        return apply_op("var", out, (a,), lambda g: (_expand(g, axes, keepdims) * 2.0 * centered / count,))
    if op == "max":
        out = x.max(axis=axes, keepdims=keepdims)
        return apply_op("max_axis", out, (a,), lambda g: (_max_backward(x, axes, g, keepdims),))
    raise ValueError(f"Unknown reduce op: {op}")


def _max_backward(x: np.ndarray, axes: tuple[int, ...], g: np.ndarray, keepdims: bool) -> np.ndarray:
    k = len(axes)
    tail = tuple(range(x.ndim - k, x.ndim))
    moved = np.moveaxis(x, axes, tail)
    kept_shape = moved.shape[: x.ndim - k]
    flat = moved.reshape(kept_shape + (-1,))
    winners = flat.argmax(axis=-1)
    mask = np.zeros_like(flat)
    np.put_along_axis(mask, winners[..., None], 1.0, axis=-1)
    g_kept = g.reshape(kept_shape) if keepdims else g
    routed = (mask * g_kept[..., None]).reshape(moved.shape)
    return np.moveaxis(routed, tail, axes)


# ==================== STRUCTURE ====================

def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"cannot reshape {a.shape} into {tuple(shape)}") from None
    return apply_op("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    perm = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(perm))
    return apply_op("transpose", a.data.transpose(perm), (a,), lambda g: (g.transpose(inverse),))


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along `axis`; every other dimension must agree."""
    if not tensors:
        raise ShapeError("concat of zero tensors")
    ref = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(ref) or any(t.shape[i] != ref[i] for i in range(len(ref)) if i != axis % len(ref)):
            raise ShapeError(f"concat shape mismatch: {ref} vs {t.shape} along axis {axis}")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return apply_op("concat", out, tuple(tensors), lambda g: tuple(np.split(g, splits, axis=axis)))


# ==================== BACKWARD ====================

class GradientMap(Mapping):
    """Gradients keyed by tensor identity (leaves and intermediates)."""

    def __init__(self, tensors: dict[int, Tensor], grads: dict[int, np.ndarray]):
        self._tensors = tensors
        self._grads = grads

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        return self._grads[id(tensor)]

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._tensors.values())

    def __len__(self) -> int:
        return len(self._grads)

    def __contains__(self, tensor: object) -> bool:
        return id(tensor) in self._grads

    def for_parameters(self, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
        """Named gradients for the given parameters (zeros if unreachable)."""
        return {
            name: self._grads.get(id(p), np.zeros_like(p.data))
            for name, p in params.items()
        }


def backward(tape: Tape, loss: Tensor) -> GradientMap:
    """
    Reverse sweep from a scalar loss.

    Args:
        tape: Tape the loss was recorded on
        loss: Scalar tensor

    Returns:
        GradientMap with one accumulated gradient per reachable tensor

    Raises:
        TapeError: Non-scalar loss, loss not on this tape, or a cycle
    """
    if loss.size != 1:
        raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._tape is not tape or loss._node is None:
        raise TapeError("loss was not recorded on this tape")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    tensors: dict[int, Tensor] = {id(loss): loss}

    for node in reversed(tape.nodes[: loss._node + 1]):
        upstream = grads.get(id(node.output))
        if upstream is None:
            continue
        input_grads = node.backward_fn(upstream)
        for tensor, grad in zip(node.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if tensor._tape is tape and tensor._node is not None and tensor._node >= node.index:
                raise TapeError(f"cycle detected at node {node.index} ({node.op})")
            if grad.shape != tensor.shape:
                raise ShapeError(f"gradient of '{node.op}' has shape {grad.shape}, expected {tensor.shape}")
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad
                tensors[key] = tensor
    return GradientMap(tensors, grads)
