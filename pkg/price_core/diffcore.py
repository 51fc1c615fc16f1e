"""
Minimal reverse-mode differentiation over numpy arrays.

Operations run eagerly. While a ComputationTape is active on the current thread
(`with tape:`), every op whose inputs track gradients appends a node holding its
inputs, its output and a rule mapping the output gradient to input gradients.
`backward` replays the tape once, newest node first.

Every op also accepts leading batch axes: an [F×L] window and a [B×F×L] batch
go through the same code.
"""
import threading
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractError, DimensionError, NonFiniteError, ParameterError

GradRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_state = threading.local()


def _active_tape() -> Optional["ComputationTape"]:
    stack = getattr(_state, "tapes", None)
    return stack[-1] if stack else None


class Tensor:
    """Dense float64 array with optional gradient tracking."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            where = f" ({name})" if name else ""
            raise NonFiniteError(f"non-finite value in tensor{where}")
        arr.setflags(write=False)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {list(self.shape)}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={list(self.shape)}{flag})"

    def __add__(self, other): return add(self, _lift(other))
    def __radd__(self, other): return add(_lift(other), self)
    def __sub__(self, other): return sub(self, _lift(other))
    def __rsub__(self, other): return sub(_lift(other), self)
    def __mul__(self, other): return mul(self, _lift(other))
    def __rmul__(self, other): return mul(_lift(other), self)
    def __matmul__(self, other): return matmul(self, other)
    def __neg__(self): return mul(self, Tensor(-1.0))


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class TapeNode:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    rule: GradRule


class ComputationTape:
    """Ordered record of ops; nodes are appended after their inputs exist."""

    def __init__(self):
        self.nodes: List[TapeNode] = []

    def __enter__(self) -> "ComputationTape":
        if not hasattr(_state, "tapes"):
            _state.tapes = []
        _state.tapes.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _state.tapes.pop()

    def __len__(self) -> int:
        return len(self.nodes)


def record_op(op: str, out: np.ndarray, inputs: Sequence[Tensor], rule: GradRule) -> Tensor:
    """Wrap an op result, recording it on the active tape when any input tracks gradients."""
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"{op}: produced a non-finite value")
    result = Tensor(out)
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        result.requires_grad = True
        tape.nodes.append(TapeNode(op, tuple(inputs), result, rule))
    return result


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _swap(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2)


# --- elementwise -----------------------------------------------------------

def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(op, a.shape, b.shape) from None


def add(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("add", a, b)
    return record_op("add", a.data + b.data, (a, b),
                     lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("sub", a, b)
    return record_op("sub", a.data - b.data, (a, b),
                     lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _broadcast_shape("mul", a, b)
    return record_op("mul", a.data * b.data, (a, b),
                     lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """x[..., m, n] + bias[m], the bias added to every column."""
    if bias.data.ndim != 1 or x.data.ndim < 2 or x.shape[-2] != bias.shape[0]:
        raise DimensionError("add_bias", x.shape, bias.shape)
    m = bias.shape[0]
    return record_op("add_bias", x.data + bias.data[:, None], (x, bias),
                     lambda g: (g, _unbroadcast(g, (m, 1)).reshape(m)))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return record_op("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def tanh_op(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return record_op("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


tanh = tanh_op


def softmax(x: Tensor) -> Tensor:
    """Softmax along the last axis (the whole vector for 1-D input)."""
    if x.data.ndim < 1 or x.shape[-1] == 0:
        raise DimensionError("softmax", x.shape)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)
    return record_op("softmax", y, (x,),
                     lambda g: (y * (g - (g * y).sum(axis=-1, keepdims=True)),))


# --- shape and reductions --------------------------------------------------

def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError:
        raise DimensionError("reshape", x.shape, tuple(shape)) from None
    return record_op("reshape", out, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor) -> Tensor:
    """Swap the last two axes."""
    if x.data.ndim < 2:
        raise DimensionError("transpose", x.shape)
    return record_op("transpose", _swap(x.data), (x,), lambda g: (_swap(g),))


def sum_all(x: Tensor) -> Tensor:
    return record_op("sum", np.asarray(x.data.sum()), (x,),
                     lambda g: (np.broadcast_to(g, x.shape).copy(),))


# --- linear algebra --------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[..., m, k] @ [..., k, n]; dA = dC·Bᵀ, dB = Aᵀ·dC."""
    if a.data.ndim < 2 or b.data.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul", a.shape, b.shape)
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise DimensionError("matmul", a.shape, b.shape) from None
    return record_op("matmul", out, (a, b),
                     lambda g: (_unbroadcast(g @ _swap(b.data), a.shape),
                                _unbroadcast(_swap(a.data) @ g, b.shape)))


def causal_dilated_conv1d(x: Tensor, kernel: Tensor, dilation: int) -> Tensor:
    """
    x[..., C_in, T] * kernel[C_out, C_in, K] -> [..., C_out, T].

    The input is left-padded with (K-1)*dilation zeros, so output[c, t] only
    reads x[:, s] for s <= t and the length is preserved.
    """
    if not isinstance(dilation, (int, np.integer)) or dilation < 1:
        raise ParameterError(f"causal_dilated_conv1d: dilation must be a positive integer, got {dilation!r}")
    if kernel.data.ndim != 3 or x.data.ndim < 2 or x.shape[-2] != kernel.shape[1]:
        raise DimensionError("causal_dilated_conv1d", x.shape, kernel.shape)
    T = x.shape[-1]
    K = kernel.shape[2]
    if T < 1 or K < 1:
        raise DimensionError("causal_dilated_conv1d", x.shape, kernel.shape)

    pad = (K - 1) * dilation
    widths = [(0, 0)] * (x.data.ndim - 1) + [(pad, 0)]
    xp = np.pad(x.data, widths)
    taps = [xp[..., j * dilation: j * dilation + T] for j in range(K)]
    out = sum(kernel.data[:, :, j] @ taps[j] for j in range(K))

    def rule(g):
        dk = np.stack([_unbroadcast(g @ _swap(taps[j]), kernel.shape[:2]) for j in range(K)], axis=-1)
        dxp = np.zeros_like(xp)
        for j in range(K):
            dxp[..., j * dilation: j * dilation + T] += kernel.data[:, :, j].T @ g
        return dxp[..., pad:], dk

    return record_op("causal_dilated_conv1d", out, (x, kernel), rule)


# --- reverse pass ----------------------------------------------------------

def backward(loss: Tensor, tape: ComputationTape) -> None:
    """
    Populate .grad on every requires_grad tensor reachable from `loss`.
    Gradients from multiple uses are summed, and added onto any existing .grad.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {list(loss.shape)}")
    if not loss.requires_grad:
        raise ContractError("loss does not depend on any tensor that requires grad")

    if tape.nodes and not any(n.output is loss for n in tape.nodes):
        raise ContractError("loss was not produced on this tape")

    grads = {id(loss): np.ones(loss.shape)}
    reached = {id(loss): loss}

    for node in reversed(tape.nodes):
        g = grads.get(id(node.output))
        if g is None:
            continue
        for inp, gi in zip(node.inputs, node.rule(g)):
            if gi is None or not inp.requires_grad:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = np.array(gi, dtype=np.float64).reshape(inp.shape)
                reached[key] = inp

    for key, tensor in reached.items():
        g = grads[key]
        tensor.grad = g if tensor.grad is None else tensor.grad + g
