"""
Differentiable primitives.

Each primitive computes its forward value with numpy and hands ``apply_op`` a
vector-Jacobian product closure over the values it needs to save.
Broadcasting follows numpy's trailing-dimension rules.
"""
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import NumericError, ShapeError
from .tensor import Tensor, apply_op, as_tensor

Axis = Optional[Union[int, Tuple[int, ...]]]


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable") from None


def _finite_or_raise(op: str, data: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op} produced non-finite values")
    return data


# --- elementwise arithmetic -------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return apply_op("add", a.data + b.data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return apply_op("sub", a.data - b.data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return apply_op("mul", a.data * b.data, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("div", a, b)
    if np.any(b.data == 0.0):
        raise NumericError(f"div: denominator of shape {b.shape} contains zeros")

    def vjp(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return apply_op("div", a.data / b.data, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return apply_op("neg", -a.data, (a,), lambda g: (-g,))


def square(a) -> Tensor:
    a = as_tensor(a)
    return apply_op("square", a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data < 0.0):
        raise NumericError("sqrt of a negative value")
    out = np.sqrt(a.data)

    def vjp(g):
        return (0.5 * g / np.maximum(out, 1e-300),)

    return apply_op("sqrt", out, (a,), vjp)


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    if exponent < 0 and np.any(a.data == 0.0):
        raise NumericError(f"power: zero base with negative exponent {exponent}")
    out = _finite_or_raise("power", np.power(a.data, exponent))

    def vjp(g):
        return (g * exponent * np.power(a.data, exponent - 1.0),)

    return apply_op("power", out, (a,), vjp)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = _finite_or_raise("exp", np.exp(a.data))
    return apply_op("exp", out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        raise NumericError("log of a non-positive value")
    return apply_op("log", np.log(a.data), (a,), lambda g: (g / a.data,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = _sigmoid(a.data)
    return apply_op("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    return apply_op("softplus", np.logaddexp(0.0, a.data), (a,), lambda g: (g * _sigmoid(a.data),))


def prelu(x, slope, axis: int = 1) -> Tensor:
    """x where x >= 0, slope * x otherwise; ``slope`` holds one value per ``axis`` entry."""
    x, slope = as_tensor(x), as_tensor(slope)
    if slope.ndim != 1 or slope.shape[0] != x.shape[axis]:
        raise ShapeError(f"prelu: slope shape {slope.shape} does not match axis {axis} of {x.shape}")
    view = [1] * x.ndim
    view[axis] = slope.shape[0]
    s = slope.data.reshape(view)
    positive = x.data >= 0
    out = np.where(positive, x.data, s * x.data)
    reduce_axes = tuple(i for i in range(x.ndim) if i != axis)

    def vjp(g):
        gx = g * np.where(positive, 1.0, s)
        gs = (g * np.where(positive, 0.0, x.data)).sum(axis=reduce_axes)
        return gx, gs

    return apply_op("prelu", out, (x, slope), vjp)


def stop_gradient(a) -> Tensor:
    return Tensor(as_tensor(a).data, requires_grad=False)


# --- reductions and shape ----------------------------------------------------

def _norm_axes(axis: Axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    return tuple(sorted(a % ndim for a in axes))


def reduce_sum(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return apply_op("reduce_sum", out, (a,), vjp)


def reduce_mean(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if a.size == 0:
        raise ShapeError("reduce_mean of an empty tensor")
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    out = a.data.mean(axis=axes, keepdims=keepdims)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return apply_op("reduce_mean", out, (a,), vjp)


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot view {a.shape} as {tuple(shape)}") from None
    return apply_op("reshape", out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return apply_op("transpose", a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        shapes = [p.shape for p in parts]
        raise ShapeError(f"concat along axis {axis}: incompatible shapes {shapes}") from None
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return apply_op("concat", out, parts, vjp)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not align")

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return apply_op("matmul", a.data @ b.data, (a, b), vjp)


# --- spatial -----------------------------------------------------------------

def _windows(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    """(N, C, Ho, Wo, kh, kw) read-only view of all strided kernel windows."""
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


def _col2im(cols: np.ndarray, shape: Tuple[int, ...], stride: int) -> np.ndarray:
    """Scatter-add window columns back onto a (N, C, H, W) buffer."""
    out = np.zeros(shape)
    _, _, ho, wo, kh, kw = cols.shape
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += cols[:, :, :, :, i, j]
    return out


def _check_conv_args(op: str, x: Tensor, kernel: Tensor, in_axis: int, stride: int, pad: int) -> None:
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"{op}: expected 4-d input and kernel, got {x.shape} and {kernel.shape}")
    if stride <= 0:
        raise ValueError(f"{op}: stride must be positive, got {stride}")
    if pad < 0:
        raise ValueError(f"{op}: padding must be non-negative, got {pad}")
    if kernel.shape[in_axis] != x.shape[1]:
        raise ShapeError(f"{op}: kernel {kernel.shape} expects {kernel.shape[in_axis]} input "
                         f"channels, input {x.shape} has {x.shape[1]}")


def conv2d(x, kernel, bias, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation. kernel is [out_c, in_c, kh, kw], bias is [out_c]."""
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    _check_conv_args("conv2d", x, kernel, 1, stride, pad)
    n, c, h, w = x.shape
    o, _, kh, kw = kernel.shape
    if h + 2 * pad < kh or w + 2 * pad < kw:
        raise ShapeError(f"conv2d: padded input {(h + 2 * pad, w + 2 * pad)} smaller than kernel {(kh, kw)}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = _windows(xp, kh, kw, stride)
    out = np.tensordot(win, kernel.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    out = out + bias.data.reshape(1, o, 1, 1)

    def vjp(g):
        gk = np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))
        gb = g.sum(axis=(0, 2, 3))
        cols = np.tensordot(g, kernel.data, axes=([1], [0])).transpose(0, 3, 1, 2, 4, 5)
        gxp = _col2im(cols, xp.shape, stride)
        return gxp[:, :, pad:pad + h, pad:pad + w], gk, gb

    return apply_op("conv2d", out, (x, kernel, bias), vjp)


def conv_transpose2d(x, kernel, bias, stride: int = 1, pad: int = 0, output_padding: int = 0) -> Tensor:
    """Adjoint of conv2d with respect to its input.

    kernel is [in_c, out_c, kh, kw]; output size is
    (H - 1) * stride - 2 * pad + kh + output_padding.
    """
    x, kernel, bias = as_tensor(x), as_tensor(kernel), as_tensor(bias)
    _check_conv_args("conv_transpose2d", x, kernel, 0, stride, pad)
    if output_padding < 0 or output_padding >= max(stride, pad + 1):
        raise ValueError(f"conv_transpose2d: output_padding {output_padding} out of range for "
                         f"stride {stride} and pad {pad}")
    n, c, h, w = x.shape
    _, o, kh, kw = kernel.shape
    h_out = (h - 1) * stride - 2 * pad + kh + output_padding
    w_out = (w - 1) * stride - 2 * pad + kw + output_padding
    if h_out <= 0 or w_out <= 0:
        raise ShapeError(f"conv_transpose2d: input {x.shape} gives empty output {(h_out, w_out)}")
    h_buf = max((h - 1) * stride + kh, pad + h_out)
    w_buf = max((w - 1) * stride + kw, pad + w_out)
    cols = np.tensordot(x.data, kernel.data, axes=([1], [0])).transpose(0, 3, 1, 2, 4, 5)
    buf = _col2im(cols, (n, o, h_buf, w_buf), stride)
    out = buf[:, :, pad:pad + h_out, pad:pad + w_out] + bias.data.reshape(1, o, 1, 1)

    def vjp(g):
        gbuf = np.zeros((n, o, h_buf, w_buf))
        gbuf[:, :, pad:pad + h_out, pad:pad + w_out] = g
        win = _windows(gbuf, kh, kw, stride)[:, :, :h, :w]
        gx = np.tensordot(win, kernel.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
        gk = np.tensordot(x.data, win, axes=([0, 2, 3], [0, 2, 3]))
        gb = g.sum(axis=(0, 2, 3))
        return gx, gk, gb

    return apply_op("conv_transpose2d", out, (x, kernel, bias), vjp)


def avg_pool2d(x, k: int) -> Tensor:
    """Non-overlapping k x k window means; k must divide both spatial dims."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"avg_pool2d: expected 4-d input, got {x.shape}")
    n, c, h, w = x.shape
    if k <= 0 or k > h or k > w:
        raise ShapeError(f"avg_pool2d: window {k} does not fit spatial dims {(h, w)}")
    if h % k or w % k:
        raise ShapeError(f"avg_pool2d: window {k} does not divide spatial dims {(h, w)}")
    out = x.data.reshape(n, c, h // k, k, w // k, k).mean(axis=(3, 5))

    def vjp(g):
        return (np.repeat(np.repeat(g, k, axis=2), k, axis=3) / (k * k),)

    return apply_op("avg_pool2d", out, (x,), vjp)
