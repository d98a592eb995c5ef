"""
Reverse-mode automatic differentiation over dense float64 arrays.

Every network, channel and loss in anchorkit is built from these primitives.
"""
from . import ops
from .gradcheck import grad_check
from .ops import (
    add,
    avg_pool2d,
    concat,
    conv2d,
    conv_transpose2d,
    div,
    exp,
    log,
    matmul,
    mul,
    neg,
    power,
    prelu,
    reduce_mean,
    reduce_sum,
    reshape,
    sigmoid,
    softplus,
    sqrt,
    square,
    stop_gradient,
    sub,
    transpose,
)
from .rng import Rng
from .tensor import GradientMap, Node, Tape, Tensor, active_tape, apply_op, as_tensor, backward, paused

__all__ = [
    "GradientMap",
    "Node",
    "Rng",
    "Tape",
    "Tensor",
    "active_tape",
    "add",
    "apply_op",
    "as_tensor",
    "avg_pool2d",
    "backward",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "div",
    "exp",
    "grad_check",
    "log",
    "matmul",
    "mul",
    "neg",
    "ops",
    "paused",
    "power",
    "prelu",
    "reduce_mean",
    "reduce_sum",
    "reshape",
    "sigmoid",
    "softplus",
    "sqrt",
    "square",
    "stop_gradient",
    "sub",
    "transpose",
]
