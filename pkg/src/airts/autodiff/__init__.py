"""Minimal float64 tensor engine with a reverse-mode tape and Adam."""

from . import ops
from .gradcheck import finite_difference_gradcheck
from .module import Module, xavier_uniform, zeros_param
from .ops import (
    add,
    causal_dilated_conv1d,
    concat,
    concat_last_axis,
    matmul,
    mean,
    mse_loss,
    mul,
    relu,
    reshape,
    scale,
    softmax,
    softmax_last_axis,
    stop_gradient,
    straight_through,
    take_rows,
    transpose,
)
from .optim import Adam, AdamState, adam_step
from .tensor import ContractError, DimensionError, Tape, Tensor, backward, current_tape, no_grad

__all__ = [
    "Adam", "AdamState", "ContractError", "DimensionError", "Module", "Tape", "Tensor",
    "adam_step", "add", "backward", "causal_dilated_conv1d", "concat", "concat_last_axis",
    "current_tape", "finite_difference_gradcheck", "matmul", "mean", "mse_loss", "mul",
    "no_grad", "ops", "relu", "reshape", "scale", "softmax", "softmax_last_axis",
    "stop_gradient", "straight_through", "take_rows", "transpose", "xavier_uniform",
    "zeros_param",
]
