"""Minimal reverse-mode autodiff engine used by the models and losses."""

from .ops import (
    RunningStats,
    batch_norm,
    clip,
    concat_channels,
    conv_time,
    log,
    max_pool_time,
    mean_all,
    powc,
    prelu,
    reshape,
    sigmoid,
    softmax_over_classes,
    spatial_dropout,
    sum_all,
    sum_along,
    upsample_time,
)
from .optim import LrSchedule, ParamSet, adam_step, lr_at_step
from .tensor import Tensor, no_grad

__all__ = [
    "Tensor",
    "no_grad",
    "RunningStats",
    "batch_norm",
    "clip",
    "concat_channels",
    "conv_time",
    "log",
    "max_pool_time",
    "mean_all",
    "powc",
    "prelu",
    "reshape",
    "sigmoid",
    "softmax_over_classes",
    "spatial_dropout",
    "sum_all",
    "sum_along",
    "upsample_time",
    "LrSchedule",
    "ParamSet",
    "adam_step",
    "lr_at_step",
]
