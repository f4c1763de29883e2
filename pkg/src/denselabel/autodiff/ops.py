"""Differentiable operations for 1-D sequence models.

All sequence tensors are laid out (batch, time, channels). Convolution is
cross-correlation along the time axis (no kernel flip). Stochastic ops take an
explicit numpy Generator so runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, make_op


def _require_ndim(x: Tensor, ndim: int, op: str) -> None:
    if x.ndim != ndim:
        raise ValueError(f"{op} expects a {ndim}-d tensor, got shape {x.shape}")


def conv_time(x: Tensor, weights: Tensor, bias: Tensor, padding: str = "same") -> Tensor:
    """Cross-correlate (B, T, Cin) with (k, Cin, Cout) kernels along time.

    ``same`` zero-pads so the output keeps T frames; ``valid`` yields
    T - k + 1 frames. Implemented as one matmul per kernel tap, which keeps
    the backward pass free of large im2col buffers.
    """
    _require_ndim(x, 3, "conv_time")
    if weights.ndim != 3:
        raise ValueError(f"conv_time weights must be (k, Cin, Cout), got {weights.shape}")
    k, cin, cout = weights.shape
    if k < 1:
        raise ValueError("conv_time kernel size must be >= 1")
    if x.shape[2] != cin:
        raise ValueError(
            f"conv_time channel mismatch: input has {x.shape[2]} channels, "
            f"weights expect {cin}"
        )
    if bias.shape != (cout,):
        raise ValueError(f"conv_time bias must be ({cout},), got {bias.shape}")
    if padding not in ("same", "valid"):
        raise ValueError(f"conv_time padding must be 'same' or 'valid', got {padding!r}")

    b_sz, t_len = x.shape[0], x.shape[1]
    if padding == "same":
        pad_left = (k - 1) // 2
        pad_right = k - 1 - pad_left
        xp = np.pad(x.data, ((0, 0), (pad_left, pad_right), (0, 0)))
        t_out = t_len
    else:
        if t_len < k:
            raise ValueError(f"conv_time valid padding needs T >= k, got T={t_len}, k={k}")
        xp = x.data
        t_out = t_len - k + 1

    out = np.empty((b_sz, t_out, cout), dtype=x.dtype)
    np.copyto(out, bias.data)
    for i in range(k):
        out += xp[:, i : i + t_out, :] @ weights.data[i]

    def backward(g):
        g2 = g.reshape(-1, cout)
        d_bias = g2.sum(axis=0)
        d_w = np.empty_like(weights.data)
        d_xp = np.zeros_like(xp)
        for i in range(k):
            tap = xp[:, i : i + t_out, :].reshape(-1, cin)
            d_w[i] = tap.T @ g2
            d_xp[:, i : i + t_out, :] += g @ weights.data[i].T
        if padding == "same":
            d_x = d_xp[:, pad_left : pad_left + t_len, :]
        else:
            d_x = d_xp
        return ((x, d_x), (weights, d_w), (bias, d_bias))

    return make_op(out, (x, weights, bias), backward)


def max_pool_time(x: Tensor, size: int) -> Tensor:
    """Per-channel max over non-overlapping windows of ``size`` frames."""
    _require_ndim(x, 3, "max_pool_time")
    if size < 1:
        raise ValueError("max_pool_time size must be >= 1")
    b_sz, t_len, ch = x.shape
    if t_len % size != 0:
        raise ValueError(f"max_pool_time: T={t_len} not divisible by size={size}")
    windows = x.data.reshape(b_sz, t_len // size, size, ch)
    idx = windows.argmax(axis=2)
    out = np.take_along_axis(windows, idx[:, :, None, :], axis=2)[:, :, 0, :]

    def backward(g):
        d_windows = np.zeros_like(windows)
        np.put_along_axis(d_windows, idx[:, :, None, :], g[:, :, None, :], axis=2)
        return ((x, d_windows.reshape(b_sz, t_len, ch)),)

    return make_op(out, (x,), backward)


def upsample_time(x: Tensor, factor: int) -> Tensor:
    """Nearest-neighbor upsampling: repeat each frame ``factor`` times."""
    _require_ndim(x, 3, "upsample_time")
    if factor < 1:
        raise ValueError("upsample_time factor must be >= 1")
    b_sz, t_len, ch = x.shape
    out = np.repeat(x.data, factor, axis=1)

    def backward(g):
        return ((x, g.reshape(b_sz, t_len, factor, ch).sum(axis=2)),)

    return make_op(out, (x,), backward)


@dataclass
class RunningStats:
    """Exponential moving estimates of per-channel mean and variance."""

    mean: np.ndarray
    var: np.ndarray
    momentum: float = 0.99

    @classmethod
    def create(cls, channels: int, momentum: float = 0.99, dtype=np.float32) -> "RunningStats":
        return cls(
            mean=np.zeros(channels, dtype=dtype),
            var=np.ones(channels, dtype=dtype),
            momentum=momentum,
        )


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    mode: str,
    running_stats: RunningStats,
    eps: float = 1e-3,
) -> Tensor:
    """Normalize per channel over the batch and time axes.

    Train mode standardizes with batch statistics and updates
    ``running_stats`` in place; eval mode uses the running estimates and has
    no side effects. Variance is the biased (population) estimate throughout.
    """
    _require_ndim(x, 3, "batch_norm")
    ch = x.shape[2]
    if gamma.shape != (ch,) or beta.shape != (ch,):
        raise ValueError(
            f"batch_norm gamma/beta must be ({ch},), got {gamma.shape} and {beta.shape}"
        )
    if mode not in ("train", "eval"):
        raise ValueError(f"batch_norm mode must be 'train' or 'eval', got {mode!r}")

    if mode == "train":
        mu = x.data.mean(axis=(0, 1))
        var = x.data.var(axis=(0, 1))
        m = running_stats.momentum
        running_stats.mean = (m * running_stats.mean + (1.0 - m) * mu).astype(
            running_stats.mean.dtype
        )
        running_stats.var = (m * running_stats.var + (1.0 - m) * var).astype(
            running_stats.var.dtype
        )
    else:
        mu = running_stats.mean.astype(x.dtype)
        var = running_stats.var.astype(x.dtype)

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mu) * inv_std
    out = gamma.data * x_hat + beta.data

    def backward(g):
        d_gamma = (g * x_hat).sum(axis=(0, 1))
        d_beta = g.sum(axis=(0, 1))
        if mode == "train":
            n = x.shape[0] * x.shape[1]
            gg = g * gamma.data
            d_x = inv_std * (
                gg - gg.mean(axis=(0, 1)) - x_hat * (gg * x_hat).sum(axis=(0, 1)) / n
            )
        else:
            d_x = g * (gamma.data * inv_std)
        return ((x, d_x), (gamma, d_gamma), (beta, d_beta))

    return make_op(out, (x, gamma, beta), backward)


def prelu(x: Tensor, slope: Tensor) -> Tensor:
    """Parametric ReLU with a learnable per-channel negative slope."""
    _require_ndim(x, 3, "prelu")
    ch = x.shape[2]
    if slope.shape != (ch,):
        raise ValueError(f"prelu slope must be ({ch},), got {slope.shape}")
    neg = x.data < 0
    out = np.where(neg, slope.data * x.data, x.data)

    def backward(g):
        d_x = np.where(neg, slope.data * g, g)
        d_slope = np.where(neg, x.data * g, 0.0).sum(axis=(0, 1))
        return ((x, d_x), (slope, d_slope))

    return make_op(out, (x, slope), backward)


def spatial_dropout(x: Tensor, rate: float, mode: str, rng: np.random.Generator | None) -> Tensor:
    """Drop whole channels per sample; survivors are scaled by 1/(1-rate)."""
    _require_ndim(x, 3, "spatial_dropout")
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"spatial_dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise ValueError(f"spatial_dropout mode must be 'train' or 'eval', got {mode!r}")
    if mode == "eval" or rate == 0.0:
        def backward_id(g):
            return ((x, g),)

        return make_op(x.data, (x,), backward_id)

    if rng is None:
        raise ValueError("spatial_dropout in train mode needs an rng")
    b_sz, _, ch = x.shape
    keep = (rng.random((b_sz, 1, ch)) >= rate).astype(x.dtype)
    scale = np.asarray(1.0 / (1.0 - rate), dtype=x.dtype)
    mask = keep * scale
    out = x.data * mask

    def backward(g):
        return ((x, g * mask),)

    return make_op(out, (x,), backward)


def softmax_over_classes(x: Tensor) -> Tensor:
    """Stabilized softmax over the trailing class axis."""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return ((x, out * (g - dot)),)

    return make_op(out, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    pos = x.data >= 0
    out = np.empty_like(x.data)
    out[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
    ex = np.exp(x.data[~pos])
    out[~pos] = ex / (1.0 + ex)

    def backward(g):
        return ((x, g * out * (1.0 - out)),)

    return make_op(out, (x,), backward)


def log(x: Tensor) -> Tensor:
    out = np.log(x.data)

    def backward(g):
        return ((x, g / x.data),)

    return make_op(out, (x,), backward)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes through the un-clipped range."""
    out = np.clip(x.data, lo, hi)
    inside = ((x.data >= lo) & (x.data <= hi)).astype(x.dtype)

    def backward(g):
        return ((x, g * inside),)

    return make_op(out, (x,), backward)


def powc(x: Tensor, exponent: float) -> Tensor:
    """Elementwise x**p for a constant float exponent (x must stay positive
    when p is non-integer)."""
    out = np.power(x.data, exponent)

    def backward(g):
        return ((x, g * exponent * np.power(x.data, exponent - 1.0)),)

    return make_op(out, (x,), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = x.data.reshape(shape)

    def backward(g):
        return ((x, g.reshape(x.data.shape)),)

    return make_op(out, (x,), backward)


def concat_channels(tensors: list[Tensor]) -> Tensor:
    """Concatenate (B, T, C_i) tensors along the channel axis."""
    if not tensors:
        raise ValueError("concat_channels needs at least one tensor")
    for t in tensors:
        _require_ndim(t, 3, "concat_channels")
    out = np.concatenate([t.data for t in tensors], axis=2)
    sizes = [t.shape[2] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            (t, g[:, :, offsets[i] : offsets[i + 1]]) for i, t in enumerate(tensors)
        )

    return make_op(out, tuple(tensors), backward)


def sum_along(x: Tensor, axis: int, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return ((x, np.broadcast_to(g, x.data.shape).copy()),)

    return make_op(out, (x,), backward)


def sum_all(x: Tensor) -> Tensor:
    out = x.data.sum()

    def backward(g):
        return ((x, np.broadcast_to(g, x.data.shape).copy()),)

    return make_op(np.asarray(out), (x,), backward)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size
    out = x.data.mean()

    def backward(g):
        return ((x, np.broadcast_to(g / n, x.data.shape).copy()),)

    return make_op(np.asarray(out), (x,), backward)
