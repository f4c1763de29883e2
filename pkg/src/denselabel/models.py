"""The labeling network and the patch discriminator.

The generator is a 1-D U-Net over (batch, time, channels) windows. In the
``modified`` style every block runs [conv k -> batch norm -> PReLU] twice,
concatenates the block input back onto the result, and fuses with a 1x1
conv; the ``plain`` style drops the batch norms and the fuse step. Decoding
upsamples (no transposed convolutions) and concatenates the matching encoder
feature map. The head is a 1x1 conv to K classes plus a per-frame softmax.

The discriminator lifts the raw window to K channels with a 1x1 conv,
concatenates a label map (one-hot truth or generator softmax), pushes the
pair through three conv/pool stages, and scores each of the remaining
T / 2^3 temporal patches with a sigmoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    ParamSet,
    RunningStats,
    Tensor,
    batch_norm,
    concat_channels,
    conv_time,
    max_pool_time,
    no_grad,
    prelu,
    reshape,
    sigmoid,
    softmax_over_classes,
    spatial_dropout,
    upsample_time,
)


@dataclass(frozen=True)
class GeneratorConfig:
    window_length: int = 256
    in_channels: int = 6
    num_classes: int = 12
    depth: int = 4
    base_filters: int = 32
    kernel_size: int = 3
    block_style: str = "modified"
    dropout_rate: float = 0.2
    dropout_block: int | None = 2

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.window_length % (2**self.depth) != 0:
            raise ValueError(
                f"window_length {self.window_length} must be divisible by "
                f"2^depth = {2**self.depth}"
            )
        if self.block_style not in ("modified", "plain"):
            raise ValueError(f"block_style must be 'modified' or 'plain', got {self.block_style!r}")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.in_channels < 1 or self.base_filters < 1:
            raise ValueError("in_channels and base_filters must be >= 1")
        if self.kernel_size < 1:
            raise ValueError("kernel_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.dropout_block is not None and not 1 <= self.dropout_block <= self.num_blocks:
            raise ValueError(
                f"dropout_block must be in 1..{self.num_blocks}, got {self.dropout_block}"
            )

    @property
    def num_blocks(self) -> int:
        # Contraction blocks, bottleneck, expansion blocks, numbered from 1.
        return 2 * self.depth + 1


@dataclass(frozen=True)
class DiscriminatorConfig:
    num_classes: int = 12
    in_channels: int = 6
    filters: tuple[int, ...] = (32, 64, 128)
    kernel_size: int = 3
    pool_size: int = 2

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if len(self.filters) < 1:
            raise ValueError("need at least one block")
        if self.kernel_size < 1 or self.pool_size < 1:
            raise ValueError("kernel_size and pool_size must be >= 1")

    @property
    def num_blocks(self) -> int:
        return len(self.filters)

    def patch_count(self, window_length: int) -> int:
        divisor = self.pool_size**self.num_blocks
        if window_length % divisor != 0:
            raise ValueError(
                f"window_length {window_length} not divisible by {divisor}"
            )
        return window_length // divisor


@dataclass
class DenseLabelMap:
    """Per-frame class probabilities for one window, plus derived labels."""

    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise ValueError(f"probs must be (T, K), got {self.probs.shape}")
        sums = self.probs.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-6):
            raise ValueError("probability rows must sum to 1 within 1e-6")

    @property
    def labels(self) -> np.ndarray:
        return self.probs.argmax(axis=1)


class _Layers:
    """Shared registration helpers: parameters, BN stats, and the dump."""

    def __init__(self, dtype):
        self.params = ParamSet()
        self.bn_stats: dict[str, RunningStats] = {}
        self.records: list[tuple[str, str, str, int]] = []
        self.dtype = dtype

    def note(self, name: str, kind: str, shape: str, count: int = 0) -> None:
        self.records.append((name, kind, shape, count))

    def conv(self, name: str, k: int, cin: int, cout: int, rng) -> tuple[Tensor, Tensor]:
        bound = math.sqrt(6.0 / (k * cin))
        w = self.params.add(
            f"{name}.w", Tensor(rng.uniform(-bound, bound, (k, cin, cout)).astype(self.dtype))
        )
        b = self.params.add(f"{name}.b", Tensor(np.zeros(cout, dtype=self.dtype)))
        self.note(name, f"conv k{k}", f"{cin}->{cout}", w.size + b.size)
        return w, b

    def bn(self, name: str, ch: int) -> tuple[Tensor, Tensor, RunningStats]:
        gamma = self.params.add(f"{name}.gamma", Tensor(np.ones(ch, dtype=self.dtype)))
        beta = self.params.add(f"{name}.beta", Tensor(np.zeros(ch, dtype=self.dtype)))
        stats = RunningStats.create(ch, dtype=self.dtype)
        self.bn_stats[name] = stats
        self.note(name, "batchnorm", f"{ch}", gamma.size + beta.size)
        return gamma, beta, stats

    def slope(self, name: str, ch: int) -> Tensor:
        s = self.params.add(f"{name}.slope", Tensor(np.full(ch, 0.25, dtype=self.dtype)))
        self.note(name, "prelu", f"{ch}", s.size)
        return s

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameters plus BN running statistics, for checkpointing."""
        out = self.params.values_dict()
        for name, stats in self.bn_stats.items():
            out[f"{name}.running_mean"] = stats.mean.copy()
            out[f"{name}.running_var"] = stats.var.copy()
        return out

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        params_part = {}
        for name, arr in arrays.items():
            if name.endswith(".running_mean") or name.endswith(".running_var"):
                bn_name, _, kind = name.rpartition(".")
                if bn_name not in self.bn_stats:
                    raise ValueError(f"unknown batch norm stats {name!r}")
                stats = self.bn_stats[bn_name]
                target = stats.mean if kind == "running_mean" else stats.var
                if target.shape != arr.shape:
                    raise ValueError(f"{name}: shape {arr.shape} != {target.shape}")
                if kind == "running_mean":
                    stats.mean = arr.astype(target.dtype)
                else:
                    stats.var = arr.astype(target.dtype)
            else:
                params_part[name] = arr
        self.params.load_values(params_part)

    def summary(self) -> str:
        lines = [f"{'layer':<28} {'kind':<12} {'shape':<12} params"]
        for name, kind, shape, count in self.records:
            lines.append(f"{name:<28} {kind:<12} {shape:<12} {count}")
        lines.append(f"total parameters: {self.params.num_values()}")
        return "\n".join(lines)

    @property
    def num_params(self) -> int:
        return self.params.num_values()


class _ConvBnAct:
    """conv k -> (batch norm) -> PReLU, the repeated unit inside every block."""

    def __init__(self, layers: _Layers, name: str, k: int, cin: int, cout: int,
                 use_bn: bool, rng):
        self.w, self.b = layers.conv(f"{name}.conv", k, cin, cout, rng)
        self.use_bn = use_bn
        if use_bn:
            self.gamma, self.beta, self.stats = layers.bn(f"{name}.bn", cout)
        self.s = layers.slope(f"{name}.act", cout)

    def __call__(self, h: Tensor, mode: str) -> Tensor:
        h = conv_time(h, self.w, self.b)
        if self.use_bn:
            h = batch_norm(h, self.gamma, self.beta, mode, self.stats)
        return prelu(h, self.s)


class _UNetBlock:
    """One numbered block: two conv units plus, in the modified style, the
    input re-concatenation fused by a 1x1 conv."""

    def __init__(self, layers: _Layers, name: str, k: int, cin: int, cout: int,
                 modified: bool, rng):
        self.u1 = _ConvBnAct(layers, f"{name}.u1", k, cin, cout, modified, rng)
        self.u2 = _ConvBnAct(layers, f"{name}.u2", k, cout, cout, modified, rng)
        self.modified = modified
        if modified:
            layers.note(f"{name}.skip", "concat", f"{cin}+{cout}")
            self.fw, self.fb = layers.conv(f"{name}.fuse", 1, cin + cout, cout, rng)

    def __call__(self, h: Tensor, mode: str) -> Tensor:
        block_in = h
        h = self.u2(self.u1(h, mode), mode)
        if self.modified:
            h = conv_time(concat_channels([block_in, h]), self.fw, self.fb)
        return h


class Generator:
    """Dense labeler: U-Net encoder/decoder with a softmax head."""

    def __init__(self, cfg: GeneratorConfig, seed: int = 0, dtype=np.float32):
        self.cfg = cfg
        self.layers = _Layers(dtype)
        rng = np.random.default_rng(seed)
        modified = cfg.block_style == "modified"
        k = cfg.kernel_size

        self.enc: list[_UNetBlock] = []
        cin = cfg.in_channels
        for level in range(cfg.depth):
            f = cfg.base_filters * 2**level
            self.enc.append(
                _UNetBlock(self.layers, f"b{level + 1}", k, cin, f, modified, rng)
            )
            self.layers.note(f"b{level + 1}.pool", "maxpool 2", f"{f}")
            cin = f

        f_bott = cfg.base_filters * 2**cfg.depth
        self.bottleneck = _UNetBlock(
            self.layers, f"b{cfg.depth + 1}", k, cin, f_bott, modified, rng
        )

        self.dec: list[_UNetBlock] = []
        cin = f_bott
        for level in reversed(range(cfg.depth)):
            f = cfg.base_filters * 2**level
            block_no = 2 * cfg.depth + 1 - level
            self.layers.note(f"b{block_no}.up", "upsample 2", f"{cin}")
            self.layers.note(f"b{block_no}.cat", "concat", f"{cin}+{f}")
            self.dec.append(
                _UNetBlock(self.layers, f"b{block_no}", k, cin + f, f, modified, rng)
            )
            cin = f

        self.head_w, self.head_b = self.layers.conv(
            "head", 1, cfg.base_filters, cfg.num_classes, rng
        )
        self.layers.note("softmax", "softmax", f"{cfg.num_classes}")

    @property
    def params(self) -> ParamSet:
        return self.layers.params

    def forward(
        self,
        x: Tensor,
        mode: str = "eval",
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Map (B, T, C) windows to (B, T, K) class probabilities."""
        cfg = self.cfg
        if x.ndim != 3:
            raise ValueError(f"input must be (B, T, C), got {x.shape}")
        if x.shape[1] != cfg.window_length:
            raise ValueError(
                f"input has {x.shape[1]} frames, model expects {cfg.window_length}"
            )
        if x.shape[2] != cfg.in_channels:
            raise ValueError(
                f"input has {x.shape[2]} channels, model expects {cfg.in_channels}"
            )

        block_no = 0

        def dropped(h: Tensor) -> Tensor:
            if cfg.dropout_block == block_no and cfg.dropout_rate > 0.0:
                return spatial_dropout(h, cfg.dropout_rate, mode, rng)
            return h

        skips = []
        h = x
        for block in self.enc:
            block_no += 1
            h = dropped(block(h, mode))
            skips.append(h)
            h = max_pool_time(h, 2)

        block_no += 1
        h = dropped(self.bottleneck(h, mode))

        for block, skip in zip(self.dec, reversed(skips)):
            block_no += 1
            h = concat_channels([upsample_time(h, 2), skip])
            h = dropped(block(h, mode))

        logits = conv_time(h, self.head_w, self.head_b)
        return softmax_over_classes(logits)

    def predict(self, x: np.ndarray) -> DenseLabelMap:
        """Inference on a single (T, C) window."""
        with no_grad():
            probs = self.forward(Tensor(x[None, :, :]), mode="eval")
        return DenseLabelMap(probs=probs.data[0])

    def state_arrays(self) -> dict[str, np.ndarray]:
        return self.layers.state_arrays()

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.layers.load_state(arrays)

    def summary(self) -> str:
        return self.layers.summary()

    @property
    def num_params(self) -> int:
        return self.layers.num_params


class Discriminator:
    """Patch critic over (window, label map) pairs."""

    def __init__(self, cfg: DiscriminatorConfig, seed: int = 0, dtype=np.float32):
        self.cfg = cfg
        self.layers = _Layers(dtype)
        rng = np.random.default_rng(seed)
        k = cfg.kernel_size

        self.in_w, self.in_b = self.layers.conv(
            "inmap", 1, cfg.in_channels, cfg.num_classes, rng
        )
        self.layers.note("pair", "concat", f"{cfg.num_classes}+{cfg.num_classes}")
        self.blocks: list[_ConvBnAct] = []
        cin = 2 * cfg.num_classes
        for i, f in enumerate(cfg.filters, start=1):
            self.blocks.append(
                _ConvBnAct(self.layers, f"d{i}", k, cin, f, True, rng)
            )
            self.layers.note(f"d{i}.pool", f"maxpool {cfg.pool_size}", f"{f}")
            cin = f
        self.head_w, self.head_b = self.layers.conv("head", 1, cin, 1, rng)
        self.layers.note("sigmoid", "sigmoid", "1")

    @property
    def params(self) -> ParamSet:
        return self.layers.params

    def forward(self, x: Tensor, labelmap: Tensor, mode: str = "eval") -> Tensor:
        """Score (B, T, C) windows against (B, T, K) label maps -> (B, P)."""
        cfg = self.cfg
        if x.ndim != 3 or labelmap.ndim != 3:
            raise ValueError("x and labelmap must be (B, T, .) tensors")
        if x.shape[:2] != labelmap.shape[:2]:
            raise ValueError(
                f"x frames {x.shape[:2]} and labelmap frames {labelmap.shape[:2]} differ"
            )
        if x.shape[2] != cfg.in_channels:
            raise ValueError(
                f"x has {x.shape[2]} channels, model expects {cfg.in_channels}"
            )
        if labelmap.shape[2] != cfg.num_classes:
            raise ValueError(
                f"labelmap has {labelmap.shape[2]} classes, model expects {cfg.num_classes}"
            )
        patches = cfg.patch_count(x.shape[1])

        h = concat_channels([conv_time(x, self.in_w, self.in_b), labelmap])
        for block in self.blocks:
            h = max_pool_time(block(h, mode), cfg.pool_size)
        scores = sigmoid(conv_time(h, self.head_w, self.head_b))
        return reshape(scores, (x.shape[0], patches))

    def state_arrays(self) -> dict[str, np.ndarray]:
        return self.layers.state_arrays()

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.layers.load_state(arrays)

    def summary(self) -> str:
        return self.layers.summary()

    @property
    def num_params(self) -> int:
        return self.layers.num_params


def receptive_field(cfg: GeneratorConfig) -> int:
    """One-sided temporal reach of a generator output frame, in input frames.

    Walks the encoder/decoder arithmetic: a k-wide conv at a level running at
    stride s extends the reach by s*(k-1)/2 per application, pooling extends
    it by s-1 and doubles the stride, upsampling halves it.
    """
    half = (cfg.kernel_size - 1) // 2
    reach = 0
    stride = 1
    for _ in range(cfg.depth):
        reach += 2 * half * stride  # two convs per block
        reach += stride  # pool window
        stride *= 2
    reach += 2 * half * stride  # bottleneck
    for _ in range(cfg.depth):
        stride //= 2
        reach += 2 * half * stride
    return reach
