"""Binary checkpoint files.

Layout, all little-endian:

    bytes 0..4   magic b"DLAB1"
    byte  5      format version (currently 1)
    u32          config JSON length, then that many UTF-8 bytes
    u32          tensor count
    per tensor:  u16 name length, name bytes,
                 u8 dtype code (0=f32, 1=f64, 2=i64),
                 u8 ndim, ndim * u32 dims,
                 raw C-order array bytes

The JSON block (sorted keys, fixed separators) carries the step, the best
validation metric, every config dataclass, and the normalization stats
reference. Generator tensors are stored under "g:" names, discriminator
tensors under "d:", so the same section serves both models. Identical
checkpoints serialize to identical bytes, which makes round-trip tests
byte-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .autodiff import LrSchedule
from .losses import LossConfig
from .models import DiscriminatorConfig, GeneratorConfig
from .trainer import Checkpoint, TrainConfig

MAGIC = b"DLAB1"
FORMAT_VERSION = 1

_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1, np.dtype("<i8"): 2}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


class CheckpointFormatError(ValueError):
    """Raised for bad magic, wrong version, or a malformed/truncated file."""


def _config_json(ckpt: Checkpoint) -> bytes:
    loss = asdict(ckpt.loss_cfg)
    if loss["alpha"] is not None:
        loss["alpha"] = [float(v) for v in loss["alpha"]]
    payload = {
        "step": ckpt.step,
        "best_val_metric": ckpt.best_val_metric,
        "norm_stats_ref": ckpt.norm_stats_ref,
        "gen_cfg": asdict(ckpt.gen_cfg),
        "disc_cfg": asdict(ckpt.disc_cfg) if ckpt.disc_cfg is not None else None,
        "loss_cfg": loss,
        "train_cfg": asdict(ckpt.train_cfg),
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _configs_from_json(raw: bytes) -> dict:
    payload = json.loads(raw.decode("utf-8"))
    loss = dict(payload["loss_cfg"])
    if loss["alpha"] is not None:
        loss["alpha"] = np.asarray(loss["alpha"], dtype=np.float64)
    train = dict(payload["train_cfg"])
    train["lr"] = LrSchedule(**train["lr"])
    disc = payload["disc_cfg"]
    if disc is not None:
        disc = dict(disc)
        disc["filters"] = tuple(disc["filters"])
    return {
        "step": payload["step"],
        "best_val_metric": payload["best_val_metric"],
        "norm_stats_ref": payload["norm_stats_ref"],
        "gen_cfg": GeneratorConfig(**payload["gen_cfg"]),
        "disc_cfg": DiscriminatorConfig(**disc) if disc is not None else None,
        "loss_cfg": LossConfig(**loss),
        "train_cfg": TrainConfig(**train),
    }


def _write_tensor(fh, name: str, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    dtype = arr.dtype.newbyteorder("<")
    if dtype not in _DTYPE_CODES:
        raise ValueError(f"tensor {name!r} has unsupported dtype {arr.dtype}")
    data = arr.astype(dtype, copy=False)
    encoded = name.encode("utf-8")
    fh.write(struct.pack("<H", len(encoded)))
    fh.write(encoded)
    fh.write(struct.pack("<BB", _DTYPE_CODES[dtype], arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(data.tobytes())


def _read(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise CheckpointFormatError(f"truncated checkpoint while reading {what}")
    return data


def _read_tensor(fh) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", _read(fh, 2, "tensor name length"))
    name = _read(fh, name_len, "tensor name").decode("utf-8")
    code, ndim = struct.unpack("<BB", _read(fh, 2, f"{name} header"))
    if code not in _CODE_DTYPES:
        raise CheckpointFormatError(f"tensor {name!r} has unknown dtype code {code}")
    shape = struct.unpack(f"<{ndim}I", _read(fh, 4 * ndim, f"{name} shape"))
    dtype = _CODE_DTYPES[code]
    nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    arr = np.frombuffer(_read(fh, nbytes, f"{name} data"), dtype=dtype).reshape(shape)
    return name, arr.copy()


def save_checkpoint(ckpt: Checkpoint, file) -> None:
    config = _config_json(ckpt)
    named = [(f"g:{k}", v) for k, v in ckpt.generator_state.items()]
    if ckpt.discriminator_state is not None:
        named += [(f"d:{k}", v) for k, v in ckpt.discriminator_state.items()]
    with open(file, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(config)))
        fh.write(config)
        fh.write(struct.pack("<I", len(named)))
        for name, arr in named:
            _write_tensor(fh, name, arr)


def load_checkpoint(file) -> Checkpoint:
    path = Path(file)
    with open(path, "rb") as fh:
        magic = _read(fh, len(MAGIC), "magic header")
        if magic != MAGIC:
            raise CheckpointFormatError(
                f"{path}: not a checkpoint file (bad magic {magic!r})"
            )
        (version,) = struct.unpack("<B", _read(fh, 1, "version"))
        if version != FORMAT_VERSION:
            raise CheckpointFormatError(
                f"{path}: incompatible format version {version}, "
                f"this build reads version {FORMAT_VERSION}"
            )
        (config_len,) = struct.unpack("<I", _read(fh, 4, "config length"))
        configs = _configs_from_json(_read(fh, config_len, "config block"))
        (count,) = struct.unpack("<I", _read(fh, 4, "tensor count"))
        gen_state: dict[str, np.ndarray] = {}
        disc_state: dict[str, np.ndarray] = {}
        for _ in range(count):
            name, arr = _read_tensor(fh)
            if name.startswith("g:"):
                gen_state[name[2:]] = arr
            elif name.startswith("d:"):
                disc_state[name[2:]] = arr
            else:
                raise CheckpointFormatError(f"{path}: unprefixed tensor {name!r}")
        trailing = fh.read(1)
        if trailing:
            raise CheckpointFormatError(f"{path}: trailing bytes after tensor section")
    return Checkpoint(
        generator_state=gen_state,
        gen_cfg=configs["gen_cfg"],
        loss_cfg=configs["loss_cfg"],
        train_cfg=configs["train_cfg"],
        step=configs["step"],
        best_val_metric=configs["best_val_metric"],
        discriminator_state=disc_state or None,
        disc_cfg=configs["disc_cfg"],
        norm_stats_ref=configs["norm_stats_ref"],
    )
