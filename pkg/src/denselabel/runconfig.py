"""Flat key = value run configuration shared by every CLI command.

Precedence is defaults < config file < command-line flags, and whichever
command runs echoes the effective result to its output directory so a run
can always be reproduced from its artifacts alone.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    """Unknown key, bad value, or unreadable config file."""


@dataclass
class RunConfig:
    data_dir: str = ""
    data_csv: str = ""
    class_names: str = ""
    num_classes: int = 12
    sample_rate_hz: float = 50.0
    window_length: int = 256
    window_stride: int = 0
    normalize: bool = True
    split_seed: int = 42
    train_fraction: float = 0.4356
    val_fraction: float = 0.2178
    depth: int = 4
    base_filters: int = 32
    kernel_size: int = 3
    block_style: str = "modified"
    dropout_rate: float = 0.2
    dropout_block: int = 2
    disc_filters: str = "32,64,128"
    adversarial: bool = True
    lambda_focal: float = 100.0
    gamma: float = 2.0
    beta_floor: float = 0.01
    total_steps: int = 70_000
    batch_size: int = 100
    learning_rate: float = 0.0005
    lr_decay_rate: float = 0.96
    lr_decay_steps: int = 300_000
    lr_staircase: bool = False
    eval_every: int = 500
    d_steps_per_g: int = 1
    seed: int = 42
    out_dir: str = "run_out"

    def class_name_list(self) -> list[str]:
        """Names from the comma-separated key, or generated placeholders."""
        if self.class_names.strip():
            names = [n.strip() for n in self.class_names.split(",")]
            if any(not n for n in names):
                raise ConfigError("class_names has an empty entry")
            return names
        return [f"class{i:02d}" for i in range(self.num_classes)]

    def disc_filter_tuple(self) -> tuple[int, ...]:
        try:
            return tuple(int(p) for p in self.disc_filters.split(","))
        except ValueError:
            raise ConfigError(
                f"disc_filters must be comma-separated ints, got {self.disc_filters!r}"
            ) from None

    def stride(self) -> int:
        return self.window_stride if self.window_stride > 0 else self.window_length


HELP = {
    "data_dir": "directory holding a RawData/ tree of acc/gyro txt files",
    "data_csv": "single labeled CSV sequence (channels + label column)",
    "class_names": "comma-separated class names; empty generates classNN",
    "num_classes": "number of activity classes",
    "sample_rate_hz": "sensor sampling rate",
    "window_length": "frames per training window",
    "window_stride": "window stride; 0 means non-overlapping",
    "normalize": "z-score channels with training-split statistics",
    "split_seed": "shuffle seed for the train/validation/test split",
    "train_fraction": "fraction of windows used for training",
    "val_fraction": "fraction of windows used for validation",
    "depth": "number of pooling levels in the labeler",
    "base_filters": "filters in the first block (doubles per level)",
    "kernel_size": "temporal kernel width",
    "block_style": "'modified' (residual concat + fuse) or 'plain'",
    "dropout_rate": "channel dropout rate; 0 disables",
    "dropout_block": "block number whose output is dropped; 0 disables",
    "disc_filters": "comma-separated critic filters, one entry per block",
    "adversarial": "train against the patch critic",
    "lambda_focal": "weight of the focal term in the objective",
    "gamma": "focal exponent",
    "beta_floor": "lower clip for the dice discount",
    "total_steps": "generator updates to run",
    "batch_size": "windows per step",
    "learning_rate": "initial Adam learning rate",
    "lr_decay_rate": "exponential decay factor",
    "lr_decay_steps": "steps per decay factor application",
    "lr_staircase": "decay in integer jumps instead of continuously",
    "eval_every": "steps between validation passes",
    "d_steps_per_g": "critic updates per labeler update",
    "seed": "training seed (sampling, dropout, init)",
    "out_dir": "directory that receives artifacts",
}

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
assert set(HELP) == set(_FIELDS)


def config_keys() -> list[str]:
    return list(_FIELDS)


def default_value(key: str):
    return _FIELDS[key].default


def cast_value(key: str, raw: str):
    """Parse one raw string according to the key's declared type."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    target = _FIELDS[key].type
    raw = raw.strip()
    if target == "bool" or target is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if target == "int" or target is int:
            return int(raw)
        if target == "float" or target is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {target}, got {raw!r}") from None
    return raw


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blank lines skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = cast_value(key, raw)
    return values


def make_config(config_file=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file, then flag overrides (None entries skipped)."""
    values = {}
    if config_file is not None:
        values.update(load_config_file(config_file))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    return RunConfig(**values)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for key in _FIELDS:
        val = getattr(cfg, key)
        if isinstance(val, bool):
            val = "true" if val else "false"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def write_config(cfg: RunConfig, path) -> None:
    """Echo the effective config; the output re-parses to the same values."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(format_config(cfg), encoding="utf-8")
    os.replace(tmp, path)
