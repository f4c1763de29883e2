"""Per-channel z-scoring with train-only statistics.

Statistics live in a small versioned text file so the exact training
normalization can be reapplied at inference:

    normstats v1
    acc_x 0.123456 0.987654
    ...
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import DataFormatError, LabeledSequence, Window

STD_FLOOR = 1e-8
_FORMAT_TAG = "normstats v1"


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    channel_names: list[str]

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if not (self.mean.shape == self.std.shape == (len(self.channel_names),)):
            raise ValueError("mean, std, and channel_names must agree in length")
        if np.any(self.std < STD_FLOOR):
            raise ValueError(f"std entries must be >= {STD_FLOOR}")

    @property
    def num_channels(self) -> int:
        return len(self.channel_names)


def compute_stats(
    arrays: list[np.ndarray], channel_names: list[str] | None = None
) -> NormStats:
    """Pool (T, C) arrays (the training portion only) into per-channel stats.

    Constant channels get the std floor, so they normalize to zero instead
    of blowing up.
    """
    if not arrays:
        raise ValueError("compute_stats needs at least one array")
    stacked = np.concatenate([np.asarray(a, dtype=np.float64) for a in arrays], axis=0)
    if channel_names is None:
        channel_names = [f"ch{i}" for i in range(stacked.shape[1])]
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    return NormStats(mean=mean, std=std, channel_names=list(channel_names))


def apply_stats(frames: np.ndarray, stats: NormStats) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != stats.num_channels:
        raise ValueError(
            f"frames have {frames.shape[-1]} channels, stats cover {stats.num_channels}"
        )
    return (frames - stats.mean) / stats.std


def normalize_sequences(
    seqs: list[LabeledSequence], stats: NormStats
) -> list[LabeledSequence]:
    """Z-score every sequence with the given (train-derived) statistics.

    Not idempotent: applying stats twice shifts the data again.
    """
    return [
        LabeledSequence(
            frames=apply_stats(s.frames, stats),
            labels=s.labels,
            source_id=s.source_id,
            sample_rate_hz=s.sample_rate_hz,
        )
        for s in seqs
    ]


def normalize_windows(windows: list[Window], stats: NormStats) -> list[Window]:
    return [
        Window(x=apply_stats(w.x, stats), y=w.y, origin=w.origin) for w in windows
    ]


def save_stats(stats: NormStats, file) -> None:
    lines = [_FORMAT_TAG]
    for name, m, s in zip(stats.channel_names, stats.mean, stats.std):
        if any(ch.isspace() for ch in name):
            raise ValueError(f"channel name {name!r} must not contain whitespace")
        lines.append(f"{name} {float(m)!r} {float(s)!r}")
    Path(file).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_stats(file) -> NormStats:
    path = Path(file)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != _FORMAT_TAG:
        raise DataFormatError(f"{path}: missing '{_FORMAT_TAG}' header")
    names, means, stds = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataFormatError(f"{path}, line {lineno}: expected 'name mean std'")
        try:
            names.append(parts[0])
            means.append(float(parts[1]))
            stds.append(float(parts[2]))
        except ValueError:
            raise DataFormatError(f"{path}, line {lineno}: bad number") from None
    return NormStats(mean=np.array(means), std=np.array(stds), channel_names=names)
