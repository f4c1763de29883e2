"""Core data containers for densely labeled motion sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNLABELED = -1

# Train/validation/test fractions; the remainder after two floors goes to test.
SPLIT_FRACTIONS = (0.4356, 0.2178, 0.3466)


class DataFormatError(ValueError):
    """Raised when an input file violates its expected layout."""


@dataclass
class LabeledSequence:
    """A multichannel recording with one class id per frame.

    ``frames`` is (T, C) float; ``labels`` is (T,) int with -1 marking
    unlabeled frames and 0..K-1 the activity classes.
    """

    frames: np.ndarray
    labels: np.ndarray
    source_id: str
    sample_rate_hz: float = 50.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.frames.ndim != 2:
            raise ValueError(f"frames must be (T, C), got shape {self.frames.shape}")
        if self.labels.ndim != 1:
            raise ValueError(f"labels must be 1-d, got shape {self.labels.shape}")
        if self.frames.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"frames ({self.frames.shape[0]}) and labels ({self.labels.shape[0]}) "
                "must cover the same number of frames"
            )
        if self.labels.size and self.labels.min() < UNLABELED:
            raise ValueError("labels must be >= -1")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be > 0")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_channels(self) -> int:
        return self.frames.shape[1]


@dataclass
class Window:
    """A fixed-length fully labeled slice ready for training.

    ``y`` keeps one one-hot row per frame, so class transitions inside the
    window survive (no majority vote).
    """

    x: np.ndarray
    y: np.ndarray
    origin: tuple[str, int]

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ValueError("x and y must both be 2-d")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"x has {self.x.shape[0]} frames but y has {self.y.shape[0]}"
            )
        row_sums = self.y.sum(axis=1)
        if not (np.all(row_sums == 1.0) and np.all((self.y == 0.0) | (self.y == 1.0))):
            raise ValueError("every row of y must be exactly one-hot")

    @property
    def length(self) -> int:
        return self.x.shape[0]

    @property
    def frame_labels(self) -> np.ndarray:
        return self.y.argmax(axis=1)


@dataclass
class DatasetSplit:
    """Disjoint train/validation/test window lists plus the seed that made them."""

    train: list[Window]
    validation: list[Window]
    test: list[Window]
    seed: int
    fractions: tuple[float, float, float] = SPLIT_FRACTIONS

    def __len__(self) -> int:
        return len(self.train) + len(self.validation) + len(self.test)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic labeled recording.

    Each class is a sinusoid with its own base frequency, amplitude, and
    additive Gaussian noise; segments of random duration are concatenated
    until ``total_frames`` is reached. ``boundary_jitter`` shifts each label
    boundary by up to that many frames (signal untouched) and ``crossfade``
    linearly blends the signal across transitions, both of which make the
    boundaries ambiguous on purpose.
    """

    num_classes: int
    duration_ranges: tuple[tuple[int, int], ...]
    base_freqs: tuple[float, ...]
    amplitudes: tuple[float, ...]
    noise_sigmas: tuple[float, ...]
    total_frames: int
    seed: int
    num_channels: int = 3
    sample_rate_hz: float = 50.0
    boundary_jitter: int = 0
    crossfade: int = 0

    def __post_init__(self):
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        for name in ("duration_ranges", "base_freqs", "amplitudes", "noise_sigmas"):
            if len(getattr(self, name)) != self.num_classes:
                raise ValueError(f"{name} must have one entry per class")
        for lo, hi in self.duration_ranges:
            if not 0 < lo <= hi:
                raise ValueError("duration ranges must satisfy 0 < min <= max")
        if self.total_frames < 1:
            raise ValueError("total_frames must be >= 1")
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        if self.boundary_jitter < 0 or self.crossfade < 0:
            raise ValueError("boundary_jitter and crossfade must be >= 0")

    @classmethod
    def uniform(
        cls,
        num_classes: int,
        duration_range: tuple[int, int],
        total_frames: int,
        seed: int,
        base_freq: float = 1.0,
        freq_step: float = 1.0,
        amplitude: float = 1.0,
        noise_sigma: float = 0.0,
        **kwargs,
    ) -> "SynthSpec":
        """Spec where classes share everything except evenly spaced frequencies."""
        return cls(
            num_classes=num_classes,
            duration_ranges=tuple(duration_range for _ in range(num_classes)),
            base_freqs=tuple(base_freq + freq_step * i for i in range(num_classes)),
            amplitudes=tuple(amplitude for _ in range(num_classes)),
            noise_sigmas=tuple(noise_sigma for _ in range(num_classes)),
            total_frames=total_frames,
            seed=seed,
            **kwargs,
        )
