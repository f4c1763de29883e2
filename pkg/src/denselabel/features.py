"""Handcrafted per-window features for classical windowed classifiers.

Each channel contributes 15 scalars plus the magnitudes of the first 10
non-DC DFT bins. Conventions the summary statistics leave open are fixed
here once:

  * std uses N-1; percentiles interpolate linearly.
  * lowpass is a centered width-5 moving average whose window truncates at
    the edges; highpass is the residual.
  * zero crossings treat 0 as positive, counted over the T-1 adjacent pairs.
  * skewness and kurtosis are the biased moment ratios (kurtosis as excess);
    a zero-variance window scores 0 for both.
  * principal_frequency is the argmax bin over 1..T//2 scaled by fs/T, ties
    to the lower bin, 0 Hz when the non-DC spectrum is identically zero.
  * spectral_energy sums |X_k|^2/T over the full DFT (Parseval).
  * frequency_entropy is the Shannon entropy in nats of the PSD over bins
    0..T//2 normalized to sum 1; an all-zero PSD scores 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCALAR_FEATURES = (
    "max",
    "min",
    "mean",
    "std",
    "median",
    "p25",
    "p75",
    "mean_lowpass",
    "mean_rect_highpass",
    "skewness",
    "kurtosis",
    "zero_crossing_rate",
    "principal_frequency",
    "spectral_energy",
    "frequency_entropy",
)
NUM_MAGNITUDES = 10
FEATURES_PER_CHANNEL = len(SCALAR_FEATURES) + NUM_MAGNITUDES
MIN_WINDOW_FRAMES = 8

_INDEX = {name: i for i, name in enumerate(SCALAR_FEATURES)}


@dataclass
class FeatureVector:
    """Per-channel feature table, (C, 25), plus an optional window label."""

    values: np.ndarray
    label: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != FEATURES_PER_CHANNEL:
            raise ValueError(
                f"values must be (C, {FEATURES_PER_CHANNEL}), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("features must be finite")
        p25, med, p75 = (self.values[:, _INDEX[k]] for k in ("p25", "median", "p75"))
        if np.any(p25 > med) or np.any(med > p75):
            raise ValueError("percentiles out of order")
        zcr = self.values[:, _INDEX["zero_crossing_rate"]]
        if np.any(zcr < 0) or np.any(zcr > 1):
            raise ValueError("zero_crossing_rate outside [0, 1]")

    @property
    def num_channels(self) -> int:
        return self.values.shape[0]

    @property
    def flat(self) -> np.ndarray:
        """Channel-major row vector matching feature_names() order."""
        return self.values.reshape(-1)

    def get(self, channel: int, name: str) -> float:
        return float(self.values[channel, _INDEX[name]])

    def magnitudes(self, channel: int) -> np.ndarray:
        return self.values[channel, len(SCALAR_FEATURES) :]


def _moving_average(x: np.ndarray, width: int = 5) -> np.ndarray:
    sums = np.convolve(x, np.ones(width), mode="same")
    counts = np.convolve(np.ones_like(x), np.ones(width), mode="same")
    return sums / counts


def _channel_features(x: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    t = x.size
    low = _moving_average(x)
    high = x - low

    mu = float(np.mean(x))
    m2 = float(np.mean((x - mu) ** 2))
    if m2 == 0.0:
        skew = kurt = 0.0
    else:
        skew = float(np.mean((x - mu) ** 3)) / m2**1.5
        kurt = float(np.mean((x - mu) ** 4)) / m2**2 - 3.0

    signs = x >= 0
    zcr = float(np.count_nonzero(signs[1:] != signs[:-1])) / (t - 1)

    spectrum = np.fft.fft(x)
    mags = np.abs(spectrum)
    half = t // 2
    nondc = mags[1 : half + 1]
    if nondc.max() == 0.0:
        principal = 0.0
    else:
        principal = (int(np.argmax(nondc)) + 1) * sample_rate_hz / t
    energy = float(np.sum(mags**2)) / t
    psd = mags[: half + 1] ** 2
    total = psd.sum()
    if total == 0.0:
        entropy = 0.0
    else:
        p = psd[psd > 0] / total
        entropy = float(-np.sum(p * np.log(p)))

    first_bins = np.zeros(NUM_MAGNITUDES)
    available = mags[1 : 1 + NUM_MAGNITUDES]
    first_bins[: available.size] = available

    scalars = [
        float(np.max(x)),
        float(np.min(x)),
        mu,
        float(np.std(x, ddof=1)),
        float(np.median(x)),
        float(np.percentile(x, 25)),
        float(np.percentile(x, 75)),
        float(np.mean(low)),
        float(np.mean(np.abs(high))),
        skew,
        kurt,
        zcr,
        principal,
        energy,
        entropy,
    ]
    return np.concatenate([scalars, first_bins])


def extract_window_features(
    frames: np.ndarray, sample_rate_hz: float = 50.0, label: int | None = None
) -> FeatureVector:
    """Feature table for one (T, C) window; needs at least 8 frames."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ValueError(f"frames must be (T, C), got shape {frames.shape}")
    if frames.shape[0] < MIN_WINDOW_FRAMES:
        raise ValueError(
            f"window too short: {frames.shape[0]} frames < {MIN_WINDOW_FRAMES}"
        )
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    table = np.stack(
        [_channel_features(frames[:, c], sample_rate_hz) for c in range(frames.shape[1])]
    )
    return FeatureVector(values=table, label=label)


def majority_label(labels) -> int:
    """Most frequent class id; ties go to the lowest id."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("empty label window")
    if labels.min() < 0:
        raise ValueError("labels must be >= 0")
    return int(np.argmax(np.bincount(labels)))


def expand_window_prediction(pred: int, length: int) -> np.ndarray:
    """Repeat one window-level class over every frame of the window."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return np.full(length, int(pred), dtype=np.int64)


def feature_names(num_channels: int, channel_names=None) -> list[str]:
    """Channel-prefixed column names matching FeatureVector.flat order."""
    if channel_names is None:
        channel_names = [f"ch{i}" for i in range(num_channels)]
    if len(channel_names) != num_channels:
        raise ValueError(f"need {num_channels} channel names, got {len(channel_names)}")
    names = []
    for ch in channel_names:
        names.extend(f"{ch}_{feat}" for feat in SCALAR_FEATURES)
        names.extend(f"{ch}_mag{k}" for k in range(1, NUM_MAGNITUDES + 1))
    return names


def feature_matrix(windows, sample_rate_hz: float = 50.0) -> tuple[np.ndarray, np.ndarray]:
    """Stack windows into an (N, C*25) matrix plus majority labels.

    Windows carry one-hot targets; the majority vote runs on their argmax.
    """
    if not windows:
        raise ValueError("no windows")
    rows, labels = [], []
    for w in windows:
        fv = extract_window_features(w.x, sample_rate_hz)
        rows.append(fv.flat)
        labels.append(majority_label(np.argmax(w.y, axis=-1)))
    return np.stack(rows), np.asarray(labels, dtype=np.int64)


def write_features_csv(path, matrix, labels=None, channel_names=None) -> None:
    """Feature matrix as CSV, one window per row, header naming every column."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] % FEATURES_PER_CHANNEL != 0:
        raise ValueError(
            f"matrix columns must be a multiple of {FEATURES_PER_CHANNEL}"
        )
    num_channels = matrix.shape[1] // FEATURES_PER_CHANNEL
    header = feature_names(num_channels, channel_names)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (matrix.shape[0],):
            raise ValueError("labels must have one entry per row")
        header = header + ["label"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(matrix):
            cells = [format(v, ".12g") for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")
