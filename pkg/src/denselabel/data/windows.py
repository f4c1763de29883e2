"""Windowing of labeled sequences and the deterministic three-way split."""

from __future__ import annotations

import math

import numpy as np

from .types import SPLIT_FRACTIONS, UNLABELED, DatasetSplit, LabeledSequence, Window


def labeled_spans(labels: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end) runs where every frame has a label."""
    spans = []
    start = None
    for i, lab in enumerate(labels):
        if lab == UNLABELED:
            if start is not None:
                spans.append((start, i))
                start = None
        elif start is None:
            start = i
    if start is not None:
        spans.append((start, len(labels)))
    return spans


def make_windows(
    seq: LabeledSequence,
    length: int,
    num_classes: int,
    stride: int | None = None,
    divisor: int = 1,
) -> list[Window]:
    """Cut fully labeled, fixed-length windows out of a sequence.

    Windows are drawn only from maximal labeled spans, so none mixes labeled
    and unlabeled frames; a span's trailing remainder shorter than ``length``
    is dropped. ``divisor`` guards the model contract that pooling halves the
    window ``depth`` times.
    """
    if length < 1:
        raise ValueError("window length must be >= 1")
    if stride is None:
        stride = length
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if divisor > 1 and length % divisor != 0:
        raise ValueError(
            f"window length {length} is not a multiple of {divisor}; "
            "pooling would not divide the window evenly"
        )
    if seq.labels.size and seq.labels.max() >= num_classes:
        raise ValueError(
            f"sequence {seq.source_id} has label {seq.labels.max()} "
            f">= num_classes {num_classes}"
        )
    eye = np.eye(num_classes, dtype=np.float64)
    windows = []
    for span_start, span_end in labeled_spans(seq.labels):
        for start in range(span_start, span_end - length + 1, stride):
            rows = seq.labels[start : start + length]
            windows.append(
                Window(
                    x=seq.frames[start : start + length].copy(),
                    y=eye[rows],
                    origin=(seq.source_id, start),
                )
            )
    return windows


def split_windows(
    windows: list[Window],
    seed: int,
    fractions: tuple[float, float, float] = SPLIT_FRACTIONS,
) -> DatasetSplit:
    """Shuffle then cut: floor(f_train*N) train, floor(f_val*N) validation,
    remainder test. Same (windows order, seed) always gives the same split."""
    n = len(windows)
    if n < 3:
        raise ValueError(f"need at least 3 windows to split, got {n}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(fractions[0] * n)
    n_val = math.floor(fractions[1] * n)
    order = [windows[i] for i in perm]
    return DatasetSplit(
        train=order[:n_train],
        validation=order[n_train : n_train + n_val],
        test=order[n_train + n_val :],
        seed=seed,
        fractions=fractions,
    )
