"""Frame accuracy and F1 scores over dense label sequences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _check_pair(gt: np.ndarray, pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gt = np.asarray(gt, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if gt.ndim != 1 or pred.ndim != 1:
        raise ValueError("label sequences must be 1-d")
    if gt.shape != pred.shape:
        raise ValueError(f"length mismatch: gt {gt.shape[0]} vs pred {pred.shape[0]}")
    if gt.size == 0:
        raise ValueError("empty label sequences")
    return gt, pred


@dataclass
class MetricsReport:
    accuracy: float
    weighted_f1: float
    per_class_f1: dict[int, float]
    support: dict[int, int]

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must be in [0, 1]")
        for c, f1 in self.per_class_f1.items():
            if not 0.0 <= f1 <= 1.0:
                raise ValueError(f"F1 for class {c} out of [0, 1]")
        total = sum(self.support.values())
        if total > 0:
            fw = sum(
                self.support[c] / total * self.per_class_f1[c] for c in self.support
            )
            if abs(fw - self.weighted_f1) > 1e-9:
                raise ValueError("weighted_f1 inconsistent with per-class scores")


def frame_accuracy(gt, pred) -> float:
    """Fraction of frames where the prediction matches the truth."""
    gt, pred = _check_pair(gt, pred)
    return float(np.mean(gt == pred))


def f1_scores(gt, pred, num_classes: int) -> MetricsReport:
    """Per-class F1 plus the support-weighted mean (Fw).

    A class with no true and no predicted frames scores 0 by convention; its
    zero support drops it from the weighted mean.
    """
    gt, pred = _check_pair(gt, pred)
    if num_classes < 1:
        raise ValueError("num_classes must be >= 1")
    if gt.max() >= num_classes or pred.max() >= num_classes:
        raise ValueError("labels exceed num_classes")
    if gt.min() < 0 or pred.min() < 0:
        raise ValueError("labels must be >= 0")

    per_class_f1: dict[int, float] = {}
    support: dict[int, int] = {}
    for c in range(num_classes):
        tp = int(np.sum((pred == c) & (gt == c)))
        fp = int(np.sum((pred == c) & (gt != c)))
        fn = int(np.sum((pred != c) & (gt == c)))
        denom = 2 * tp + fp + fn
        per_class_f1[c] = 2.0 * tp / denom if denom > 0 else 0.0
        support[c] = tp + fn

    total = gt.size
    weighted = sum(support[c] / total * per_class_f1[c] for c in range(num_classes))
    return MetricsReport(
        accuracy=float(np.mean(gt == pred)),
        weighted_f1=float(weighted),
        per_class_f1=per_class_f1,
        support=support,
    )
