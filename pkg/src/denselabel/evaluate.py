"""Batched model evaluation and report serialization.

Windows are scored in the order given, hardened to class ids, and
concatenated into one long sequence before computing metrics, so the
reports are reproducible across runs and batch sizes.
"""

from __future__ import annotations

import csv
import json
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Tensor, no_grad
from .data import Window
from .metrics import MetricsReport, f1_scores
from .misalignment import CATEGORIES, MisalignmentReport, misalignment_decompose


def predict_windows(generator, windows: Sequence[Window], batch_size: int = 32) -> np.ndarray:
    """Argmax class ids for each window, shape (N, T).

    Runs in eval mode. np.argmax breaks probability ties toward the
    lowest class id.
    """
    if not windows:
        raise ValueError("no windows to predict")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    x = np.stack([w.x for w in windows]).astype(np.float32)
    out = []
    with no_grad():
        for lo in range(0, x.shape[0], batch_size):
            probs = generator.forward(Tensor(x[lo : lo + batch_size]), mode="eval")
            out.append(np.argmax(probs.data, axis=-1))
    return np.concatenate(out, axis=0)


def sliding_probabilities(
    generator, x: np.ndarray, window_length: int, batch_size: int = 32
) -> np.ndarray:
    """Per-frame probabilities for one (T, C) sequence of any length >= window.

    The sequence is covered by non-overlapping windows plus, when the length
    is not a multiple, a right-aligned tail window whose values win on the
    overlap. Every frame is therefore predicted exactly once.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a (T, C) sequence, got shape {x.shape}")
    t, w = x.shape[0], window_length
    if t < w:
        raise ValueError(f"sequence length {t} is shorter than window_length {w}")
    starts = list(range(0, t - w + 1, w))
    if starts[-1] + w < t:
        starts.append(t - w)
    batch = np.stack([x[s : s + w] for s in starts]).astype(np.float32)
    probs = None
    with no_grad():
        for lo in range(0, batch.shape[0], batch_size):
            out = generator.forward(Tensor(batch[lo : lo + batch_size]), mode="eval").data
            if probs is None:
                probs = np.zeros((t, out.shape[-1]))
            for row, s in enumerate(starts[lo : lo + batch_size]):
                probs[s : s + w] = out[row]
    return probs


def evaluate_model(
    model, windows: Sequence[Window], batch_size: int = 32
) -> tuple[MetricsReport, MisalignmentReport]:
    """Score labeled windows and compute both report types.

    ``model`` is either a generator or anything exposing
    ``build_generator()`` (a loaded checkpoint).
    """
    if hasattr(model, "build_generator"):
        model = model.build_generator()
    pred = predict_windows(model, windows, batch_size=batch_size)
    gt = np.stack([np.argmax(w.y, axis=-1) for w in windows])
    num_classes = windows[0].y.shape[-1]
    gt_flat = gt.reshape(-1)
    pred_flat = pred.reshape(-1)
    metrics = f1_scores(gt_flat, pred_flat, num_classes)
    misalign = misalignment_decompose(gt_flat, pred_flat)
    return metrics, misalign


def _class_name(c: int, class_names: Mapping[int, str] | Sequence[str] | None) -> str:
    if class_names is None:
        return str(c)
    try:
        return class_names[c]
    except (KeyError, IndexError):
        return str(c)


def reports_to_dict(
    metrics: MetricsReport,
    misalign: MisalignmentReport,
    class_names=None,
) -> dict:
    """Both reports as one JSON-ready dict (lists of rows, no int keys)."""
    per_class = [
        {
            "class": c,
            "name": _class_name(c, class_names),
            "support": metrics.support[c],
            "f1": metrics.per_class_f1[c],
        }
        for c in sorted(metrics.per_class_f1)
    ]
    mis_per_class = [
        {"class": c, "name": _class_name(c, class_names)}
        | {name: counts[name] for name in CATEGORIES}
        for c, counts in sorted(misalign.per_class.items())
    ]
    return {
        "accuracy": metrics.accuracy,
        "weighted_f1": metrics.weighted_f1,
        "total_frames": misalign.total_frames,
        "per_class": per_class,
        "misalignment": {
            "counts": {name: getattr(misalign, name) for name in ("correct",) + CATEGORIES},
            "rates": misalign.rates,
            "per_class": mis_per_class,
        },
    }


def write_reports_json(path, metrics, misalign, class_names=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(reports_to_dict(metrics, misalign, class_names), fh, indent=2)
        fh.write("\n")


def write_metrics_csv(path, metrics: MetricsReport, class_names=None) -> None:
    """One row per class plus a totals row carrying Fw and accuracy."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "support", "f1", "accuracy"])
        for c in sorted(metrics.per_class_f1):
            writer.writerow([_class_name(c, class_names), metrics.support[c],
                             f"{metrics.per_class_f1[c]:.6f}", ""])
        total = sum(metrics.support.values())
        writer.writerow(["total", total, f"{metrics.weighted_f1:.6f}",
                         f"{metrics.accuracy:.6f}"])


def write_composition_csv(path, misalign: MisalignmentReport, class_names=None) -> None:
    """Error composition per ground-truth class plus a totals row.

    Counts only; shares for a stacked plot are counts divided by the
    totals row.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "errors"] + list(CATEGORIES))
        for c, counts in sorted(misalign.per_class.items()):
            errors = sum(counts[name] for name in CATEGORIES)
            writer.writerow([_class_name(c, class_names), errors]
                            + [counts[name] for name in CATEGORIES])
        errors = sum(getattr(misalign, name) for name in CATEGORIES)
        writer.writerow(["total", errors]
                        + [getattr(misalign, name) for name in CATEGORIES])
