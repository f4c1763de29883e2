"""Four-way decomposition of frame errors.

Ground truth is segmented into maximal same-label runs; misclassified frames
form error runs cut at those segment boundaries. Each error run is scored by
where it sits in its segment:

  * covers the whole segment            -> substitution
  * strictly interior                   -> fragmentation
  * touches one boundary, and the frame
    is predicted as the class on the
    other side of that boundary         -> overfill
  * touches one boundary otherwise,
    or touches the sequence edge        -> underfill

Every misclassified frame lands in exactly one bucket, so the five counts
(including correct) always partition the frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import _check_pair

CATEGORIES = ("fragmentation", "substitution", "overfill", "underfill")


@dataclass
class MisalignmentReport:
    total_frames: int
    correct: int
    fragmentation: int
    substitution: int
    overfill: int
    underfill: int
    per_class: dict[int, dict[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        parts = (self.correct, self.fragmentation, self.substitution,
                 self.overfill, self.underfill)
        if any(v < 0 for v in parts):
            raise ValueError("counts must be nonnegative")
        if sum(parts) != self.total_frames:
            raise ValueError(
                f"counts sum to {sum(parts)} but total_frames is {self.total_frames}"
            )

    def rate(self, name: str) -> float:
        return getattr(self, name) / self.total_frames

    @property
    def rates(self) -> dict[str, float]:
        names = ("correct",) + CATEGORIES
        return {name: self.rate(name) for name in names}

    @property
    def error_rate(self) -> float:
        return 1.0 - self.rate("correct")


def _gt_segments(gt: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end) runs of a constant ground-truth label."""
    boundaries = np.flatnonzero(np.diff(gt)) + 1
    edges = np.concatenate([[0], boundaries, [gt.size]])
    return list(zip(edges[:-1], edges[1:]))


def misalignment_decompose(gt, pred) -> MisalignmentReport:
    """Assign every misclassified frame to exactly one error category."""
    gt, pred = _check_pair(gt, pred)
    n = gt.size
    counts = {name: 0 for name in CATEGORIES}
    per_class: dict[int, dict[str, int]] = {}

    def bump(cls: int, name: str, amount: int) -> None:
        amount = int(amount)
        counts[name] += amount
        bucket = per_class.setdefault(int(cls), dict.fromkeys(CATEGORIES, 0))
        bucket[name] += amount

    for seg_start, seg_end in _gt_segments(gt):
        cls = gt[seg_start]
        wrong = pred[seg_start:seg_end] != cls
        if not wrong.any():
            continue
        # Error runs inside this segment.
        w = np.flatnonzero(wrong)
        run_breaks = np.flatnonzero(np.diff(w) > 1) + 1
        for run in np.split(w, run_breaks):
            a = seg_start + run[0]
            b = seg_start + run[-1] + 1
            size = b - a
            if a == seg_start and b == seg_end:
                bump(cls, "substitution", size)
            elif a > seg_start and b < seg_end:
                bump(cls, "fragmentation", size)
            else:
                if a == seg_start:
                    neighbor = gt[seg_start - 1] if seg_start > 0 else None
                else:
                    neighbor = gt[seg_end] if seg_end < n else None
                if neighbor is None:
                    bump(cls, "underfill", size)
                else:
                    over = int(np.sum(pred[a:b] == neighbor))
                    bump(cls, "overfill", over)
                    bump(cls, "underfill", size - over)

    total_wrong = sum(counts.values())
    return MisalignmentReport(
        total_frames=n,
        correct=n - total_wrong,
        per_class=per_class,
        **counts,
    )
