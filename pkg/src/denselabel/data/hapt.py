"""Reader and writer for the smartphone activity RawData layout.

The on-disk form is a directory of per-experiment recordings:

    RawData/acc_exp01_user01.txt    three space-separated floats per line
    RawData/gyro_exp01_user01.txt   same length as the acc file
    RawData/labels.txt              exp user activity start end (inclusive)

Activity ids on disk are 1-based; they become 0-based class ids here so the
twelve classes are 0..11. Frames outside every labeled interval get -1.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .types import UNLABELED, DataFormatError, LabeledSequence

HAPT_SAMPLE_RATE_HZ = 50.0
HAPT_NUM_CLASSES = 12
HAPT_CLASS_NAMES = (
    "WALKING",
    "WALKING_UPSTAIRS",
    "WALKING_DOWNSTAIRS",
    "SITTING",
    "STANDING",
    "LAYING",
    "STAND_TO_SIT",
    "SIT_TO_STAND",
    "SIT_TO_LIE",
    "LIE_TO_SIT",
    "STAND_TO_LIE",
    "LIE_TO_STAND",
)

_ACC_NAME = re.compile(r"acc_exp(\d+)_user(\d+)\.txt$")


def _raw_dir(root_dir) -> Path:
    root = Path(root_dir)
    raw = root / "RawData"
    if raw.is_dir():
        return raw
    if root.is_dir():
        return root
    raise DataFormatError(f"{root}: not a directory")


def _read_signal(path: Path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise DataFormatError(
                    f"{path}, line {lineno}: expected 3 values, got {len(parts)}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise DataFormatError(
                    f"{path}, line {lineno}: non-numeric value"
                ) from None
    if not rows:
        raise DataFormatError(f"{path}: empty signal file")
    return np.asarray(rows, dtype=np.float64)


def _read_labels(path: Path) -> dict[tuple[int, int], list[tuple[int, int, int, int]]]:
    """Map (exp, user) to [(activity_id, start, end, lineno), ...]."""
    table: dict[tuple[int, int], list[tuple[int, int, int, int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 5:
                raise DataFormatError(
                    f"{path}, line {lineno}: expected 5 fields "
                    "(exp user activity start end)"
                )
            try:
                exp, user, act, start, end = (int(p) for p in parts)
            except ValueError:
                raise DataFormatError(
                    f"{path}, line {lineno}: non-integer field"
                ) from None
            if not 1 <= act <= HAPT_NUM_CLASSES:
                raise DataFormatError(
                    f"{path}, line {lineno}: activity id {act} outside 1..{HAPT_NUM_CLASSES}"
                )
            table.setdefault((exp, user), []).append((act, start, end, lineno))
    return table


def load_hapt(root_dir) -> list[LabeledSequence]:
    """Load every experiment under a RawData directory.

    Returns one six-channel (acc xyz + gyro xyz) sequence per experiment,
    sorted by filename.
    """
    raw = _raw_dir(root_dir)
    labels_path = raw / "labels.txt"
    if not labels_path.is_file():
        raise DataFormatError(f"{labels_path}: missing labels file")
    intervals = _read_labels(labels_path)

    acc_files = sorted(p for p in raw.iterdir() if _ACC_NAME.search(p.name))
    if not acc_files:
        raise DataFormatError(f"{raw}: no acc_expNN_userNN.txt files found")

    sequences = []
    for acc_path in acc_files:
        m = _ACC_NAME.search(acc_path.name)
        exp, user = int(m.group(1)), int(m.group(2))
        gyro_path = acc_path.with_name(acc_path.name.replace("acc_", "gyro_", 1))
        if not gyro_path.is_file():
            raise DataFormatError(f"{acc_path}: missing paired gyro file {gyro_path.name}")
        acc = _read_signal(acc_path)
        gyro = _read_signal(gyro_path)
        if acc.shape[0] != gyro.shape[0]:
            raise DataFormatError(
                f"{acc_path}: acc has {acc.shape[0]} frames but gyro has {gyro.shape[0]}"
            )
        frames = np.hstack([acc, gyro])
        labels = np.full(frames.shape[0], UNLABELED, dtype=np.int64)
        for act, start, end, lineno in intervals.get((exp, user), []):
            if not 0 <= start <= end < frames.shape[0]:
                raise DataFormatError(
                    f"{labels_path}, line {lineno}: interval {start}..{end} outside "
                    f"0..{frames.shape[0] - 1} for {acc_path.name}"
                )
            labels[start : end + 1] = act - 1
        sequences.append(
            LabeledSequence(
                frames=frames,
                labels=labels,
                source_id=f"exp{exp:02d}_user{user:02d}",
                sample_rate_hz=HAPT_SAMPLE_RATE_HZ,
            )
        )
    return sequences


def label_intervals(labels: np.ndarray) -> list[tuple[int, int, int]]:
    """Maximal runs of a single non-negative label as (class, start, end)."""
    runs = []
    start = None
    for i, lab in enumerate(labels):
        if start is not None and (lab == UNLABELED or lab != labels[start]):
            runs.append((int(labels[start]), start, i - 1))
            start = None
        if lab != UNLABELED and start is None:
            start = i
    if start is not None:
        runs.append((int(labels[start]), start, len(labels) - 1))
    return runs


def write_hapt(root_dir, sequences: list[LabeledSequence]) -> Path:
    """Write sequences in the RawData layout (six channels required).

    The inverse of ``load_hapt`` up to float formatting; used to build
    fixtures and to export synthetic recordings.
    """
    raw = Path(root_dir) / "RawData"
    raw.mkdir(parents=True, exist_ok=True)
    label_lines = []
    for idx, seq in enumerate(sequences, start=1):
        if seq.num_channels != 6:
            raise ValueError(
                f"{seq.source_id}: RawData layout needs 6 channels, got {seq.num_channels}"
            )
        m = re.search(r"exp(\d+)_user(\d+)", seq.source_id)
        exp, user = (int(m.group(1)), int(m.group(2))) if m else (idx, idx)
        for prefix, cols in (("acc", slice(0, 3)), ("gyro", slice(3, 6))):
            path = raw / f"{prefix}_exp{exp:02d}_user{user:02d}.txt"
            np.savetxt(path, seq.frames[:, cols], fmt="%.10g")
        for cls, start, end in label_intervals(seq.labels):
            label_lines.append(f"{exp} {user} {cls + 1} {start} {end}")
    (raw / "labels.txt").write_text("\n".join(label_lines) + "\n", encoding="utf-8")
    return raw
