"""Generic CSV ingestion for sensor logs: one frame per row, named columns."""

from __future__ import annotations

import csv
from pathlib import Path

from .types import UNLABELED, DataFormatError, LabeledSequence

import numpy as np


def load_csv(
    file,
    channel_columns: list[str],
    label_column: str,
    class_names: list[str],
    sample_rate_hz: float = 50.0,
    source_id: str | None = None,
) -> LabeledSequence:
    """Read a headered CSV into a sequence.

    The label column holds class names from ``class_names`` (mapped to their
    list index) or an empty cell for unlabeled frames.
    """
    path = Path(file)
    class_to_id = {name: i for i, name in enumerate(class_names)}
    frames, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        col_index = {name: i for i, name in enumerate(header)}
        missing = [c for c in [*channel_columns, label_column] if c not in col_index]
        if missing:
            raise DataFormatError(f"{path}: header is missing columns {missing}")
        chan_idx = [col_index[c] for c in channel_columns]
        label_idx = col_index[label_column]

        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}, row {rownum}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                frames.append([float(row[i]) for i in chan_idx])
            except ValueError:
                raise DataFormatError(
                    f"{path}, row {rownum}: non-numeric channel value"
                ) from None
            name = row[label_idx]
            if name == "":
                labels.append(UNLABELED)
            elif name in class_to_id:
                labels.append(class_to_id[name])
            else:
                raise DataFormatError(
                    f"{path}, row {rownum}: unknown label {name!r}"
                )
    if not frames:
        raise DataFormatError(f"{path}: no data rows")
    return LabeledSequence(
        frames=np.asarray(frames, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        source_id=source_id if source_id is not None else path.stem,
        sample_rate_hz=sample_rate_hz,
    )


def save_csv(
    seq: LabeledSequence,
    file,
    class_names: list[str],
    channel_names: list[str] | None = None,
) -> None:
    """Write a sequence as channels + label columns; unlabeled cells are empty.

    Values carry enough digits that a round-trip is exact well inside 1e-6.
    """
    if channel_names is None:
        channel_names = [f"ch{i}" for i in range(seq.num_channels)]
    if len(channel_names) != seq.num_channels:
        raise ValueError(
            f"need {seq.num_channels} channel names, got {len(channel_names)}"
        )
    if seq.labels.size and seq.labels.max() >= len(class_names):
        raise ValueError("class_names does not cover every label in the sequence")
    with open(file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*channel_names, "label"])
        for row, lab in zip(seq.frames, seq.labels):
            name = "" if lab == UNLABELED else class_names[lab]
            writer.writerow([format(v, ".12g") for v in row] + [name])
