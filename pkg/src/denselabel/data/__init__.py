from .types import (
    SPLIT_FRACTIONS,
    UNLABELED,
    DataFormatError,
    DatasetSplit,
    LabeledSequence,
    SynthSpec,
    Window,
)
from .csvio import load_csv, save_csv
from .hapt import (
    HAPT_CLASS_NAMES,
    HAPT_NUM_CLASSES,
    HAPT_SAMPLE_RATE_HZ,
    label_intervals,
    load_hapt,
    write_hapt,
)
from .normalize import (
    NormStats,
    apply_stats,
    compute_stats,
    load_stats,
    normalize_sequences,
    normalize_windows,
    save_stats,
)
from .synth import synth_generate, synth_hapt_like
from .windows import labeled_spans, make_windows, split_windows

__all__ = [
    "SPLIT_FRACTIONS",
    "UNLABELED",
    "DataFormatError",
    "DatasetSplit",
    "LabeledSequence",
    "SynthSpec",
    "Window",
    "load_csv",
    "save_csv",
    "HAPT_CLASS_NAMES",
    "HAPT_NUM_CLASSES",
    "HAPT_SAMPLE_RATE_HZ",
    "label_intervals",
    "load_hapt",
    "write_hapt",
    "NormStats",
    "apply_stats",
    "compute_stats",
    "load_stats",
    "normalize_sequences",
    "normalize_windows",
    "save_stats",
    "synth_generate",
    "synth_hapt_like",
    "labeled_spans",
    "make_windows",
    "split_windows",
]
