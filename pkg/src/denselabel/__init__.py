"""Dense per-frame activity labeling for multichannel motion time series.

The package trains a 1-D U-Net generator, optionally against a patch
discriminator, to assign an activity class to every frame of a sensor
sequence, and ships the evaluation tools (frame metrics and the
fragmentation / substitution / overfill / underfill decomposition) needed to
judge such predictions.
"""

__version__ = "0.1.0"

from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .estimator import (
    DenseActivityLabeler,
    WindowFeatureExtractor,
    check_frame_labels,
    check_sequence,
)
from .evaluate import evaluate_model, predict_windows
from .features import (
    FeatureVector,
    expand_window_prediction,
    extract_window_features,
    feature_matrix,
    majority_label,
)
from .losses import LossConfig, dice_discount, focal_loss, generator_objective
from .metrics import MetricsReport, f1_scores, frame_accuracy
from .misalignment import MisalignmentReport, misalignment_decompose
from .models import (
    Discriminator,
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
)
from .trainer import Checkpoint, TrainConfig, train

__all__ = [
    "Checkpoint",
    "CheckpointFormatError",
    "DenseActivityLabeler",
    "Discriminator",
    "DiscriminatorConfig",
    "FeatureVector",
    "Generator",
    "GeneratorConfig",
    "LossConfig",
    "MetricsReport",
    "MisalignmentReport",
    "TrainConfig",
    "WindowFeatureExtractor",
    "__version__",
    "check_frame_labels",
    "check_sequence",
    "dice_discount",
    "evaluate_model",
    "expand_window_prediction",
    "extract_window_features",
    "f1_scores",
    "feature_matrix",
    "focal_loss",
    "frame_accuracy",
    "generator_objective",
    "load_checkpoint",
    "majority_label",
    "misalignment_decompose",
    "predict_windows",
    "save_checkpoint",
    "train",
]
