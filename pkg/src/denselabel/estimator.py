"""Scikit-learn style wrappers: a dense labeler and a feature transformer.

``DenseActivityLabeler`` hides the windowing, normalization, and training
loop behind fit/predict on (T, C) sequences with per-frame integer labels
(-1 marks unlabeled frames). Defaults are desk scale: a shallow network and
a few hundred steps, not the full-size configuration.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .autodiff import LrSchedule
from .data import (
    UNLABELED,
    DatasetSplit,
    LabeledSequence,
    compute_stats,
    make_windows,
)
from .evaluate import predict_windows as _predict_window_batch
from .evaluate import sliding_probabilities
from .features import extract_window_features, feature_names
from .losses import LossConfig
from .models import Discriminator, DiscriminatorConfig, Generator, GeneratorConfig
from .trainer import TrainConfig, train


def check_sequence(X, num_channels: int | None = None) -> np.ndarray:
    """Validate one (T, C) float sequence; finite values only."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a (T, C) array, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError(f"sequence must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("sequence contains non-finite values")
    if num_channels is not None and X.shape[1] != num_channels:
        raise ValueError(
            f"sequence has {X.shape[1]} channels, expected {num_channels}"
        )
    return X


def check_frame_labels(y, num_frames: int, num_classes: int | None = None) -> np.ndarray:
    """Validate per-frame integer labels; -1 means unlabeled."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != num_frames:
        raise ValueError(
            f"labels must be 1-d with {num_frames} entries, got shape {y.shape}"
        )
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.floor(y)):
            raise ValueError("labels must be integers")
    y = y.astype(np.int64)
    if y.min() < UNLABELED:
        raise ValueError(f"labels must be >= {UNLABELED}")
    if num_classes is not None and y.max() >= num_classes:
        raise ValueError(f"label {y.max()} out of range for {num_classes} classes")
    return y


def _as_sequence_list(X):
    """Normalize input to a list of (T, C) arrays plus a was-single flag."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [X], True
    if isinstance(X, (list, tuple)):
        return list(X), False
    raise ValueError(
        "X must be a (T, C) array or a list of (T, C) arrays"
    )


class DenseActivityLabeler(BaseEstimator):
    """Per-frame activity classifier built on the window-trained generator.

    Parameters mirror the underlying configs; ``adversarial=False`` trains
    on the focal objective alone. ``validation_fraction`` of the windows is
    held out to pick the best snapshot; 0 validates on the training windows.
    """

    def __init__(
        self,
        *,
        num_classes=None,
        window_length=64,
        stride=None,
        depth=2,
        base_filters=8,
        kernel_size=3,
        block_style="modified",
        dropout_rate=0.2,
        dropout_block=2,
        adversarial=True,
        lambda_focal=100.0,
        gamma=2.0,
        total_steps=200,
        batch_size=8,
        learning_rate=5e-4,
        eval_every=50,
        d_steps_per_g=1,
        normalize=True,
        validation_fraction=0.2,
        random_state=0,
    ):
        self.num_classes = num_classes
        self.window_length = window_length
        self.stride = stride
        self.depth = depth
        self.base_filters = base_filters
        self.kernel_size = kernel_size
        self.block_style = block_style
        self.dropout_rate = dropout_rate
        self.dropout_block = dropout_block
        self.adversarial = adversarial
        self.lambda_focal = lambda_focal
        self.gamma = gamma
        self.total_steps = total_steps
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.eval_every = eval_every
        self.d_steps_per_g = d_steps_per_g
        self.normalize = normalize
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _check_fit_inputs(self, X, y):
        xs, single = _as_sequence_list(X)
        ys = [y] if single else list(y)
        if len(xs) != len(ys):
            raise ValueError(f"got {len(xs)} sequences but {len(ys)} label arrays")
        xs = [check_sequence(x) for x in xs]
        channels = xs[0].shape[1]
        for x in xs[1:]:
            if x.shape[1] != channels:
                raise ValueError("all sequences must share the channel count")
        ys = [check_frame_labels(yy, x.shape[0]) for x, yy in zip(xs, ys)]
        labeled_max = max((int(yy.max()) for yy in ys), default=-1)
        if labeled_max < 0:
            raise ValueError("no labeled frames in y")
        if self.num_classes is None:
            num_classes = labeled_max + 1
        else:
            num_classes = int(self.num_classes)
            if labeled_max >= num_classes:
                raise ValueError(
                    f"label {labeled_max} out of range for num_classes={num_classes}"
                )
        if num_classes < 2:
            raise ValueError("need at least 2 classes")
        return xs, ys, channels, num_classes

    def fit(self, X, y):
        xs, ys, channels, num_classes = self._check_fit_inputs(X, y)
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if self.window_length % 2**self.depth != 0:
            raise ValueError(
                f"window_length {self.window_length} must be divisible by "
                f"2^depth = {2**self.depth}"
            )

        self.norm_stats_ = compute_stats(xs) if self.normalize else None
        sequences = [
            LabeledSequence(
                frames=self._apply_norm(x),
                labels=yy,
                source_id=f"fit{i}",
            )
            for i, (x, yy) in enumerate(zip(xs, ys))
        ]
        windows = []
        for seq in sequences:
            windows.extend(
                make_windows(
                    seq,
                    self.window_length,
                    num_classes,
                    stride=self.stride,
                    divisor=2**self.depth,
                )
            )
        if not windows:
            raise ValueError(
                "no trainable windows: every labeled span is shorter than "
                f"window_length={self.window_length}"
            )

        rng = np.random.default_rng(self.random_state)
        order = rng.permutation(len(windows))
        n_val = int(self.validation_fraction * len(windows))
        val = [windows[i] for i in order[:n_val]]
        tr = [windows[i] for i in order[n_val:]]
        split = DatasetSplit(
            train=tr,
            validation=val,
            test=[],
            seed=self.random_state,
            fractions=(1.0 - self.validation_fraction, self.validation_fraction, 0.0),
        )

        gen_cfg = GeneratorConfig(
            window_length=self.window_length,
            in_channels=channels,
            num_classes=num_classes,
            depth=self.depth,
            base_filters=self.base_filters,
            kernel_size=self.kernel_size,
            block_style=self.block_style,
            dropout_rate=self.dropout_rate,
            dropout_block=self.dropout_block,
        )
        generator = Generator(gen_cfg, seed=self.random_state)
        discriminator = None
        if self.adversarial:
            disc_cfg = DiscriminatorConfig(
                num_classes=num_classes,
                in_channels=channels,
                filters=(
                    self.base_filters,
                    2 * self.base_filters,
                    4 * self.base_filters,
                ),
                kernel_size=self.kernel_size,
            )
            disc_cfg.patch_count(self.window_length)  # must divide cleanly
            discriminator = Discriminator(disc_cfg, seed=self.random_state + 1)

        loss_cfg = LossConfig(lambda_focal=self.lambda_focal, gamma=self.gamma)
        train_cfg = TrainConfig(
            total_steps=self.total_steps,
            batch_size=self.batch_size,
            lr=LrSchedule(initial_rate=self.learning_rate),
            eval_every=self.eval_every,
            adversarial=self.adversarial,
            seed=self.random_state,
            d_steps_per_g=self.d_steps_per_g,
        )
        checkpoint, records = train(split, generator, discriminator, loss_cfg, train_cfg)

        self.checkpoint_ = checkpoint
        self.history_ = records
        self.generator_ = checkpoint.build_generator()
        self.classes_ = np.arange(num_classes)
        self.n_features_in_ = channels
        return self

    def _apply_norm(self, x: np.ndarray) -> np.ndarray:
        if getattr(self, "norm_stats_", None) is None:
            return x
        return (x - self.norm_stats_.mean) / self.norm_stats_.std

    def _proba_one(self, x: np.ndarray) -> np.ndarray:
        return sliding_probabilities(
            self.generator_, self._apply_norm(x), self.window_length
        )

    def predict_proba(self, X):
        """Per-frame class probabilities, (T, num_classes) per sequence."""
        check_is_fitted(self)
        xs, single = _as_sequence_list(X)
        xs = [check_sequence(x, self.n_features_in_) for x in xs]
        out = [self._proba_one(x) for x in xs]
        return out[0] if single else out

    def predict(self, X):
        """Per-frame class ids, (T,) per sequence."""
        probas = self.predict_proba(X)
        if isinstance(probas, list):
            return [np.argmax(p, axis=-1) for p in probas]
        return np.argmax(probas, axis=-1)

    def score(self, X, y):
        """Frame accuracy over labeled frames only (-1 frames are skipped)."""
        check_is_fitted(self)
        xs, single = _as_sequence_list(X)
        ys = [y] if single else list(y)
        if len(xs) != len(ys):
            raise ValueError(f"got {len(xs)} sequences but {len(ys)} label arrays")
        correct = 0
        total = 0
        for x, yy in zip(xs, ys):
            x = check_sequence(x, self.n_features_in_)
            yy = check_frame_labels(yy, x.shape[0], len(self.classes_))
            pred = np.argmax(self._proba_one(x), axis=-1)
            mask = yy != UNLABELED
            correct += int(np.sum(pred[mask] == yy[mask]))
            total += int(np.sum(mask))
        if total == 0:
            raise ValueError("no labeled frames to score")
        return correct / total

    def predict_windows(self, windows, batch_size: int = 32) -> np.ndarray:
        """Argmax labels for pre-cut windows, (N, T); skips normalization."""
        check_is_fitted(self)
        return _predict_window_batch(self.generator_, windows, batch_size=batch_size)


class WindowFeatureExtractor(TransformerMixin, BaseEstimator):
    """Turn (N, T, C) window stacks into flat per-window feature rows."""

    def __init__(self, *, sample_rate_hz=50.0, channel_names=None):
        self.sample_rate_hz = sample_rate_hz
        self.channel_names = channel_names

    def _check_windows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3:
            raise ValueError(f"expected (N, T, C) windows, got shape {X.shape}")
        return X

    def fit(self, X, y=None):
        X = self._check_windows(X)
        if self.channel_names is not None and len(self.channel_names) != X.shape[2]:
            raise ValueError(
                f"need {X.shape[2]} channel names, got {len(self.channel_names)}"
            )
        self.n_channels_ = X.shape[2]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self)
        X = self._check_windows(X)
        if X.shape[2] != self.n_channels_:
            raise ValueError(
                f"windows have {X.shape[2]} channels, expected {self.n_channels_}"
            )
        return np.stack(
            [extract_window_features(w, self.sample_rate_hz).flat for w in X]
        )

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self)
        return np.asarray(
            feature_names(self.n_channels_, self.channel_names), dtype=object
        )
