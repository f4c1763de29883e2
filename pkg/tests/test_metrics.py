"""Frame accuracy and F1 against hand values and a confusion-matrix oracle."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import f1_score

from denselabel.metrics import MetricsReport, f1_scores, frame_accuracy


def test_identical_sequences_score_one():
    assert frame_accuracy([0, 1, 2, 1], [0, 1, 2, 1]) == 1.0


def test_three_of_four_frames_match():
    assert frame_accuracy([0, 0, 1, 1], [0, 0, 0, 1]) == 0.75


def test_empty_sequences_rejected():
    with pytest.raises(ValueError, match="empty"):
        frame_accuracy([], [])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError, match="mismatch"):
        frame_accuracy([0, 1], [0, 1, 2])


def test_two_dimensional_input_rejected():
    with pytest.raises(ValueError, match="1-d"):
        frame_accuracy([[0, 1]], [[0, 1]])


def test_perfect_prediction_all_ones():
    report = f1_scores([0, 1, 2, 2], [0, 1, 2, 2], num_classes=3)
    assert report.accuracy == 1.0
    assert report.weighted_f1 == 1.0
    assert all(f1 == 1.0 for f1 in report.per_class_f1.values())


def test_absent_class_scores_zero_with_zero_support():
    report = f1_scores([0, 0, 1, 1], [0, 0, 1, 1], num_classes=3)
    assert report.per_class_f1[2] == 0.0
    assert report.support[2] == 0
    # Zero support means the absent class cannot drag Fw down.
    assert report.weighted_f1 == 1.0


def test_weighted_f1_hand_value():
    # precision_0 = 0.5, recall_0 = 1 -> F1 = 2/3; class 1 never predicted.
    report = f1_scores([0, 0, 1, 1], [0, 0, 0, 0], num_classes=2)
    assert report.per_class_f1[0] == pytest.approx(2 / 3)
    assert report.per_class_f1[1] == 0.0
    assert report.weighted_f1 == pytest.approx(1 / 3)


def test_supports_sum_to_total_frames():
    rng = np.random.default_rng(7)
    gt = rng.integers(0, 5, size=200)
    report = f1_scores(gt, rng.integers(0, 5, size=200), num_classes=5)
    assert sum(report.support.values()) == 200


def test_labels_outside_range_rejected():
    with pytest.raises(ValueError, match="exceed"):
        f1_scores([0, 3], [0, 1], num_classes=3)
    with pytest.raises(ValueError, match=">= 0"):
        f1_scores([0, -2], [0, 1], num_classes=3)


def _confusion_f1(gt, pred, num_classes):
    """Oracle: build the confusion matrix, read F1 off its margins."""
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    for g, p in zip(gt, pred):
        cm[g, p] += 1
    scores = {}
    for c in range(num_classes):
        tp = cm[c, c]
        denom = cm[c, :].sum() + cm[:, c].sum()
        scores[c] = 2.0 * tp / denom if denom > 0 else 0.0
    fw = sum(cm[c, :].sum() / cm.sum() * scores[c] for c in range(num_classes))
    return scores, fw


@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 120))
def test_matches_confusion_matrix_oracle(seed, num_classes, n):
    rng = np.random.default_rng(seed)
    gt = rng.integers(0, num_classes, size=n)
    pred = rng.integers(0, num_classes, size=n)
    report = f1_scores(gt, pred, num_classes)
    scores, fw = _confusion_f1(gt, pred, num_classes)
    assert report.per_class_f1 == scores
    assert report.weighted_f1 == pytest.approx(fw, abs=1e-12)


def test_matches_sklearn():
    rng = np.random.default_rng(3)
    gt = rng.integers(0, 4, size=500)
    pred = rng.integers(0, 4, size=500)
    report = f1_scores(gt, pred, num_classes=4)
    expected = f1_score(gt, pred, labels=range(4), average=None, zero_division=0)
    for c in range(4):
        assert report.per_class_f1[c] == pytest.approx(expected[c], abs=1e-12)
    weighted = f1_score(gt, pred, labels=range(4), average="weighted", zero_division=0)
    assert report.weighted_f1 == pytest.approx(weighted, abs=1e-12)


def test_report_rejects_inconsistent_weighted_f1():
    with pytest.raises(ValueError, match="inconsistent"):
        MetricsReport(
            accuracy=0.5,
            weighted_f1=0.9,
            per_class_f1={0: 0.5, 1: 0.5},
            support={0: 2, 1: 2},
        )


def test_report_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        MetricsReport(accuracy=1.5, weighted_f1=1.0, per_class_f1={0: 1.0}, support={0: 1})
    with pytest.raises(ValueError):
        MetricsReport(accuracy=1.0, weighted_f1=-0.1, per_class_f1={0: -0.1}, support={0: 1})
