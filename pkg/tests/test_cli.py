"""End-to-end command-line checks on a small synthetic recording.

One module-scoped pipeline (synth -> prepare-data -> train) feeds the
read-only assertions; commands with cheap side effects run per test.
"""

import csv
import io
import json
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from denselabel.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


SMALL = (
    "--num-classes", 3, "--window-length", 32, "--depth", 2,
    "--base-filters", 4, "--window-stride", 16,
)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    code, _, err = run(
        "synth", "--out-dir", root / "synth", "--num-classes", 3,
        "--total-frames", 1200, "--min-duration", 60, "--max-duration", 150,
        "--noise-sigma", 0.2, "--channels", 2, "--seed", 5,
    )
    assert code == 0, err
    data = root / "synth" / "synth.csv"
    code, _, err = run(
        "prepare-data", "--data-csv", data, "--out-dir", root / "prep",
        "--split-seed", 3, *SMALL,
    )
    assert code == 0, err
    prepared = root / "prep" / "prepared.npz"
    code, _, err = run(
        "train", "--prepared", prepared, "--out-dir", root / "train",
        "--total-steps", 60, "--batch-size", 8, "--eval-every", 30,
        "--seed", 11, *SMALL,
    )
    assert code == 0, err
    return {
        "root": root,
        "data": data,
        "prepared": prepared,
        "normstats": root / "prep" / "normstats.txt",
        "checkpoint": root / "train" / "checkpoint.dlab",
        "log": root / "train" / "training_log.csv",
    }


def test_synth_is_deterministic(tmp_path):
    args = (
        "synth", "--num-classes", 3, "--total-frames", 400,
        "--min-duration", 40, "--max-duration", 80, "--seed", 9,
    )
    assert run(*args, "--out-dir", tmp_path / "a")[0] == 0
    assert run(*args, "--out-dir", tmp_path / "b")[0] == 0
    assert (tmp_path / "a" / "synth.csv").read_bytes() == (
        tmp_path / "b" / "synth.csv"
    ).read_bytes()


def test_prepare_artifacts(pipeline):
    with np.load(pipeline["prepared"]) as data:
        meta = json.loads(str(data["meta"]))
        assert meta["num_classes"] == 3
        assert meta["window_length"] == 32
        assert meta["normalized"] is True
        assert data["x_train"].shape[1:] == (32, 2)
        assert data["x_train"].dtype == np.float32
        labels = data["labels_train"]
        assert labels.min() >= 0 and labels.max() < 3
    assert pipeline["normstats"].exists()
    # the echoed config re-parses and records what actually ran
    text = (pipeline["root"] / "prep" / "config.txt").read_text()
    assert "window_length = 32" in text
    assert "split_seed = 3" in text


def test_train_is_reproducible(pipeline, tmp_path):
    code, _, err = run(
        "train", "--prepared", pipeline["prepared"], "--out-dir", tmp_path,
        "--total-steps", 60, "--batch-size", 8, "--eval-every", 30,
        "--seed", 11, *SMALL,
    )
    assert code == 0, err
    assert (tmp_path / "training_log.csv").read_bytes() == pipeline["log"].read_bytes()
    assert (tmp_path / "checkpoint.dlab").read_bytes() == pipeline[
        "checkpoint"
    ].read_bytes()


def test_train_log_shape(pipeline):
    rows = read_rows(pipeline["log"])
    assert rows[0] == ["step", "lr", "d_loss", "g_adv", "focal", "beta", "val_metric"]
    steps = [int(r[0]) for r in rows[1:]]
    assert steps[0] == 0 and steps[-1] == 60
    # adversarial columns are populated on training steps
    assert rows[2][2] != "" and rows[2][3] != ""


def test_train_rejects_mismatched_classes(pipeline, tmp_path):
    code, _, err = run(
        "train", "--prepared", pipeline["prepared"], "--out-dir", tmp_path,
        "--num-classes", 7, "--window-length", 32,
    )
    assert code == 1
    assert err.startswith("error:") and "classes" in err


def test_evaluate_reports(pipeline, tmp_path):
    code, out, err = run(
        "evaluate", "--checkpoint", pipeline["checkpoint"],
        "--prepared", pipeline["prepared"], "--split", "test",
        "--out-dir", tmp_path, *SMALL,
    )
    assert code == 0, err
    assert "accuracy" in out
    payload = json.loads((tmp_path / "metrics.json").read_text())
    assert set(payload) == {
        "accuracy", "weighted_f1", "total_frames", "per_class", "misalignment",
    }
    assert 0.0 <= payload["accuracy"] <= 1.0
    assert len(payload["per_class"]) == 3
    for row in payload["per_class"]:
        assert set(row) == {"class", "name", "support", "f1"}
    assert set(payload["misalignment"]) == {"counts", "rates", "per_class"}
    rates = payload["misalignment"]["rates"]
    assert sum(rates.values()) == pytest.approx(1.0)
    counts = payload["misalignment"]["counts"]  # includes the correct frames
    assert sum(counts.values()) == payload["total_frames"]
    # CSV totals agree with the JSON
    rows = read_rows(tmp_path / "metrics.csv")
    assert rows[0] == ["class", "support", "f1", "accuracy"]
    assert float(rows[-1][3]) == pytest.approx(payload["accuracy"], abs=1e-6)
    comp = read_rows(tmp_path / "misalignment.csv")
    assert comp[0][2:] == ["fragmentation", "substitution", "overfill", "underfill"]


def test_predict_schema(pipeline, tmp_path):
    code, out, err = run(
        "predict", "--checkpoint", pipeline["checkpoint"],
        "--input", pipeline["data"], "--normstats", pipeline["normstats"],
        "--out-dir", tmp_path, "--num-classes", 3,
    )
    assert code == 0, err
    rows = read_rows(tmp_path / "predictions.csv")
    assert rows[0] == [
        "frame_index", "true_class", "predicted_class",
        "prob_class00", "prob_class01", "prob_class02",
    ]
    assert len(rows) - 1 == 1200
    probs = np.array([[float(c) for c in row[3:]] for row in rows[1:]])
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-4)
    preds = np.array([int(row[2]) for row in rows[1:]])
    assert np.array_equal(preds, np.argmax(probs, axis=1))
    assert "1200 frames" in out


def test_misalign_identical_files_is_all_correct(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("label\n" + "\n".join("001122110" * 4) + "\n")
    code, out, err = run(
        "misalign", "--gt", path, "--pred", path,
        "--out-dir", tmp_path, "--num-classes", 3,
    )
    assert code == 0, err
    payload = json.loads((tmp_path / "misalignment.json").read_text())
    assert payload["rates"]["correct"] == 1.0
    for name in ("fragmentation", "substitution", "overfill", "underfill"):
        assert payload["rates"][name] == 0.0


def test_misalign_maps_class_names(tmp_path):
    (tmp_path / "gt.csv").write_text("label\nwalk\nwalk\nrun\nrun\n")
    (tmp_path / "pred.csv").write_text("label\nwalk\nrun\nrun\nrun\n")
    code, _, err = run(
        "misalign", "--gt", tmp_path / "gt.csv", "--pred", tmp_path / "pred.csv",
        "--out-dir", tmp_path, "--num-classes", 2, "--class-names", "walk,run",
    )
    assert code == 0, err
    payload = json.loads((tmp_path / "misalignment.json").read_text())
    assert payload["total_frames"] == 4
    # the predicted run segment spills one frame back over the boundary
    assert payload["rates"]["overfill"] == pytest.approx(0.25)


def test_misalign_drops_unlabeled_frames(tmp_path):
    (tmp_path / "gt.csv").write_text("label\n-1\n0\n0\n1\n")
    (tmp_path / "pred.csv").write_text("label\n0\n0\n0\n1\n")
    code, _, err = run(
        "misalign", "--gt", tmp_path / "gt.csv", "--pred", tmp_path / "pred.csv",
        "--out-dir", tmp_path, "--num-classes", 2,
    )
    assert code == 0, err
    payload = json.loads((tmp_path / "misalignment.json").read_text())
    assert payload["total_frames"] == 3
    assert payload["rates"]["correct"] == 1.0


def test_misalign_length_mismatch(tmp_path):
    (tmp_path / "gt.csv").write_text("label\n0\n1\n")
    (tmp_path / "pred.csv").write_text("label\n0\n")
    code, _, err = run(
        "misalign", "--gt", tmp_path / "gt.csv", "--pred", tmp_path / "pred.csv",
        "--out-dir", tmp_path, "--num-classes", 2,
    )
    assert code == 1
    assert "length mismatch" in err


def test_features_csv(pipeline, tmp_path):
    code, out, err = run(
        "features", "--input", pipeline["data"], "--out-dir", tmp_path,
        "--num-classes", 3, "--window-length", 32, "--window-stride", 32,
    )
    assert code == 0, err
    rows = read_rows(tmp_path / "features.csv")
    assert rows[0][0] == "ch0_max"
    assert rows[0][-1] == "label"
    assert len(rows[0]) == 2 * 25 + 1
    labels = {int(r[-1]) for r in rows[1:]}
    assert labels <= {0, 1, 2}


def test_unknown_config_key_fails_cleanly(tmp_path):
    cfg = tmp_path / "bad.txt"
    cfg.write_text("window_lenght = 64\n")
    code, _, err = run("train", "--config", cfg, "--out-dir", tmp_path)
    assert code == 1
    assert err.startswith("error:")
    assert "window_lenght" in err and ":1:" in err


def test_train_requires_a_data_source(tmp_path):
    code, _, err = run("train", "--out-dir", tmp_path, "--total-steps", 1)
    assert code == 1
    assert "data_dir or data_csv" in err


def test_flags_beat_config_file(tmp_path):
    cfg = tmp_path / "run.txt"
    cfg.write_text("num_classes = 5\nseed = 2\ntotal_frames = 0\n")
    # total_frames is not a config key: the parser must say so
    code, _, err = run("synth", "--config", cfg, "--out-dir", tmp_path)
    assert code == 1 and "total_frames" in err
    cfg.write_text("num_classes = 5\nseed = 2\n")
    code, _, err = run(
        "synth", "--config", cfg, "--out-dir", tmp_path, "--num-classes", 2,
        "--total-frames", 300, "--min-duration", 30, "--max-duration", 60,
    )
    assert code == 0, err
    text = (tmp_path / "config.txt").read_text()
    assert "num_classes = 2" in text  # flag beat the file
    assert "seed = 2" in text  # file beat the default


def test_help_lists_config_flags():
    from denselabel.cli import build_parser
    from denselabel.runconfig import config_keys

    sub = build_parser()._subparsers._group_actions[0].choices["train"]
    text = sub.format_help()
    for key in config_keys():
        assert "--" + key.replace("_", "-") in text
    assert "(default: 70000)" in text  # defaults are shown inline
