"""Ingestion, windowing, splitting, normalization, and synthesis."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from denselabel.data import (
    DataFormatError,
    LabeledSequence,
    NormStats,
    SynthSpec,
    Window,
    apply_stats,
    compute_stats,
    labeled_spans,
    load_csv,
    load_hapt,
    load_stats,
    make_windows,
    normalize_sequences,
    save_csv,
    save_stats,
    split_windows,
    synth_generate,
    write_hapt,
)


def simple_seq(labels, channels=2, source="s"):
    labels = np.asarray(labels)
    rng = np.random.default_rng(0)
    return LabeledSequence(
        frames=rng.normal(size=(len(labels), channels)),
        labels=labels,
        source_id=source,
    )


class TestTypes:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="same number of frames"):
            LabeledSequence(frames=np.zeros((5, 2)), labels=np.zeros(4, dtype=int), source_id="x")

    def test_label_below_minus_one_rejected(self):
        with pytest.raises(ValueError):
            simple_seq([0, -2, 1])

    def test_window_requires_one_hot_rows(self):
        x = np.zeros((3, 2))
        bad = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="one-hot"):
            Window(x=x, y=bad, origin=("s", 0))

    def test_synth_spec_validation(self):
        with pytest.raises(ValueError):
            SynthSpec.uniform(num_classes=0, duration_range=(5, 10), total_frames=50, seed=0)
        with pytest.raises(ValueError):
            SynthSpec.uniform(num_classes=2, duration_range=(0, 10), total_frames=50, seed=0)
        with pytest.raises(ValueError):
            SynthSpec.uniform(num_classes=2, duration_range=(9, 3), total_frames=50, seed=0)


class TestHapt:
    @staticmethod
    def write_fixture(root, n=300):
        rng = np.random.default_rng(1)
        frames = rng.normal(size=(n, 6))
        labels = np.full(n, -1, dtype=np.int64)
        labels[10:100] = 4
        labels[120:200] = 0
        seq = LabeledSequence(frames, labels, "exp01_user01")
        write_hapt(root, [seq])
        return seq

    def test_round_trip(self, tmp_path):
        seq = self.write_fixture(tmp_path)
        loaded = load_hapt(tmp_path)
        assert len(loaded) == 1
        got = loaded[0]
        assert got.source_id == "exp01_user01"
        assert got.num_channels == 6
        np.testing.assert_allclose(got.frames, seq.frames, atol=1e-9)
        np.testing.assert_array_equal(got.labels, seq.labels)

    def test_interval_is_inclusive(self, tmp_path):
        raw = tmp_path / "RawData"
        raw.mkdir()
        n = 50
        sig = "\n".join("0.1 0.2 0.3" for _ in range(n)) + "\n"
        (raw / "acc_exp01_user01.txt").write_text(sig)
        (raw / "gyro_exp01_user01.txt").write_text(sig)
        (raw / "labels.txt").write_text("1 1 5 10 20\n")
        got = load_hapt(tmp_path)[0]
        assert got.labels[9] == -1
        assert (got.labels[10:21] == 4).all()  # activity 5 -> class id 4
        assert got.labels[21] == -1

    def test_no_intervals_means_all_unlabeled(self, tmp_path):
        raw = tmp_path / "RawData"
        raw.mkdir()
        sig = "\n".join("0 0 0" for _ in range(20)) + "\n"
        (raw / "acc_exp02_user03.txt").write_text(sig)
        (raw / "gyro_exp02_user03.txt").write_text(sig)
        (raw / "labels.txt").write_text("9 9 1 0 5\n")  # different experiment
        got = load_hapt(tmp_path)[0]
        assert (got.labels == -1).all()

    def test_missing_gyro_rejected(self, tmp_path):
        raw = tmp_path / "RawData"
        raw.mkdir()
        (raw / "acc_exp01_user01.txt").write_text("0 0 0\n")
        (raw / "labels.txt").write_text("")
        with pytest.raises(DataFormatError, match="gyro"):
            load_hapt(tmp_path)

    def test_interval_out_of_range_names_line(self, tmp_path):
        raw = tmp_path / "RawData"
        raw.mkdir()
        sig = "\n".join("0 0 0" for _ in range(10)) + "\n"
        (raw / "acc_exp01_user01.txt").write_text(sig)
        (raw / "gyro_exp01_user01.txt").write_text(sig)
        (raw / "labels.txt").write_text("1 1 2 0 4\n1 1 3 5 99\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_hapt(tmp_path)

    def test_malformed_signal_line(self, tmp_path):
        raw = tmp_path / "RawData"
        raw.mkdir()
        (raw / "acc_exp01_user01.txt").write_text("0 0 0\n0 oops 0\n")
        (raw / "gyro_exp01_user01.txt").write_text("0 0 0\n0 0 0\n")
        (raw / "labels.txt").write_text("")
        with pytest.raises(DataFormatError, match="line 2"):
            load_hapt(tmp_path)

    def test_labeled_frame_counts_match_recount(self, tmp_path):
        """Per-class frame totals agree with a direct pass over labels.txt."""
        rng = np.random.default_rng(5)
        n = 2000
        frames = rng.normal(size=(n, 6))
        labels = np.full(n, -1, dtype=np.int64)
        pos = 0
        while pos < n - 60:
            cls = int(rng.integers(0, 12))
            dur = int(rng.integers(20, 60))
            labels[pos : pos + dur] = cls
            pos += dur + int(rng.integers(5, 15))
        write_hapt(tmp_path, [LabeledSequence(frames, labels, "exp01_user01")])

        expected = np.zeros(12, dtype=np.int64)
        for line in (tmp_path / "RawData" / "labels.txt").read_text().splitlines():
            _, _, act, start, end = (int(v) for v in line.split())
            expected[act - 1] += end - start + 1

        got = load_hapt(tmp_path)[0]
        counts = np.bincount(got.labels[got.labels >= 0], minlength=12)
        np.testing.assert_array_equal(counts, expected)


class TestCsv:
    def test_round_trip_frames_and_labels(self, tmp_path):
        seq = simple_seq([0, 1, -1, 1, 2], channels=3)
        path = tmp_path / "log.csv"
        save_csv(seq, path, class_names=["a", "b", "c"])
        got = load_csv(path, ["ch0", "ch1", "ch2"], "label", ["a", "b", "c"])
        np.testing.assert_allclose(got.frames, seq.frames, atol=1e-6)
        np.testing.assert_array_equal(got.labels, seq.labels)

    def test_three_channel_shape(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y,z,label\n1,2,3,walk\n4,5,6,walk\n")
        got = load_csv(path, ["x", "y", "z"], "label", ["walk"])
        assert got.frames.shape == (2, 3)

    def test_empty_file_is_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="empty"):
            load_csv(path, ["x"], "label", ["a"])

    def test_unknown_label_named(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,label\n1,run\n")
        with pytest.raises(DataFormatError, match="run"):
            load_csv(path, ["x"], "label", ["walk"])

    def test_ragged_row_number_reported(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,y,label\n1,2,walk\n1,walk\n")
        with pytest.raises(DataFormatError, match="row 3"):
            load_csv(path, ["x", "y"], "label", ["walk"])

    def test_non_numeric_channel_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("x,label\nnope,walk\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_csv(path, ["x"], "label", ["walk"])


class TestNormalize:
    def test_train_channels_standardized(self):
        rng = np.random.default_rng(2)
        arrays = [rng.normal(loc=5.0, scale=3.0, size=(500, 4)) for _ in range(3)]
        stats = compute_stats(arrays)
        pooled = apply_stats(np.concatenate(arrays), stats)
        np.testing.assert_allclose(pooled.mean(axis=0), 0.0, atol=1e-6)
        np.testing.assert_allclose(pooled.std(axis=0), 1.0, atol=1e-6)

    def test_constant_channel_goes_to_zero(self):
        arrays = [np.full((100, 1), 7.5)]
        stats = compute_stats(arrays)
        np.testing.assert_allclose(apply_stats(arrays[0], stats), 0.0)

    def test_not_idempotent(self):
        rng = np.random.default_rng(3)
        arr = rng.normal(loc=2.0, size=(200, 2))
        stats = compute_stats([arr])
        once = apply_stats(arr, stats)
        twice = apply_stats(once, stats)
        assert not np.allclose(once, twice)

    def test_stats_file_round_trip(self, tmp_path):
        stats = NormStats(
            mean=np.array([0.5, -1.25]),
            std=np.array([2.0, 0.125]),
            channel_names=["acc_x", "acc_y"],
        )
        path = tmp_path / "stats.txt"
        save_stats(stats, path)
        got = load_stats(path)
        np.testing.assert_array_equal(got.mean, stats.mean)
        np.testing.assert_array_equal(got.std, stats.std)
        assert got.channel_names == stats.channel_names

    def test_stats_file_requires_header(self, tmp_path):
        path = tmp_path / "stats.txt"
        path.write_text("acc_x 0.0 1.0\n")
        with pytest.raises(DataFormatError, match="normstats"):
            load_stats(path)

    def test_sequences_keep_labels(self):
        seq = simple_seq([0, 1, -1])
        stats = compute_stats([seq.frames])
        out = normalize_sequences([seq], stats)[0]
        np.testing.assert_array_equal(out.labels, seq.labels)


class TestWindows:
    def test_span_600_length_256_gives_two(self):
        seq = simple_seq([0] * 600)
        ws = make_windows(seq, 256, num_classes=1)
        assert len(ws) == 2
        assert [w.origin[1] for w in ws] == [0, 256]

    def test_span_255_gives_zero(self):
        assert make_windows(simple_seq([0] * 255), 256, num_classes=1) == []

    def test_stride_128_span_512_gives_three(self):
        ws = make_windows(simple_seq([0] * 512), 256, num_classes=1, stride=128)
        assert len(ws) == 3

    def test_windows_never_cross_unlabeled_gaps(self):
        labels = np.array([0] * 100 + [-1] * 10 + [1] * 100)
        ws = make_windows(simple_seq(labels), 64, num_classes=2)
        assert len(ws) == 2
        assert {w.origin[1] for w in ws} == {0, 110}

    def test_transitions_preserved_in_one_hot(self):
        labels = np.array([0] * 30 + [1] * 34)
        ws = make_windows(simple_seq(labels), 64, num_classes=2)
        (w,) = ws
        got = w.frame_labels
        np.testing.assert_array_equal(got, labels)
        transitions = np.count_nonzero(np.diff(got))
        assert transitions == 1

    def test_divisor_guard(self):
        with pytest.raises(ValueError, match="multiple"):
            make_windows(simple_seq([0] * 100), 100, num_classes=1, divisor=8)

    def test_label_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="num_classes"):
            make_windows(simple_seq([0, 3, 1, 0]), 2, num_classes=3)

    def test_spans_helper(self):
        labels = np.array([-1, 0, 0, -1, -1, 2, 2, 2])
        assert labeled_spans(labels) == [(1, 3), (5, 8)]


class TestSplit:
    @staticmethod
    def windows(n):
        seq = simple_seq([0] * (4 * n))
        return make_windows(seq, 4, num_classes=1)

    def test_counts_1000(self):
        split = split_windows(self.windows(1000), seed=42)
        assert (len(split.train), len(split.validation), len(split.test)) == (435, 217, 348)

    def test_same_seed_same_membership(self):
        ws = self.windows(50)
        a = split_windows(ws, seed=42)
        b = split_windows(ws, seed=42)
        for la, lb in zip((a.train, a.validation, a.test), (b.train, b.validation, b.test)):
            assert [w.origin for w in la] == [w.origin for w in lb]

    def test_different_seed_differs(self):
        ws = self.windows(200)
        a = split_windows(ws, seed=1)
        b = split_windows(ws, seed=2)
        assert [w.origin for w in a.train] != [w.origin for w in b.train]

    def test_partition(self):
        ws = self.windows(97)
        split = split_windows(ws, seed=7)
        all_origins = sorted(w.origin for w in ws)
        got = sorted(w.origin for w in split.train + split.validation + split.test)
        assert got == all_origins

    def test_too_few_rejected(self):
        with pytest.raises(ValueError, match="at least 3"):
            split_windows(self.windows(2), seed=0)

    @given(n=st.integers(min_value=3, max_value=400), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_floor_arithmetic_property(self, n, seed):
        split = split_windows(self.windows(n), seed=seed)
        assert len(split.train) == int(np.floor(0.4356 * n))
        assert len(split.validation) == int(np.floor(0.2178 * n))
        assert len(split) == n


class TestSynth:
    def test_single_class_no_noise_is_pure_sinusoid(self):
        # One segment covers the whole sequence, so the phase never jumps.
        spec = SynthSpec.uniform(
            num_classes=1, duration_range=(200, 250), total_frames=200, seed=0,
            base_freq=2.0, num_channels=1,
        )
        seq = synth_generate(spec)
        assert (seq.labels == 0).all()
        # Pure tone: amplitude bounded, autocorrelation at one period ~ max.
        x = seq.frames[:, 0]
        assert np.abs(x).max() <= 1.0 + 1e-9
        period = int(round(seq.sample_rate_hz / 2.0))
        np.testing.assert_allclose(x[period:], x[:-period], atol=1e-6)

    def test_seed_reproducibility(self):
        spec = SynthSpec.uniform(
            num_classes=3, duration_range=(20, 40), total_frames=500, seed=11,
            noise_sigma=0.5,
        )
        a, b = synth_generate(spec), synth_generate(spec)
        np.testing.assert_array_equal(a.frames, b.frames)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_fully_labeled_and_neighbor_distinct(self):
        spec = SynthSpec.uniform(
            num_classes=4, duration_range=(10, 30), total_frames=1000, seed=3
        )
        seq = synth_generate(spec)
        assert (seq.labels >= 0).all()
        change = np.flatnonzero(np.diff(seq.labels))
        assert (seq.labels[change] != seq.labels[change + 1]).all()

    def test_duration_extrema_within_range(self):
        lo, hi = 15, 45
        spec = SynthSpec.uniform(
            num_classes=3, duration_range=(lo, hi), total_frames=350_000, seed=9,
            num_channels=1,
        )
        seq = synth_generate(spec)
        bounds = np.flatnonzero(np.diff(seq.labels))
        durations = np.diff(np.concatenate([[-1], bounds, [len(seq.labels) - 1]]))
        assert len(durations) >= 10_000
        interior = durations[:-1]  # final segment may be truncated
        assert interior.min() >= lo
        assert interior.max() <= hi

    def test_boundary_jitter_moves_labels_not_signal(self):
        base = dict(
            num_classes=3, duration_range=(30, 50), total_frames=2000, seed=21,
        )
        clean = synth_generate(SynthSpec.uniform(**base))
        noisy = synth_generate(SynthSpec.uniform(**base, boundary_jitter=5))
        np.testing.assert_array_equal(clean.frames, noisy.frames)
        assert (clean.labels != noisy.labels).any()
        assert sorted(np.unique(noisy.labels)) == sorted(np.unique(clean.labels))
