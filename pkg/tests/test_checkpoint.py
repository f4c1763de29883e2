"""Checkpoint file format: byte-exact round trips and corruption handling."""

import numpy as np
import pytest

from denselabel.autodiff import LrSchedule, Tensor
from denselabel.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    CheckpointFormatError,
    load_checkpoint,
    save_checkpoint,
)
from denselabel.losses import LossConfig
from denselabel.models import (
    Discriminator,
    DiscriminatorConfig,
    Generator,
    GeneratorConfig,
)
from denselabel.trainer import Checkpoint, TrainConfig

GEN_CFG = GeneratorConfig(
    window_length=16, in_channels=2, num_classes=3, depth=2, base_filters=4,
)
DISC_CFG = DiscriminatorConfig(num_classes=3, in_channels=2, filters=(4, 8))


def make_checkpoint(with_disc=True, **overrides):
    fields = dict(
        generator_state=Generator(GEN_CFG, seed=3).state_arrays(),
        gen_cfg=GEN_CFG,
        loss_cfg=LossConfig(alpha=np.array([0.2, 0.3, 0.5])),
        train_cfg=TrainConfig(
            total_steps=40, batch_size=4, eval_every=10,
            lr=LrSchedule(initial_rate=1e-3, decay_rate=0.9, decay_steps=100,
                          staircase=True),
        ),
        step=30,
        best_val_metric=0.875,
        discriminator_state=(
            Discriminator(DISC_CFG, seed=4).state_arrays() if with_disc else None
        ),
        disc_cfg=DISC_CFG if with_disc else None,
        norm_stats_ref="normstats.txt",
    )
    fields.update(overrides)
    return Checkpoint(**fields)


def save_bytes(ckpt, tmp_path, name="ckpt.dlab"):
    path = tmp_path / name
    save_checkpoint(ckpt, path)
    return path, path.read_bytes()


def test_round_trip_is_byte_identical(tmp_path):
    ckpt = make_checkpoint()
    path, first = save_bytes(ckpt, tmp_path)
    loaded = load_checkpoint(path)
    _, second = save_bytes(loaded, tmp_path, "again.dlab")
    assert first == second


def test_round_trip_preserves_everything(tmp_path):
    ckpt = make_checkpoint()
    path, _ = save_bytes(ckpt, tmp_path)
    loaded = load_checkpoint(path)
    assert loaded.gen_cfg == ckpt.gen_cfg
    assert loaded.disc_cfg == ckpt.disc_cfg
    assert loaded.train_cfg == ckpt.train_cfg
    assert loaded.step == 30
    assert loaded.best_val_metric == 0.875
    assert loaded.norm_stats_ref == "normstats.txt"
    np.testing.assert_array_equal(loaded.loss_cfg.alpha, ckpt.loss_cfg.alpha)
    assert loaded.generator_state.keys() == ckpt.generator_state.keys()
    for key, arr in ckpt.generator_state.items():
        got = loaded.generator_state[key]
        assert got.dtype == arr.dtype
        np.testing.assert_array_equal(got, arr)
    for key, arr in ckpt.discriminator_state.items():
        np.testing.assert_array_equal(loaded.discriminator_state[key], arr)


def test_loaded_generator_predicts_identically(tmp_path):
    ckpt = make_checkpoint()
    path, _ = save_bytes(ckpt, tmp_path)
    x = Tensor(np.random.default_rng(5).standard_normal((2, 16, 2)))
    before = ckpt.build_generator().forward(x, "eval").data
    after = load_checkpoint(path).build_generator().forward(x, "eval").data
    np.testing.assert_array_equal(before, after)


def test_no_discriminator_round_trip(tmp_path):
    ckpt = make_checkpoint(with_disc=False, norm_stats_ref=None)
    path, _ = save_bytes(ckpt, tmp_path)
    loaded = load_checkpoint(path)
    assert loaded.discriminator_state is None
    assert loaded.disc_cfg is None
    assert loaded.norm_stats_ref is None
    assert loaded.build_discriminator() is None


def test_bad_magic_rejected(tmp_path):
    path, data = save_bytes(make_checkpoint(), tmp_path)
    path.write_bytes(b"XXXXX" + data[5:])
    with pytest.raises(CheckpointFormatError, match="bad magic"):
        load_checkpoint(path)


def test_wrong_version_rejected(tmp_path):
    path, data = save_bytes(make_checkpoint(), tmp_path)
    assert data[5] == FORMAT_VERSION
    path.write_bytes(data[:5] + bytes([FORMAT_VERSION + 1]) + data[6:])
    with pytest.raises(CheckpointFormatError, match="version"):
        load_checkpoint(path)


@pytest.mark.parametrize("keep", [3, 5, 9, 40, 200])
def test_truncation_rejected(tmp_path, keep):
    path, data = save_bytes(make_checkpoint(), tmp_path)
    assert keep < len(data)
    path.write_bytes(data[:keep])
    with pytest.raises(CheckpointFormatError, match="truncated|bad magic"):
        load_checkpoint(path)


def test_trailing_bytes_rejected(tmp_path):
    path, data = save_bytes(make_checkpoint(), tmp_path)
    path.write_bytes(data + b"\x00")
    with pytest.raises(CheckpointFormatError, match="trailing"):
        load_checkpoint(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.dlab"
    path.write_bytes(b"")
    with pytest.raises(CheckpointFormatError, match="truncated"):
        load_checkpoint(path)


def test_magic_is_stable(tmp_path):
    # on-disk compatibility: existing files must keep loading
    path, data = save_bytes(make_checkpoint(), tmp_path)
    assert data[:5] == MAGIC == b"DLAB1"
    assert data[5] == 1
