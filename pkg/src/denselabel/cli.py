"""Command-line entry point: one binary, seven subcommands.

Every artifact is written to a temp file in the destination directory and
atomically renamed into place, so an interrupted run never leaves a partial
report behind. The effective configuration is echoed next to the artifacts.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .autodiff import LrSchedule
from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .data import (
    HAPT_CLASS_NAMES,
    DataFormatError,
    DatasetSplit,
    LabeledSequence,
    SynthSpec,
    Window,
    apply_stats,
    compute_stats,
    load_csv,
    load_hapt,
    load_stats,
    make_windows,
    normalize_windows,
    save_csv,
    save_stats,
    split_windows,
    synth_generate,
)
from .evaluate import (
    evaluate_model,
    reports_to_dict,
    sliding_probabilities,
    write_composition_csv,
    write_metrics_csv,
)
from .features import feature_matrix, write_features_csv
from .losses import LossConfig
from .misalignment import misalignment_decompose
from .models import Discriminator, DiscriminatorConfig, Generator, GeneratorConfig
from .runconfig import (
    HELP,
    ConfigError,
    RunConfig,
    config_keys,
    default_value,
    make_config,
    write_config,
)
from .trainer import TrainConfig, train, write_log

SPLIT_NAMES = ("train", "validation", "test")


def _atomic(path: Path, write_fn) -> None:
    """Write via a sibling temp file and rename into place."""
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value config file")
    group = parser.add_argument_group("config overrides (flags win over the file)")
    for key in config_keys():
        default = default_value(key)
        flag = "--" + key.replace("_", "-")
        help_text = f"{HELP[key]} (default: {default})"
        if isinstance(default, bool):
            group.add_argument(
                flag, dest=key, default=None,
                action=argparse.BooleanOptionalAction, help=help_text,
            )
        elif isinstance(default, int):
            group.add_argument(flag, dest=key, default=None, type=int, help=help_text)
        elif isinstance(default, float):
            group.add_argument(flag, dest=key, default=None, type=float, help=help_text)
        else:
            group.add_argument(flag, dest=key, default=None, help=help_text)


def _config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in config_keys() if hasattr(args, k)}
    return make_config(getattr(args, "config", None), overrides)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sequence_from_csv(path, class_names, sample_rate_hz) -> LabeledSequence:
    """Load a labeled CSV treating every non-label column as a channel."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise DataFormatError(f"{path}: empty file")
    if "label" not in header:
        raise DataFormatError(f"{path}: no 'label' column in header {header}")
    channels = [c for c in header if c != "label"]
    return load_csv(
        path, channels, "label", class_names, sample_rate_hz=sample_rate_hz
    )


def _load_sequences(cfg: RunConfig) -> tuple[list[LabeledSequence], list[str]]:
    if cfg.data_dir and cfg.data_csv:
        raise ConfigError("set data_dir or data_csv, not both")
    if cfg.data_dir:
        seqs = load_hapt(cfg.data_dir)
        names = (
            list(HAPT_CLASS_NAMES)
            if cfg.num_classes == len(HAPT_CLASS_NAMES) and not cfg.class_names
            else cfg.class_name_list()
        )
        return seqs, names
    if cfg.data_csv:
        names = cfg.class_name_list()
        return [_sequence_from_csv(cfg.data_csv, names, cfg.sample_rate_hz)], names
    raise ConfigError("config needs data_dir or data_csv")


def _cut_windows(cfg: RunConfig, seqs) -> list[Window]:
    windows = []
    for seq in seqs:
        windows.extend(
            make_windows(
                seq,
                cfg.window_length,
                cfg.num_classes,
                stride=cfg.stride(),
                divisor=2**cfg.depth,
            )
        )
    if not windows:
        raise DataFormatError(
            f"no labeled span is long enough for window_length={cfg.window_length}"
        )
    return windows


def _build_split(cfg: RunConfig) -> tuple[DatasetSplit, object, list[str]]:
    """Load, window, split, and optionally normalize; returns stats too."""
    seqs, names = _load_sequences(cfg)
    windows = _cut_windows(cfg, seqs)
    test_fraction = 1.0 - cfg.train_fraction - cfg.val_fraction
    if test_fraction < 0:
        raise ConfigError("train_fraction + val_fraction must be <= 1")
    split = split_windows(
        windows, seed=cfg.split_seed,
        fractions=(cfg.train_fraction, cfg.val_fraction, test_fraction),
    )
    stats = None
    if cfg.normalize:
        stats = compute_stats([w.x for w in split.train])
        split = DatasetSplit(
            train=normalize_windows(split.train, stats),
            validation=normalize_windows(split.validation, stats),
            test=normalize_windows(split.test, stats),
            seed=split.seed,
            fractions=split.fractions,
        )
    return split, stats, names


def _save_prepared(path: Path, split: DatasetSplit, cfg: RunConfig, names) -> None:
    arrays = {}
    for name, windows in zip(SPLIT_NAMES, (split.train, split.validation, split.test)):
        if windows:
            arrays[f"x_{name}"] = np.stack([w.x for w in windows]).astype(np.float32)
            arrays[f"labels_{name}"] = np.stack(
                [np.argmax(w.y, axis=-1) for w in windows]
            ).astype(np.int64)
        else:
            t, c = cfg.window_length, split.train[0].x.shape[1]
            arrays[f"x_{name}"] = np.zeros((0, t, c), dtype=np.float32)
            arrays[f"labels_{name}"] = np.zeros((0, t), dtype=np.int64)
    meta = {
        "num_classes": cfg.num_classes,
        "class_names": names,
        "window_length": cfg.window_length,
        "sample_rate_hz": cfg.sample_rate_hz,
        "normalized": cfg.normalize,
        "split_seed": cfg.split_seed,
    }
    def write(tmp):
        # np.savez appends ".npz" to bare paths; a handle keeps the tmp name.
        with open(tmp, "wb") as fh:
            np.savez(fh, meta=json.dumps(meta), **arrays)

    _atomic(path, write)


def _load_prepared(path) -> tuple[DatasetSplit, dict]:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: no such file")
    with np.load(path, allow_pickle=False) as data:
        try:
            meta = json.loads(str(data["meta"]))
            eye = np.eye(meta["num_classes"])
            parts = []
            for name in SPLIT_NAMES:
                xs = data[f"x_{name}"]
                labels = data[f"labels_{name}"]
                parts.append(
                    [
                        Window(x=xs[i], y=eye[labels[i]], origin=(name, i))
                        for i in range(xs.shape[0])
                    ]
                )
        except KeyError as exc:
            raise DataFormatError(f"{path}: missing array {exc}") from None
    split = DatasetSplit(
        train=parts[0], validation=parts[1], test=parts[2],
        seed=meta["split_seed"], fractions=(0.0, 0.0, 1.0),
    )
    return split, meta


def cmd_prepare_data(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    split, stats, names = _build_split(cfg)
    _save_prepared(out / "prepared.npz", split, cfg, names)
    if stats is not None:
        _atomic(out / "normstats.txt", lambda tmp: save_stats(stats, tmp))
    write_config(cfg, out / "config.txt")
    print(
        f"prepared {len(split.train)}/{len(split.validation)}/{len(split.test)} "
        f"train/validation/test windows -> {out / 'prepared.npz'}"
    )
    return 0


def _models_from_config(cfg: RunConfig, channels: int):
    gen_cfg = GeneratorConfig(
        window_length=cfg.window_length,
        in_channels=channels,
        num_classes=cfg.num_classes,
        depth=cfg.depth,
        base_filters=cfg.base_filters,
        kernel_size=cfg.kernel_size,
        block_style=cfg.block_style,
        dropout_rate=cfg.dropout_rate,
        dropout_block=cfg.dropout_block if cfg.dropout_block > 0 else None,
    )
    generator = Generator(gen_cfg, seed=cfg.seed)
    discriminator = None
    if cfg.adversarial:
        disc_cfg = DiscriminatorConfig(
            num_classes=cfg.num_classes,
            in_channels=channels,
            filters=cfg.disc_filter_tuple(),
            kernel_size=cfg.kernel_size,
        )
        disc_cfg.patch_count(cfg.window_length)  # fail early on bad sizes
        discriminator = Discriminator(disc_cfg, seed=cfg.seed + 1)
    return generator, discriminator


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    if args.prepared:
        split, meta = _load_prepared(args.prepared)
        if meta["num_classes"] != cfg.num_classes:
            raise ConfigError(
                f"prepared data has {meta['num_classes']} classes, "
                f"config says {cfg.num_classes}"
            )
        if meta["window_length"] != cfg.window_length:
            raise ConfigError(
                f"prepared data has window_length {meta['window_length']}, "
                f"config says {cfg.window_length}"
            )
        norm_ref = "normstats.txt" if meta.get("normalized") else None
    else:
        split, stats, _ = _build_split(cfg)
        norm_ref = None
        if stats is not None:
            _atomic(out / "normstats.txt", lambda tmp: save_stats(stats, tmp))
            norm_ref = "normstats.txt"

    channels = split.train[0].x.shape[1] if split.train else 0
    if channels == 0:
        raise DataFormatError("training split is empty")
    generator, discriminator = _models_from_config(cfg, channels)
    loss_cfg = LossConfig(
        lambda_focal=cfg.lambda_focal, gamma=cfg.gamma, beta_floor=cfg.beta_floor
    )
    train_cfg = TrainConfig(
        total_steps=cfg.total_steps,
        batch_size=cfg.batch_size,
        lr=LrSchedule(
            initial_rate=cfg.learning_rate,
            decay_rate=cfg.lr_decay_rate,
            decay_steps=cfg.lr_decay_steps,
            staircase=cfg.lr_staircase,
        ),
        eval_every=cfg.eval_every,
        adversarial=cfg.adversarial,
        seed=cfg.seed,
        d_steps_per_g=cfg.d_steps_per_g,
    )
    checkpoint, records = train(
        split, generator, discriminator, loss_cfg, train_cfg, norm_stats_ref=norm_ref
    )
    _atomic(out / "checkpoint.dlab", lambda tmp: save_checkpoint(checkpoint, tmp))
    _atomic(out / "training_log.csv", lambda tmp: write_log(records, tmp))
    write_config(cfg, out / "config.txt")
    print(
        f"trained {cfg.total_steps} steps; best validation accuracy "
        f"{checkpoint.best_val_metric:.4f} at step {checkpoint.step} "
        f"-> {out / 'checkpoint.dlab'}"
    )
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    checkpoint = load_checkpoint(args.checkpoint)
    split, meta = _load_prepared(args.prepared)
    windows = getattr(split, args.split)
    if not windows:
        raise DataFormatError(f"the {args.split} split has no windows")
    metrics, misalign = evaluate_model(checkpoint, windows)
    names = meta.get("class_names")
    payload = reports_to_dict(metrics, misalign, class_names=names)
    _atomic(
        out / "metrics.json",
        lambda tmp: Path(tmp).write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        ),
    )
    _atomic(out / "metrics.csv", lambda tmp: write_metrics_csv(tmp, metrics, names))
    _atomic(
        out / "misalignment.csv",
        lambda tmp: write_composition_csv(tmp, misalign, names),
    )
    write_config(cfg, out / "config.txt")
    print(
        f"{args.split}: accuracy {metrics.accuracy:.4f}, weighted F1 "
        f"{metrics.weighted_f1:.4f}, error rate {misalign.error_rate:.4f} "
        f"-> {out / 'metrics.json'}"
    )
    return 0


def cmd_predict(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    checkpoint = load_checkpoint(args.checkpoint)
    generator = checkpoint.build_generator()
    gen_cfg = checkpoint.gen_cfg
    names = cfg.class_name_list() if cfg.class_names else [
        f"class{i:02d}" for i in range(gen_cfg.num_classes)
    ]
    if len(names) != gen_cfg.num_classes:
        raise ConfigError(
            f"{len(names)} class names for a {gen_cfg.num_classes}-class model"
        )
    seq = _sequence_from_csv(args.input, names, cfg.sample_rate_hz)
    frames = seq.frames
    if args.normstats:
        frames = apply_stats(frames, load_stats(args.normstats))
    probs = sliding_probabilities(generator, frames, gen_cfg.window_length)
    pred = np.argmax(probs, axis=-1)

    def write(tmp):
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["frame_index", "true_class", "predicted_class"]
                + [f"prob_{name}" for name in names]
            )
            for i in range(frames.shape[0]):
                writer.writerow(
                    [i, int(seq.labels[i]), int(pred[i])]
                    + [format(p, ".6g") for p in probs[i]]
                )

    _atomic(out / "predictions.csv", write)
    write_config(cfg, out / "config.txt")
    labeled = seq.labels >= 0
    if labeled.any():
        acc = float(np.mean(pred[labeled] == seq.labels[labeled]))
        print(
            f"predicted {frames.shape[0]} frames (accuracy {acc:.4f} on "
            f"{int(labeled.sum())} labeled) -> {out / 'predictions.csv'}"
        )
    else:
        print(f"predicted {frames.shape[0]} frames -> {out / 'predictions.csv'}")
    return 0


def _read_label_file(path, prefer: tuple[str, ...], class_names: list[str]) -> np.ndarray:
    """Read one label per row from a CSV.

    Accepts dense prediction files (picking the first column named in
    ``prefer``), single-column files with a ``label`` header holding class
    names or ids, and headerless single-column id files.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header, start = rows[0], 1
    col = None
    for name in prefer:
        if name in header:
            col = header.index(name)
            break
    if col is None:
        # No recognized header: require a single headerless id column.
        if len(header) != 1:
            raise DataFormatError(
                f"{path}: expected one of {prefer} in the header, got {header}"
            )
        try:
            int(header[0])
        except ValueError:
            raise DataFormatError(
                f"{path}: single-column files must hold integer ids, "
                f"got {header[0]!r}"
            ) from None
        col, start = 0, 0
    name_to_id = {name: i for i, name in enumerate(class_names)}
    labels = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        cell = row[col].strip()
        try:
            labels.append(int(cell))
        except ValueError:
            if cell not in name_to_id:
                raise DataFormatError(
                    f"{path}:{lineno}: {cell!r} is neither an id nor a known class name"
                ) from None
            labels.append(name_to_id[cell])
    return np.asarray(labels, dtype=np.int64)


def cmd_misalign(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    names = cfg.class_name_list()
    gt = _read_label_file(args.gt, ("true_class", "label", "predicted_class"), names)
    pred = _read_label_file(args.pred, ("predicted_class", "label", "true_class"), names)
    if gt.shape != pred.shape:
        raise DataFormatError(
            f"length mismatch: gt has {gt.size} frames, pred has {pred.size}"
        )
    keep = (gt >= 0) & (pred >= 0)  # unlabeled frames carry no attribution
    if not keep.any():
        raise DataFormatError("no frames where both files are labeled")
    report = misalignment_decompose(gt[keep], pred[keep])
    _atomic(
        out / "misalignment.csv", lambda tmp: write_composition_csv(tmp, report, names)
    )
    payload = {"total_frames": report.total_frames, "rates": report.rates}
    _atomic(
        out / "misalignment.json",
        lambda tmp: Path(tmp).write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        ),
    )
    write_config(cfg, out / "config.txt")
    rates = ", ".join(f"{k} {v:.4f}" for k, v in report.rates.items())
    print(f"{report.total_frames} frames: {rates} -> {out / 'misalignment.csv'}")
    return 0


def cmd_features(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    names = cfg.class_name_list()
    seq = _sequence_from_csv(args.input, names, cfg.sample_rate_hz)
    windows = make_windows(
        seq, cfg.window_length, cfg.num_classes, stride=cfg.stride()
    )
    if not windows:
        raise DataFormatError(
            f"no labeled span is long enough for window_length={cfg.window_length}"
        )
    matrix, labels = feature_matrix(windows, cfg.sample_rate_hz)
    _atomic(
        out / "features.csv",
        lambda tmp: write_features_csv(tmp, matrix, labels=labels),
    )
    write_config(cfg, out / "config.txt")
    print(
        f"extracted {matrix.shape[0]} windows x {matrix.shape[1]} features "
        f"-> {out / 'features.csv'}"
    )
    return 0


def cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    spec = SynthSpec.uniform(
        num_classes=cfg.num_classes,
        duration_range=(args.min_duration, args.max_duration),
        total_frames=args.total_frames,
        seed=cfg.seed,
        noise_sigma=args.noise_sigma,
        num_channels=args.channels,
        sample_rate_hz=cfg.sample_rate_hz,
    )
    seq = synth_generate(spec)
    names = cfg.class_name_list()
    _atomic(out / "synth.csv", lambda tmp: save_csv(seq, tmp, names))
    write_config(cfg, out / "config.txt")
    print(
        f"generated {spec.total_frames} frames, {cfg.num_classes} classes "
        f"-> {out / 'synth.csv'}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="denselabel",
        description="Dense per-frame activity labeling: prepare, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare-data", help="window, split, and normalize a dataset")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_prepare_data)

    p = sub.add_parser("train", help="train a labeler, optionally adversarially")
    p.add_argument("--prepared", metavar="NPZ", help="prepared.npz from prepare-data")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a prepared split")
    p.add_argument("--checkpoint", required=True, metavar="DLAB")
    p.add_argument("--prepared", required=True, metavar="NPZ")
    p.add_argument("--split", choices=SPLIT_NAMES, default="test")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("predict", help="dense per-frame predictions for a CSV")
    p.add_argument("--checkpoint", required=True, metavar="DLAB")
    p.add_argument("--input", required=True, metavar="CSV")
    p.add_argument("--normstats", metavar="FILE", help="stats file from prepare-data")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("misalign", help="decompose label disagreements")
    p.add_argument("--gt", required=True, metavar="CSV")
    p.add_argument("--pred", required=True, metavar="CSV")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_misalign)

    p = sub.add_parser("features", help="export per-window features for classifiers")
    p.add_argument("--input", required=True, metavar="CSV")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_features)

    p = sub.add_parser("synth", help="generate a labeled synthetic recording")
    p.add_argument("--total-frames", type=int, default=20_000)
    p.add_argument("--min-duration", type=int, default=100)
    p.add_argument("--max-duration", type=int, default=300)
    p.add_argument("--noise-sigma", type=float, default=0.25)
    p.add_argument("--channels", type=int, default=3)
    _add_config_flags(p)
    p.set_defaults(fn=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DataFormatError, CheckpointFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
