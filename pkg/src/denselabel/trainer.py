"""Alternating adversarial training with best-on-validation checkpointing.

Each iteration runs one discriminator step (real pair vs generated pair)
followed by one generator step (dice-discounted adversarial term plus the
focal term). With ``adversarial`` off the loop degenerates to plain
focal-loss training of the generator. Validation frame accuracy is measured
in eval mode at step 0, every ``eval_every`` steps, and at the end; the
parameter snapshot with the best metric becomes the returned checkpoint.

Determinism: a single seeded generator drives batch sampling and dropout in
a fixed order, so identical (seed, config, data) reproduce the training log
exactly.
"""

from __future__ import annotations

import csv
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .autodiff import LrSchedule, Tensor, adam_step, no_grad
from .data import DatasetSplit, Window
from .losses import LossConfig, cgan_d_loss, focal_loss, generator_objective
from .models import Discriminator, DiscriminatorConfig, Generator, GeneratorConfig


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int = 70_000
    batch_size: int = 100
    lr: LrSchedule = field(default_factory=LrSchedule)
    eval_every: int = 500
    adversarial: bool = True
    seed: int = 42
    d_steps_per_g: int = 1

    def __post_init__(self):
        if self.total_steps < 0:
            raise ValueError("total_steps must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eval_every < 1 or (self.total_steps and self.eval_every > self.total_steps):
            raise ValueError("eval_every must be in 1..total_steps")
        if self.d_steps_per_g < 1:
            raise ValueError("d_steps_per_g must be >= 1")


@dataclass
class LogRecord:
    step: int
    lr: float
    d_loss: float | None
    g_adv: float | None
    focal: float | None
    beta: float | None
    val_metric: float | None

    FIELDS = ("step", "lr", "d_loss", "g_adv", "focal", "beta", "val_metric")

    def row(self) -> list[str]:
        out = []
        for name in self.FIELDS:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif name == "step":
                out.append(str(v))
            else:
                out.append(format(v, ".10g"))
        return out


def write_log(records: list[LogRecord], file) -> None:
    with open(file, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LogRecord.FIELDS)
        for rec in records:
            writer.writerow(rec.row())


@dataclass
class Checkpoint:
    generator_state: dict[str, np.ndarray]
    gen_cfg: GeneratorConfig
    loss_cfg: LossConfig
    train_cfg: TrainConfig
    step: int
    best_val_metric: float
    discriminator_state: dict[str, np.ndarray] | None = None
    disc_cfg: DiscriminatorConfig | None = None
    norm_stats_ref: str | None = None

    def build_generator(self) -> Generator:
        gen = Generator(self.gen_cfg)
        gen.load_state(self.generator_state)
        return gen

    def build_discriminator(self) -> Discriminator | None:
        if self.discriminator_state is None or self.disc_cfg is None:
            return None
        disc = Discriminator(self.disc_cfg)
        disc.load_state(self.discriminator_state)
        return disc


def stack_windows(windows: list[Window]) -> tuple[np.ndarray, np.ndarray]:
    """Windows -> (N, T, C) inputs and (N, T, K) one-hot targets, float32."""
    if not windows:
        raise ValueError("no windows to stack")
    x = np.stack([w.x for w in windows]).astype(np.float32)
    y = np.stack([w.y for w in windows]).astype(np.float32)
    return x, y


@contextmanager
def frozen(params):
    """Temporarily stop gradient flow into a parameter set."""
    tensors = params.tensors()
    for t in tensors:
        t.requires_grad = False
    try:
        yield
    finally:
        for t in tensors:
            t.requires_grad = True


def train_step_d(
    x: np.ndarray,
    y: np.ndarray,
    generator: Generator,
    discriminator: Discriminator,
    lr: float,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
) -> float:
    """One Adam update of the discriminator on a (x, y) batch."""
    if not train_cfg.adversarial:
        raise ValueError("discriminator steps need adversarial=True")
    with no_grad():
        fake_probs = generator.forward(Tensor(x), "train", rng)
    discriminator.params.zero_grad()
    real_scores = discriminator.forward(Tensor(x), Tensor(y), "train")
    fake_scores = discriminator.forward(Tensor(x), Tensor(fake_probs.data), "train")
    loss = cgan_d_loss(real_scores, fake_scores)
    loss.backward()
    adam_step(discriminator.params, lr)
    return float(loss.data)


def train_step_g(
    x: np.ndarray,
    y: np.ndarray,
    generator: Generator,
    discriminator: Discriminator | None,
    loss_cfg: LossConfig,
    lr: float,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
) -> dict:
    """One Adam update of the generator; the discriminator stays frozen."""
    generator.params.zero_grad()
    if train_cfg.adversarial:
        if discriminator is None:
            raise ValueError("adversarial training needs a discriminator")
        with frozen(discriminator.params):
            total, diag = generator_objective(
                Tensor(x), Tensor(y), generator, discriminator, loss_cfg, "train", rng
            )
            total.backward()
    else:
        probs = generator.forward(Tensor(x), "train", rng)
        focal = focal_loss(probs, Tensor(y), loss_cfg)
        total = focal * loss_cfg.lambda_focal
        diag = {"beta": None, "g_adv": None, "focal": float(focal.data),
                "total": float(total.data)}
        total.backward()
    adam_step(generator.params, lr)
    return diag


def frame_accuracy_eval(
    generator: Generator, x: np.ndarray, y: np.ndarray, batch_size: int = 32
) -> float:
    """Frame accuracy of argmax predictions, computed in eval mode."""
    correct = 0
    total = 0
    with no_grad():
        for lo in range(0, x.shape[0], batch_size):
            xb = x[lo : lo + batch_size]
            yb = y[lo : lo + batch_size]
            probs = generator.forward(Tensor(xb), "eval").data
            correct += int((probs.argmax(-1) == yb.argmax(-1)).sum())
            total += yb.shape[0] * yb.shape[1]
    return correct / total


def train(
    split: DatasetSplit,
    generator: Generator,
    discriminator: Discriminator | None,
    loss_cfg: LossConfig,
    train_cfg: TrainConfig,
    norm_stats_ref: str | None = None,
) -> tuple[Checkpoint, list[LogRecord]]:
    """Run the full loop and return (best checkpoint, training log)."""
    if not split.train:
        raise ValueError("training split is empty")
    x_train, y_train = stack_windows(split.train)
    if split.validation:
        x_val, y_val = stack_windows(split.validation)
    else:
        # No held-out windows at desk scale: validate on train.
        x_val, y_val = x_train, y_train

    rng = np.random.default_rng(train_cfg.seed)
    n = x_train.shape[0]
    records: list[LogRecord] = []
    best_metric = -1.0
    best_state: dict[str, np.ndarray] = {}
    best_disc_state: dict[str, np.ndarray] | None = None
    best_step = 0

    def snapshot(step: int, metric: float) -> None:
        nonlocal best_metric, best_state, best_disc_state, best_step
        if metric > best_metric:
            best_metric = metric
            best_state = generator.state_arrays()
            best_disc_state = (
                discriminator.state_arrays()
                if (train_cfg.adversarial and discriminator is not None)
                else None
            )
            best_step = step

    metric = frame_accuracy_eval(generator, x_val, y_val)
    snapshot(0, metric)
    records.append(
        LogRecord(step=0, lr=train_cfg.lr.rate(0), d_loss=None, g_adv=None,
                  focal=None, beta=None, val_metric=metric)
    )

    for step in range(1, train_cfg.total_steps + 1):
        lr = train_cfg.lr.rate(step - 1)
        idx = rng.integers(0, n, size=train_cfg.batch_size)
        xb, yb = x_train[idx], y_train[idx]

        d_loss = None
        if train_cfg.adversarial:
            for _ in range(train_cfg.d_steps_per_g):
                d_loss = train_step_d(
                    xb, yb, generator, discriminator, lr, train_cfg, rng
                )
        diag = train_step_g(
            xb, yb, generator, discriminator, loss_cfg, lr, train_cfg, rng
        )

        metric = None
        if step % train_cfg.eval_every == 0 or step == train_cfg.total_steps:
            metric = frame_accuracy_eval(generator, x_val, y_val)
            snapshot(step, metric)
        records.append(
            LogRecord(step=step, lr=lr, d_loss=d_loss, g_adv=diag["g_adv"],
                      focal=diag["focal"], beta=diag["beta"], val_metric=metric)
        )

    ckpt = Checkpoint(
        generator_state=best_state,
        gen_cfg=generator.cfg,
        loss_cfg=loss_cfg,
        train_cfg=train_cfg,
        step=best_step,
        best_val_metric=best_metric,
        discriminator_state=best_disc_state,
        disc_cfg=discriminator.cfg if discriminator is not None else None,
        norm_stats_ref=norm_stats_ref,
    )
    return ckpt, records
