"""Training objectives: focal loss, adversarial terms, and the dice discount.

The generator minimizes beta * L_adv + lambda * L_focal, where beta is the
soft dice loss between its own predictions and the ground truth, clamped to
[beta_floor, 1] and treated as a constant for the step. A generator that
already overlaps the truth well therefore hears less from the discriminator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, clip, log, mean_all, powc, sum_all, sum_along

PROB_EPS = 1e-7


@dataclass(frozen=True)
class LossConfig:
    lambda_focal: float = 100.0
    gamma: float = 2.0
    alpha: np.ndarray | None = None  # per-class weights; None = uniform 1
    beta_floor: float = 0.01
    beta_detached: bool = True

    def __post_init__(self):
        if self.lambda_focal < 0:
            raise ValueError("lambda_focal must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not 0.0 < self.beta_floor <= 1.0:
            raise ValueError("beta_floor must be in (0, 1]")
        if self.alpha is not None:
            alpha = np.asarray(self.alpha, dtype=np.float64)
            if alpha.ndim != 1 or np.any(alpha <= 0):
                raise ValueError("alpha must be a 1-d array of positive weights")
            object.__setattr__(self, "alpha", alpha)


def _check_one_hot(y: Tensor) -> None:
    rows_ok = np.all(y.data.sum(axis=-1) == 1.0)
    binary = np.all((y.data == 0.0) | (y.data == 1.0))
    if not (rows_ok and binary):
        raise ValueError("y must be exactly one-hot per frame")


def focal_loss(probs: Tensor, y: Tensor, cfg: LossConfig = LossConfig()) -> Tensor:
    """Mean over frames of -alpha_c * (1 - p_t)^gamma * log(p_t).

    ``p_t`` is the probability the model put on the true class; gamma = 0 and
    uniform alpha reduce this to categorical cross-entropy.
    """
    if probs.shape != y.shape:
        raise ValueError(f"probs {probs.shape} and y {y.shape} must match")
    _check_one_hot(y)
    k = y.shape[-1]
    if cfg.alpha is not None and cfg.alpha.shape != (k,):
        raise ValueError(f"alpha must have {k} entries, got {cfg.alpha.shape}")

    # True-class probability per frame, clamped into the loggable interior.
    p_t = sum_along(clip(probs, PROB_EPS, 1.0 - PROB_EPS) * y.data, axis=-1)
    alpha_t = 1.0 if cfg.alpha is None else (y.data * cfg.alpha).sum(axis=-1)
    per_frame = log(p_t) * (-1.0) * alpha_t
    if cfg.gamma != 0.0:
        per_frame = per_frame * powc(1.0 - p_t, cfg.gamma)
    return mean_all(per_frame)


def cgan_d_loss(real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """-mean(log D(x, y)) - mean(log(1 - D(x, G(x)))), over batch and patches."""
    real = clip(real_scores, PROB_EPS, 1.0 - PROB_EPS)
    fake = clip(fake_scores, PROB_EPS, 1.0 - PROB_EPS)
    return -mean_all(log(real)) - mean_all(log(1.0 - fake))


def cgan_g_adv_loss(fake_scores: Tensor) -> Tensor:
    """Non-saturating generator term: -mean(log D(x, G(x)))."""
    fake = clip(fake_scores, PROB_EPS, 1.0 - PROB_EPS)
    return -mean_all(log(fake))


def dice_discount(y: Tensor, g: Tensor, cfg: LossConfig = LossConfig()) -> float:
    """Soft dice loss 1 - 2*sum(y*g) / (sum(y) + sum(g)), clamped to
    [beta_floor, 1]. Returned as a plain float: the discount multiplies the
    adversarial term but never backpropagates."""
    if y.shape != g.shape:
        raise ValueError(f"y {y.shape} and g {g.shape} must match")
    inter = float(np.sum(y.data * g.data))
    total = float(np.sum(y.data) + np.sum(g.data))
    raw = 1.0 - 2.0 * inter / total if total > 0 else 1.0
    return float(np.clip(raw, cfg.beta_floor, 1.0))


def _dice_discount_tensor(y: Tensor, g: Tensor, cfg: LossConfig) -> Tensor:
    """Differentiable variant used when beta_detached is off."""
    inter = sum_all(g * y.data)
    total = float(np.sum(y.data)) + sum_all(g)
    return clip(1.0 - 2.0 * inter / total, cfg.beta_floor, 1.0)


def generator_objective(
    x: Tensor,
    y: Tensor,
    generator,
    discriminator,
    cfg: LossConfig = LossConfig(),
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, dict]:
    """beta * L_adv + lambda * L_focal for one batch, plus diagnostics.

    The generator runs first; its probabilities feed both the discriminator
    (for the adversarial term) and the focal loss.
    """
    g_probs = generator.forward(x, mode, rng)
    _check_one_hot(y)
    if cfg.beta_detached:
        beta = dice_discount(y, g_probs, cfg)
    else:
        beta = _dice_discount_tensor(y, g_probs, cfg)
    fake_scores = discriminator.forward(x, g_probs, mode)
    adv = cgan_g_adv_loss(fake_scores)
    focal = focal_loss(g_probs, y, cfg)
    total = adv * beta + focal * cfg.lambda_focal
    diagnostics = {
        "beta": float(beta) if isinstance(beta, float) else float(beta.data),
        "g_adv": float(adv.data),
        "focal": float(focal.data),
        "total": float(total.data),
    }
    return total, diagnostics
