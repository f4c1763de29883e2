"""Parameter registry, Adam updates, and the exponential learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor


class ParamSet:
    """Named trainable tensors plus their Adam moment estimates.

    The step counter is shared by every parameter in the set. Iteration order
    is registration order, which keeps updates and serialization
    deterministic.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        tensor.requires_grad = True
        tensor.name = name
        self._params[name] = tensor
        self._m[name] = np.zeros_like(tensor.data)
        self._v[name] = np.zeros_like(tensor.data)
        return tensor

    def __len__(self) -> int:
        return len(self._params)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def items(self):
        return self._params.items()

    def names(self) -> list[str]:
        return list(self._params)

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.grad = None

    def num_values(self) -> int:
        return sum(p.size for p in self._params.values())

    def values_dict(self) -> dict[str, np.ndarray]:
        """Copies of all parameter arrays, keyed by name."""
        return {name: p.data.copy() for name, p in self._params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        for name, p in self._params.items():
            if name not in values:
                raise KeyError(f"missing value for parameter {name!r}")
            arr = np.asarray(values[name])
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"parameter {name!r} expects shape {p.data.shape}, got {arr.shape}"
                )
            p.data = arr.astype(p.data.dtype, copy=True)


def adam_step(
    params: ParamSet,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update over every parameter in the set."""
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise ValueError(f"adam_step: missing gradients for {missing}")
    params.step += 1
    t = params.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, p in params.items():
        g = p.grad
        m = params._m[name] = beta1 * params._m[name] + (1.0 - beta1) * g
        v = params._v[name] = beta2 * params._v[name] + (1.0 - beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.data = (p.data - lr * update).astype(p.data.dtype)


@dataclass
class LrSchedule:
    """Exponential decay: rate(step) = initial * decay ** (step / decay_steps)."""

    initial_rate: float = 0.0005
    decay_rate: float = 0.96
    decay_steps: int = 300_000
    staircase: bool = False

    def __post_init__(self):
        if self.initial_rate <= 0:
            raise ValueError("initial_rate must be > 0")
        if not 0.0 < self.decay_rate <= 1.0:
            raise ValueError("decay_rate must be in (0, 1]")
        if self.decay_steps <= 0:
            raise ValueError("decay_steps must be > 0")

    def rate(self, step: int) -> float:
        if step < 0:
            raise ValueError("step must be >= 0")
        exponent = step / self.decay_steps
        if self.staircase:
            exponent = float(int(exponent))
        return self.initial_rate * self.decay_rate**exponent


def lr_at_step(schedule: LrSchedule, step: int) -> float:
    return schedule.rate(step)
