"""Warmup + cosine learning-rate schedule.

Epochs below the warmup count ramp linearly from `lr_start` toward the
peak; from the end of warmup the rate follows a half cosine down to
`lr_peak * lr_final_fraction` at the last epoch. Both anchor epochs (end
of warmup, final epoch) are computed exactly rather than through the
cosine expression, so tests can compare with `==`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScheduleConfig:
    total_epochs: int = 50
    warmup_epochs: int = 3
    lr_peak: float = 0.01
    lr_start: float = 0.0
    lr_final_fraction: float = 0.01

    def __post_init__(self) -> None:
        if self.total_epochs < 1:
            raise ValueError("total_epochs must be at least 1")
        if not 0 <= self.warmup_epochs < self.total_epochs:
            raise ValueError(
                "warmup_epochs must satisfy 0 <= warmup < total_epochs"
            )
        if self.lr_peak <= 0:
            raise ValueError("lr_peak must be positive")
        if not 0 <= self.lr_start <= self.lr_peak:
            raise ValueError("lr_start must lie in [0, lr_peak]")
        if not 0 < self.lr_final_fraction <= 1:
            raise ValueError("lr_final_fraction must lie in (0, 1]")

    @property
    def final_lr(self) -> float:
        return self.lr_peak * self.lr_final_fraction


def lr_at(epoch: int, cfg: ScheduleConfig = ScheduleConfig()) -> float:
    """Learning rate for an integer epoch in [0, total_epochs)."""
    if not 0 <= epoch < cfg.total_epochs:
        raise ValueError(
            f"epoch must lie in [0, {cfg.total_epochs}), got {epoch}"
        )
    if epoch < cfg.warmup_epochs:
        return cfg.lr_start + (cfg.lr_peak - cfg.lr_start) * (
            epoch / cfg.warmup_epochs
        )
    if epoch == cfg.warmup_epochs:
        return cfg.lr_peak
    if epoch == cfg.total_epochs - 1:
        return cfg.final_lr
    span = cfg.total_epochs - 1 - cfg.warmup_epochs
    t = (epoch - cfg.warmup_epochs) / span
    return cfg.final_lr + (cfg.lr_peak - cfg.final_lr) / 2 * (
        1 + math.cos(math.pi * t)
    )


def emit_schedule(cfg: ScheduleConfig = ScheduleConfig()) -> list[tuple[int, float]]:
    """(epoch, lr) for every epoch of the run."""
    return [(e, lr_at(e, cfg)) for e in range(cfg.total_epochs)]


def schedule_csv(cfg: ScheduleConfig = ScheduleConfig()) -> str:
    """The full schedule as CSV text with an `epoch,lr` header."""
    lines = ["epoch,lr"]
    for e, lr in emit_schedule(cfg):
        lines.append(f"{e},{lr:.8f}")
    return "\n".join(lines) + "\n"
