"""Per-step compute cost as a function of context size.

FULL attention costs alpha_attn * n^2 + alpha_ffn * n floating-point
operations for a context of n token-equivalent units. LOW_RANK replaces the
quadratic term with alpha_attn_r * r * n for a fixed rank r; LOG_RANK
recomputes the rank per step as ceil(log_coeff * log n), the regime where
cumulative compute stays polynomial while the context still diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class CostVariant(str, Enum):
    FULL = "FULL"
    LOW_RANK = "LOW_RANK"
    LOG_RANK = "LOG_RANK"


@dataclass(frozen=True)
class CostModel:
    """Scenario-supplied cost coefficients; d_model is informational only."""

    alpha_attn: float = 1.0
    alpha_ffn: float = 1.0
    variant: CostVariant = CostVariant.FULL
    rank: int = 1
    alpha_attn_r: float = 1.0
    log_coeff: float = 1.0
    d_model: int = 0

    def __post_init__(self) -> None:
        if self.alpha_attn <= 0.0 or self.alpha_ffn <= 0.0 or self.alpha_attn_r <= 0.0:
            raise ValueError("cost coefficients must be strictly positive")
        if self.variant is CostVariant.LOW_RANK and self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.variant is CostVariant.LOG_RANK and self.log_coeff <= 0.0:
            raise ValueError("log_coeff must be positive")


def effective_rank(norm: float, model: CostModel) -> int:
    if model.variant is CostVariant.LOW_RANK:
        return model.rank
    if model.variant is CostVariant.LOG_RANK:
        return max(1, math.ceil(model.log_coeff * math.log(max(norm, 1.0))))
    raise ValueError("rank is only defined for low-rank variants")


def flops_at(norm: float, model: CostModel) -> float:
    """Instantaneous cost of one step on a context of the given size."""
    if norm < 0.0:
        raise ValueError("norm must be nonnegative")
    if norm == 0.0:
        return 0.0
    if model.variant is CostVariant.FULL:
        return model.alpha_attn * norm * norm + model.alpha_ffn * norm
    return model.alpha_attn_r * effective_rank(norm, model) * norm + model.alpha_ffn * norm


def validate_log_rank(model: CostModel, delta: float, eps: float, gamma: float) -> None:
    """Config-time check for the polynomial-compute regime: c < delta*(1-eps)/gamma."""
    if model.variant is not CostVariant.LOG_RANK:
        return
    limit = delta * (1.0 - eps) / gamma
    if not model.log_coeff < limit:
        raise ValueError(
            f"log_coeff {model.log_coeff!r} must stay below delta*(1-eps)/gamma = {limit!r}"
        )


@dataclass(frozen=True)
class QuadraticBoundReport:
    constant: float
    passed: bool
    smallest_failing_norm: float | None
    largest_admissible: float


def check_quadratic_bound(model: CostModel, c: float, norms) -> QuadraticBoundReport:
    """Check flops(n) >= c * n^2 over the sampled norms (FULL variant only)."""
    if model.variant is not CostVariant.FULL:
        raise ValueError("the quadratic lower bound applies to the FULL variant only")
    if c <= 0.0:
        raise ValueError("the bound constant must be positive")
    failing = None
    admissible = math.inf
    for n in sorted(float(x) for x in norms):
        if n <= 0.0:
            continue
        f = flops_at(n, model)
        admissible = min(admissible, f / (n * n))
        if f < c * n * n and failing is None:
            failing = n
    if admissible is math.inf:
        admissible = model.alpha_attn
    return QuadraticBoundReport(
        constant=c,
        passed=failing is None,
        smallest_failing_norm=failing,
        largest_admissible=admissible,
    )


GROWTH_QUADRATIC = "QUADRATIC"
GROWTH_LINEAR = "LINEAR"
GROWTH_FLAT = "FLAT"


@dataclass(frozen=True)
class ComputeReport:
    instantaneous: np.ndarray
    cumulative: np.ndarray
    slope: float
    classification: str

    def as_dict(self) -> dict:
        return {
            "total_flops": float(self.cumulative[-1]) if len(self.cumulative) else 0.0,
            "slope": self.slope,
            "classification": self.classification,
        }


def cumulative_compute(
    norms, model: CostModel, fit_window: tuple[int, int] = (100, 10_000)
) -> ComputeReport:
    """Cumulative cost along a norm series plus a log-log growth classification.

    ``norms`` is an array of per-step context sizes (a Trajectory's ``norms``
    attribute is used when present). The slope of log flops(t) against log t
    over the fit window classifies growth: about 2 for FULL attention on a
    linearly diverging context, about 1 for bounded-rank attention, and about
    0 for frozen or capped runs.
    """
    series = np.asarray(getattr(norms, "norms", norms), dtype=float)
    inst = np.array([flops_at(max(n, 0.0), model) for n in series])
    cum = np.cumsum(inst)

    lo, hi = fit_window
    t = np.arange(len(inst))
    window = (t >= max(lo, 1)) & (t <= hi) & (inst > 0.0)
    if window.sum() >= 2:
        slope = float(np.polyfit(np.log(t[window]), np.log(inst[window]), 1)[0])
    else:
        slope = 0.0
    if slope >= 1.5:
        label = GROWTH_QUADRATIC
    elif slope >= 0.5:
        label = GROWTH_LINEAR
    else:
        label = GROWTH_FLAT
    return ComputeReport(inst, cum, slope, label)
