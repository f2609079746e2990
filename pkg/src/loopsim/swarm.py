"""Coupled feedback loops: broadcast gains, schedules, drift-matrix analysis.

Every agent produces and broadcasts a tagged meaning each tick; the schedule
only gates who updates. Under the declared-bonus measure with constant base
gains (STATIC mode) an active agent's increment is exactly
delta * (1 + mean bonus) * k * base, the sharp equality case of the
collective-gain bounds. RELAY mode instead re-broadcasts each agent's
previous realized increment as its base gain, which reproduces the
drift-matrix recursion increment(t) = D increment(t-1) in expectation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import derive_seed
from .meanings import Meaning
from .measures import declared_gain


class Schedule(str, Enum):
    SYNCHRONOUS = "SYNCHRONOUS"
    BERNOULLI_ASYNC = "BERNOULLI_ASYNC"


class GainMode(str, Enum):
    STATIC = "STATIC"
    RELAY = "RELAY"


class ConvergenceError(RuntimeError):
    """Power iteration did not settle; carries the partial estimate."""

    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SwarmSpec:
    k: int
    beta: np.ndarray
    lam: np.ndarray
    schedule: Schedule = Schedule.SYNCHRONOUS
    base_gain: float = 1.0
    delta: float = 1.0
    gamma: float = 1.0
    gain_mode: GainMode = GainMode.STATIC

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("a swarm needs at least two agents")
        beta = np.asarray(self.beta, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "lam", lam)
        if beta.shape != (self.k, self.k):
            raise ValueError(f"beta must be {self.k}x{self.k}")
        if np.any(np.diag(beta) != 0.0):
            raise ValueError("beta must have a zero diagonal")
        if np.any(beta < 0.0):
            raise ValueError("beta entries must be nonnegative")
        if lam.shape != (self.k,):
            raise ValueError(f"lam must have {self.k} entries")
        if np.any((lam <= 0.0) | (lam > 1.0)):
            raise ValueError("activity rates must lie in (0, 1]")
        if self.base_gain <= 0.0:
            raise ValueError("base_gain must be positive")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")

    @property
    def mean_bonus(self) -> float:
        """Mean off-diagonal bonus (the averaged-complementarity factor)."""
        k = self.k
        return float(self.beta.sum() / (k * (k - 1)))

    @property
    def uniform_bonus(self) -> float | None:
        off = self.beta[~np.eye(self.k, dtype=bool)]
        return float(off[0]) if np.all(off == off[0]) else None

    def tags(self) -> list[str]:
        return [str(i) for i in range(self.k)]

    def broadcast_gain(self) -> float:
        """Declared gain of the full k-fold broadcast at unit activity."""
        bases = {tag: self.base_gain for tag in self.tags()}
        bonus = {
            (str(i), str(j)): float(self.beta[i, j])
            for i in range(self.k) for j in range(self.k) if i != j
        }
        meanings = [Meaning("", tag=tag) for tag in self.tags()]
        return declared_gain(meanings, bases, bonus)


def activity_matrix(spec: SwarmSpec, horizon: int, seed: int) -> np.ndarray:
    """Boolean (horizon, k) update-participation draws."""
    if spec.schedule is Schedule.SYNCHRONOUS:
        return np.ones((horizon, spec.k), dtype=bool)
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "activity")))
    return rng.random((horizon, spec.k)) < spec.lam


def swarm_step(
    norms: np.ndarray,
    active: np.ndarray,
    spec: SwarmSpec,
    bases: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One broadcast tick: returns (new norms, per-agent increments).

    ``bases`` are the broadcast base gains this tick (constant in STATIC
    mode, the previous increments in RELAY mode). Inactive agents add zero.

    This is the closed-form arithmetic; run_swarm routes its STATIC gains
    through the declared-bonus measure instead, and the two must agree.
    """
    if spec.gain_mode is GainMode.STATIC:
        gain = (1.0 + spec.mean_bonus) * float(bases.sum())
        increments = np.where(active, spec.delta * gain, 0.0)
    else:
        one_plus = 1.0 + spec.beta
        np.fill_diagonal(one_plus, 0.0)
        gains = one_plus @ bases
        increments = np.where(active, spec.delta * gains, 0.0)
    return norms + increments, increments


@dataclass
class SwarmTrajectory:
    spec: SwarmSpec
    seed: int
    norm: np.ndarray          # (k, steps + 1) state norms
    delta: np.ndarray         # (k, steps) per-agent increments
    active: np.ndarray        # (k, steps) participation
    solo_delta: np.ndarray    # (steps,) isolated-agent reference increments

    @property
    def steps(self) -> int:
        return self.delta.shape[1]

    @property
    def collective(self) -> np.ndarray:
        """Per-step collective increment (sum over agents)."""
        return self.delta.sum(axis=0)

    def first_crossing(self, level: float) -> int | None:
        above = np.nonzero((self.norm > level).any(axis=0))[0]
        return int(above[0]) if len(above) else None

    def write_agent_csv(self, agent: int, out) -> None:
        out.write("t,norm,omega,delta,active\n")
        for t in range(self.steps):
            out.write(
                f"{t},{self.norm[agent, t]:.12g},"
                f"{self.delta[agent, t] / self.spec.delta:.12g},"
                f"{self.delta[agent, t]:.12g},{int(self.active[agent, t])}\n"
            )

    def write_collective_csv(self, out) -> None:
        out.write("t,sum_delta,active_count\n")
        collective = self.collective
        counts = self.active.sum(axis=0)
        for t in range(self.steps):
            out.write(f"{t},{collective[t]:.12g},{int(counts[t])}\n")


def run_swarm(spec: SwarmSpec, horizon: int, seed: int = 0) -> SwarmTrajectory:
    """Iterate the broadcast coupling, alongside an isolated reference agent.

    The solo reference updates every tick on its own meaning alone, so its
    increment is delta * base_gain.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    k = spec.k
    active = activity_matrix(spec, horizon, seed)
    norm = np.zeros((k, horizon + 1))
    delta = np.zeros((k, horizon))

    if spec.gain_mode is GainMode.STATIC:
        gain = spec.broadcast_gain()
        increments_if_active = np.full(k, spec.delta * gain)
        for t in range(horizon):
            inc = np.where(active[t], increments_if_active, 0.0)
            delta[:, t] = inc
            norm[:, t + 1] = norm[:, t] + inc
    else:
        one_plus = 1.0 + spec.beta
        np.fill_diagonal(one_plus, 0.0)
        bases = np.full(k, spec.base_gain)
        for t in range(horizon):
            gains = one_plus @ bases
            inc = np.where(active[t], spec.delta * gains, 0.0)
            delta[:, t] = inc
            norm[:, t + 1] = norm[:, t] + inc
            bases = inc
    solo = np.full(horizon, spec.delta * spec.base_gain)
    return SwarmTrajectory(spec=spec, seed=seed, norm=norm, delta=delta,
                           active=active.T, solo_delta=solo)


@dataclass(frozen=True)
class AgentGainCheck:
    agent: int
    mean_delta: float
    bound: float
    margin_sigmas: float
    ok: bool


@dataclass(frozen=True)
class CollectiveGainReport:
    bonus_factor: float
    uniform: bool
    per_agent: tuple[AgentGainCheck, ...]
    collective_mean: float
    collective_bound: float
    collective_ok: bool
    solo_mean: float

    @property
    def passed(self) -> bool:
        return self.collective_ok and all(a.ok for a in self.per_agent)


def check_collective_gain(traj: SwarmTrajectory, spec: SwarmSpec) -> CollectiveGainReport:
    """One-sided comparison of observed increments against the swarm bounds.

    Uniform-bonus runs are held to (1 + beta) * k * solo (scaled by the
    activity rate under the Bernoulli schedule); non-uniform runs to the
    averaged-bonus form. Each comparison allows five standard errors of
    Monte-Carlo slack.
    """
    uniform = spec.uniform_bonus
    factor_bonus = uniform if uniform is not None else spec.mean_bonus
    solo_mean = float(traj.solo_delta.mean())
    async_mode = spec.schedule is Schedule.BERNOULLI_ASYNC

    checks = []
    bounds_sum = 0.0
    for i in range(spec.k):
        rate = float(spec.lam[i]) if async_mode else 1.0
        bound = rate * (1.0 + factor_bonus) * spec.k * solo_mean
        samples = traj.delta[i]
        mean = float(samples.mean())
        se = float(samples.std(ddof=1)) / math.sqrt(len(samples)) if len(samples) > 1 else 0.0
        slack = max(5.0 * se, 1e-9)
        sigmas = (mean - bound) / se if se > 0.0 else math.inf
        checks.append(AgentGainCheck(i, mean, bound, float(sigmas), mean >= bound - slack))
        bounds_sum += bound

    collective = traj.collective
    collective_mean = float(collective.mean())
    se = float(collective.std(ddof=1)) / math.sqrt(len(collective)) if len(collective) > 1 else 0.0
    collective_ok = collective_mean >= bounds_sum - max(5.0 * se, 1e-9)

    return CollectiveGainReport(
        bonus_factor=factor_bonus, uniform=uniform is not None,
        per_agent=tuple(checks), collective_mean=collective_mean,
        collective_bound=bounds_sum, collective_ok=bool(collective_ok),
        solo_mean=solo_mean,
    )


@dataclass
class DriftMatrix:
    entries: np.ndarray
    spectral_radius_value: float | None = None

    def to_json(self, tol: float | None = None, **dump_kwargs) -> str:
        doc = {
            "entries": self.entries.tolist(),
            "spectral_radius": self.spectral_radius_value,
            "tolerance": tol,
        }
        return json.dumps(doc, **dump_kwargs)


def build_drift_matrix(spec: SwarmSpec) -> DriftMatrix:
    """Entries lam_i * (1 + beta_ij) off the diagonal, zero on it."""
    entries = spec.lam[:, None] * (1.0 + spec.beta)
    np.fill_diagonal(entries, 0.0)
    return DriftMatrix(entries=entries)


def spectral_radius(matrix: DriftMatrix | np.ndarray, tol: float = 1e-12,
                    max_iters: int = 100_000) -> float:
    """Dominant-eigenvalue magnitude of a nonnegative matrix by power iteration.

    Iterates on D + I so sign-alternating dominant pairs still converge (the
    shift moves every eigenvalue of a nonnegative matrix up by exactly one).
    Convergence is successive Rayleigh quotients within tol.
    """
    entries = matrix.entries if isinstance(matrix, DriftMatrix) else np.asarray(matrix, float)
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if np.any(entries < 0.0):
        raise ValueError("the drift matrix must be nonnegative")
    k = entries.shape[0]
    shifted = entries + np.eye(k)
    x = np.full(k, 1.0 / math.sqrt(k))
    rayleigh = 0.0
    for _ in range(max_iters):
        y = shifted @ x
        new_rayleigh = float(x @ y)
        y_norm = float(np.linalg.norm(y))
        x = y / y_norm
        if abs(new_rayleigh - rayleigh) <= tol:
            value = max(0.0, new_rayleigh - 1.0)
            if value < tol:  # sub-tolerance noise from the unit shift
                value = 0.0
            if isinstance(matrix, DriftMatrix):
                matrix.spectral_radius_value = value
            return value
        rayleigh = new_rayleigh
    raise ConvergenceError(
        f"power iteration did not converge within {max_iters} iterations",
        partial=max(0.0, rayleigh - 1.0),
    )


@dataclass(frozen=True)
class DivergenceReport:
    rho: float
    crossed: bool
    crossing_step: int | None
    slope: float | None
    expected_slope: float
    growth_ok: bool | None

    @property
    def flagged_divergent(self) -> bool:
        return self.rho > 1.0 and self.crossed


def predict_and_verify_divergence(
    spec: SwarmSpec, horizon: int, seed: int = 0, slope_tol: float = 0.05
) -> DivergenceReport:
    """Compare a swarm run against its drift-matrix prediction.

    For spectral radius above one the report checks that the increment-vector
    norm grows at least geometrically at that rate (log-linear fit, one
    sided); at or below one it only reports what happened, since no growth
    guarantee applies there.
    """
    drift = build_drift_matrix(spec)
    rho = spectral_radius(drift)
    traj = run_swarm(spec, horizon, seed)
    crossing = traj.first_crossing(spec.gamma)

    norms = np.linalg.norm(traj.delta, axis=0)
    positive = norms > 0.0
    slope = None
    growth_ok = None
    if positive.sum() >= 2:
        t = np.arange(len(norms))[positive]
        slope = float(np.polyfit(t, np.log(norms[positive]), 1)[0])
        if rho > 1.0:
            growth_ok = slope >= math.log(rho) - slope_tol
    return DivergenceReport(
        rho=rho, crossed=crossing is not None, crossing_step=crossing,
        slope=slope, expected_slope=math.log(rho) if rho > 0 else -math.inf,
        growth_ok=growth_ok,
    )
