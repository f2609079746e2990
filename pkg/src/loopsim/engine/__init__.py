"""Single-agent recursion: state, update rules, trajectories, and verifiers."""

from .checks import (
    BoundedReport,
    BracketError,
    BurstReport,
    DriftReport,
    GammaStarEstimate,
    NoCrossingError,
    PreconditionError,
    RuleMismatchError,
    burst_stats,
    divergence_time_bound,
    epsilon_star,
    estimate_gamma_star,
    verify_bounded,
    verify_drift,
)
from .core import (
    CSV_HEADER,
    EVENT_BUDGET_FROZEN,
    EVENT_BURST_HIT_W,
    EVENT_CROSSED_GAMMA,
    EVENT_FIXED_POINT,
    EVENT_MASKED,
    AbstractModeError,
    BudgetGate,
    ContextState,
    Mode,
    RunConfig,
    StepRecord,
    SublinearKind,
    Trajectory,
    UpdateKind,
    UpdateRuleSpec,
    delta_monotone,
    detect_fixed_point,
    event_names,
    run,
    step,
    windowed,
)
from .prototype import PrototypeMode, run_prototype

__all__ = [
    "AbstractModeError",
    "BoundedReport",
    "BracketError",
    "BudgetGate",
    "BurstReport",
    "CSV_HEADER",
    "ContextState",
    "DriftReport",
    "EVENT_BUDGET_FROZEN",
    "EVENT_BURST_HIT_W",
    "EVENT_CROSSED_GAMMA",
    "EVENT_FIXED_POINT",
    "EVENT_MASKED",
    "GammaStarEstimate",
    "Mode",
    "NoCrossingError",
    "PreconditionError",
    "PrototypeMode",
    "RuleMismatchError",
    "RunConfig",
    "StepRecord",
    "SublinearKind",
    "Trajectory",
    "UpdateKind",
    "UpdateRuleSpec",
    "burst_stats",
    "delta_monotone",
    "detect_fixed_point",
    "divergence_time_bound",
    "epsilon_star",
    "estimate_gamma_star",
    "event_names",
    "run",
    "run_prototype",
    "step",
    "verify_bounded",
    "verify_drift",
    "windowed",
]
