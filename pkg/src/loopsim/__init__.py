"""loopsim: simulation toolkit for self-referential feedback loops.

A seeded channel turns self-referential noise into symbol sequences, a
pluggable gain measure scores each emission, and an update rule folds it back
into a growing context. The package verifies threshold, boundedness, window,
multi-agent, and compute-cost behaviour of the resulting dynamics at desk
scale, with a batch CLI for scenarios, sweeps, and reports.
"""

from . import channel, cost, engine, measures, swarm
from .meanings import Meaning, concat, edit_distance

__version__ = "0.1.0"

__all__ = [
    "Meaning",
    "channel",
    "concat",
    "cost",
    "edit_distance",
    "engine",
    "measures",
    "swarm",
    "__version__",
]
