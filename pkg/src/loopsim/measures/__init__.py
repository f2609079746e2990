"""Gain measures, LZ78 bit accounting, and the axiom audit harness."""

from .audit import (
    AuditReport,
    Counterexample,
    audit_lz_dictionary_reuse,
    audit_measure,
    audit_skl_pairs,
    default_sampler,
    random_distribution,
    replay_counterexample,
)
from .core import (
    MeasureKind,
    MeasureSpec,
    SupportMismatchError,
    UnknownTagError,
    combine_measures,
    compression_gain,
    compression_gain_measure,
    declared_gain,
    declared_measure,
    fisher_gain,
    fisher_measure,
    length_gain,
    length_measure,
    power_gain,
    power_measure,
    raw_bits,
    symmetrised_kl,
    unit_floor_gain,
)
from .lz78 import Lz78Parse, index_bits, lz78_decode, lz78_parse

__all__ = [
    "AuditReport",
    "Counterexample",
    "Lz78Parse",
    "MeasureKind",
    "MeasureSpec",
    "SupportMismatchError",
    "UnknownTagError",
    "audit_lz_dictionary_reuse",
    "audit_measure",
    "audit_skl_pairs",
    "combine_measures",
    "compression_gain",
    "compression_gain_measure",
    "declared_gain",
    "declared_measure",
    "default_sampler",
    "fisher_gain",
    "fisher_measure",
    "index_bits",
    "length_gain",
    "length_measure",
    "lz78_decode",
    "lz78_parse",
    "power_gain",
    "power_measure",
    "random_distribution",
    "raw_bits",
    "replay_counterexample",
    "symmetrised_kl",
    "unit_floor_gain",
]
