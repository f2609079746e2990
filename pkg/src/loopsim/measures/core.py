"""Information-gain measures over symbol sequences.

Every measure maps a Meaning to a nonnegative real, deterministically. The
symmetrised-KL measure is the one exception: it scores ordered pairs of finite
discrete distributions and is exposed as a standalone function plus a
MeasureSpec kind that only supports pair evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from ..meanings import Meaning, concat
from .lz78 import lz78_parse


class SupportMismatchError(ValueError):
    """The two distributions are not mutually absolutely continuous."""


class UnknownTagError(KeyError):
    """A declared-bonus evaluation met a meaning without a known tag."""


class MeasureKind(str, Enum):
    LENGTH = "LENGTH"
    COMPRESSION_GAIN = "COMPRESSION_GAIN"
    POWER_LAW = "POWER_LAW"
    SKL = "SKL"
    FISHER = "FISHER"
    DECLARED_BONUS = "DECLARED_BONUS"
    LINEAR_COMBO = "LINEAR_COMBO"


def length_gain(m: Meaning) -> float:
    return float(len(m))


def raw_bits(m: Meaning, alphabet_size: int = 2) -> int:
    """Uncoded size in bits: one symbol costs ceil(log2 |alphabet|) bits."""
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be at least 2")
    return len(m) * (alphabet_size - 1).bit_length()


def compression_gain(m: Meaning, alphabet_size: int = 2) -> float:
    """Raw bit-length minus LZ78 coded bits, clamped at zero."""
    return float(max(0, raw_bits(m, alphabet_size) - lz78_parse(m).coded_bits))


def unit_floor_gain(m: Meaning, alphabet_size: int = 2) -> float:
    """compression_gain with a floor of 1 on non-empty input.

    Opt-in wrapper for scenarios that need every non-empty emission to score
    at least one bit; short or incompressible strings otherwise score 0.
    """
    if m.is_empty:
        return 0.0
    return max(1.0, compression_gain(m, alphabet_size))


def power_gain(m: Meaning, exponent: float) -> float:
    """len(m) ** exponent for exponent > 1."""
    if exponent <= 1.0:
        raise ValueError("power-law exponent must exceed 1")
    return float(len(m)) ** exponent


def fisher_gain(m: Meaning, theta0: float) -> float:
    """Squared score norm of an i.i.d. Bernoulli(theta) model, evaluated at theta0.

    Each '1' contributes 1/theta0 to the score, each '0' contributes
    -1/(1-theta0); the result is the square of the summed score. Scores of
    opposite sign cancel, so this measure is deliberately not super-additive.
    """
    if not 0.0 < theta0 < 1.0:
        raise ValueError("theta0 must lie in (0, 1)")
    score = 0.0
    up = 1.0 / theta0
    down = 1.0 / (1.0 - theta0)
    for ch in m.symbols:
        if ch == "1":
            score += up
        elif ch == "0":
            score -= down
        else:
            raise ValueError(f"fisher gain needs binary symbols, got {ch!r}")
    return score * score


def symmetrised_kl(p: Mapping[object, float], q: Mapping[object, float]) -> float:
    """0.5 * [KL(p||q) + KL(q||p)] in nats for finite discrete distributions.

    Raises SupportMismatchError when the supports differ (the divergence would
    be infinite); measures stay real-valued by contract.
    """
    _check_distribution(p)
    _check_distribution(q)
    support_p = {x for x, w in p.items() if w > 0.0}
    support_q = {x for x, w in q.items() if w > 0.0}
    if support_p != support_q:
        raise SupportMismatchError("distributions must share their support")
    total = 0.0
    for x in support_p:
        px, qx = p[x], q[x]
        total += 0.5 * (px * math.log(px / qx) + qx * math.log(qx / px))
    return max(0.0, total)


def _check_distribution(dist: Mapping[object, float]) -> None:
    if not dist:
        raise ValueError("empty distribution")
    weight = 0.0
    for w in dist.values():
        if w < 0.0:
            raise ValueError("negative probability")
        weight += w
    if abs(weight - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {weight!r}, not 1")


def declared_gain(
    meanings: Meaning | Sequence[Meaning],
    bases: Mapping[str, float],
    bonus: Mapping[tuple[str, str], float] | None = None,
) -> float:
    """Gain of tagged meanings under a declared bonus table.

    A single meaning scores its declared base gain. A concatenation of k >= 2
    tagged meanings scores (1 + b) * sum of bases, where b is the mean bonus
    over all ordered pairs of distinct tags present. For a pair with a
    symmetric table this is exactly (1 + beta_ij) * (base_i + base_j).
    Untagged empty meanings encode the null message and contribute nothing.
    """
    if isinstance(meanings, Meaning):
        meanings = [meanings]
    meanings = [m for m in meanings if not (m.tag is None and m.is_empty)]
    if not meanings:
        return 0.0
    bonus = bonus or {}
    for pair, value in bonus.items():
        if value < 0.0:
            raise ValueError(f"bonus for {pair} must be nonnegative")
    tags = []
    base_sum = 0.0
    for m in meanings:
        if m.tag is None or m.tag not in bases:
            raise UnknownTagError(m.tag)
        tags.append(m.tag)
        base_sum += bases[m.tag]
    if len(tags) == 1:
        return base_sum
    pair_bonuses = [
        bonus.get((a, b), 0.0) for a in tags for b in tags if a != b
    ]
    mean_bonus = sum(pair_bonuses) / len(pair_bonuses) if pair_bonuses else 0.0
    return (1.0 + mean_bonus) * base_sum


@dataclass(frozen=True)
class MeasureSpec:
    """A pluggable gain measure with its declared Lipschitz constant.

    ``lipschitz_bound`` is None when unknown; the audit then reports worst
    observed ratios instead of counting violations.
    """

    kind: MeasureKind
    exponent: float | None = None
    theta0: float | None = None
    bases: Mapping[str, float] | None = None
    bonus: Mapping[tuple[str, str], float] | None = None
    combo: tuple[float, "MeasureSpec", float, "MeasureSpec"] | None = None
    alphabet_size: int = 2
    lipschitz_bound: float | None = None

    def evaluate(self, m: Meaning) -> float:
        if self.kind is MeasureKind.LENGTH:
            return length_gain(m)
        if self.kind is MeasureKind.COMPRESSION_GAIN:
            return compression_gain(m, self.alphabet_size)
        if self.kind is MeasureKind.POWER_LAW:
            return power_gain(m, self.exponent)
        if self.kind is MeasureKind.FISHER:
            return fisher_gain(m, self.theta0)
        if self.kind is MeasureKind.DECLARED_BONUS:
            return declared_gain(m, self.bases, self.bonus)
        if self.kind is MeasureKind.LINEAR_COMBO:
            a, s1, b, s2 = self.combo
            return a * s1.evaluate(m) + b * s2.evaluate(m)
        raise ValueError(f"{self.kind.value} does not evaluate single meanings")

    def evaluate_concat(self, m1: Meaning, m2: Meaning) -> float:
        """Gain of the concatenation m1 || m2 (tag-aware for declared bonus)."""
        if self.kind is MeasureKind.DECLARED_BONUS:
            return declared_gain([m1, m2], self.bases, self.bonus)
        return self.evaluate(concat(m1, m2))

    def evaluate_length(self, n: float) -> float:
        """Arithmetic evaluation from a meaning length alone.

        Only length-based kinds support this; it is what ABSTRACT-mode runs
        use instead of materialising symbols.
        """
        if self.kind is MeasureKind.LENGTH:
            return float(n)
        if self.kind is MeasureKind.POWER_LAW:
            if self.exponent <= 1.0:
                raise ValueError("power-law exponent must exceed 1")
            return float(n) ** self.exponent
        if self.kind is MeasureKind.LINEAR_COMBO:
            a, s1, b, s2 = self.combo
            return a * s1.evaluate_length(n) + b * s2.evaluate_length(n)
        raise ValueError(f"{self.kind.value} needs symbols, not just a length")

    @property
    def length_arithmetic(self) -> bool:
        if self.kind in (MeasureKind.LENGTH, MeasureKind.POWER_LAW):
            return True
        if self.kind is MeasureKind.LINEAR_COMBO:
            a, s1, b, s2 = self.combo
            return s1.length_arithmetic and s2.length_arithmetic
        return False


def length_measure() -> MeasureSpec:
    return MeasureSpec(MeasureKind.LENGTH, lipschitz_bound=1.0)


def compression_gain_measure(alphabet_size: int = 2) -> MeasureSpec:
    return MeasureSpec(
        MeasureKind.COMPRESSION_GAIN, alphabet_size=alphabet_size, lipschitz_bound=1.0
    )


def power_measure(exponent: float) -> MeasureSpec:
    if exponent <= 1.0:
        raise ValueError("power-law exponent must exceed 1")
    return MeasureSpec(MeasureKind.POWER_LAW, exponent=exponent)


def fisher_measure(theta0: float) -> MeasureSpec:
    if not 0.0 < theta0 < 1.0:
        raise ValueError("theta0 must lie in (0, 1)")
    return MeasureSpec(MeasureKind.FISHER, theta0=theta0)


def declared_measure(
    bases: Mapping[str, float],
    bonus: Mapping[tuple[str, str], float] | None = None,
) -> MeasureSpec:
    return MeasureSpec(MeasureKind.DECLARED_BONUS, bases=dict(bases), bonus=dict(bonus or {}))


def combine_measures(
    alpha: float, spec1: MeasureSpec, beta: float, spec2: MeasureSpec
) -> MeasureSpec:
    """Positive linear combination alpha*spec1 + beta*spec2.

    The combined Lipschitz bound is alpha*L1 + beta*L2 when both are known.
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("combination coefficients must be positive")
    bound = None
    if spec1.lipschitz_bound is not None and spec2.lipschitz_bound is not None:
        bound = alpha * spec1.lipschitz_bound + beta * spec2.lipschitz_bound
    return MeasureSpec(
        MeasureKind.LINEAR_COMBO,
        combo=(alpha, spec1, beta, spec2),
        lipschitz_bound=bound,
    )
