"""Self-referential noise channels.

A channel turns a seeded noise draw plus the current context into the next
emitted meaning. All randomness is derived from the channel seed through
keyed hashes or counter-addressable generators, so identical (spec, previous
output, step) always reproduce the same meaning, across processes:

  * noise symbols  <- blake2b keyed by (seed, "noise"), data (digest(prev), t)
  * mask valve     <- PCG64 stream keyed by (seed, "mask"), indexed by t

Temperature only matters through the deterministic/stochastic dichotomy:
at temperature 0 the noise source is the all-zero string (zero entropy),
at any positive temperature the symbols are i.i.d. uniform bits.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .meanings import Meaning

_EPS_CEILING = 1.0 - 1e-9
_TAG_DIGEST_BITS = 16


def derive_seed(seed: int, *labels: object) -> int:
    """Stable 64-bit sub-seed for an independent named stream."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little")


class ScheduleKind(str, Enum):
    CONSTANT = "CONSTANT"
    POWER_LAW = "POWER_LAW"


@dataclass(frozen=True)
class EpsilonSchedule:
    """Per-step masking rate, constant or decaying as eps0 + kappa * t**-alpha."""

    eps0: float = 0.0
    kappa: float = 0.0
    alpha_decay: float = 1.0
    kind: ScheduleKind = ScheduleKind.CONSTANT

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps0 < 1.0:
            raise ValueError("eps0 must lie in [0, 1)")
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")
        if self.alpha_decay <= 0.0:
            raise ValueError("alpha_decay must be positive")
        if self.kind is ScheduleKind.POWER_LAW and self.eps0 + self.kappa >= 1.0:
            raise ValueError("eps0 + kappa must stay below 1 (rate at t = 1)")

    @property
    def is_zero(self) -> bool:
        return self.eps0 == 0.0 and (
            self.kind is ScheduleKind.CONSTANT or self.kappa == 0.0
        )


def constant_mask(eps0: float = 0.0) -> EpsilonSchedule:
    return EpsilonSchedule(eps0=eps0)


def power_law_mask(eps0: float, kappa: float, alpha_decay: float) -> EpsilonSchedule:
    return EpsilonSchedule(eps0, kappa, alpha_decay, ScheduleKind.POWER_LAW)


def epsilon_at(t: int, sched: EpsilonSchedule) -> float:
    """Masking rate at step t. POWER_LAW is defined for t >= 1."""
    if sched.kind is ScheduleKind.CONSTANT:
        return sched.eps0
    if t < 1:
        raise ValueError("power-law schedules start at t = 1")
    return min(sched.eps0 + sched.kappa * float(t) ** -sched.alpha_decay, _EPS_CEILING)


def epsilon_array(sched: EpsilonSchedule, horizon: int) -> np.ndarray:
    """epsilon_at evaluated for engine steps 0..horizon-1 (step 0 uses t = 1)."""
    if sched.kind is ScheduleKind.CONSTANT:
        return np.full(horizon, sched.eps0)
    t = np.maximum(np.arange(horizon, dtype=float), 1.0)
    return np.minimum(sched.eps0 + sched.kappa * t**-sched.alpha_decay, _EPS_CEILING)


class PsiKind(str, Enum):
    IDENTITY = "IDENTITY"
    TAGGED_INJECTIVE = "TAGGED_INJECTIVE"
    CONSTANT = "CONSTANT"
    GATED = "GATED"
    MIRROR = "MIRROR"
    DECAYING = "DECAYING"


@dataclass(frozen=True)
class ChannelSpec:
    """Noise source plus meaning operator plus injectivity regime.

    GATED emits gain_lo symbols while the context norm stays at or below
    gamma_true and gain_hi symbols above it (the constructible ground truth
    for threshold estimation). MIRROR emits as many symbols as the current
    context norm and DECAYING emits floor(decay_len * (t+1)**-decay_power)
    symbols; both are synthetic regimes for growth studies.
    """

    psi_kind: PsiKind = PsiKind.IDENTITY
    temperature: float = 1.0
    mask_rate: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    noise_len: int = 8
    seed: int = 0
    const_meaning: str = "111"
    gamma_true: float = 0.0
    gain_lo: int = 0
    gain_hi: int = 1
    decay_len: float = 0.0
    decay_power: float = 1.0

    def __post_init__(self) -> None:
        if self.temperature < 0.0:
            raise ValueError("temperature must be nonnegative")
        if self.noise_len < 1:
            raise ValueError("noise_len must be at least 1")
        if self.psi_kind is PsiKind.GATED:
            if self.gain_lo < 0 or self.gain_hi < 0:
                raise ValueError("gate gains must be nonnegative")
            if not self.gain_lo < self.gain_hi:
                raise ValueError("gain_lo must be below gain_hi")
        if self.psi_kind is PsiKind.CONSTANT and self.const_meaning.strip("01"):
            raise ValueError("const_meaning must be binary")
        if self.psi_kind is PsiKind.DECAYING and self.decay_len <= 0.0:
            raise ValueError("decay_len must be positive")

    @property
    def deterministic(self) -> bool:
        """True when every step is a fixed function of the previous context."""
        return self.temperature == 0.0 and self.mask_rate.is_zero


@dataclass(frozen=True)
class NoiseDraw:
    symbols: str
    source_t: int

    def __len__(self) -> int:
        return len(self.symbols)


def _noise_key(spec: ChannelSpec) -> bytes:
    return hashlib.blake2b(
        str(derive_seed(spec.seed, "noise")).encode(), digest_size=32
    ).digest()


def _bits(key: bytes, payload: bytes, count: int) -> str:
    chunks: list[str] = []
    produced = 0
    block = 0
    while produced < count:
        h = hashlib.blake2b(payload + block.to_bytes(4, "little"), key=key, digest_size=64)
        chunk = format(int.from_bytes(h.digest(), "big"), "0512b")
        chunks.append(chunk)
        produced += 512
        block += 1
    return "".join(chunks)[:count]


def meaning_digest(symbols: str, nbytes: int = 8) -> bytes:
    return hashlib.blake2b(symbols.encode(), digest_size=nbytes).digest()


def noise_from_digest(prev_digest: bytes, t: int, spec: ChannelSpec) -> NoiseDraw:
    """Noise draw keyed by a precomputed digest of the previous output."""
    if t < 0:
        raise ValueError("step index must be nonnegative")
    if spec.temperature == 0.0:
        return NoiseDraw("0" * spec.noise_len, t)
    payload = prev_digest + t.to_bytes(8, "little", signed=False)
    return NoiseDraw(_bits(_noise_key(spec), payload, spec.noise_len), t)


def draw_self_noise(prev: Meaning, t: int, spec: ChannelSpec) -> NoiseDraw:
    """Noise draw keyed by the agent's own previous output.

    Fresh entropy per step at positive temperature, the all-zero string at
    temperature 0; reproducible per (seed, prev, t) either way.
    """
    return noise_from_digest(meaning_digest(prev.symbols), t, spec)


def mask_stream(spec: ChannelSpec, horizon: int) -> np.ndarray:
    """Uniform coins u_0..u_{horizon-1} driving the masking valve."""
    rng = np.random.Generator(np.random.PCG64(derive_seed(spec.seed, "mask")))
    return rng.random(horizon)


def mask_u01(spec: ChannelSpec, t: int) -> float:
    """The t-th masking coin, addressed without generating the prefix."""
    bg = np.random.PCG64(derive_seed(spec.seed, "mask"))
    bg.advance(t)
    return float(np.random.Generator(bg).random())


def mask_fires(spec: ChannelSpec, t: int) -> bool:
    if spec.mask_rate.is_zero:
        return False
    return mask_u01(spec, t) < epsilon_at(max(t, 1), spec.mask_rate)


def _tile(symbols: str, length: int) -> str:
    if length <= 0:
        return ""
    reps = -(-length // len(symbols))
    return (symbols * reps)[:length]


def _context_fingerprint(c) -> str:
    source = getattr(c, "symbols", "") or repr(getattr(c, "norm", 0.0))
    digest = hashlib.blake2b(source.encode(), digest_size=_TAG_DIGEST_BITS // 8)
    return format(int.from_bytes(digest.digest(), "big"), f"0{_TAG_DIGEST_BITS}b")


def psi_output_length(spec: ChannelSpec, norm: float, t: int) -> int:
    """Length of the meaning this channel emits, before the masking valve.

    This is the arithmetic ABSTRACT-mode runs use instead of symbols.
    """
    kind = spec.psi_kind
    if kind is PsiKind.IDENTITY:
        return spec.noise_len
    if kind is PsiKind.TAGGED_INJECTIVE:
        return spec.noise_len + _TAG_DIGEST_BITS
    if kind is PsiKind.CONSTANT:
        return len(spec.const_meaning)
    if kind is PsiKind.GATED:
        return spec.gain_lo if norm <= spec.gamma_true else spec.gain_hi
    if kind is PsiKind.MIRROR:
        return max(1, int(norm))
    if kind is PsiKind.DECAYING:
        return int(spec.decay_len * float(t + 1) ** -spec.decay_power)
    raise ValueError(kind)


def apply_psi(n: NoiseDraw, c, spec: ChannelSpec, masked: bool | None = None) -> Meaning:
    """Map a noise draw and context to a meaning, then apply the masking valve.

    ``c`` needs ``norm`` and (for CONCRETE contexts) ``symbols`` attributes.
    ``masked`` overrides the valve decision; by default it is drawn from the
    channel's own coin at the draw's step index.
    """
    if masked is None:
        masked = mask_fires(spec, n.source_t)
    if masked:
        return Meaning("")
    kind = spec.psi_kind
    if kind is PsiKind.IDENTITY:
        return Meaning(n.symbols)
    if kind is PsiKind.TAGGED_INJECTIVE:
        return Meaning(n.symbols + _context_fingerprint(c))
    if kind is PsiKind.CONSTANT:
        return Meaning(spec.const_meaning)
    length = psi_output_length(spec, getattr(c, "norm", 0.0), n.source_t)
    return Meaning(_tile(n.symbols, length))


def _iid_noise(spec: ChannelSpec, rng: np.random.Generator) -> NoiseDraw:
    if spec.temperature == 0.0:
        return NoiseDraw("0" * spec.noise_len, 0)
    bits = rng.integers(0, 2, size=spec.noise_len)
    return NoiseDraw("".join("1" if b else "0" for b in bits), 0)


def estimate_collision_rate(spec: ChannelSpec, c, trials: int, seed: int = 0) -> float:
    """Fraction of i.i.d. noise pairs whose meanings coincide (valve included).

    The masking coins are drawn i.i.d. per trial at the schedule's entry rate
    (t = 1), so with an injective base map the rate is eps^2 + (1-eps)^2 * p.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(derive_seed(seed, "collision"))
    eps = epsilon_at(1, spec.mask_rate)
    collisions = 0
    for _ in range(trials):
        pair = []
        for _ in range(2):
            draw = _iid_noise(spec, rng)
            masked = bool(eps > 0.0 and rng.random() < eps)
            pair.append(apply_psi(draw, c, spec, masked=masked))
        if pair[0].symbols == pair[1].symbols:
            collisions += 1
    return collisions / trials


def entropy_estimate(spec: ChannelSpec, samples: int, seed: int = 0) -> float:
    """Plug-in Shannon entropy (bits) of the empirical noise distribution."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(derive_seed(seed, "entropy"))
    counts = Counter(_iid_noise(spec, rng).symbols for _ in range(samples))
    total = sum(counts.values())
    entropy = 0.0
    for count in counts.values():
        p = count / total
        entropy -= p * math.log2(p)
    return entropy
