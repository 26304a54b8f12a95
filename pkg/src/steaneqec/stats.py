"""Logical fidelity estimates with Wilson score intervals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


class UndefinedEstimateError(ValueError):
    """No accepted shots, so no fidelity can be estimated."""


def logical_fidelity(successes: int, kept: int) -> float:
    if kept < 1:
        raise UndefinedEstimateError("fidelity needs at least one accepted shot")
    if not 0 <= successes <= kept:
        raise ValueError(f"successes={successes} outside [0, {kept}]")
    return successes / kept


def wilson_bounds(p: float, N: int, z: float = 1.0) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion ``p`` observed over N trials.

    z=1 gives roughly a 68% confidence level.
    """
    if N < 1:
        raise ValueError("Wilson bounds need N >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} is not a probability")
    z2 = z * z
    centre = p + z2 / (2 * N)
    half = z * math.sqrt(p * (1 - p) / N + z2 / (4 * N * N))
    denom = 1 + z2 / N
    low = (centre - half) / denom
    high = (centre + half) / denom
    # rounding can push the endpoints a hair past p or the unit interval
    return max(0.0, min(low, p)), min(1.0, max(high, p))


@dataclass(frozen=True)
class FidelityEstimate:
    p_hat: float
    n_kept: int
    n_discarded: int
    wilson_low: float
    wilson_high: float
    z: float = 1.0
    n_success: int = 0

    @classmethod
    def from_counts(cls, successes: int, kept: int, discarded: int = 0, z: float = 1.0) -> "FidelityEstimate":
        p = logical_fidelity(successes, kept)
        low, high = wilson_bounds(p, kept, z)
        return cls(p, kept, discarded, low, high, z, successes)

    @property
    def discard_fraction(self) -> float:
        total = self.n_kept + self.n_discarded
        return self.n_discarded / total if total else 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "FidelityEstimate":
        return cls(**data)


def separated(a: FidelityEstimate, b: FidelityEstimate) -> bool:
    """True when the intervals of ``a`` and ``b`` do not overlap."""
    return a.wilson_low > b.wilson_high or b.wilson_low > a.wilson_high


def at_least(a: FidelityEstimate, b: FidelityEstimate) -> bool:
    """``a >= b`` within combined bounds: a's upper end reaches b's lower end."""
    return a.wilson_high >= b.wilson_low
