"""The five search strategies and the belief distribution over them.

StrategyBelief is the mission's central mutable state, except it is not
mutable: every update produces a fresh, normalized instance, which keeps
snapshots safe to hand to concurrent readers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import SarError

# Canonical strategy order. Serialized distributions, CPT columns, and event
# payloads all use this order so replay logs are position-stable.
STRATEGIES: tuple[str, ...] = ("Trail", "Shelter", "Waterways", "Contour", "Region")

NORMALIZATION_TOL = 1e-9


class BeliefInvariantError(SarError):
    """A belief distribution violates normalization or domain invariants."""


@dataclass(frozen=True)
class StrategyBelief:
    """Normalized probability distribution over the five search strategies."""

    probabilities: dict[str, float]
    timestamp: float = 0.0  # mission clock seconds

    def __post_init__(self) -> None:
        if set(self.probabilities) != set(STRATEGIES):
            raise BeliefInvariantError(
                f"belief must cover exactly {STRATEGIES}, got {sorted(self.probabilities)}"
            )
        for name, p in self.probabilities.items():
            if p < 0.0 or math.isnan(p):
                raise BeliefInvariantError(f"negative or NaN probability for {name}: {p}")
        total = sum(self.probabilities[s] for s in STRATEGIES)
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise BeliefInvariantError(f"belief sums to {total!r}, expected 1 ± {NORMALIZATION_TOL}")
        # Canonical key order, so iteration and serialization are stable.
        object.__setattr__(
            self, "probabilities", {s: float(self.probabilities[s]) for s in STRATEGIES}
        )

    @classmethod
    def uniform(cls, timestamp: float = 0.0) -> "StrategyBelief":
        return cls({s: 1.0 / len(STRATEGIES) for s in STRATEGIES}, timestamp)

    @classmethod
    def from_values(cls, values: list[float] | tuple[float, ...], timestamp: float = 0.0) -> "StrategyBelief":
        """Build from probabilities listed in canonical strategy order."""
        if len(values) != len(STRATEGIES):
            raise BeliefInvariantError(f"expected {len(STRATEGIES)} values, got {len(values)}")
        return cls(dict(zip(STRATEGIES, values)), timestamp)

    def values(self) -> list[float]:
        """Probabilities in canonical strategy order."""
        return [self.probabilities[s] for s in STRATEGIES]

    def __getitem__(self, strategy: str) -> float:
        return self.probabilities[strategy]

    def dominant(self) -> str:
        """Highest-probability strategy; ties break lexicographically by id."""
        top = max(self.probabilities.values())
        return min(s for s in STRATEGIES if abs(self.probabilities[s] - top) <= NORMALIZATION_TOL)

    def at(self, timestamp: float) -> "StrategyBelief":
        return StrategyBelief(dict(self.probabilities), timestamp)

    def to_dict(self) -> dict[str, float]:
        return dict(self.probabilities)
