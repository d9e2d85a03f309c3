"""Runtime belief updates over the strategy distribution.

Positive updates come from assessed clues, negative updates from coverage
exhaustion, and operator adjustments from the console. All three are the same
multiplicative rescale-and-renormalize step applied to one target strategy;
they differ only in where the strength comes from and in their gating rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import kernels
from .bayes import BayesNet, EvidenceAssignment, infer_strategies
from .errors import SarError
from .strategies import STRATEGIES, StrategyBelief

QUALITATIVE_LEVELS = ("High", "Medium", "Low")
DEFAULT_CONFIDENCE_SCALE = {"High": 0.8, "Medium": 0.4, "Low": 0.1}
MAX_DECAY = 0.95


class UnknownLevelError(SarError):
    """A qualitative level label is not in the configured scale."""


class AdjustmentRangeError(SarError):
    """An update strength would drive a probability to zero or below."""


@dataclass(frozen=True)
class Hyperparams:
    """Tunable weights for clue-strength scoring and negative-evidence gating.

    ``relevance_weight`` balances relevance against the combined confidences;
    ``cv_weight`` balances classification confidence against interpretation
    confidence. Both default to an even split.
    """

    relevance_weight: float = 0.5
    cv_weight: float = 0.5
    coverage_threshold: float = 0.6
    confidence_scale: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_CONFIDENCE_SCALE)
    )

    def __post_init__(self) -> None:
        for name in ("relevance_weight", "cv_weight", "coverage_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SarError(f"{name} must be in [0, 1], got {v}")
        scale = self.confidence_scale
        if not (scale.get("High", 0) > scale.get("Medium", 0) > scale.get("Low", 0)):
            raise SarError(f"confidence scale must be strictly decreasing High>Medium>Low: {scale}")


@dataclass(frozen=True)
class BeliefAdjustment:
    """One multiplicative update: the target strategy and a signed strength."""

    target: str
    strength: float

    def __post_init__(self) -> None:
        if self.target not in STRATEGIES:
            raise SarError(f"unknown strategy {self.target!r}")
        if self.strength <= -1.0:
            raise AdjustmentRangeError(f"strength must be > -1, got {self.strength}")


@dataclass(frozen=True)
class ClueAssessment:
    """Qualitative pipeline outputs that price a clue's update strength."""

    relevance: str
    cv_confidence: str
    interp_confidence: str
    strategy: str

    def __post_init__(self) -> None:
        for name in ("relevance", "cv_confidence", "interp_confidence"):
            level = getattr(self, name)
            if level not in QUALITATIVE_LEVELS:
                raise UnknownLevelError(f"{name} level {level!r} not in {QUALITATIVE_LEVELS}")
        if self.strategy not in STRATEGIES:
            raise SarError(f"unknown strategy {self.strategy!r}")


def map_qualitative(level: str, hp: Hyperparams | None = None) -> float:
    """Numeric value of a qualitative confidence level (High/Medium/Low)."""
    scale = (hp or Hyperparams()).confidence_scale
    try:
        return scale[level]
    except KeyError:
        raise UnknownLevelError(f"unknown qualitative level {level!r}, expected one of {sorted(scale)}") from None


def clue_strength(assessment: ClueAssessment, hp: Hyperparams | None = None) -> float:
    """Update strength for an accepted clue.

    A weighted blend of relevance and the two confidence channels:
    relevance_weight * relevance + (1 - relevance_weight) *
    (cv_weight * cv_confidence + (1 - cv_weight) * interp_confidence).
    """
    hp = hp or Hyperparams()
    r = map_qualitative(assessment.relevance, hp)
    cv = map_qualitative(assessment.cv_confidence, hp)
    interp = map_qualitative(assessment.interp_confidence, hp)
    lam, mu = hp.relevance_weight, hp.cv_weight
    return lam * r + (1.0 - lam) * (mu * cv + (1.0 - mu) * interp)


def combine_cv_confidence(stage1: str, stage2: str | None, hp: Hyperparams | None = None) -> str:
    """Combined classification confidence from the two vision stages.

    When the first-stage classifier is already High the second stage is
    skipped; otherwise the open-world stage can only raise confidence, so
    take the stronger of the two levels.
    """
    hp = hp or Hyperparams()
    if stage1 not in QUALITATIVE_LEVELS:
        raise UnknownLevelError(f"unknown qualitative level {stage1!r}")
    if stage1 == "High" or stage2 is None:
        return stage1
    if stage2 not in QUALITATIVE_LEVELS:
        raise UnknownLevelError(f"unknown qualitative level {stage2!r}")
    return max(stage1, stage2, key=lambda lvl: map_qualitative(lvl, hp))


def apply_adjustment(belief: StrategyBelief, adjustment: BeliefAdjustment, timestamp: float | None = None) -> StrategyBelief:
    """Rescale the target strategy by (1 + strength) and renormalize."""
    target_idx = STRATEGIES.index(adjustment.target)
    updated = kernels.multiplicative_update(belief.values(), target_idx, adjustment.strength)
    ts = belief.timestamp if timestamp is None else timestamp
    return StrategyBelief.from_values(updated, ts)


def apply_positive_update(belief: StrategyBelief, adjustment: BeliefAdjustment, timestamp: float | None = None) -> StrategyBelief:
    """Clue-driven boost of one strategy; strength must be non-negative."""
    if adjustment.strength < 0.0:
        raise AdjustmentRangeError(f"positive update requires strength >= 0, got {adjustment.strength}")
    return apply_adjustment(belief, adjustment, timestamp)


def apply_operator_adjustment(belief: StrategyBelief, strategy: str, strength: float, timestamp: float | None = None) -> StrategyBelief:
    """Operator-chosen boost or reduction of one strategy."""
    return apply_adjustment(belief, BeliefAdjustment(strategy, strength), timestamp)


def reset_beliefs(net: BayesNet, evidence: EvidenceAssignment, timestamp: float = 0.0) -> StrategyBelief:
    """Discard accumulated runtime updates and re-infer from evidence."""
    return infer_strategies(net, evidence, timestamp)


@dataclass
class CoverageTracker:
    """Per-strategy searched fraction and decay bookkeeping.

    Fractions are monotone non-decreasing within a mission. A decay for a
    strategy is applied only once the configured coverage threshold is
    reached, and re-applied only after coverage has grown by at least
    ``redecay_step`` since the last applied decay, so a static coverage value
    cannot bleed a strategy dry through repeated updates.
    """

    fractions: dict[str, float] = field(default_factory=lambda: {s: 0.0 for s in STRATEGIES})
    last_decayed_at: dict[str, float] = field(default_factory=dict)
    redecay_step: float = 0.1

    def observe(self, strategy: str, fraction: float) -> None:
        if strategy not in STRATEGIES:
            raise SarError(f"unknown strategy {strategy!r}")
        if not 0.0 <= fraction <= 1.0:
            raise SarError(f"coverage fraction must be in [0, 1], got {fraction}")
        if fraction < self.fractions[strategy]:
            raise SarError(
                f"coverage for {strategy} would decrease: {self.fractions[strategy]} -> {fraction}"
            )
        self.fractions[strategy] = fraction

    def decay_due(self, strategy: str, hp: Hyperparams) -> bool:
        fraction = self.fractions[strategy]
        if fraction < hp.coverage_threshold:
            return False
        last = self.last_decayed_at.get(strategy)
        return last is None or fraction - last >= self.redecay_step - 1e-12

    def mark_decayed(self, strategy: str) -> None:
        self.last_decayed_at[strategy] = self.fractions[strategy]

    def clear_decay_flags(self) -> None:
        self.last_decayed_at.clear()


def apply_negative_update(
    belief: StrategyBelief,
    strategy: str,
    tracker: CoverageTracker,
    hp: Hyperparams | None = None,
    timestamp: float | None = None,
) -> tuple[StrategyBelief, BeliefAdjustment | None]:
    """Coverage-exhaustion decay for one strategy.

    Deferred (belief returned unchanged, adjustment None) while the searched
    fraction is below the coverage threshold; otherwise the strategy is
    scaled by (1 - covered_fraction).
    """
    hp = hp or Hyperparams()
    fraction = tracker.fractions[strategy]
    if fraction < hp.coverage_threshold:
        return belief, None
    # Decay strength stays strictly below 1 so a fully-searched strategy keeps
    # a sliver of mass (the person may have been missed).
    beta = min(fraction, MAX_DECAY)
    adjustment = BeliefAdjustment(strategy, -beta)
    return apply_adjustment(belief, adjustment, timestamp), adjustment
