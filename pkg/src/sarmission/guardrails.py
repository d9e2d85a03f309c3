"""Cognitive guardrails applied around autonomous decisions.

Four independent checks gate what the swarm may do without a human:

* entropy gating — how concentrated the strategy belief is decides whether a
  strategy change can run autonomously, with notification, or needs approval;
* cost-benefit — detour cost versus expected information value, with a task
  queue as the deferral path;
* advocate personas — deterministic rule engines (Safety, Ethics, Regulatory)
  that flag plan conflicts and force escalation;
* safety envelope — hard physical bounds enforced every tick after all
  planning, regardless of what the reasoning layer wanted.

All checks are pure functions of immutable snapshots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import kernels
from .errors import SarError
from .strategies import STRATEGIES, StrategyBelief


class Verdict(Enum):
    AUTONOMOUS = "Autonomous"
    AUTONOMOUS_NOTIFY = "AutonomousNotify"
    DEFER = "Defer"
    REQUIRES_APPROVAL = "RequiresApproval"

    @property
    def restrictiveness(self) -> int:
        return _RESTRICTIVENESS[self]


_RESTRICTIVENESS = {
    Verdict.AUTONOMOUS: 0,
    Verdict.AUTONOMOUS_NOTIFY: 1,
    Verdict.DEFER: 2,
    Verdict.REQUIRES_APPROVAL: 3,
}


def most_restrictive(verdicts: list[Verdict]) -> Verdict:
    return max(verdicts, key=lambda v: v.restrictiveness)


@dataclass(frozen=True)
class AutonomyVerdict:
    decision: Verdict
    rationale: str
    entropy: float | None = None
    dominant: str | None = None
    proposed: str | None = None

    def to_dict(self) -> dict:
        return {
            "decision": self.decision.value,
            "rationale": self.rationale,
            "entropy": self.entropy,
            "dominant": self.dominant,
            "proposed": self.proposed,
        }


# ---------------------------------------------------------------------------
# Entropy gating


@dataclass(frozen=True)
class EntropyPolicy:
    """Regime threshold on normalized entropy plus the high-regime margin."""

    high_entropy_threshold: float = 0.85
    delta_threshold: float = 0.05

    def __post_init__(self) -> None:
        for name in ("high_entropy_threshold", "delta_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SarError(f"{name} must be in [0, 1], got {v}")


def normalized_entropy(belief: StrategyBelief) -> float:
    """Base-2 Shannon entropy divided by log2(5): 0 = point mass, 1 = uniform."""
    return kernels.entropy_norm(belief.values())


def entropy_verdict(
    belief: StrategyBelief,
    current: str,
    proposed: str,
    policy: EntropyPolicy | None = None,
) -> AutonomyVerdict:
    """Gate a proposed strategy (change or continuation) on belief entropy.

    Low-entropy regime: acting within the dominant strategy, or switching into
    it, is autonomous; any other switch needs approval. High-entropy regime:
    adapting to a strategy within the probability margin of the dominant one
    is allowed with notification; beyond the margin needs approval.
    """
    policy = policy or EntropyPolicy()
    for name in (current, proposed):
        if name not in STRATEGIES:
            raise SarError(f"unknown strategy {name!r}")
    entropy = normalized_entropy(belief)
    dominant = belief.dominant()

    if entropy < policy.high_entropy_threshold:
        if proposed == dominant:
            return AutonomyVerdict(
                Verdict.AUTONOMOUS,
                f"low entropy ({entropy:.4f}) and proposal stays within dominant strategy {dominant}",
                entropy, dominant, proposed,
            )
        return AutonomyVerdict(
            Verdict.REQUIRES_APPROVAL,
            f"low entropy ({entropy:.4f}): switching from {current} to non-dominant {proposed} "
            f"needs confirmation (dominant is {dominant})",
            entropy, dominant, proposed,
        )

    gap = belief[dominant] - belief[proposed]
    if gap <= policy.delta_threshold:
        return AutonomyVerdict(
            Verdict.AUTONOMOUS_NOTIFY,
            f"high entropy ({entropy:.4f}) and {proposed} is within {policy.delta_threshold} "
            f"of dominant {dominant} (gap {gap:.4f}); operator will be notified",
            entropy, dominant, proposed,
        )
    return AutonomyVerdict(
        Verdict.REQUIRES_APPROVAL,
        f"high entropy ({entropy:.4f}) but {proposed} trails dominant {dominant} "
        f"by {gap:.4f} > {policy.delta_threshold}",
        entropy, dominant, proposed,
    )


# ---------------------------------------------------------------------------
# Cost-benefit analysis


@dataclass(frozen=True)
class CostBenefitPolicy:
    """Calibration knobs: how strength converts to minutes of value, and the
    maximum acceptable cost-to-benefit ratio."""

    value_of_info_minutes: float = 20.0
    max_cost_ratio: float = 1.0

    def __post_init__(self) -> None:
        if self.max_cost_ratio <= 0:
            raise SarError(f"max_cost_ratio must be > 0, got {self.max_cost_ratio}")


@dataclass(frozen=True)
class TaskCost:
    detour_minutes: float
    outside_geofence: bool = False


def cost_benefit(cost: TaskCost, strength: float, policy: CostBenefitPolicy | None = None) -> AutonomyVerdict:
    """Proceed when the detour is worth the expected information value."""
    policy = policy or CostBenefitPolicy()
    if cost.outside_geofence:
        return AutonomyVerdict(Verdict.DEFER, "target geolocation is outside the geofence; task queued")
    benefit = strength * policy.value_of_info_minutes
    if cost.detour_minutes <= 0.0:
        return AutonomyVerdict(Verdict.AUTONOMOUS, "zero-cost task (on current path)")
    if benefit <= 0.0:
        return AutonomyVerdict(
            Verdict.DEFER,
            f"no expected benefit for a {cost.detour_minutes:.1f} min detour; task queued",
        )
    ratio = cost.detour_minutes / benefit
    if ratio <= policy.max_cost_ratio:
        return AutonomyVerdict(
            Verdict.AUTONOMOUS,
            f"detour {cost.detour_minutes:.1f} min vs benefit {benefit:.1f} min (ratio {ratio:.2f})",
        )
    return AutonomyVerdict(
        Verdict.DEFER,
        f"detour {cost.detour_minutes:.1f} min exceeds benefit {benefit:.1f} min "
        f"(ratio {ratio:.2f} > {policy.max_cost_ratio}); task queued",
    )


# ---------------------------------------------------------------------------
# Advocate personas

PERSONAS = ("Safety", "Ethics", "Regulatory")
SEVERITIES = ("info", "warn", "block")
STANCES = ("oppose", "endorse")


@dataclass(frozen=True)
class AdvocateConcern:
    persona: str
    severity: str
    rule_id: str
    grounding: str
    stance: str = "oppose"

    def to_dict(self) -> dict:
        return {
            "persona": self.persona,
            "severity": self.severity,
            "rule_id": self.rule_id,
            "grounding": self.grounding,
            "stance": self.stance,
        }


@dataclass(frozen=True)
class AdvocateRule:
    persona: str
    rule_id: str
    severity: str
    grounding: str
    pattern: dict
    stance: str = "oppose"

    def __post_init__(self) -> None:
        if self.persona not in PERSONAS:
            raise SarError(f"unknown persona {self.persona!r}")
        if self.severity not in SEVERITIES:
            raise SarError(f"unknown severity {self.severity!r}")
        if self.stance not in STANCES:
            raise SarError(f"unknown stance {self.stance!r}")


def load_advocate_rules(source: str | Path | list) -> list[AdvocateRule]:
    if isinstance(source, Path):
        source = source.read_text()
    if isinstance(source, str):
        source = json.loads(source)
    rules = []
    for entry in source:
        rules.append(
            AdvocateRule(
                persona=entry["persona"],
                rule_id=entry["rule_id"],
                severity=entry["severity"],
                grounding=entry["grounding_text"],
                pattern=entry["pattern"],
                stance=entry.get("stance", "oppose"),
            )
        )
    return rules


def default_advocate_rules() -> list[AdvocateRule]:
    return load_advocate_rules(Path(__file__).parent / "data" / "advocate_rules.json")


def _match_predicate(value, predicate) -> bool:
    if isinstance(predicate, dict):
        for op, operand in predicate.items():
            if op == "eq" and not value == operand:
                return False
            elif op == "ne" and not value != operand:
                return False
            elif op == "gt" and not (value is not None and value > operand):
                return False
            elif op == "gte" and not (value is not None and value >= operand):
                return False
            elif op == "lt" and not (value is not None and value < operand):
                return False
            elif op == "lte" and not (value is not None and value <= operand):
                return False
            elif op == "in" and value not in operand:
                return False
            elif op == "contains" and (not isinstance(value, (list, tuple, set, str)) or operand not in value):
                return False
            elif op == "exists" and (value is not None) != operand:
                return False
            elif op not in ("eq", "ne", "gt", "gte", "lt", "lte", "in", "contains", "exists"):
                raise SarError(f"unknown pattern operator {op!r}")
        return True
    return value == predicate


def rule_matches(rule: AdvocateRule, plan_attributes: dict) -> bool:
    for attr, predicate in rule.pattern.items():
        value = plan_attributes.get(attr)
        if not _match_predicate(value, predicate):
            return False
    return True


def run_advocates(
    plan_attributes: dict,
    rules: list[AdvocateRule] | None = None,
) -> tuple[str, list[AdvocateConcern]]:
    """Evaluate every persona's ruleset against a strategic plan.

    Returns ("Clear" | "Escalate", concerns). Consensus is Clear only when no
    block-severity concern fired and warn-level concerns do not take opposing
    stances across personas. Any rule-engine failure degrades to Escalate.
    """
    if rules is None:
        rules = default_advocate_rules()
    concerns: list[AdvocateConcern] = []
    try:
        for rule in rules:
            if rule_matches(rule, plan_attributes):
                concerns.append(
                    AdvocateConcern(rule.persona, rule.severity, rule.rule_id, rule.grounding, rule.stance)
                )
    except Exception as exc:  # fail safe: a broken ruleset must not clear a plan
        concerns.append(
            AdvocateConcern("Safety", "block", "advocate-engine-error", f"rule evaluation failed: {exc}")
        )
        return "Escalate", concerns

    if any(c.severity == "block" for c in concerns):
        return "Escalate", concerns
    warn_stances = {(c.persona, c.stance) for c in concerns if c.severity == "warn"}
    stances = {s for _, s in warn_stances}
    if len(stances) > 1:
        return "Escalate", concerns
    return "Clear", concerns


# ---------------------------------------------------------------------------
# Safety envelope

Point = tuple[float, float]


def point_in_polygon(x: float, y: float, polygon: tuple[Point, ...]) -> bool:
    """Ray-casting containment test; boundary points count as inside."""
    n = len(polygon)
    inside = False
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if _on_segment(x, y, x1, y1, x2, y2):
            return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _on_segment(px: float, py: float, x1: float, y1: float, x2: float, y2: float) -> bool:
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    if abs(cross) > 1e-9 * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
        return False
    dot = (px - x1) * (x2 - x1) + (py - y1) * (y2 - y1)
    length_sq = (x2 - x1) ** 2 + (y2 - y1) ** 2
    return 0.0 <= dot <= length_sq


def nearest_boundary_point(x: float, y: float, polygon: tuple[Point, ...]) -> Point:
    """Closest point on the polygon's boundary; first-best on exact ties."""
    best: Point = polygon[0]
    best_d = math.inf
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        length_sq = dx * dx + dy * dy
        t = 0.0 if length_sq == 0.0 else max(0.0, min(1.0, ((x - x1) * dx + (y - y1) * dy) / length_sq))
        cx, cy = x1 + t * dx, y1 + t * dy
        d = (x - cx) ** 2 + (y - cy) ** 2
        if d < best_d:
            best_d = d
            best = (cx, cy)
    return best


_CLAMP_MARGIN_M = 0.01


def _centroid(polygon: tuple[Point, ...]) -> Point:
    return (sum(p[0] for p in polygon) / len(polygon), sum(p[1] for p in polygon) / len(polygon))


def _nudged_boundary_point(x: float, y: float, polygon: tuple[Point, ...], inward: bool) -> Point:
    """Boundary point pushed a hair off the boundary so the clamped position
    is strictly legal (containment tests treat the boundary as inside)."""
    bx, by = nearest_boundary_point(x, y, polygon)
    cx, cy = _centroid(polygon)
    dx, dy = bx - cx, by - cy
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return (bx, by)
    sign = -1.0 if inward else 1.0
    return (bx + sign * _CLAMP_MARGIN_M * dx / norm, by + sign * _CLAMP_MARGIN_M * dy / norm)


def polygon_is_simple(polygon: tuple[Point, ...]) -> bool:
    """No two non-adjacent edges intersect."""
    n = len(polygon)
    if n < 3:
        return False
    edges = [(polygon[i], polygon[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(edges[i], edges[j]):
                return False
    return True


def _segments_intersect(a: tuple[Point, Point], b: tuple[Point, Point]) -> bool:
    (ax1, ay1), (ax2, ay2) = a
    (bx1, by1), (bx2, by2) = b

    def orient(ox, oy, px, py, qx, qy):
        v = (px - ox) * (qy - oy) - (py - oy) * (qx - ox)
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1 = orient(ax1, ay1, ax2, ay2, bx1, by1)
    o2 = orient(ax1, ay1, ax2, ay2, bx2, by2)
    o3 = orient(bx1, by1, bx2, by2, ax1, ay1)
    o4 = orient(bx1, by1, bx2, by2, ax2, ay2)
    return o1 != o2 and o3 != o4


@dataclass(frozen=True)
class SafetyEnvelope:
    min_altitude_m: float
    max_altitude_m: float
    max_range_m: float
    battery_reserve_fraction: float
    include_geofence: tuple[Point, ...] | None = None
    exclude_geofences: tuple[tuple[Point, ...], ...] = ()

    def __post_init__(self) -> None:
        if not self.min_altitude_m < self.max_altitude_m:
            raise SarError(
                f"min altitude {self.min_altitude_m} must be below max {self.max_altitude_m}"
            )
        if not 0.0 < self.battery_reserve_fraction < 1.0:
            raise SarError(f"battery reserve must be in (0, 1), got {self.battery_reserve_fraction}")
        for polygon in list(self.exclude_geofences) + ([self.include_geofence] if self.include_geofence else []):
            if not polygon_is_simple(tuple(tuple(p) for p in polygon)):
                raise SarError("geofence polygons must be simple (non-self-intersecting)")

    def permits_point(self, x: float, y: float) -> bool:
        if self.include_geofence and not point_in_polygon(x, y, self.include_geofence):
            return False
        return not any(point_in_polygon(x, y, poly) for poly in self.exclude_geofences)

    @classmethod
    def from_dict(cls, data: dict) -> "SafetyEnvelope":
        return cls(
            min_altitude_m=float(data["min_altitude_m"]),
            max_altitude_m=float(data["max_altitude_m"]),
            max_range_m=float(data["max_range_m"]),
            battery_reserve_fraction=float(data["battery_reserve_fraction"]),
            include_geofence=tuple(tuple(p) for p in data["include_geofence"]) if data.get("include_geofence") else None,
            exclude_geofences=tuple(tuple(tuple(p) for p in poly) for poly in data.get("exclude_geofences", [])),
        )

    def to_dict(self) -> dict:
        return {
            "min_altitude_m": self.min_altitude_m,
            "max_altitude_m": self.max_altitude_m,
            "max_range_m": self.max_range_m,
            "battery_reserve_fraction": self.battery_reserve_fraction,
            "include_geofence": [list(p) for p in self.include_geofence] if self.include_geofence else None,
            "exclude_geofences": [[list(p) for p in poly] for poly in self.exclude_geofences],
        }


@dataclass(frozen=True)
class EnvelopeEnforcement:
    """First violated constraint plus the corrective action to apply."""

    constraint: str
    action: str  # clamp_position | clamp_altitude | return_home
    corrected_position: Point | None = None
    corrected_altitude: float | None = None

    def to_dict(self) -> dict:
        return {
            "constraint": self.constraint,
            "action": self.action,
            "corrected_position": list(self.corrected_position) if self.corrected_position else None,
            "corrected_altitude": self.corrected_altitude,
        }


def check_envelope(
    x: float,
    y: float,
    altitude_m: float,
    battery_fraction: float,
    home: Point,
    envelope: SafetyEnvelope,
) -> EnvelopeEnforcement | None:
    """First violated envelope constraint for an agent state, or None.

    Checked in a fixed order so enforcement is reproducible: battery, then
    altitude bounds, then range from home, then geofences.
    """
    if battery_fraction < envelope.battery_reserve_fraction:
        return EnvelopeEnforcement(
            f"battery {battery_fraction:.3f} below reserve {envelope.battery_reserve_fraction}",
            "return_home",
        )
    if altitude_m < envelope.min_altitude_m:
        return EnvelopeEnforcement(
            f"altitude {altitude_m:.1f} m below minimum {envelope.min_altitude_m} m",
            "clamp_altitude",
            corrected_altitude=envelope.min_altitude_m,
        )
    if altitude_m > envelope.max_altitude_m:
        return EnvelopeEnforcement(
            f"altitude {altitude_m:.1f} m above maximum {envelope.max_altitude_m} m",
            "clamp_altitude",
            corrected_altitude=envelope.max_altitude_m,
        )
    range_m = math.hypot(x - home[0], y - home[1])
    if range_m > envelope.max_range_m:
        return EnvelopeEnforcement(
            f"range {range_m:.1f} m exceeds maximum {envelope.max_range_m} m from home",
            "return_home",
        )
    if envelope.include_geofence and not point_in_polygon(x, y, envelope.include_geofence):
        return EnvelopeEnforcement(
            "position outside include-geofence",
            "clamp_position",
            corrected_position=_nudged_boundary_point(x, y, envelope.include_geofence, inward=True),
        )
    for poly in envelope.exclude_geofences:
        if point_in_polygon(x, y, poly):
            return EnvelopeEnforcement(
                "position inside exclude-geofence",
                "clamp_position",
                corrected_position=_nudged_boundary_point(x, y, poly, inward=False),
            )
    return None


def clamp_waypoint(x: float, y: float, envelope: SafetyEnvelope) -> Point:
    """Pull a waypoint just inside the include-geofence if it falls outside."""
    if envelope.include_geofence and not point_in_polygon(x, y, envelope.include_geofence):
        return _nudged_boundary_point(x, y, envelope.include_geofence, inward=True)
    return (x, y)
