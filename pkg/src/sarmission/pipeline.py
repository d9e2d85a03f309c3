"""The staged clue-assessment pipeline.

A detection runs through: simulated vision classification (stages 1-2),
backend reasoning for relevance, tactical implication, and a strategic plan
(stages 3-5), advocate review (stage 6), and the autonomy decision (stage 7).
The mission engine owns what happens next: human elicitation (stage 8), the
belief update (stage 9), and task dispatch (stage 10).

Backend output is never trusted: every payload passes through
:func:`validate_and_repair` against a versioned stage schema before use.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .backends import ReasoningBackend, StageRequest
from .belief import ClueAssessment, Hyperparams, clue_strength, combine_cv_confidence
from .errors import SarError
from .guardrails import (
    AdvocateConcern,
    AdvocateRule,
    AutonomyVerdict,
    CostBenefitPolicy,
    EntropyPolicy,
    TaskCost,
    Verdict,
    cost_benefit,
    entropy_verdict,
    most_restrictive,
    run_advocates,
)
from .knowledge import KnowledgeBase
from .strategies import StrategyBelief

STAGE_NAMES = {
    1: "cv-detection",
    2: "open-world-classification",
    3: "relevance",
    4: "tactical-implication",
    5: "strategic-plan",
    6: "advocate-review",
    7: "autonomy-decision",
    8: "human-elicitation",
    9: "belief-update",
    10: "task-dispatch",
}

# The local planner's full action space; every disposition maps onto it.
LOCAL_ACTIONS = ("do_nothing", "adapt_own_behavior", "request_swarm_help", "defer_to_human")

DISPOSITIONS = ("rejected", "updated_belief", "queued", "escalated", "inspecting")


def _data_file(name: str) -> dict:
    return json.loads((Path(__file__).parent / "data" / name).read_text())


def load_stage_schemas() -> dict[int, dict]:
    doc = _data_file("stage_schemas.json")
    if doc.get("schema_version") != 1:
        raise SarError(f"unsupported stage schema version {doc.get('schema_version')!r}")
    return {int(k): v for k, v in doc["stages"].items()}


def load_stage_templates() -> dict[int, str]:
    doc = _data_file("stage_templates.json")
    if doc.get("schema_version") != 1:
        raise SarError(f"unsupported template schema version {doc.get('schema_version')!r}")
    return {int(k): v for k, v in doc["templates"].items()}


# ---------------------------------------------------------------------------
# Output validation and repair


@dataclass(frozen=True)
class RepairResult:
    payload: dict | None
    repaired: bool
    attempts: int
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.payload is not None


_FENCE = re.compile(r"```[a-zA-Z]*\n?|```")
_TRAILING_COMMA = re.compile(r",(\s*[}\]])")


def _extract_json_block(text: str) -> str | None:
    """First balanced top-level {...} block, ignoring braces inside strings."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        start = text.find("{", start + 1)
    return None


def _mechanical_candidates(raw: str) -> list[str]:
    """Progressively more aggressive rewrites of the raw text, in fixed order."""
    candidates = [raw]
    stripped = _FENCE.sub("", raw)
    if stripped != raw:
        candidates.append(stripped)
    block = _extract_json_block(stripped)
    if block is not None:
        candidates.append(block)
        fixed = _TRAILING_COMMA.sub(r"\1", block)
        fixed = re.sub(r"\bTrue\b", "true", fixed)
        fixed = re.sub(r"\bFalse\b", "false", fixed)
        fixed = re.sub(r"\bNone\b", "null", fixed)
        if fixed != block:
            candidates.append(fixed)
        if '"' not in fixed and "'" in fixed:
            candidates.append(fixed.replace("'", '"'))
    return candidates


def _validate_payload(obj: object, schema: dict) -> tuple[dict | None, bool, str | None]:
    """Check an object against a stage schema.

    Returns (payload, coerced, error). Enum values are case-coerced, optional
    fields defaulted, and unknown fields dropped; any of those marks the
    payload as coerced.
    """
    if not isinstance(obj, dict):
        return None, False, f"expected an object, got {type(obj).__name__}"
    payload: dict = {}
    coerced = False
    for name, spec in schema["fields"].items():
        if name not in obj:
            if spec.get("required", False):
                return None, False, f"missing required field {name!r}"
            payload[name] = spec.get("default")
            coerced = True
            continue
        value = obj[name]
        kind = spec["type"]
        if kind == "enum":
            if not isinstance(value, str):
                return None, False, f"field {name!r} must be a string"
            canonical = {v.lower(): v for v in spec["values"]}
            key = value.strip().lower()
            if key not in canonical:
                return None, False, f"field {name!r} value {value!r} not in {spec['values']}"
            if canonical[key] != value:
                coerced = True
            payload[name] = canonical[key]
        elif kind == "string":
            if not isinstance(value, str):
                return None, False, f"field {name!r} must be a string"
            payload[name] = value
        elif kind == "list":
            if not isinstance(value, list):
                return None, False, f"field {name!r} must be a list"
            payload[name] = value
        else:
            raise SarError(f"unknown schema field type {kind!r}")
    if set(obj) - set(schema["fields"]):
        coerced = True
    return payload, coerced, None


def validate_and_repair(
    raw: str,
    schema: dict,
    regenerate: Callable[[int], str] | None = None,
    budget: int = 2,
) -> RepairResult:
    """Parse backend text against a stage schema, repairing mechanically first.

    Repairs try, in order: the raw text as-is, markdown fences stripped, the
    first balanced JSON block extracted, trailing commas and Python literals
    fixed, and a single-to-double quote swap. If nothing parses, the backend
    is re-invoked up to ``budget`` times. The returned payload is guaranteed
    schema-valid; exhaustion returns a failure instead of raising.
    """
    attempts = 0
    text = raw
    last_error: str | None = None
    while True:
        for i, candidate in enumerate(_mechanical_candidates(text)):
            try:
                obj = json.loads(candidate)
            except json.JSONDecodeError as exc:
                last_error = f"JSON parse failed: {exc}"
                continue
            payload, coerced, error = _validate_payload(obj, schema)
            if payload is not None:
                repaired = attempts > 0 or i > 0 or coerced
                return RepairResult(payload, repaired, attempts)
            last_error = error
        if regenerate is None or attempts >= budget:
            return RepairResult(None, True, attempts, failure=last_error or "no parsable output")
        attempts += 1
        text = regenerate(attempts)


# ---------------------------------------------------------------------------
# Trace structure


@dataclass
class StageOutput:
    stage: int
    payload: dict
    raw_text: str | None = None
    repaired: bool = False

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "name": STAGE_NAMES[self.stage],
            "payload": self.payload,
            "raw_text": self.raw_text,
            "repaired": self.repaired,
        }


@dataclass
class PipelineTrace:
    clue_id: str
    detection_id: str
    inspected: bool = False
    outputs: list[StageOutput] = field(default_factory=list)
    disposition: str | None = None
    local_action: str | None = None
    relevance: str | None = None
    cv_confidence: str | None = None
    interp_confidence: str | None = None
    strategy: str | None = None
    plan_tasks: list = field(default_factory=list)
    strength: float | None = None
    verdict: AutonomyVerdict | None = None
    concerns: list[AdvocateConcern] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def add(self, stage: int, payload: dict, raw: str | None = None, repaired: bool = False) -> None:
        if self.outputs and stage <= self.outputs[-1].stage:
            raise SarError(f"stage {stage} out of order after {self.outputs[-1].stage}")
        self.outputs.append(StageOutput(stage, payload, raw, repaired))

    def finish(self, disposition: str, local_action: str) -> None:
        if disposition not in DISPOSITIONS:
            raise SarError(f"unknown disposition {disposition!r}")
        if local_action not in LOCAL_ACTIONS:
            raise SarError(f"unknown local action {local_action!r}")
        self.disposition = disposition
        self.local_action = local_action

    def assessment(self) -> ClueAssessment:
        if not (self.relevance and self.cv_confidence and self.interp_confidence and self.strategy):
            raise SarError("trace has no complete assessment")
        return ClueAssessment(self.relevance, self.cv_confidence, self.interp_confidence, self.strategy)

    def to_dict(self) -> dict:
        return {
            "clue_id": self.clue_id,
            "detection_id": self.detection_id,
            "inspected": self.inspected,
            "stages": [o.to_dict() for o in self.outputs],
            "disposition": self.disposition,
            "local_action": self.local_action,
            "relevance": self.relevance,
            "cv_confidence": self.cv_confidence,
            "interp_confidence": self.interp_confidence,
            "strategy": self.strategy,
            "strength": self.strength,
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "concerns": [c.to_dict() for c in self.concerns],
            "warnings": self.warnings,
        }


class NextStep(Enum):
    REJECT = "reject"
    INSPECT = "inspect"
    AWAIT_APPROVAL = "await_approval"
    APPLY_UPDATE = "apply_update"
    NOTIFY_AND_APPLY = "notify_and_apply"
    QUEUE = "queue"


@dataclass
class AssessmentResult:
    trace: PipelineTrace
    next_step: NextStep
    approval_kind: str | None = None


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class ClueFacts:
    """Everything the pipeline needs to know about one detection."""

    clue_id: str
    detection_id: str
    description: str
    tags: dict
    location_context: str
    inspected: bool = False


@dataclass
class MissionContext:
    """Mission-level inputs shared by every stage of one assessment."""

    profile_items: list[dict]
    profile_tags: list[str]
    belief: StrategyBelief
    current_strategy: str
    hyperparams: Hyperparams
    entropy_policy: EntropyPolicy
    cost_policy: CostBenefitPolicy
    advocate_rules: list[AdvocateRule] | None
    plan_cost: Callable[[dict], TaskCost]
    plan_attributes: Callable[[dict], dict]


class CluePipeline:
    def __init__(self, backend: ReasoningBackend, kb: KnowledgeBase | None = None, repair_budget: int = 2):
        self.backend = backend
        self.kb = kb or KnowledgeBase.default()
        self.schemas = load_stage_schemas()
        self.templates = load_stage_templates()
        self.repair_budget = repair_budget

    # -- stages 1-2 ----------------------------------------------------------
    def classify(self, facts: ClueFacts, trace: PipelineTrace) -> str:
        """Simulated vision stages: confidences come from scenario tags."""
        tags = facts.tags or {}
        stage1_label = tags.get("stage1_label")
        stage1_conf = tags.get("stage1_confidence")
        if stage1_label is None or stage1_conf is None:
            trace.warnings.append("clue has no vision tags; defaulting classification to Low")
            stage1_label = stage1_label or "unidentified object"
            stage1_conf = stage1_conf or "Low"
        trace.add(1, {"label": stage1_label, "confidence": stage1_conf})
        stage2_conf = None
        if stage1_conf != "High":
            stage2_label = tags.get("stage2_label", stage1_label)
            stage2_conf = tags.get("stage2_confidence", stage1_conf)
            trace.add(2, {"label": stage2_label, "confidence": stage2_conf})
        return combine_cv_confidence(stage1_conf, stage2_conf)

    # -- backend stages -------------------------------------------------------
    def _run_backend_stage(self, stage: int, context: dict, trace: PipelineTrace) -> dict | None:
        prompt = self._render(stage, context)
        request = StageRequest(stage=stage, prompt=prompt, context=context)

        def regenerate(attempt: int) -> str:
            return self.backend.complete(request)

        try:
            raw = self.backend.complete(request)
        except Exception as exc:
            trace.warnings.append(f"backend unreachable at stage {stage}: {exc}")
            return None
        result = validate_and_repair(raw, self.schemas[stage], regenerate, self.repair_budget)
        if not result.ok:
            trace.warnings.append(f"stage {stage} output unusable after repairs: {result.failure}")
            return None
        trace.add(stage, result.payload, raw, result.repaired)
        return result.payload

    def _render(self, stage: int, context: dict) -> str:
        class _Safe(dict):
            def __missing__(self, key):
                return ""

        safe = _Safe({k: v for k, v in context.items() if isinstance(v, (str, int, float))})
        return self.templates[stage].format_map(safe)

    # -- full assessment -------------------------------------------------------
    def assess(self, facts: ClueFacts, mission: MissionContext) -> AssessmentResult:
        """Run stages 1-7 for one detection and decide what happens next."""
        trace = PipelineTrace(facts.clue_id, facts.detection_id, inspected=facts.inspected)

        trace.cv_confidence = self.classify(facts, trace)

        base_ctx = {
            "clue_id": facts.clue_id,
            "clue_description": facts.description,
            "location_context": facts.location_context,
            "profile_items": mission.profile_items,
            "profile_summary": "; ".join(
                f"{d.get('color', '')} {d['item']}".strip() for d in mission.profile_items
            ),
            "current_strategy": mission.current_strategy,
            "cv_confidence": trace.cv_confidence,
            "inspected": facts.inspected,
        }

        relevance_payload = self._run_backend_stage(3, base_ctx, trace)
        if relevance_payload is None:
            trace.finish("escalated", "defer_to_human")
            return AssessmentResult(trace, NextStep.AWAIT_APPROVAL, approval_kind="clue-relevance")
        trace.relevance = relevance_payload["relevance"]
        if trace.relevance == "Low":
            trace.finish("rejected", "do_nothing")
            return AssessmentResult(trace, NextStep.REJECT)

        query_tags = [f"clue-location/{facts.location_context}"] + mission.profile_tags
        entries = self.kb.retrieve(query_tags, facts.description, k=3, stage=4)
        tactical_ctx = dict(
            base_ctx,
            relevance=trace.relevance,
            knowledge=[{"id": e.id, "text": e.text, "tags": list(e.tags)} for e in entries],
            knowledge_text=" | ".join(e.text for e in entries),
        )
        tactical_payload = self._run_backend_stage(4, tactical_ctx, trace)
        if tactical_payload is None:
            trace.finish("escalated", "defer_to_human")
            return AssessmentResult(trace, NextStep.AWAIT_APPROVAL, approval_kind="clue-relevance")
        trace.interp_confidence = tactical_payload["interp_confidence"]

        plan_payload = self._run_backend_stage(5, tactical_ctx, trace)
        if plan_payload is None:
            trace.finish("escalated", "defer_to_human")
            return AssessmentResult(trace, NextStep.AWAIT_APPROVAL, approval_kind="clue-relevance")
        trace.strategy = plan_payload["strategy"]
        trace.plan_tasks = plan_payload.get("tasks", [])
        wants_inspection = any(t.get("kind") == "circle-inspect" for t in trace.plan_tasks)

        plan_attrs = mission.plan_attributes(plan_payload)
        consensus, concerns = run_advocates(plan_attrs, mission.advocate_rules)
        trace.concerns = concerns
        trace.add(6, {"consensus": consensus, "concerns": [c.to_dict() for c in concerns]})

        strength_estimate = clue_strength(trace.assessment(), mission.hyperparams)
        cost = mission.plan_cost(plan_payload)
        verdicts = [
            entropy_verdict(mission.belief, mission.current_strategy, trace.strategy, mission.entropy_policy),
            cost_benefit(cost, strength_estimate, mission.cost_policy),
        ]
        if consensus == "Escalate":
            verdicts.append(
                AutonomyVerdict(Verdict.REQUIRES_APPROVAL, "advocate review escalated the plan")
            )
        final = most_restrictive([v.decision for v in verdicts])
        # Keep the rationale of the verdict that decided the outcome.
        deciding = next(v for v in verdicts if v.decision == final)
        trace.verdict = AutonomyVerdict(
            final, deciding.rationale, verdicts[0].entropy, verdicts[0].dominant, verdicts[0].proposed
        )
        trace.add(7, trace.verdict.to_dict())

        if wants_inspection:
            # A close-up look, not a strategy change: gate on cost and advocates only.
            if consensus == "Escalate":
                trace.finish("escalated", "defer_to_human")
                return AssessmentResult(trace, NextStep.AWAIT_APPROVAL, approval_kind="advocate-escalation")
            if verdicts[1].decision == Verdict.AUTONOMOUS:
                trace.finish("inspecting", "adapt_own_behavior")
                return AssessmentResult(trace, NextStep.INSPECT)
            trace.finish("queued", "defer_to_human")
            return AssessmentResult(trace, NextStep.QUEUE)

        if final == Verdict.AUTONOMOUS:
            return AssessmentResult(trace, NextStep.APPLY_UPDATE)
        if final == Verdict.AUTONOMOUS_NOTIFY:
            return AssessmentResult(trace, NextStep.NOTIFY_AND_APPLY)
        if final == Verdict.DEFER:
            trace.finish("queued", "defer_to_human")
            return AssessmentResult(trace, NextStep.QUEUE)
        kind = "advocate-escalation" if consensus == "Escalate" else (
            "strategy-switch" if trace.strategy != mission.current_strategy else "clue-relevance"
        )
        return AssessmentResult(trace, NextStep.AWAIT_APPROVAL, approval_kind=kind)
