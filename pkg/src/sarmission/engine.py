"""The mission engine: a single-threaded tick loop over the grid world.

All external inputs (operator actions, service commands) enter through a
timestamped command queue drained at the start of each tick, so the engine
stays deterministic: (scenario, seed, scripted operator policy) always yields
the same event log, byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import kernels
from .backends import ReasoningBackend, RuleBasedBackend
from .bayes import BayesNet, default_network, infer_strategies, load_network
from .belief import (
    BeliefAdjustment,
    CoverageTracker,
    Hyperparams,
    apply_negative_update,
    apply_operator_adjustment,
    apply_positive_update,
    clue_strength,
    reset_beliefs,
)
from .errors import ApprovalError, InvalidTransitionError, SarError
from .events import EventLog
from .guardrails import (
    CostBenefitPolicy,
    EntropyPolicy,
    TaskCost,
    check_envelope,
    entropy_verdict,
    normalized_entropy,
    Verdict,
)
from .knowledge import KnowledgeBase
from .pipeline import ClueFacts, CluePipeline, MissionContext, NextStep, PipelineTrace
from .policies import OperatorAction
from .strategies import STRATEGIES, StrategyBelief
from .world import (
    LOCATION_CONTEXT,
    AgentState,
    ClueSpec,
    CoverageMap,
    Scenario,
    Task,
    evidence_from_scenario,
    generate_tasks,
    inspect_task,
)

ENGINE_VERSION = "1.0"


@dataclass
class PendingApproval:
    id: str
    kind: str  # strategy-switch | clue-relevance | queued-task | advocate-escalation
    created_tick: int
    timeout_ticks: int
    context: dict
    resolved: bool = False
    resolution: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "created_tick": self.created_tick,
            "timeout_ticks": self.timeout_ticks,
            "context": self.context,
            "resolved": self.resolved,
            "resolution": self.resolution,
        }


@dataclass
class _ParkedTrace:
    trace: PipelineTrace
    facts: ClueFacts


class MissionEngine:
    def __init__(
        self,
        scenario: Scenario,
        policy=None,
        net: BayesNet | None = None,
        backend: ReasoningBackend | None = None,
        kb: KnowledgeBase | None = None,
        advocate_rules=None,
    ):
        self.scenario = scenario
        self.grid = scenario.grid
        self.policy = policy
        self.constants = scenario.constants
        self.tick_seconds = float(self.constants["tick_seconds"])

        hp_doc = scenario.hyperparams
        self.hp = Hyperparams(
            relevance_weight=hp_doc.get("relevance_weight", 0.5),
            cv_weight=hp_doc.get("cv_weight", 0.5),
            coverage_threshold=hp_doc.get("coverage_threshold", 0.6),
        )
        self.entropy_policy = EntropyPolicy(
            high_entropy_threshold=hp_doc.get("high_entropy_threshold", 0.85),
            delta_threshold=hp_doc.get("delta_threshold", 0.05),
        )
        self.cost_policy = CostBenefitPolicy(
            value_of_info_minutes=hp_doc.get("value_of_info_minutes", 20.0),
            max_cost_ratio=hp_doc.get("max_cost_ratio", 1.0),
        )

        if net is not None:
            self.net = net
        elif scenario.raw.get("network"):
            self.net = load_network(scenario.raw["network"])
        else:
            self.net = default_network()
        self.evidence = evidence_from_scenario(scenario)
        self.pipeline = CluePipeline(backend or RuleBasedBackend(), kb)
        self.advocate_rules = advocate_rules

        self.log = EventLog()
        self.tick_count = 0
        self.terminal: str | None = None
        self.region_scale = 1.0
        self.tracker = CoverageTracker()
        self.coverage = CoverageMap(scenario)

        self.agents: list[AgentState] = []
        home_xy = self.grid.center(scenario.home_cell)
        for i in range(scenario.agent_count):
            self.agents.append(AgentState(
                id=f"suas-{i + 1}",
                x=home_xy[0],
                y=home_xy[1],
                altitude_m=float(self.constants["cruise_altitude_m"]),
                battery_fraction=1.0,
                home=home_xy,
            ))

        self.task_queue: list[Task] = []
        self.generated_strategies: set[str] = set()
        self.approvals: dict[str, PendingApproval] = {}
        self.queued_tasks: list[dict] = []
        self.detected: set[str] = set()
        self.traces: list[PipelineTrace] = []
        self._parked: dict[str, _ParkedTrace] = {}
        self._commands: list[dict] = []
        self._approval_seq = 0
        self._detection_seq = 0
        self._found_by: str | None = None

        # Mission initialization: infer the starting belief and seed the plan.
        self.belief = infer_strategies(self.net, self.evidence, timestamp=0.0)
        self.active_strategy = self.belief.dominant()
        self.log.append(
            "mission_init", 0,
            scenario=scenario.name,
            agent_count=scenario.agent_count,
            seed=scenario.seed,
            backend=self.pipeline.backend.name,
            kernel_backend=kernels.BACKEND,
        )
        self._emit_belief("belief_init", None, None, source={"type": "init"})
        self._generate_strategy_tasks(self.active_strategy, provenance="planner")
        self._assign_tasks()
        self._emit_status()

    # ------------------------------------------------------------------
    # Event helpers

    @property
    def clock_s(self) -> float:
        return self.tick_count * self.tick_seconds

    def _emit_belief(self, kind: str, update_kind: str | None, adjustment: BeliefAdjustment | None,
                     source: dict, coverage: float | None = None) -> None:
        payload = {
            "distribution": self.belief.to_dict(),
            "entropy": normalized_entropy(self.belief),
            "dominant": self.belief.dominant(),
            "source": source,
        }
        if update_kind is not None:
            payload["update_kind"] = update_kind
        if adjustment is not None:
            payload["target"] = adjustment.target
            payload["strength"] = adjustment.strength
        if coverage is not None:
            payload["coverage"] = coverage
        self.log.append(kind, self.tick_count, **payload)

    def _emit_status(self) -> None:
        self.log.append(
            "agent_status", self.tick_count,
            agents=[a.snapshot() for a in self.agents],
            home=list(self.agents[0].home) if self.agents else [0.0, 0.0],
        )
        self.log.append(
            "coverage", self.tick_count,
            fractions={s: self.coverage.fraction(s) for s in STRATEGIES},
        )

    # ------------------------------------------------------------------
    # External command surface

    def enqueue_command(self, command: dict) -> None:
        self._commands.append(command)

    def enqueue_operator_action(self, action: OperatorAction) -> None:
        self.enqueue_command({"type": "operator_action", "action": action})

    def abort(self) -> None:
        self.enqueue_command({"type": "abort"})

    # ------------------------------------------------------------------
    # Tick loop

    def step(self, ticks: int = 1) -> list[dict]:
        """Advance exactly ``ticks`` ticks; returns the events they emitted."""
        if self.terminal is not None:
            raise InvalidTransitionError(f"mission already terminal ({self.terminal})")
        start = len(self.log)
        for _ in range(ticks):
            if self.terminal is not None:
                break
            self._tick()
        return self.log.events[start:]

    def run(self, max_ticks: int | None = None) -> str:
        budget = max_ticks if max_ticks is not None else int(self.constants["ticks_max"])
        while self.terminal is None and self.tick_count < budget:
            self._tick()
        if self.terminal is None:
            self._terminate("exhausted", reason="tick budget reached")
        return self.terminal

    def _tick(self) -> None:
        self.tick_count += 1

        self._drain_commands()
        if self.terminal is not None:
            return
        self._consult_policy()
        self._expire_approvals()
        self._advance_agents()
        self._sense()
        self._enforce_envelope_and_mark_coverage()
        self._apply_negative_evidence()
        self._check_strategy_change()
        self._assign_tasks()

        if self.tick_count % int(self.constants["status_interval_ticks"]) == 0:
            self._emit_status()

        self._check_terminal()

    # ------------------------------------------------------------------
    # Commands, approvals, operator actions

    def _drain_commands(self) -> None:
        commands, self._commands = self._commands, []
        for command in commands:
            if command["type"] == "operator_action":
                self._execute_operator_action(command["action"])
            elif command["type"] == "abort":
                self._terminate("aborted", reason="operator abort")
                return
            else:
                raise SarError(f"unknown command {command['type']!r}")

    def _consult_policy(self) -> None:
        if self.policy is None:
            return
        for approval in sorted(self.approvals.values(), key=lambda a: a.id):
            if approval.resolved:
                continue
            action = self.policy.decide(approval.to_dict(), self.tick_count)
            if action is not None:
                self._execute_operator_action(action)

    def _expire_approvals(self) -> None:
        for approval in sorted(self.approvals.values(), key=lambda a: a.id):
            if approval.resolved:
                continue
            if self.tick_count - approval.created_tick >= approval.timeout_ticks:
                self._resolve_approval(approval, "timeout", operator_id="timeout")

    def resolve_approval_by_id(self, approval_id: str, action: OperatorAction) -> None:
        """Validation hook for the service: checked now, applied on the queue."""
        approval = self.approvals.get(approval_id)
        if approval is None:
            raise ApprovalError(f"unknown approval {approval_id!r}")
        if approval.resolved:
            raise ApprovalError(f"approval {approval_id!r} already resolved")
        self.enqueue_operator_action(action)

    def _execute_operator_action(self, action: OperatorAction) -> None:
        if action.approval_id is not None:
            approval = self.approvals.get(action.approval_id)
            if approval is None:
                self.log.append("operator_error", self.tick_count,
                                error=f"unknown approval {action.approval_id!r}")
                return
            if approval.resolved:
                self.log.append("operator_error", self.tick_count,
                                error=f"approval {action.approval_id!r} already resolved")
                return
            self._resolve_approval(approval, action.decision, action.operator_id, action)
            return

        ts = self.clock_s
        if action.decision in ("boost", "reduce"):
            strength = action.strength if action.strength is not None else 0.5
            if action.decision == "reduce":
                strength = -abs(strength)
            try:
                adjustment = BeliefAdjustment(action.strategy, strength)
            except SarError as exc:
                self.log.append("operator_error", self.tick_count, error=str(exc))
                return
            self.belief = apply_operator_adjustment(self.belief, action.strategy, strength, ts)
            self._emit_belief("belief_update", "operator", adjustment,
                             source={"type": "operator", "operator_id": action.operator_id})
        elif action.decision == "reset":
            self.belief = reset_beliefs(self.net, self.evidence, ts)
            self.tracker.clear_decay_flags()
            self._emit_belief("belief_update", "reset", None,
                             source={"type": "operator", "operator_id": action.operator_id})
        elif action.decision == "expand-region":
            self.region_scale = action.region_scale if action.region_scale else self.region_scale * 1.5
            self.coverage.rebuild_eligibility(self.region_scale)
            self.task_queue = [t for t in self.task_queue if t.strategy != "Region"]
            self.generated_strategies.discard("Region")
            self.log.append("region_expanded", self.tick_count, scale=self.region_scale,
                            operator_id=action.operator_id)
            if self.active_strategy == "Region":
                self._generate_strategy_tasks("Region", provenance="operator")
        else:
            self.log.append("operator_error", self.tick_count,
                            error=f"decision {action.decision!r} requires an approval id")

    def _resolve_approval(self, approval: PendingApproval, decision: str,
                          operator_id: str, action: OperatorAction | None = None) -> None:
        approval.resolved = True
        approval.resolution = decision
        self.log.append("approval_resolved", self.tick_count,
                        approval_id=approval.id, decision=decision, operator=operator_id)

        parked = self._parked.pop(approval.id, None)
        if approval.kind == "queued-task":
            if decision == "approve":
                for record in self.queued_tasks:
                    if record["approval_id"] == approval.id and not record.get("dispatched"):
                        record["dispatched"] = True
                        self._dispatch_queued_record(record)
            return
        if parked is None:
            return
        trace, facts = parked.trace, parked.facts
        if decision == "approve":
            if action is not None and action.plan_edits is not None:
                trace.plan_tasks = action.plan_edits
            self._accept_trace(trace, facts, notify=False, provenance="operator")
        elif decision == "modify":
            if action is not None and action.plan_edits is not None:
                trace.plan_tasks = action.plan_edits
            self._accept_trace(trace, facts, notify=False, provenance="operator")
        elif decision == "timeout":
            self._queue_trace(trace, facts, reason="approval timed out")
        else:  # reject
            trace.finish("rejected", "do_nothing")
            self._emit_trace(trace)

    def _create_approval(self, kind: str, context: dict, parked: _ParkedTrace | None) -> PendingApproval:
        self._approval_seq += 1
        approval = PendingApproval(
            id=f"apv-{self._approval_seq:03d}",
            kind=kind,
            created_tick=self.tick_count,
            timeout_ticks=int(self.constants["approval_timeout_s"] / self.tick_seconds),
            context=context,
        )
        self.approvals[approval.id] = approval
        if parked is not None:
            self._parked[approval.id] = parked
        self.log.append("approval_created", self.tick_count, approval=approval.to_dict())
        return approval

    # ------------------------------------------------------------------
    # Agent motion

    def _advance_agents(self) -> None:
        speed = float(self.constants["cruise_speed_mps"])
        endurance = float(self.constants["endurance_s"])
        for agent in self.agents:
            if agent.mode == "landed":
                continue
            distance = speed * self.tick_seconds
            if agent.mode == "returning":
                hx, hy = agent.home
                agent.x, agent.y, _, arrived = kernels.advance_along_path(
                    agent.x, agent.y, 0, [hx], [hy], distance)
                if arrived:
                    agent.mode = "landed"
                    self.log.append("agent_landed", self.tick_count, agent=agent.id)
            elif agent.task is not None:
                wx = [w[0] for w in agent.task.waypoints]
                wy = [w[1] for w in agent.task.waypoints]
                agent.x, agent.y, agent.leg, done = kernels.advance_along_path(
                    agent.x, agent.y, agent.leg, wx, wy, distance)
                if agent.mode == "enroute" and agent.leg > 0:
                    agent.mode = "inspecting" if agent.task.kind == "circle-inspect" else "searching"
                if done:
                    self._complete_task(agent)
            agent.battery_fraction = max(0.0, agent.battery_fraction - self.tick_seconds / endurance)

    def _complete_task(self, agent: AgentState) -> None:
        task = agent.task
        agent.task = None
        agent.leg = 0
        agent.mode = "idle"
        self.log.append("task_completed", self.tick_count, agent=agent.id, task_id=task.id)
        if task.kind == "circle-inspect" and task.clue_id is not None:
            self.log.append("inspection_complete", self.tick_count, agent=agent.id, clue_id=task.clue_id)
            clue = self._clue_by_id(task.clue_id)
            if clue is not None and clue.inspection is not None:
                self._detection_seq += 1
                self._process_detection(agent, clue, inspected=True,
                                        detection_id=f"det-{self._detection_seq:03d}")

    # ------------------------------------------------------------------
    # Sensing and the pipeline

    def _clue_by_id(self, clue_id: str) -> ClueSpec | None:
        for clue in self.scenario.clues:
            if clue.id == clue_id:
                return clue
        return None

    def _sensing_agents(self) -> list[AgentState]:
        return [a for a in self.agents if a.mode in ("enroute", "searching", "inspecting")]

    def _sense(self) -> None:
        radius = float(self.constants["footprint_radius_m"])
        for agent in self._sensing_agents():
            for clue in self.scenario.clues:
                if clue.id in self.detected:
                    continue
                cx, cy = self.grid.center(clue.cell)
                if math.hypot(agent.x - cx, agent.y - cy) <= radius:
                    self.detected.add(clue.id)
                    self._detection_seq += 1
                    detection_id = f"det-{self._detection_seq:03d}"
                    self.log.append("detection", self.tick_count, agent=agent.id,
                                    clue_id=clue.id, cell=list(clue.cell),
                                    detection_id=detection_id)
                    self._process_detection(agent, clue, inspected=False, detection_id=detection_id)
            if self._found_by is None:
                px, py = self.grid.center(tuple(self.scenario.person["cell"]))
                if math.hypot(agent.x - px, agent.y - py) <= radius:
                    self._found_by = agent.id

    def _location_context(self, clue: ClueSpec) -> str:
        feature = self.grid.feature_at(clue.cell) or "open"
        return LOCATION_CONTEXT.get(feature, "open")

    def _mission_context(self, agent: AgentState, clue: ClueSpec) -> MissionContext:
        speed = float(self.constants["cruise_speed_mps"])
        orbit_radius = float(self.constants["inspect_orbit_radius_m"])
        clue_xy = self.grid.center(clue.cell)

        def plan_cost(plan: dict) -> TaskCost:
            wants_inspection = any(t.get("kind") == "circle-inspect" for t in plan.get("tasks", []))
            if not wants_inspection:
                return TaskCost(0.0)
            if not self.scenario.envelope.permits_point(*clue_xy):
                return TaskCost(0.0, outside_geofence=True)
            detour_m = 2.0 * math.hypot(agent.x - clue_xy[0], agent.y - clue_xy[1])
            orbit_m = 2.0 * math.pi * orbit_radius
            return TaskCost(detour_minutes=(detour_m + orbit_m) / speed / 60.0)

        def plan_attributes(plan: dict) -> dict:
            return {
                "strategy": plan.get("strategy"),
                "task_kinds": [t.get("kind") for t in plan.get("tasks", [])],
                "night_operation": self.scenario.environment.get("daylight") == "night",
                "anti_collision_lighting": bool(self.scenario.raw.get("anti_collision_lighting", False)),
                "max_altitude_m": float(self.constants["cruise_altitude_m"]),
                "terrain_clearance_m": float(self.constants["cruise_altitude_m"]),
                "crosses_restricted_airspace": bool(self.scenario.raw.get("restricted_airspace", False)),
                "over_people": False,
                "life_risk": True,
                "captures_bystander_imagery": False,
                "retention_policy": "minimal",
                "decision_logging_disabled": False,
                "estimated_battery_after_fraction": min(a.battery_fraction for a in self.agents) - 0.02,
                "tasks_assigned_to_single_agent": len(plan.get("tasks", [])),
            }

        return MissionContext(
            profile_items=self.scenario.profile_items(),
            profile_tags=[f"profile/{self.scenario.profile['age_group']}"],
            belief=self.belief,
            current_strategy=self.active_strategy,
            hyperparams=self.hp,
            entropy_policy=self.entropy_policy,
            cost_policy=self.cost_policy,
            advocate_rules=self.advocate_rules,
            plan_cost=plan_cost,
            plan_attributes=plan_attributes,
        )

    def _process_detection(self, agent: AgentState, clue: ClueSpec, inspected: bool,
                           detection_id: str) -> None:
        if inspected:
            source = clue.inspection or {}
            facts = ClueFacts(
                clue_id=clue.id,
                detection_id=detection_id,
                description=source.get("description", clue.description),
                tags=source.get("tags", clue.tags),
                location_context=self._location_context(clue),
                inspected=True,
            )
        else:
            facts = ClueFacts(
                clue_id=clue.id,
                detection_id=detection_id,
                description=clue.description,
                tags=clue.tags,
                location_context=self._location_context(clue),
                inspected=False,
            )
        result = self.pipeline.assess(facts, self._mission_context(agent, clue))
        trace = result.trace
        for warning in trace.warnings:
            self.log.append("pipeline_warning", self.tick_count, detection_id=detection_id, message=warning)

        if result.next_step == NextStep.REJECT:
            self._emit_trace(trace)
        elif result.next_step == NextStep.INSPECT:
            self._emit_trace(trace)
            task = inspect_task(clue, self.scenario, self._detection_seq)
            if agent.task is not None:
                self._requeue(agent.task)
            agent.task = task
            agent.leg = 0
            agent.mode = "inspecting"
            self.log.append("task_assigned", self.tick_count, agent=agent.id, task=task.to_dict())
        elif result.next_step == NextStep.APPLY_UPDATE:
            if not self._policy_vetoes(trace, facts):
                self._accept_trace(trace, facts, notify=False, provenance="pipeline")
        elif result.next_step == NextStep.NOTIFY_AND_APPLY:
            if not self._policy_vetoes(trace, facts):
                self._accept_trace(trace, facts, notify=True, provenance="pipeline")
        elif result.next_step == NextStep.QUEUE:
            self._queue_trace(trace, facts, reason=trace.verdict.rationale if trace.verdict else "deferred")
        elif result.next_step == NextStep.AWAIT_APPROVAL:
            mission_ctx = self._mission_context(agent, clue)
            cost = mission_ctx.plan_cost({"strategy": trace.strategy, "tasks": trace.plan_tasks})
            context = {
                "clue_id": clue.id,
                "detection_id": detection_id,
                "image_ref": f"clue-images/{clue.id}.jpg",
                "geolocation": list(self.grid.center(clue.cell)),
                "plan": {"strategy": trace.strategy, "tasks": trace.plan_tasks},
                "rationale": trace.verdict.rationale if trace.verdict else "",
                "entropy": trace.verdict.entropy if trace.verdict else None,
                "cost_minutes": cost.detour_minutes,
                "concerns": [c.to_dict() for c in trace.concerns],
                "relevance": trace.relevance,
                "strength": clue_strength(trace.assessment(), self.hp) if self._assessment_complete(trace) else None,
            }
            self._create_approval(result.approval_kind, context, _ParkedTrace(trace, facts))

    @staticmethod
    def _assessment_complete(trace: PipelineTrace) -> bool:
        return all((trace.relevance, trace.cv_confidence, trace.interp_confidence, trace.strategy))

    def _policy_vetoes(self, trace: PipelineTrace, facts: ClueFacts) -> bool:
        """Clue-level rejection: an operator may reject any surfaced clue,
        even one the autonomy gate would act on without approval."""
        veto = getattr(self.policy, "veto_clue", None)
        if veto is None:
            return False
        digest = {"clue_id": facts.clue_id, "detection_id": facts.detection_id,
                  "relevance": trace.relevance, "strategy": trace.strategy}
        if not veto(digest):
            return False
        trace.finish("rejected", "do_nothing")
        self._emit_trace(trace)
        self.log.append("clue_rejected", self.tick_count, detection_id=facts.detection_id,
                        clue_id=facts.clue_id, operator=getattr(self.policy, "name", "operator"))
        return True

    def _emit_trace(self, trace: PipelineTrace) -> None:
        self.traces.append(trace)
        self.log.append("trace", self.tick_count, trace=trace.to_dict())

    def _accept_trace(self, trace: PipelineTrace, facts: ClueFacts, notify: bool, provenance: str) -> None:
        if not self._assessment_complete(trace):
            # A trace escalated on backend failure has no usable assessment;
            # approving it cannot produce a principled update.
            trace.finish("rejected", "do_nothing")
            self._emit_trace(trace)
            self.log.append("pipeline_warning", self.tick_count, detection_id=facts.detection_id,
                            message="approved trace lacks a complete assessment; treated as rejected")
            return
        strength = clue_strength(trace.assessment(), self.hp)
        trace.strength = strength
        swarm_level = any(t.get("kind") != "circle-inspect" for t in trace.plan_tasks)
        trace.finish("updated_belief", "request_swarm_help" if swarm_level else "adapt_own_behavior")
        self._emit_trace(trace)

        adjustment = BeliefAdjustment(trace.strategy, strength)
        self.belief = apply_positive_update(self.belief, adjustment, self.clock_s)
        self._emit_belief(
            "belief_update", "positive", adjustment,
            source={"type": "pipeline", "detection_id": facts.detection_id,
                    "clue_id": facts.clue_id, "provenance": provenance},
        )
        if notify:
            self.log.append("notify", self.tick_count,
                            message=f"autonomous adaptation toward {trace.strategy} from clue {facts.clue_id}",
                            detection_id=facts.detection_id)
        self._generate_strategy_tasks(trace.strategy, provenance="pipeline")

    def _queue_trace(self, trace: PipelineTrace, facts: ClueFacts, reason: str) -> None:
        if trace.disposition is None:
            trace.finish("queued", "defer_to_human")
        self._emit_trace(trace)
        clue = self._clue_by_id(facts.clue_id)
        record = {
            "id": f"queued-{len(self.queued_tasks) + 1:03d}",
            "clue_id": facts.clue_id,
            "detection_id": facts.detection_id,
            "image_ref": f"clue-images/{facts.clue_id}.jpg",
            "geolocation": list(self.grid.center(clue.cell)) if clue else None,
            "plan": {"strategy": trace.strategy, "tasks": trace.plan_tasks},
            "reason": reason,
            "dispatched": False,
        }
        approval = self._create_approval("queued-task", dict(record), None)
        record["approval_id"] = approval.id
        self.queued_tasks.append(record)
        self.log.append("task_queued", self.tick_count, record=record)

    def _dispatch_queued_record(self, record: dict) -> None:
        clue = self._clue_by_id(record["clue_id"])
        plan = record.get("plan") or {}
        wants_inspection = any(t.get("kind") == "circle-inspect" for t in plan.get("tasks", []))
        if wants_inspection and clue is not None:
            self._detection_seq += 1
            task = inspect_task(clue, self.scenario, self._detection_seq)
            self._requeue(task)
        elif plan.get("strategy"):
            self._generate_strategy_tasks(plan["strategy"], provenance="operator")

    # ------------------------------------------------------------------
    # Envelope, coverage, negative evidence

    def _enforce_envelope_and_mark_coverage(self) -> None:
        envelope = self.scenario.envelope
        radius = float(self.constants["footprint_radius_m"])
        for agent in self.agents:
            if agent.mode == "landed":
                continue
            enforcement = check_envelope(
                agent.x, agent.y, agent.altitude_m, agent.battery_fraction, agent.home, envelope
            )
            if enforcement is not None:
                self.log.append("envelope_enforced", self.tick_count, agent=agent.id,
                                enforcement=enforcement.to_dict())
                if enforcement.action == "clamp_altitude":
                    agent.altitude_m = enforcement.corrected_altitude
                elif enforcement.action == "return_home":
                    if agent.task is not None and agent.task.kind != "circle-inspect":
                        self._requeue(agent.task)
                    agent.task = None
                    agent.leg = 0
                    agent.mode = "returning"
                elif enforcement.action == "clamp_position":
                    agent.x, agent.y = enforcement.corrected_position
                    agent.stuck_ticks += 1
                    if agent.stuck_ticks >= 3 and agent.task is not None:
                        agent.leg += 1  # skip an unreachable waypoint
                        agent.stuck_ticks = 0
            else:
                agent.stuck_ticks = 0
            if agent.mode in ("enroute", "searching", "inspecting"):
                self.coverage.mark(agent.x, agent.y, radius)

    def _apply_negative_evidence(self) -> None:
        for strategy in STRATEGIES:
            fraction = self.coverage.fraction(strategy)
            if fraction > self.tracker.fractions[strategy]:
                self.tracker.observe(strategy, fraction)
            if self.tracker.decay_due(strategy, self.hp):
                self.belief, adjustment = apply_negative_update(
                    self.belief, strategy, self.tracker, self.hp, self.clock_s
                )
                if adjustment is not None:
                    self.tracker.mark_decayed(strategy)
                    self._emit_belief(
                        "belief_update", "negative", adjustment,
                        source={"type": "coverage"},
                        coverage=self.tracker.fractions[strategy],
                    )

    def _check_strategy_change(self) -> None:
        dominant = self.belief.dominant()
        if dominant == self.active_strategy:
            return
        verdict = entropy_verdict(self.belief, self.active_strategy, dominant, self.entropy_policy)
        old = self.active_strategy
        self.active_strategy = dominant
        self.log.append("strategy_change", self.tick_count, old=old, new=dominant,
                        verdict=verdict.decision.value)
        if verdict.decision == Verdict.AUTONOMOUS_NOTIFY:
            self.log.append("notify", self.tick_count,
                            message=f"swarm focus moved from {old} to {dominant}")
        self._generate_strategy_tasks(dominant, provenance="planner")
        if self.constants["preempt_on_strategy_change"]:
            for agent in self.agents:
                if agent.task is not None and agent.task.strategy != dominant \
                        and agent.task.kind != "circle-inspect":
                    self._requeue(agent.task)
                    agent.task = None
                    agent.leg = 0
                    agent.mode = "idle"

    # ------------------------------------------------------------------
    # Task management

    def _generate_strategy_tasks(self, strategy: str, provenance: str) -> None:
        if strategy in self.generated_strategies:
            return
        self.generated_strategies.add(strategy)
        tasks = generate_tasks(strategy, self.scenario, self.region_scale, provenance)
        if not tasks:
            self.log.append("tasks_empty", self.tick_count, strategy=strategy,
                            note="strategy has no searchable cells on this terrain")
            return
        self.task_queue.extend(tasks)
        self.log.append("tasks_generated", self.tick_count, strategy=strategy,
                        count=len(tasks), provenance=provenance)

    def _requeue(self, task: Task) -> None:
        self.task_queue.append(task)
        self.task_queue.sort(key=lambda t: (t.priority, t.id))

    def _assign_tasks(self) -> None:
        idle = [a for a in self.agents if a.mode == "idle" and a.battery_fraction >
                self.scenario.envelope.battery_reserve_fraction]
        if not idle:
            return

        def strategy_rank(strategy: str) -> tuple:
            return (0 if strategy == self.active_strategy else 1, -self.belief[strategy], strategy)

        assignable = sorted(self.task_queue, key=lambda t: strategy_rank(t.strategy) + (t.priority, t.id))
        for task in assignable:
            if not idle:
                break
            nearest = min(idle, key=lambda a: (math.hypot(a.x - task.waypoints[0][0],
                                                          a.y - task.waypoints[0][1]), a.id))
            idle.remove(nearest)
            self.task_queue.remove(task)
            nearest.task = task
            nearest.leg = 0
            nearest.mode = "enroute"
            self.log.append("task_assigned", self.tick_count, agent=nearest.id, task=task.to_dict())

    # ------------------------------------------------------------------
    # Terminal handling

    def _check_terminal(self) -> None:
        if self.terminal is not None:
            return
        if self._found_by is not None:
            adjustment = BeliefAdjustment(self.active_strategy, 0.8)
            self.belief = apply_positive_update(self.belief, adjustment, self.clock_s)
            self._emit_belief("belief_update", "positive", adjustment,
                             source={"type": "person_sighting", "agent": self._found_by})
            self._terminate("found", agent=self._found_by,
                            cell=list(self.scenario.person["cell"]))
            return
        if all(a.mode == "landed" for a in self.agents):
            self._terminate("exhausted", reason="all agents landed")
            return
        if self.tick_count >= int(self.constants["ticks_max"]):
            self._terminate("exhausted", reason="tick budget reached")

    def _terminate(self, outcome: str, **details) -> None:
        self.terminal = outcome
        for approval in sorted(self.approvals.values(), key=lambda a: a.id):
            if not approval.resolved:
                self._resolve_approval(approval, "expired", operator_id="mission-end")
        self._emit_status()
        self.log.append("mission_terminal", self.tick_count, outcome=outcome, **details)

    # ------------------------------------------------------------------
    # Views

    def snapshot(self, last_events: int = 20) -> dict:
        return {
            "tick": self.tick_count,
            "clock_s": self.clock_s,
            "terminal": self.terminal,
            "belief": self.belief.to_dict(),
            "entropy": normalized_entropy(self.belief),
            "dominant": self.belief.dominant(),
            "active_strategy": self.active_strategy,
            "agents": [a.snapshot() for a in self.agents],
            "task_queue_size": len(self.task_queue),
            "pending_approvals": [a.to_dict() for a in sorted(self.approvals.values(), key=lambda x: x.id)
                                  if not a.resolved],
            "queued_tasks": list(self.queued_tasks),
            "coverage": {s: self.coverage.fraction(s) for s in STRATEGIES},
            "detected_clues": sorted(self.detected),
            "events_total": len(self.log),
            "events": self.log.events[-last_events:],
        }

    def replay_header(self) -> dict:
        return {
            "engine_version": ENGINE_VERSION,
            "scenario": self.scenario.raw,
            "config": {
                "hyperparams": {
                    "relevance_weight": self.hp.relevance_weight,
                    "cv_weight": self.hp.cv_weight,
                    "coverage_threshold": self.hp.coverage_threshold,
                    "high_entropy_threshold": self.entropy_policy.high_entropy_threshold,
                    "delta_threshold": self.entropy_policy.delta_threshold,
                    "value_of_info_minutes": self.cost_policy.value_of_info_minutes,
                    "max_cost_ratio": self.cost_policy.max_cost_ratio,
                },
                "policy": getattr(self.policy, "name", None),
                "backend": self.pipeline.backend.name,
            },
        }
