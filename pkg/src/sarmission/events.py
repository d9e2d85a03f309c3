"""Append-only mission event log, replay files, and integrity verification.

A replay is one header line (scenario + configuration) followed by one JSON
line per event, sequence numbers dense from zero. Everything the mission did
is re-derivable from this file; :func:`verify_replay` re-checks the core
invariants (normalization, update-strength derivation, re-application,
envelope bounds, approval bookkeeping) without trusting the engine.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .belief import ClueAssessment, Hyperparams, clue_strength
from .errors import ReplayError
from .guardrails import SafetyEnvelope, point_in_polygon
from .strategies import STRATEGIES

REPLAY_SCHEMA_VERSION = 1

TERMINAL_KINDS = ("found", "exhausted", "aborted")


def event_line(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Strictly ordered, gap-free, append-only event record."""

    def __init__(self) -> None:
        self.events: list[dict] = []

    def append(self, kind: str, tick: int, **payload) -> dict:
        event = {"seq": len(self.events), "tick": tick, "kind": kind}
        event.update(payload)
        self.events.append(event)
        return event

    def since(self, seq: int) -> list[dict]:
        return self.events[seq:]

    def __len__(self) -> int:
        return len(self.events)


@dataclass
class Replay:
    header: dict
    events: list[dict]

    @property
    def scenario_doc(self) -> dict:
        return self.header["scenario"]

    def terminal_event(self) -> dict | None:
        for event in reversed(self.events):
            if event["kind"] == "mission_terminal":
                return event
        return None


def dump_replay(header: dict, events: list[dict]) -> str:
    lines = [event_line({"kind": "header", "schema_version": REPLAY_SCHEMA_VERSION, **header})]
    lines.extend(event_line(e) for e in events)
    return "\n".join(lines) + "\n"


def write_replay(path: str | Path, header: dict, events: list[dict]) -> None:
    Path(path).write_text(dump_replay(header, events))


def load_replay(source: str | Path) -> Replay:
    if isinstance(source, Path):
        source = source.read_text()
    lines = [line for line in source.splitlines() if line.strip()]
    if not lines:
        raise ReplayError("replay is empty")
    header = json.loads(lines[0])
    if header.get("kind") != "header":
        raise ReplayError("first line is not a replay header")
    version = header.get("schema_version")
    if version != REPLAY_SCHEMA_VERSION:
        raise ReplayError(f"unsupported replay schema_version {version!r}, expected {REPLAY_SCHEMA_VERSION}")
    events = [json.loads(line) for line in lines[1:]]
    return Replay(header, events)


# ---------------------------------------------------------------------------
# Verification


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, passed, detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"[{status}] {c.name}" + (f": {c.detail}" if c.detail else ""))
        return "\n".join(lines)


def _fold_update(values: list[float], target_idx: int, strength: float) -> list[float]:
    scaled = list(values)
    scaled[target_idx] = (1.0 + strength) * scaled[target_idx]
    total = sum(scaled)
    return [v / total for v in scaled]


def verify_replay(replay: Replay) -> VerificationReport:
    report = VerificationReport()
    events = replay.events
    config = replay.header.get("config", {})
    hp_doc = config.get("hyperparams", {})
    hp = Hyperparams(
        relevance_weight=hp_doc.get("relevance_weight", 0.5),
        cv_weight=hp_doc.get("cv_weight", 0.5),
        coverage_threshold=hp_doc.get("coverage_threshold", 0.6),
    )

    # Sequence numbers: dense from zero, no gaps, no duplicates.
    seqs = [e["seq"] for e in events]
    gap_free = seqs == list(range(len(events)))
    report.add("sequence-gap-free", gap_free, "" if gap_free else f"sequence numbers are not dense: {seqs[:10]}...")

    terminal = replay.terminal_event()
    report.add(
        "terminal-event-present",
        terminal is not None,
        "" if terminal else "log ends without a mission_terminal event (truncated?)",
    )

    # Every recorded distribution is a normalized probability vector.
    bad_norm = []
    for e in events:
        dist = e.get("distribution")
        if dist is None:
            continue
        total = math.fsum(dist[s] for s in STRATEGIES)
        if abs(total - 1.0) > 1e-9 or any(dist[s] < 0 for s in STRATEGIES):
            bad_norm.append(e["seq"])
    report.add("distributions-normalized", not bad_norm, f"bad events: {bad_norm}" if bad_norm else "")

    # Update strengths on pipeline-driven updates re-derive from their traces.
    traces = {e["trace"]["detection_id"]: e["trace"] for e in events if e["kind"] == "trace"}
    bad_strength = []
    for e in events:
        if e["kind"] != "belief_update" or e.get("update_kind") != "positive":
            continue
        source = e.get("source", {})
        if source.get("type") != "pipeline":
            continue
        trace = traces.get(source.get("detection_id"))
        if trace is None:
            bad_strength.append((e["seq"], "no matching trace"))
            continue
        expected = clue_strength(
            ClueAssessment(
                trace["relevance"], trace["cv_confidence"], trace["interp_confidence"], trace["strategy"]
            ),
            hp,
        )
        if abs(expected - e["strength"]) > 1e-12:
            bad_strength.append((e["seq"], f"strength {e['strength']} != derived {expected}"))
        if trace["disposition"] != "updated_belief":
            bad_strength.append((e["seq"], f"trace disposition is {trace['disposition']}"))
    report.add("update-strength-rederivation", not bad_strength, str(bad_strength) if bad_strength else "")

    # Rejected traces must have no update events.
    rejected = {d for d, t in traces.items() if t["disposition"] == "rejected"}
    leaked = [
        e["seq"]
        for e in events
        if e["kind"] == "belief_update" and e.get("source", {}).get("detection_id") in rejected
    ]
    report.add("no-update-after-rejection", not leaked, f"events: {leaked}" if leaked else "")

    # Re-apply every update from the initial distribution.
    init = next((e for e in events if e["kind"] == "belief_init"), None)
    if init is None:
        report.add("belief-reapplication", False, "no belief_init event")
    else:
        values = [init["distribution"][s] for s in STRATEGIES]
        ok = True
        detail = ""
        for e in events:
            if e["kind"] != "belief_update":
                continue
            if e["update_kind"] == "reset":
                values = [e["distribution"][s] for s in STRATEGIES]
                continue
            values = _fold_update(values, STRATEGIES.index(e["target"]), e["strength"])
            recorded = [e["distribution"][s] for s in STRATEGIES]
            if any(abs(a - b) > 1e-9 for a, b in zip(values, recorded)):
                ok = False
                detail = f"divergence at seq {e['seq']}"
                break
        report.add("belief-reapplication", ok, detail)

    # Negative updates only at or above the coverage threshold.
    premature = [
        e["seq"]
        for e in events
        if e["kind"] == "belief_update"
        and e["update_kind"] == "negative"
        and e.get("coverage", 1.0) < hp.coverage_threshold
    ]
    report.add("decay-deferred-below-threshold", not premature, f"events: {premature}" if premature else "")

    # Envelope over all recorded agent states (post-enforcement).
    scenario_doc = replay.header.get("scenario", {})
    env_doc = scenario_doc.get("envelope")
    if env_doc:
        envelope = SafetyEnvelope.from_dict(env_doc)
        home = None
        violations = []
        for e in events:
            if e["kind"] != "agent_status":
                continue
            for agent in e["agents"]:
                if home is None:
                    home = tuple(e.get("home", (agent["x"], agent["y"])))
                x, y, alt = agent["x"], agent["y"], agent["altitude_m"]
                if agent["mode"] == "landed":
                    continue
                if not envelope.min_altitude_m <= alt <= envelope.max_altitude_m:
                    violations.append((e["seq"], agent["id"], "altitude"))
                hx, hy = e["home"]
                if math.hypot(x - hx, y - hy) > envelope.max_range_m + 1e-6:
                    violations.append((e["seq"], agent["id"], "range"))
                if envelope.include_geofence and not point_in_polygon(x, y, envelope.include_geofence):
                    violations.append((e["seq"], agent["id"], "include-geofence"))
                if any(point_in_polygon(x, y, poly) for poly in envelope.exclude_geofences):
                    violations.append((e["seq"], agent["id"], "exclude-geofence"))
                if (
                    agent["battery_fraction"] < envelope.battery_reserve_fraction
                    and agent["mode"] not in ("returning", "landed")
                ):
                    violations.append((e["seq"], agent["id"], "battery-reserve"))
        report.add("envelope-respected", not violations, f"violations: {violations[:5]}" if violations else "")

    # Approvals resolve exactly once, and all of them resolve by terminal time.
    created = {e["approval"]["id"] for e in events if e["kind"] == "approval_created"}
    resolutions: dict[str, int] = {}
    for e in events:
        if e["kind"] == "approval_resolved":
            resolutions[e["approval_id"]] = resolutions.get(e["approval_id"], 0) + 1
    double = [a for a, n in resolutions.items() if n > 1]
    unknown = [a for a in resolutions if a not in created]
    orphaned = [a for a in created if a not in resolutions] if terminal else []
    ok = not double and not unknown and not orphaned
    report.add(
        "approvals-resolved-once",
        ok,
        "" if ok else f"double={double} unknown={unknown} orphaned={orphaned}",
    )

    return report


# ---------------------------------------------------------------------------
# Snapshot reconstruction from a replay


class ReplayReader:
    """Rebuilds inspectable mission state at any event sequence number."""

    def __init__(self, replay: Replay):
        self.replay = replay

    def snapshot_at(self, seq: int) -> dict:
        belief: dict | None = None
        agents: dict[str, dict] = {}
        approvals: dict[str, dict] = {}
        dispositions: dict[str, str] = {}
        coverage: dict[str, float] = {}
        terminal = None
        tick = 0
        for e in self.replay.events:
            if e["seq"] > seq:
                break
            tick = e["tick"]
            kind = e["kind"]
            if kind in ("belief_init", "belief_update"):
                belief = e["distribution"]
            elif kind == "agent_status":
                for agent in e["agents"]:
                    agents[agent["id"]] = agent
            elif kind == "approval_created":
                approvals[e["approval"]["id"]] = dict(e["approval"], resolved=False)
            elif kind == "approval_resolved":
                if e["approval_id"] in approvals:
                    approvals[e["approval_id"]]["resolved"] = True
            elif kind == "trace":
                dispositions[e["trace"]["detection_id"]] = e["trace"]["disposition"]
            elif kind == "coverage":
                coverage = e["fractions"]
            elif kind == "mission_terminal":
                terminal = e["outcome"]
        return {
            "seq": seq,
            "tick": tick,
            "belief": belief,
            "agents": sorted(agents.values(), key=lambda a: a["id"]),
            "pending_approvals": [a for a in approvals.values() if not a["resolved"]],
            "dispositions": dispositions,
            "coverage": coverage,
            "terminal": terminal,
        }


def belief_series(replay: Replay) -> list[dict]:
    """Per-update belief time series (one row per update plus the initial row)."""
    rows = []
    for e in replay.events:
        if e["kind"] == "belief_init":
            rows.append({"seq": e["seq"], "tick": e["tick"], "event": "init", **e["distribution"]})
        elif e["kind"] == "belief_update":
            rows.append({
                "seq": e["seq"],
                "tick": e["tick"],
                "event": f"{e['update_kind']}:{e.get('target', '')}",
                **e["distribution"],
            })
    return rows
