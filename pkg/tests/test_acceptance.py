"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion; any failure names the criterion that regressed.
"""

import json
import random
import time
from pathlib import Path

import pytest

from sarmission.backends import RuleBasedBackend
from sarmission.bayes import infer_strategies, joint_enumeration_oracle
from sarmission.belief import (
    BeliefAdjustment,
    ClueAssessment,
    CoverageTracker,
    Hyperparams,
    apply_negative_update,
    apply_operator_adjustment,
    apply_positive_update,
    clue_strength,
)
from sarmission.engine import MissionEngine
from sarmission.errors import ZeroLikelihoodError
from sarmission.events import Replay, dump_replay, verify_replay
from sarmission.guardrails import Verdict, entropy_verdict, normalized_entropy
from sarmission.knowledge import KnowledgeBase
from sarmission.pipeline import CluePipeline, NextStep, load_stage_schemas, validate_and_repair
from sarmission.policies import AlwaysApprove, AlwaysReject, ApproveAfter
from sarmission.strategies import STRATEGIES, StrategyBelief
from sarmission.world import load_scenario

from netgen import random_evidence, random_network
from test_pipeline import make_context, facts as clue_facts
from test_repair import CORPUS, SCHEMAS, _assert_schema_valid

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"
SHIPPED_SCENARIOS = sorted(SCENARIO_DIR.glob("*.json"))

TABLE_2A = StrategyBelief.from_values([0.10, 0.08, 0.12, 0.05, 0.65])
TABLE_2B = StrategyBelief.from_values([0.22, 0.21, 0.22, 0.12, 0.23])


def announce(name):
    print(f"\nACCEPTANCE PASS: {name}")


def pipeline_positive_updates(events):
    return [
        e for e in events
        if e["kind"] == "belief_update"
        and e.get("update_kind") == "positive"
        and e.get("source", {}).get("type") == "pipeline"
    ]


def test_criterion_01_worked_example_reproduction():
    """Red-hat trace: all-High levels with even weights give exactly 0.8,
    applied as a positive update to Waterways. Runs in under a second."""
    start = time.perf_counter()

    pipe = CluePipeline(RuleBasedBackend(), KnowledgeBase.default())
    result = pipe.assess(
        clue_facts("a red hat floating at the water's edge",
                   {"stage1_label": "red hat", "stage1_confidence": "High"},
                   location="shoreline", clue_id="red-hat"),
        make_context(),
    )
    trace = result.trace
    assert (trace.relevance, trace.cv_confidence, trace.interp_confidence) == ("High", "High", "High")
    assert trace.strategy == "Waterways"

    strength = clue_strength(trace.assessment(), Hyperparams(relevance_weight=0.5, cv_weight=0.5))
    assert abs(strength - 0.8) <= 1e-12

    before = StrategyBelief.uniform()
    after = apply_positive_update(before, BeliefAdjustment(trace.strategy, strength))
    assert after["Waterways"] > before["Waterways"]
    assert after["Waterways"] == pytest.approx(0.36 / 1.16, abs=1e-12)

    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    announce(f"worked-example reproduction (strength=0.8 exact, {elapsed * 1e3:.0f}ms)")


def test_criterion_02_entropy_regimes():
    """Concentrated distribution gates switches on approval; flat distribution
    allows within-margin adaptation with notification."""
    assert normalized_entropy(TABLE_2A) < 0.85
    assert entropy_verdict(TABLE_2A, "Region", "Region").decision == Verdict.AUTONOMOUS
    assert entropy_verdict(TABLE_2A, "Region", "Trail").decision == Verdict.REQUIRES_APPROVAL

    assert normalized_entropy(TABLE_2B) >= 0.85
    assert entropy_verdict(TABLE_2B, "Region", "Contour").decision == Verdict.REQUIRES_APPROVAL
    assert entropy_verdict(TABLE_2B, "Region", "Shelter").decision == Verdict.AUTONOMOUS_NOTIFY
    announce("entropy regimes (verdict table exact)")


def test_criterion_03_mission_trajectory():
    """The shipped lakeside mission under always-approve reproduces the
    expected narrative order, headless, in under ten seconds."""
    start = time.perf_counter()
    scenario = load_scenario(SCENARIO_DIR / "rockies_lake.json")
    engine = MissionEngine(scenario, policy=AlwaysApprove())
    outcome = engine.run()
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.3f}s"
    assert outcome == "found"

    events = engine.log.events
    detection_clue = {
        e["detection_id"]: e["clue_id"] for e in events if e["kind"] == "detection"
    }
    # Inspection passes generate fresh detection ids; map them via traces.
    for e in events:
        if e["kind"] == "trace":
            detection_clue.setdefault(e["trace"]["detection_id"], e["trace"]["clue_id"])

    milestones = []
    for e in events:
        kind = e["kind"]
        if kind == "belief_init" and e["dominant"] == "Region":
            milestones.append("init-region-dominant")
        elif kind == "belief_update" and e.get("update_kind") == "positive":
            clue = detection_clue.get(e.get("source", {}).get("detection_id"))
            if clue == "doll" and e["target"] == "Region":
                milestones.append("doll-reinforces-region")
            if clue == "red-hat" and e["target"] == "Waterways":
                assert abs(e["strength"] - 0.8) <= 1e-12
                milestones.append("red-hat-raises-waterways")
                if e["dominant"] == "Waterways":
                    milestones.append("waterways-dominant")
        elif kind == "trace" and e["trace"]["clue_id"] == "red-cloth":
            milestones.append(f"red-cloth-{e['trace']['disposition']}")
        elif kind == "approval_resolved" and e["decision"] == "approve":
            milestones.append("operator-approval")
        elif kind == "mission_terminal":
            milestones.append(f"terminal-{e['outcome']}")

    expected_order = [
        "init-region-dominant",
        "doll-reinforces-region",
        "red-cloth-inspecting",
        "red-cloth-rejected",
        "operator-approval",
        "red-hat-raises-waterways",
        "waterways-dominant",
        "terminal-found",
    ]
    cursor = 0
    for milestone in milestones:
        if cursor < len(expected_order) and milestone == expected_order[cursor]:
            cursor += 1
    assert cursor == len(expected_order), (
        f"missing milestones {expected_order[cursor:]}; saw {milestones}"
    )

    # The rejected inspection must not move the belief.
    cloth_detections = {d for d, c in detection_clue.items() if c == "red-cloth"}
    for e in pipeline_positive_updates(events):
        assert e["source"]["detection_id"] not in cloth_detections
    announce(f"mission trajectory (found in {engine.tick_count} ticks, {elapsed:.2f}s wall)")


def test_criterion_04_negative_evidence_gate():
    """No decay below the 60% coverage threshold; at 75% the dominant
    strategy decays by exactly the covered fraction."""
    hp = Hyperparams()
    tracker = CoverageTracker()
    tracker.observe("Region", 0.50)
    unchanged, adjustment = apply_negative_update(TABLE_2A, "Region", tracker, hp)
    assert adjustment is None
    assert unchanged.values() == TABLE_2A.values()

    tracker.observe("Region", 0.75)
    decayed, adjustment = apply_negative_update(TABLE_2A, "Region", tracker, hp)
    assert adjustment is not None and adjustment.strength == -0.75
    assert decayed["Region"] == pytest.approx(0.317073, abs=1e-6)
    announce("negative-evidence gate (deferral at 0.50, decay to 0.317073 at 0.75)")


def test_criterion_05_inference_oracle_equivalence():
    """Variable elimination matches full-joint enumeration on 200+ random
    networks within 1e-9 component-wise."""
    rng = random.Random(20250810)
    compared = 0
    attempts = 0
    worst = 0.0
    while compared < 200:
        attempts += 1
        assert attempts < 2000, "too many degenerate networks"
        net = random_network(rng, max_nodes=8, max_states=4)
        evidence = random_evidence(rng, net)
        try:
            ve = infer_strategies(net, evidence)
            oracle = joint_enumeration_oracle(net, evidence)
        except ZeroLikelihoodError:
            continue
        for s in STRATEGIES:
            diff = abs(ve[s] - oracle[s])
            worst = max(worst, diff)
            assert diff <= 1e-9
        compared += 1
    announce(f"inference oracle equivalence ({compared} networks, worst diff {worst:.2e})")


def test_criterion_06_normalization_and_ratio_property():
    """1000+ random update sequences keep the distribution normalized and
    preserve non-target ratios at every step."""
    rng = random.Random(42)
    hp = Hyperparams()
    sequences = 0
    for _ in range(1000):
        raw = [rng.random() + 1e-3 for _ in STRATEGIES]
        total = sum(raw)
        belief = StrategyBelief.from_values([v / total for v in raw])
        tracker = CoverageTracker()
        coverage = {s: 0.0 for s in STRATEGIES}
        for _ in range(rng.randint(1, 50)):
            kind = rng.choice(["positive", "negative", "operator"])
            target = rng.choice(STRATEGIES)
            before = belief
            if kind == "positive":
                strength = clue_strength(
                    ClueAssessment(
                        rng.choice(["High", "Medium", "Low"]),
                        rng.choice(["High", "Medium", "Low"]),
                        rng.choice(["High", "Medium", "Low"]),
                        target,
                    ),
                    hp,
                )
                belief = apply_positive_update(belief, BeliefAdjustment(target, strength))
            elif kind == "negative":
                coverage[target] = min(1.0, coverage[target] + rng.random() * 0.4)
                tracker.observe(target, coverage[target])
                belief, _ = apply_negative_update(belief, target, tracker, hp)
            else:
                belief = apply_operator_adjustment(belief, target, rng.uniform(-0.9, 2.0))

            assert abs(sum(belief.values()) - 1.0) <= 1e-9
            others = [s for s in STRATEGIES if s != target]
            for i in range(len(others)):
                for j in range(i + 1, len(others)):
                    expected = before[others[i]] / before[others[j]]
                    actual = belief[others[i]] / belief[others[j]]
                    assert actual == pytest.approx(expected, rel=1e-9)
        sequences += 1
    announce(f"normalization + ratio preservation over {sequences} random sequences")


def test_criterion_07_deterministic_replays():
    """Two identical runs of every shipped scenario produce byte-identical
    replay logs."""
    for path in SHIPPED_SCENARIOS:
        dumps = []
        for _ in range(2):
            engine = MissionEngine(load_scenario(path), policy=AlwaysApprove())
            engine.run()
            dumps.append(dump_replay(engine.replay_header(), engine.log.events))
        assert dumps[0] == dumps[1], f"replays diverged for {path.name}"
    announce(f"determinism ({len(SHIPPED_SCENARIOS)} scenarios byte-identical)")


def test_criterion_08_repair_loop():
    """Every designated-repairable mangled output parses; nothing ever yields
    a schema-violating payload; exhausted budgets fail without crashing."""
    repaired = 0
    for name, stage, raw, repairable, expected in CORPUS:
        result = validate_and_repair(raw, SCHEMAS[stage])
        if repairable:
            assert result.ok, f"{name} should be repairable: {result.failure}"
            _assert_schema_valid(result.payload, SCHEMAS[stage])
            repaired += 1
        else:
            assert not result.ok, f"{name} should fail"

    exhausted = validate_and_repair("garbage", SCHEMAS[3], lambda attempt: "still garbage", budget=2)
    assert not exhausted.ok and exhausted.attempts == 2
    assert len(CORPUS) >= 20
    announce(f"repair loop ({repaired} repaired of {len(CORPUS)} corpus cases, no schema leaks)")


def test_criterion_09_envelope_safety():
    """Across all shipped scenarios and scripted policies, replay verification
    reports zero post-enforcement envelope violations."""
    checked = 0
    for path in SHIPPED_SCENARIOS:
        for policy_fn in (AlwaysApprove, AlwaysReject, lambda: ApproveAfter(60)):
            engine = MissionEngine(load_scenario(path), policy=policy_fn())
            engine.run()
            report = verify_replay(Replay(engine.replay_header(), engine.log.events))
            envelope_checks = [c for c in report.checks if c.name == "envelope-respected"]
            assert envelope_checks and envelope_checks[0].passed, envelope_checks
            assert report.passed, report.summary()
            checked += 1
    announce(f"envelope safety ({checked} scenario x policy runs, zero violations)")


def test_criterion_10_rejection_rule():
    """Under an always-reject operator, no pipeline trace ever updates the
    belief, on any shipped scenario."""
    for path in SHIPPED_SCENARIOS:
        engine = MissionEngine(load_scenario(path), policy=AlwaysReject())
        engine.run()
        updates = pipeline_positive_updates(engine.log.events)
        assert updates == [], f"{path.name} leaked pipeline updates: {updates}"
        for e in engine.log.events:
            if e["kind"] == "trace" and e["trace"]["disposition"] == "rejected":
                assert e["trace"]["strength"] is None
    announce("rejection rule (zero pipeline updates under always-reject)")
