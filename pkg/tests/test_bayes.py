import json
import random

import pytest

from sarmission.bayes import (
    default_network,
    infer_strategies,
    joint_enumeration_oracle,
    load_network,
    validate_network,
)
from sarmission.errors import (
    EnumerationSizeError,
    EvidenceError,
    NetworkFormatError,
    ZeroLikelihoodError,
)
from sarmission.strategies import STRATEGIES

from netgen import random_evidence, random_network, random_network_doc

CHILD_EVIDENCE = {"age_group": "child", "weather": "clear", "daylight": "day", "trails_present": "yes"}


def two_node_doc(child_rows=None):
    return {
        "schema_version": 1,
        "nodes": [
            {"id": "strategy", "states": list(STRATEGIES), "group": "strategy"},
            {"id": "obs", "states": ["yes", "no"], "group": "evidence"},
        ],
        "edges": [["strategy", "obs"]],
        "cpts": {
            "strategy": {"rows": {"": [0.2, 0.2, 0.2, 0.2, 0.2]}},
            "obs": {"rows": child_rows or {s: [0.5, 0.5] for s in STRATEGIES}},
        },
    }


class TestLoadNetwork:
    def test_default_file_loads_with_five_state_strategy_node(self, net):
        assert len(net.nodes) == 9
        assert set(net.nodes[net.strategy_node].states) == set(STRATEGIES)

    def test_cpt_row_not_summing_to_one_names_node_and_row(self):
        doc = two_node_doc()
        doc["cpts"]["obs"]["rows"]["Trail"] = [0.5, 0.4]
        with pytest.raises(NetworkFormatError, match=r"obs.*Trail.*sums to"):
            load_network(doc)

    def test_missing_strategy_node_rejected(self):
        doc = two_node_doc()
        doc["nodes"][0]["group"] = "profile"
        doc["nodes"][0]["states"] = ["a", "b", "c", "d", "e"]
        with pytest.raises(NetworkFormatError, match="no strategy node designated"):
            load_network(doc)

    def test_cycle_rejected(self):
        doc = two_node_doc()
        doc["edges"].append(["obs", "strategy"])
        with pytest.raises(NetworkFormatError, match="cycle"):
            load_network(doc)

    def test_dangling_edge_rejected(self):
        doc = two_node_doc()
        doc["edges"].append(["ghost", "obs"])
        with pytest.raises(NetworkFormatError, match="ghost"):
            load_network(doc)

    def test_bad_json_rejected(self):
        with pytest.raises(NetworkFormatError, match="not valid JSON"):
            load_network("{nope")

    def test_wrong_schema_version_rejected(self):
        doc = two_node_doc()
        doc["schema_version"] = 99
        with pytest.raises(NetworkFormatError, match="schema_version"):
            load_network(doc)


class TestValidateNetwork:
    def test_valid_network_has_empty_report(self, net):
        assert validate_network(net) == []

    def test_bad_row_sum_yields_one_violation(self):
        # Assemble directly so load-time validation doesn't get in the way.
        from sarmission.bayes import BayesNet, NodeSpec

        nodes = {
            "strategy": NodeSpec("strategy", tuple(STRATEGIES), "strategy"),
            "obs": NodeSpec("obs", ("yes", "no"), "evidence"),
        }
        cpts = {
            "strategy": {(): (0.2, 0.2, 0.2, 0.2, 0.2)},
            "obs": {(s,): ((0.6, 0.41) if s == "Trail" else (0.5, 0.5)) for s in STRATEGIES},
        }
        bad = BayesNet(nodes, {"strategy": (), "obs": ("strategy",)}, cpts, "strategy")
        violations = validate_network(bad)
        assert len(violations) == 1
        assert "Trail" in violations[0]


class TestInference:
    def test_uniform_network_gives_uniform_posterior(self):
        net = load_network(two_node_doc())
        belief = infer_strategies(net, {"obs": "yes"})
        for s in STRATEGIES:
            assert belief[s] == pytest.approx(0.2, abs=1e-12)

    def test_two_node_chain_matches_hand_computation(self):
        rows = {
            "Trail": [0.9, 0.1],
            "Shelter": [0.1, 0.9],
            "Waterways": [0.5, 0.5],
            "Contour": [0.3, 0.7],
            "Region": [0.2, 0.8],
        }
        net = load_network(two_node_doc(rows))
        belief = joint_enumeration_oracle(net, {"obs": "yes"})
        total = 0.9 + 0.1 + 0.5 + 0.3 + 0.2
        assert belief["Trail"] == pytest.approx(0.9 / total, abs=1e-12)
        assert belief["Region"] == pytest.approx(0.2 / total, abs=1e-12)

    def test_default_network_child_profile_matches_oracle(self, net):
        ve = infer_strategies(net, CHILD_EVIDENCE)
        oracle = joint_enumeration_oracle(net, CHILD_EVIDENCE)
        for s in STRATEGIES:
            assert ve[s] == pytest.approx(oracle[s], abs=1e-9)

    def test_zero_likelihood_evidence_raises(self):
        rows = {s: [0.0, 1.0] for s in STRATEGIES}
        net = load_network(two_node_doc(rows))
        with pytest.raises(ZeroLikelihoodError):
            infer_strategies(net, {"obs": "yes"})
        with pytest.raises(ZeroLikelihoodError):
            joint_enumeration_oracle(net, {"obs": "yes"})

    def test_unknown_evidence_rejected(self, net):
        with pytest.raises(EvidenceError):
            infer_strategies(net, {"nope": "yes"})
        with pytest.raises(EvidenceError):
            infer_strategies(net, {"weather": "hail"})
        with pytest.raises(EvidenceError):
            infer_strategies(net, {"search_strategy": "Trail"})

    def test_inference_is_deterministic(self, net):
        a = infer_strategies(net, CHILD_EVIDENCE)
        b = infer_strategies(net, CHILD_EVIDENCE)
        assert a.values() == b.values()

    def test_evidence_on_disconnected_node_leaves_posterior_unchanged(self):
        doc = two_node_doc()
        doc["nodes"].append({"id": "orphan", "states": ["a", "b"], "group": "evidence"})
        doc["cpts"]["orphan"] = {"rows": {"": [0.3, 0.7]}}
        net = load_network(doc)
        base = infer_strategies(net, {"obs": "yes"})
        observed = infer_strategies(net, {"obs": "yes", "orphan": "a"})
        for s in STRATEGIES:
            assert observed[s] == pytest.approx(base[s], abs=1e-9)


class TestOracle:
    def test_size_bound_enforced(self):
        rng = random.Random(0)
        doc = random_network_doc(rng, max_nodes=2)
        # Pad with many disconnected wide nodes to blow past the bound.
        for i in range(25):
            nid = f"pad{i}"
            doc["nodes"].append({"id": nid, "states": [f"s{k}" for k in range(4)], "group": "evidence"})
            doc["cpts"][nid] = {"rows": {"": [0.25, 0.25, 0.25, 0.25]}}
        net = load_network(doc)
        with pytest.raises(EnumerationSizeError):
            joint_enumeration_oracle(net, {})

    def test_random_networks_agree_with_variable_elimination(self):
        rng = random.Random(1234)
        for _ in range(60):
            net = random_network(rng)
            evidence = random_evidence(rng, net)
            try:
                ve = infer_strategies(net, evidence)
                oracle = joint_enumeration_oracle(net, evidence)
            except ZeroLikelihoodError:
                continue
            for s in STRATEGIES:
                assert ve[s] == pytest.approx(oracle[s], abs=1e-9)
