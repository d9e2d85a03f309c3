"""Discrete Bayesian network over search strategies.

The network is loaded from a versioned JSON document, validated loudly, and
then treated as immutable. Mission initialization computes the posterior over
the five strategies given the initial evidence (profile, environment, and
terrain flags) by exact inference.

Two independent routes compute the same posterior:

* :func:`infer_strategies` — variable elimination over tabular factors
  (the production path).
* :func:`joint_enumeration_oracle` — explicit enumeration of the full joint
  distribution, deliberately naive; used only by tests as a cross-check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as iter_product
from pathlib import Path

import numpy as np

from .errors import EnumerationSizeError, EvidenceError, NetworkFormatError, ZeroLikelihoodError
from .strategies import STRATEGIES, StrategyBelief

SCHEMA_VERSION = 1
NODE_GROUPS = ("environment", "profile", "strategy", "evidence")
CPT_ROW_TOL = 1e-9
ORACLE_MAX_JOINT = 10_000_000

# Evidence maps node id -> observed state label.
EvidenceAssignment = dict[str, str]


@dataclass(frozen=True)
class NodeSpec:
    id: str
    states: tuple[str, ...]
    group: str


@dataclass(frozen=True)
class BayesNet:
    """Immutable network: nodes, parent lists, and one CPT per node.

    CPT rows are keyed by a tuple of parent state labels (in declared parent
    order; the empty tuple for root nodes) and hold one probability per node
    state, in the node's declared state order.
    """

    nodes: dict[str, NodeSpec]
    parents: dict[str, tuple[str, ...]]
    cpts: dict[str, dict[tuple[str, ...], tuple[float, ...]]]
    strategy_node: str

    @property
    def node_order(self) -> list[str]:
        return list(self.nodes)

    def card(self, node_id: str) -> int:
        return len(self.nodes[node_id].states)

    def state_index(self, node_id: str, label: str) -> int:
        try:
            return self.nodes[node_id].states.index(label)
        except ValueError:
            raise EvidenceError(f"node {node_id!r} has no state {label!r}") from None


def _row_key(raw: str) -> tuple[str, ...]:
    return tuple(raw.split("|")) if raw else ()


def load_network(document: str | dict | Path) -> BayesNet:
    """Parse and validate a network document (JSON text, dict, or file path)."""
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(f"network document is not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise NetworkFormatError(f"network document must be an object, got {type(document).__name__}")

    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise NetworkFormatError(f"unsupported network schema_version {version!r}, expected {SCHEMA_VERSION}")

    nodes: dict[str, NodeSpec] = {}
    for entry in document.get("nodes", []):
        spec = NodeSpec(id=entry["id"], states=tuple(entry["states"]), group=entry.get("group", ""))
        if spec.id in nodes:
            raise NetworkFormatError(f"duplicate node id {spec.id!r}")
        nodes[spec.id] = spec

    parents: dict[str, tuple[str, ...]] = {nid: () for nid in nodes}
    edges = [tuple(e) for e in document.get("edges", [])]
    for parent, child in edges:
        if child in parents:
            parents[child] = parents[child] + (parent,)

    cpts: dict[str, dict[tuple[str, ...], tuple[float, ...]]] = {}
    for nid, table in document.get("cpts", {}).items():
        rows = table.get("rows", table) if isinstance(table, dict) else table
        cpts[nid] = {_row_key(k): tuple(float(x) for x in v) for k, v in rows.items()}

    strategy_nodes = [nid for nid, spec in nodes.items() if spec.group == "strategy"]
    net = BayesNet(
        nodes=nodes,
        parents=parents,
        cpts=cpts,
        strategy_node=strategy_nodes[0] if strategy_nodes else "",
    )
    violations = validate_network(net, edges=edges)
    if violations:
        raise NetworkFormatError("invalid network:\n  " + "\n  ".join(violations))
    return net


def validate_network(net: BayesNet, edges: list[tuple[str, str]] | None = None) -> list[str]:
    """Return all invariant violations (empty list means the network is valid)."""
    violations: list[str] = []

    for nid, spec in net.nodes.items():
        if not spec.states:
            violations.append(f"node {nid!r}: empty state list")
        if len(set(spec.states)) != len(spec.states):
            violations.append(f"node {nid!r}: duplicate state labels")
        if spec.group not in NODE_GROUPS:
            violations.append(f"node {nid!r}: unknown group {spec.group!r}")

    if edges is None:
        edges = [(p, c) for c, ps in net.parents.items() for p in ps]
    for parent, child in edges:
        if parent not in net.nodes:
            violations.append(f"edge ({parent!r} -> {child!r}): unknown parent node")
        if child not in net.nodes:
            violations.append(f"edge ({parent!r} -> {child!r}): unknown child node")

    strategy_nodes = [nid for nid, spec in net.nodes.items() if spec.group == "strategy"]
    if not strategy_nodes:
        violations.append("no strategy node designated")
    elif len(strategy_nodes) > 1:
        violations.append(f"multiple strategy nodes designated: {strategy_nodes}")
    else:
        spec = net.nodes[strategy_nodes[0]]
        if set(spec.states) != set(STRATEGIES):
            violations.append(
                f"strategy node {spec.id!r} states {list(spec.states)} != expected {list(STRATEGIES)}"
            )

    # Acyclicity via Kahn's algorithm over known nodes.
    indegree = {nid: 0 for nid in net.nodes}
    children: dict[str, list[str]] = {nid: [] for nid in net.nodes}
    for parent, child in edges:
        if parent in net.nodes and child in net.nodes:
            indegree[child] += 1
            children[parent].append(child)
    queue = [nid for nid, d in indegree.items() if d == 0]
    seen = 0
    while queue:
        nid = queue.pop()
        seen += 1
        for ch in children[nid]:
            indegree[ch] -= 1
            if indegree[ch] == 0:
                queue.append(ch)
    if seen != len(net.nodes):
        cyclic = sorted(nid for nid, d in indegree.items() if d > 0)
        violations.append(f"graph contains a cycle through {cyclic}")
        return violations  # CPT shape checks assume a DAG

    for nid in net.nodes:
        table = net.cpts.get(nid)
        if table is None:
            violations.append(f"node {nid!r}: missing CPT")
            continue
        expected_rows = 1
        for pid in net.parents[nid]:
            if pid in net.nodes:
                expected_rows *= net.card(pid)
        if len(table) != expected_rows:
            violations.append(f"node {nid!r}: CPT has {len(table)} rows, expected {expected_rows}")
        parent_states = [net.nodes[p].states for p in net.parents[nid] if p in net.nodes]
        valid_keys = set(iter_product(*parent_states)) if parent_states else {()}
        for key, row in table.items():
            label = "|".join(key) if key else "<root>"
            if key not in valid_keys:
                violations.append(f"node {nid!r}, row {label!r}: unknown parent-state combination")
                continue
            if len(row) != net.card(nid):
                violations.append(
                    f"node {nid!r}, row {label!r}: {len(row)} entries, expected {net.card(nid)}"
                )
                continue
            total = math.fsum(row)
            if abs(total - 1.0) > CPT_ROW_TOL:
                violations.append(f"node {nid!r}, row {label!r}: sums to {total!r}, expected 1")
            if any(p < 0.0 for p in row):
                violations.append(f"node {nid!r}, row {label!r}: negative probability")

    return violations


def validate_evidence(net: BayesNet, evidence: EvidenceAssignment) -> None:
    for nid, label in evidence.items():
        if nid not in net.nodes:
            raise EvidenceError(f"evidence references unknown node {nid!r}")
        if label not in net.nodes[nid].states:
            raise EvidenceError(f"node {nid!r} has no state {label!r}")
        if nid == net.strategy_node:
            raise EvidenceError("the strategy node cannot be observed directly")


class _Factor:
    """Tabular factor over an ordered tuple of variables."""

    __slots__ = ("vars", "values")

    def __init__(self, variables: tuple[str, ...], values: np.ndarray):
        self.vars = variables
        self.values = values


def _factor_product(a: _Factor, b: _Factor) -> _Factor:
    out_vars = tuple(dict.fromkeys(a.vars + b.vars))
    names = {v: chr(ord("a") + i) for i, v in enumerate(out_vars)}
    sub_a = "".join(names[v] for v in a.vars)
    sub_b = "".join(names[v] for v in b.vars)
    sub_o = "".join(names[v] for v in out_vars)
    values = np.einsum(f"{sub_a},{sub_b}->{sub_o}", a.values, b.values)
    return _Factor(out_vars, values)


def _node_factor(net: BayesNet, nid: str) -> _Factor:
    """CPT as a factor over (parents..., node)."""
    ps = net.parents[nid]
    shape = [net.card(p) for p in ps] + [net.card(nid)]
    values = np.zeros(shape, dtype=np.float64)
    parent_states = [net.nodes[p].states for p in ps]
    for key, row in net.cpts[nid].items():
        idx = tuple(parent_states[i].index(key[i]) for i in range(len(ps)))
        values[idx] = row
    return _Factor(ps + (nid,), values)


def _reduce(factor: _Factor, var: str, state_idx: int) -> _Factor:
    axis = factor.vars.index(var)
    values = np.take(factor.values, state_idx, axis=axis)
    remaining = tuple(v for v in factor.vars if v != var)
    return _Factor(remaining, values)


def infer_strategies(net: BayesNet, evidence: EvidenceAssignment, timestamp: float = 0.0) -> StrategyBelief:
    """Exact posterior over the five strategies by variable elimination."""
    validate_evidence(net, evidence)
    factors = [_node_factor(net, nid) for nid in net.node_order]

    for nid, label in evidence.items():
        idx = net.state_index(nid, label)
        factors = [_reduce(f, nid, idx) if nid in f.vars else f for f in factors]

    hidden = [nid for nid in net.node_order if nid != net.strategy_node and nid not in evidence]
    while hidden:
        # Greedy min-weight elimination; lexicographic tie-break keeps it deterministic.
        def weight(var: str) -> tuple[int, str]:
            joined: dict[str, None] = {}
            for f in factors:
                if var in f.vars:
                    for v in f.vars:
                        joined[v] = None
            size = 1
            for v in joined:
                size *= net.card(v)
            return (size, var)

        var = min(hidden, key=weight)
        hidden.remove(var)
        touching = [f for f in factors if var in f.vars]
        rest = [f for f in factors if var not in f.vars]
        merged = touching[0]
        for f in touching[1:]:
            merged = _factor_product(merged, f)
        axis = merged.vars.index(var)
        summed = _Factor(tuple(v for v in merged.vars if v != var), merged.values.sum(axis=axis))
        factors = rest + [summed]

    result = factors[0]
    for f in factors[1:]:
        result = _factor_product(result, f)
    if result.vars != (net.strategy_node,):
        raise AssertionError(f"elimination left variables {result.vars}")

    total = float(result.values.sum())
    if total <= 0.0:
        raise ZeroLikelihoodError("evidence has zero likelihood under every strategy")
    states = net.nodes[net.strategy_node].states
    probs = {states[i]: float(result.values[i]) / total for i in range(len(states))}
    return StrategyBelief(probs, timestamp)


def joint_enumeration_oracle(net: BayesNet, evidence: EvidenceAssignment, timestamp: float = 0.0) -> StrategyBelief:
    """Posterior by explicit enumeration of the full joint. Test oracle only."""
    validate_evidence(net, evidence)
    order = net.node_order
    joint_size = 1
    for nid in order:
        joint_size *= net.card(nid)
    if joint_size > ORACLE_MAX_JOINT:
        raise EnumerationSizeError(f"joint has {joint_size} states, bound is {ORACLE_MAX_JOINT}")

    pos = {nid: i for i, nid in enumerate(order)}
    # Index-based CPT lookup tables, precomputed once.
    tables: list[tuple[tuple[int, ...], dict[tuple[int, ...], tuple[float, ...]]]] = []
    for nid in order:
        parent_idx = tuple(pos[p] for p in net.parents[nid])
        rows: dict[tuple[int, ...], tuple[float, ...]] = {}
        for key, row in net.cpts[nid].items():
            ikey = tuple(net.state_index(p, key[i]) for i, p in enumerate(net.parents[nid]))
            rows[ikey] = row
        tables.append((parent_idx, rows))

    fixed = {pos[nid]: net.state_index(nid, label) for nid, label in evidence.items()}
    ranges = [
        [fixed[i]] if i in fixed else list(range(net.card(nid)))
        for i, nid in enumerate(order)
    ]
    strategy_pos = pos[net.strategy_node]
    accum = [0.0] * net.card(net.strategy_node)

    for assignment in iter_product(*ranges):
        weight = 1.0
        for i in range(len(order)):
            parent_idx, rows = tables[i]
            key = tuple(assignment[j] for j in parent_idx)
            weight *= rows[key][assignment[i]]
            if weight == 0.0:
                break
        accum[assignment[strategy_pos]] += weight

    total = math.fsum(accum)
    if total <= 0.0:
        raise ZeroLikelihoodError("evidence has zero likelihood under every strategy")
    states = net.nodes[net.strategy_node].states
    return StrategyBelief({states[i]: accum[i] / total for i in range(len(states))}, timestamp)


def default_network() -> BayesNet:
    """The network shipped with the package."""
    path = Path(__file__).parent / "data" / "default_network.json"
    return load_network(path)
