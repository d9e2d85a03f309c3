"""Scripted operator policies for headless runs.

A policy stands in for the human operator: each tick the engine offers it the
oldest unresolved approvals and it may return an action. Policies never see
engine internals, only the approval record, which keeps headless runs honest
stand-ins for console-driven ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SarError


@dataclass(frozen=True)
class OperatorAction:
    decision: str  # approve | reject | modify | boost | reduce | reset | expand-region
    approval_id: str | None = None
    strategy: str | None = None
    strength: float | None = None
    plan_edits: list | None = None
    region_scale: float | None = None
    operator_id: str = "operator"

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "approval_id": self.approval_id,
            "strategy": self.strategy,
            "strength": self.strength,
            "plan_edits": self.plan_edits,
            "region_scale": self.region_scale,
            "operator_id": self.operator_id,
        }


class AlwaysApprove:
    """Approves every approval the tick after it appears."""

    name = "always-approve"

    def decide(self, approval: dict, tick: int) -> OperatorAction | None:
        return OperatorAction("approve", approval_id=approval["id"], operator_id=self.name)


class AlwaysReject:
    """Rejects every approval and vetoes every surfaced clue.

    Autonomous updates never raise an approval, but the operator still sees
    each surfaced clue and may reject it before the model updates; this
    policy always does.
    """

    name = "always-reject"

    def decide(self, approval: dict, tick: int) -> OperatorAction | None:
        return OperatorAction("reject", approval_id=approval["id"], operator_id=self.name)

    def veto_clue(self, digest: dict) -> bool:
        return True


@dataclass
class ApproveAfter:
    """Approves once the approval has been pending for ``delay_ticks``."""

    delay_ticks: int = 60
    name: str = "approve-after"

    def decide(self, approval: dict, tick: int) -> OperatorAction | None:
        if tick - approval["created_tick"] >= self.delay_ticks:
            return OperatorAction("approve", approval_id=approval["id"], operator_id=self.name)
        return None


@dataclass
class Scripted:
    """Plays out a fixed action sequence, then falls back to a default.

    ``script`` entries are consumed in approval-creation order; each entry is
    a decision name or a dict of OperatorAction fields. The ``default``
    decision handles any approvals beyond the script, so a scripted run never
    leaves approvals dangling.
    """

    script: list = field(default_factory=list)
    default: str = "approve"
    name: str = "scripted"
    _cursor: int = 0

    def decide(self, approval: dict, tick: int) -> OperatorAction | None:
        if self._cursor < len(self.script):
            entry = self.script[self._cursor]
            self._cursor += 1
            if isinstance(entry, str):
                return OperatorAction(entry, approval_id=approval["id"], operator_id=self.name)
            return OperatorAction(approval_id=approval["id"], operator_id=self.name, **entry)
        return OperatorAction(self.default, approval_id=approval["id"], operator_id=self.name)


def make_policy(spec: str):
    """Build a policy from a CLI-style spec: e.g. always-approve, approve-after:120."""
    if spec == "always-approve":
        return AlwaysApprove()
    if spec == "always-reject":
        return AlwaysReject()
    if spec.startswith("approve-after"):
        _, _, arg = spec.partition(":")
        return ApproveAfter(delay_ticks=int(arg) if arg else 60)
    if spec == "none":
        return None
    raise SarError(f"unknown operator policy {spec!r}")
