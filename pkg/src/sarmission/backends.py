"""Reasoning backends for the staged clue pipeline.

One interface, two implementations: a deterministic rule-based stub (the
default and the only backend exercised by tests) and an external chat-model
client (opt-in; live models are slow and nondeterministic, so they are kept
out of every reproducibility surface).

Every backend returns raw text that the pipeline validates and repairs; the
stub is not special-cased past this contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol

from .knowledge import tokenize


@dataclass(frozen=True)
class StageRequest:
    """A rendered stage prompt plus the structured facts it was rendered from."""

    stage: int
    prompt: str
    context: dict = field(default_factory=dict)


class ReasoningBackend(Protocol):
    name: str

    def complete(self, request: StageRequest) -> str: ...


class RuleBasedBackend:
    """Deterministic keyword/attribute matcher standing in for a chat model."""

    name = "rule-stub"

    def complete(self, request: StageRequest) -> str:
        if request.stage == 3:
            return self._relevance(request.context)
        if request.stage == 4:
            return self._tactical(request.context)
        if request.stage == 5:
            return self._plan(request.context)
        raise ValueError(f"stage {request.stage} is not a reasoning stage")

    # -- stage 3: relevance ------------------------------------------------
    def _relevance(self, ctx: dict) -> str:
        desc = set(tokenize(ctx["clue_description"]))
        generic_words = {"object", "cloth", "fabric", "item", "shape", "material"}
        level = "Low"
        matched = None
        for descriptor in ctx.get("profile_items", []):
            item_tokens = set(tokenize(descriptor["item"]))
            color = descriptor.get("color")
            if item_tokens and item_tokens.issubset(desc):
                if color is None or color.lower() in desc:
                    level = "High"
                    matched = descriptor
                    break
                if level != "High":
                    level = "Medium"
                    matched = matched or descriptor
            elif color and color.lower() in desc and desc.intersection(generic_words):
                if level == "Low":
                    level = "Medium"
                    matched = matched or descriptor
        if matched:
            wanted = f"{matched.get('color', '')} {matched['item']}".strip()
            justification = f"description matches profile item '{wanted}'"
        else:
            justification = "no profile item matches the description"
        return json.dumps({"relevance": level, "justification": justification})

    # -- stage 4: tactical implication --------------------------------------
    def _tactical(self, ctx: dict) -> str:
        relevance = ctx["relevance"]
        cv = ctx["cv_confidence"]
        entries = ctx.get("knowledge", [])
        location_hit = bool(entries) and any(
            t.startswith("clue-location/") for e in entries for t in e["tags"]
        )
        if relevance == "High" and cv == "High" and location_hit:
            confidence = "High"
        elif relevance == "High" or (relevance == "Medium" and location_hit):
            confidence = "Medium"
        else:
            confidence = "Low"
        if entries:
            implication = entries[0]["text"]
        else:
            implication = "no tactical guidance retrieved; continue current search pattern"
        return json.dumps({"implication": implication, "interp_confidence": confidence})

    # -- stage 5: strategic plan --------------------------------------------
    def _plan(self, ctx: dict) -> str:
        location = ctx.get("location_context", "open")
        needs_closer_look = ctx["cv_confidence"] == "Low" or (
            ctx["cv_confidence"] == "Medium" and ctx["relevance"] == "Medium"
        )
        if needs_closer_look and not ctx.get("inspected", False):
            plan = {
                "strategy": ctx["current_strategy"],
                "tasks": [{"kind": "circle-inspect", "clue_id": ctx["clue_id"]}],
                "rationale": "classification is uncertain; inspect the object before acting on it",
            }
            return json.dumps(plan)
        strategy_by_location = {
            "water": "Waterways",
            "shoreline": "Waterways",
            "trail": "Trail",
            "building": "Shelter",
            "contour": "Contour",
        }
        strategy = strategy_by_location.get(location, ctx["current_strategy"])
        if strategy == "Waterways":
            tasks = [{"kind": "water-sweep"}, {"kind": "shoreline-follow"}]
        elif strategy == "Trail":
            tasks = [{"kind": "trail-follow"}]
        elif strategy == "Shelter":
            tasks = [{"kind": "shelter-visit"}]
        elif strategy == "Contour":
            tasks = [{"kind": "contour-follow"}]
        else:
            tasks = [{"kind": "waypoint-sweep"}]
        plan = {
            "strategy": strategy,
            "tasks": tasks,
            "rationale": f"clue context '{location}' points at {strategy} search",
        }
        return json.dumps(plan)


class ExternalChatBackend:
    """Minimal client for an OpenAI-style chat completion endpoint.

    Opt-in only: requires explicit endpoint configuration, adds network
    nondeterminism, and is excluded from the acceptance suite.
    """

    name = "external-chat"

    def __init__(self, endpoint: str, model: str, api_key: str = "", timeout_s: float = 60.0):
        if not endpoint:
            raise ValueError("endpoint is required")
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s

    def complete(self, request: StageRequest) -> str:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": 0,
        }
        response = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout_s)
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]
