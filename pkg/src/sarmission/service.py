"""HTTP service around mission engines.

One process hosts many independent missions; each engine is owned by its own
lock and advanced either by explicit step commands or by a pacing thread
started with the start command. Event streams are fan-out reads over the
append-only log with a resumable sequence cursor.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from .engine import MissionEngine
from .errors import ApprovalError, SarError
from .events import dump_replay, event_line
from .policies import OperatorAction
from .world import load_scenario

API_VERSION = 1


class CreateMission(BaseModel):
    scenario: dict | None = None
    scenario_path: str | None = None
    mission_id: str | None = None


class ControlCommand(BaseModel):
    command: str  # start | pause | step | abort | set_speed
    ticks: int = 1
    speed: float = 1.0


class ApprovalDecision(BaseModel):
    approval_id: str
    decision: str
    strategy: str | None = None
    strength: float | None = None
    plan_edits: list | None = None
    operator_id: str = "console"


class MissionContainer:
    def __init__(self, mission_id: str, engine: MissionEngine):
        self.id = mission_id
        self.engine = engine
        self.lock = threading.Lock()
        self.state = "ready"  # ready | running | paused | terminal
        self.speed = 1.0
        self._runner: threading.Thread | None = None
        self._stop = threading.Event()

    def refresh_state(self) -> None:
        if self.engine.terminal is not None:
            self.state = "terminal"

    def start(self) -> None:
        if self.state not in ("ready", "paused"):
            raise SarError(f"cannot start from state {self.state!r}")
        self.state = "running"
        self._stop.clear()
        self._runner = threading.Thread(target=self._run_loop, daemon=True)
        self._runner.start()

    def pause(self) -> None:
        if self.state != "running":
            raise SarError(f"cannot pause from state {self.state!r}")
        self._stop.set()
        if self._runner is not None:
            self._runner.join(timeout=5.0)
        if self.state == "running":
            self.state = "paused"

    def step(self, ticks: int) -> None:
        if self.state == "running":
            raise SarError("cannot step while running; pause first")
        if self.state == "terminal":
            raise SarError("mission is terminal")
        with self.lock:
            self.engine.step(ticks)
        self.refresh_state()

    def abort(self) -> None:
        with self.lock:
            if self.engine.terminal is None:
                self.engine.abort()
                self.engine.step(1)
        if self.state == "running":
            self._stop.set()
        self.refresh_state()

    def _run_loop(self) -> None:
        tick_s = self.engine.tick_seconds
        while not self._stop.is_set():
            with self.lock:
                if self.engine.terminal is not None:
                    break
                self.engine.step(1)
            # Wall-clock pacing only; event content is independent of speed.
            delay = tick_s / max(self.speed, 1e-6)
            if delay > 0:
                time.sleep(min(delay, 0.25))
        self.refresh_state()
        if self.state == "running":
            self.state = "paused" if self.engine.terminal is None else "terminal"


def create_app(token: str | None = None) -> FastAPI:
    app = FastAPI(title="sarmission service", version=str(API_VERSION))
    missions: dict[str, MissionContainer] = {}
    counter = {"n": 0}

    def auth(request: Request) -> None:
        if token and request.headers.get("x-auth-token") != token:
            raise HTTPException(status_code=401, detail="missing or invalid token")

    def get_mission(mission_id: str) -> MissionContainer:
        container = missions.get(mission_id)
        if container is None:
            raise HTTPException(status_code=404, detail=f"unknown mission {mission_id!r}")
        return container

    @app.post("/missions", status_code=201, dependencies=[Depends(auth)])
    def create_mission(body: CreateMission):
        if (body.scenario is None) == (body.scenario_path is None):
            raise HTTPException(status_code=400, detail="provide exactly one of scenario, scenario_path")
        try:
            source = body.scenario if body.scenario is not None else Path(body.scenario_path)
            scenario = load_scenario(source)
            engine = MissionEngine(scenario)
        except SarError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        counter["n"] += 1
        mission_id = body.mission_id or f"mission-{counter['n']:04d}"
        if mission_id in missions:
            raise HTTPException(status_code=409, detail=f"mission {mission_id!r} already exists")
        missions[mission_id] = MissionContainer(mission_id, engine)
        return {"mission_id": mission_id, "state": "ready", "snapshot": engine.snapshot()}

    @app.post("/missions/{mission_id}/control", dependencies=[Depends(auth)])
    def control(mission_id: str, body: ControlCommand):
        container = get_mission(mission_id)
        try:
            if body.command == "start":
                container.start()
            elif body.command == "pause":
                container.pause()
            elif body.command == "step":
                container.step(body.ticks)
            elif body.command == "abort":
                container.abort()
            elif body.command == "set_speed":
                container.speed = body.speed
            else:
                raise HTTPException(status_code=400, detail=f"unknown command {body.command!r}")
        except SarError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"mission_id": mission_id, "state": container.state,
                "tick": container.engine.tick_count, "terminal": container.engine.terminal}

    @app.get("/missions/{mission_id}/snapshot", dependencies=[Depends(auth)])
    def snapshot(mission_id: str):
        container = get_mission(mission_id)
        with container.lock:
            return container.engine.snapshot()

    @app.get("/missions/{mission_id}/events", dependencies=[Depends(auth)])
    def events(mission_id: str, from_seq: int = 0, follow: bool = False):
        container = get_mission(mission_id)

        def stream():
            cursor = from_seq
            idle_polls = 0
            while True:
                log = container.engine.log.events
                while cursor < len(log):
                    event = log[cursor]
                    yield f"id: {event['seq']}\ndata: {event_line(event)}\n\n"
                    cursor += 1
                    idle_polls = 0
                if container.engine.terminal is not None and cursor >= len(log):
                    yield "event: end\ndata: {}\n\n"
                    return
                if not follow:
                    if idle_polls > 0:
                        return
                    idle_polls += 1
                time.sleep(0.02)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/missions/{mission_id}/approvals", dependencies=[Depends(auth)])
    def approvals(mission_id: str, include_resolved: bool = False):
        container = get_mission(mission_id)
        with container.lock:
            items = [a.to_dict() for a in sorted(container.engine.approvals.values(), key=lambda x: x.id)]
        if not include_resolved:
            items = [a for a in items if not a["resolved"]]
        return {"approvals": items, "queued_tasks": list(container.engine.queued_tasks)}

    @app.post("/missions/{mission_id}/approvals", dependencies=[Depends(auth)])
    def resolve(mission_id: str, body: ApprovalDecision):
        container = get_mission(mission_id)
        action = OperatorAction(
            decision=body.decision,
            approval_id=body.approval_id,
            strategy=body.strategy,
            strength=body.strength,
            plan_edits=body.plan_edits,
            operator_id=body.operator_id,
        )
        with container.lock:
            try:
                container.engine.resolve_approval_by_id(body.approval_id, action)
            except ApprovalError as exc:
                status = 404 if "unknown" in str(exc) else 409
                raise HTTPException(status_code=status, detail=str(exc))
        return {"accepted": True, "approval_id": body.approval_id}

    @app.post("/missions/{mission_id}/operator", dependencies=[Depends(auth)])
    def operator_action(mission_id: str, body: ApprovalDecision):
        # Unsolicited console actions: boost, reduce, reset, expand-region.
        container = get_mission(mission_id)
        action = OperatorAction(
            decision=body.decision,
            approval_id=None,
            strategy=body.strategy,
            strength=body.strength,
            operator_id=body.operator_id,
        )
        with container.lock:
            container.engine.enqueue_operator_action(action)
        return {"accepted": True}

    @app.get("/missions/{mission_id}/replay", dependencies=[Depends(auth)])
    def replay(mission_id: str):
        container = get_mission(mission_id)
        with container.lock:
            if container.engine.terminal is None:
                raise HTTPException(status_code=409, detail="mission is not terminal; replay export requires a finished mission")
            text = dump_replay(container.engine.replay_header(), container.engine.log.events)
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/healthz")
    def health():
        return {"ok": True, "missions": len(missions)}

    return app
