import json

import pytest
from fastapi.testclient import TestClient

from sarmission.events import load_replay, verify_replay, ReplayReader
from sarmission.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


@pytest.fixture()
def mission(client, rockies_doc):
    response = client.post("/missions", json={"scenario": rockies_doc})
    assert response.status_code == 201
    return response.json()["mission_id"]


def step(client, mission_id, ticks):
    response = client.post(f"/missions/{mission_id}/control", json={"command": "step", "ticks": ticks})
    assert response.status_code == 200
    return response.json()


def sse_events(client, mission_id, from_seq=0):
    events = []
    with client.stream("GET", f"/missions/{mission_id}/events", params={"from_seq": from_seq}) as response:
        assert response.status_code == 200
        for line in response.iter_lines():
            if line.startswith("data: ") and line != "data: {}":
                events.append(json.loads(line[len("data: "):]))
    return events


class TestMissionCreation:
    def test_create_initializes_with_region_dominant(self, client, rockies_doc):
        response = client.post("/missions", json={"scenario": rockies_doc})
        assert response.status_code == 201
        body = response.json()
        assert body["snapshot"]["dominant"] == "Region"
        assert body["snapshot"]["pending_approvals"] == []

    def test_malformed_scenario_rejected_with_validator_output(self, client, rockies_doc):
        doc = dict(rockies_doc)
        doc["profile"] = dict(doc["profile"], lkp_cell=[999, 999])
        response = client.post("/missions", json={"scenario": doc})
        assert response.status_code == 400
        assert "LKP" in response.json()["detail"]

    def test_duplicate_mission_id_conflicts(self, client, rockies_doc):
        first = client.post("/missions", json={"scenario": rockies_doc, "mission_id": "m1"})
        assert first.status_code == 201
        second = client.post("/missions", json={"scenario": rockies_doc, "mission_id": "m1"})
        assert second.status_code == 409

    def test_unknown_mission_404(self, client):
        assert client.get("/missions/nope/snapshot").status_code == 404


class TestControl:
    def test_step_advances_exactly_n_ticks(self, client, mission):
        state = step(client, mission, 25)
        assert state["tick"] == 25
        state = step(client, mission, 5)
        assert state["tick"] == 30

    def test_step_while_running_is_invalid(self, client, mission):
        assert client.post(f"/missions/{mission}/control", json={"command": "start"}).status_code == 200
        response = client.post(f"/missions/{mission}/control", json={"command": "step", "ticks": 1})
        assert response.status_code == 409
        assert client.post(f"/missions/{mission}/control", json={"command": "pause"}).status_code == 200

    def test_abort_then_start_is_invalid(self, client, mission):
        assert client.post(f"/missions/{mission}/control", json={"command": "abort"}).status_code == 200
        response = client.post(f"/missions/{mission}/control", json={"command": "start"})
        assert response.status_code == 409

    def test_set_speed_accepted(self, client, mission):
        response = client.post(f"/missions/{mission}/control", json={"command": "set_speed", "speed": 8.0})
        assert response.status_code == 200

    def test_unknown_command_rejected(self, client, mission):
        response = client.post(f"/missions/{mission}/control", json={"command": "dance"})
        assert response.status_code == 400


class TestApprovalRoundTrip:
    def advance_to_approval(self, client, mission):
        for _ in range(40):
            step(client, mission, 5)
            approvals = client.get(f"/missions/{mission}/approvals").json()["approvals"]
            if approvals:
                return approvals[0]
        pytest.fail("no approval appeared")

    def test_red_hat_approval_dispatches_waterways(self, client, mission):
        approval = self.advance_to_approval(client, mission)
        assert approval["kind"] == "strategy-switch"
        assert approval["context"]["plan"]["strategy"] == "Waterways"

        response = client.post(f"/missions/{mission}/approvals",
                               json={"approval_id": approval["id"], "decision": "approve"})
        assert response.status_code == 200
        step(client, mission, 1)

        snap = client.get(f"/missions/{mission}/snapshot").json()
        assert snap["dominant"] == "Waterways"
        assigned = [e for e in snap["events"] if e["kind"] == "task_assigned"]
        assert any(e["task"]["strategy"] == "Waterways" for e in assigned)

    def test_double_resolution_conflicts(self, client, mission):
        approval = self.advance_to_approval(client, mission)
        ok = client.post(f"/missions/{mission}/approvals",
                         json={"approval_id": approval["id"], "decision": "approve"})
        assert ok.status_code == 200
        step(client, mission, 1)
        dup = client.post(f"/missions/{mission}/approvals",
                          json={"approval_id": approval["id"], "decision": "reject"})
        assert dup.status_code == 409

    def test_unknown_approval_404(self, client, mission):
        response = client.post(f"/missions/{mission}/approvals",
                               json={"approval_id": "apv-999", "decision": "approve"})
        assert response.status_code == 404

    def test_reject_leaves_belief_unchanged(self, client, mission):
        approval = self.advance_to_approval(client, mission)
        before = client.get(f"/missions/{mission}/snapshot").json()["belief"]
        client.post(f"/missions/{mission}/approvals",
                    json={"approval_id": approval["id"], "decision": "reject"})
        step(client, mission, 1)
        after = client.get(f"/missions/{mission}/snapshot").json()["belief"]
        assert after == before

    def test_operator_boost_endpoint(self, client, mission):
        before = client.get(f"/missions/{mission}/snapshot").json()["belief"]["Trail"]
        response = client.post(f"/missions/{mission}/operator",
                               json={"approval_id": "", "decision": "boost",
                                     "strategy": "Trail", "strength": 0.5})
        assert response.status_code == 200
        step(client, mission, 1)
        after = client.get(f"/missions/{mission}/snapshot").json()["belief"]["Trail"]
        assert after > before


class TestEventStream:
    def test_subscribe_from_zero_gets_full_log(self, client, mission):
        step(client, mission, 10)
        snap = client.get(f"/missions/{mission}/snapshot").json()
        events = sse_events(client, mission)
        assert len(events) == snap["events_total"]
        assert [e["seq"] for e in events] == list(range(len(events)))

    def test_resume_has_no_gaps_or_duplicates(self, client, mission):
        step(client, mission, 10)
        first = sse_events(client, mission)
        cut = len(first) // 2
        step(client, mission, 10)
        resumed = sse_events(client, mission, from_seq=cut)
        combined = first[:cut] + resumed
        assert [e["seq"] for e in combined] == list(range(len(combined)))

    def test_two_subscribers_see_identical_streams(self, client, mission):
        step(client, mission, 15)
        assert sse_events(client, mission) == sse_events(client, mission)


class TestReplayEndpoint:
    def test_replay_requires_terminal(self, client, mission):
        step(client, mission, 5)
        assert client.get(f"/missions/{mission}/replay").status_code == 409

    def test_terminal_replay_exports_and_verifies(self, client, mission):
        while True:
            state = step(client, mission, 50)
            if state["terminal"] is not None:
                break
        response = client.get(f"/missions/{mission}/replay")
        assert response.status_code == 200
        replay = load_replay(response.text)
        report = verify_replay(replay)
        assert report.passed, report.summary()

        reader = ReplayReader(replay)
        final = reader.snapshot_at(replay.events[-1]["seq"])
        snap = client.get(f"/missions/{mission}/snapshot").json()
        assert final["belief"] == snap["belief"]


class TestAuth:
    def test_token_required_when_configured(self, rockies_doc):
        client = TestClient(create_app(token="hunter2"))
        denied = client.post("/missions", json={"scenario": rockies_doc})
        assert denied.status_code == 401
        allowed = client.post("/missions", json={"scenario": rockies_doc},
                              headers={"X-Auth-Token": "hunter2"})
        assert allowed.status_code == 201
