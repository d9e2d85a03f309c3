import csv
import json
from pathlib import Path

import pytest

from sarmission.cli import EXIT_OK, EXIT_VALIDATION, EXIT_VERIFY, main

SCENARIO = str(Path(__file__).resolve().parent.parent / "scenarios" / "rockies_lake.json")


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_run_writes_replay_and_summary(self, tmp_path, capsys):
        out = tmp_path / "replay.ndjson"
        code = run_cli("run", "--scenario", SCENARIO, "--policy", "always-approve",
                       "--out", str(out))
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["outcome"] == "found"
        assert summary["dominant"] == "Waterways"
        assert summary["clue_precision"] == 1.0
        assert summary["clue_recall"] == 1.0
        assert summary["approvals"] == 1
        assert out.exists()

    def test_identical_runs_produce_identical_bytes(self, tmp_path):
        a = tmp_path / "a.ndjson"
        b = tmp_path / "b.ndjson"
        assert run_cli("run", "--scenario", SCENARIO, "--out", str(a)) == EXIT_OK
        assert run_cli("run", "--scenario", SCENARIO, "--out", str(b)) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_always_reject_has_no_pipeline_updates(self, tmp_path, capsys):
        out = tmp_path / "reject.ndjson"
        code = run_cli("run", "--scenario", SCENARIO, "--policy", "always-reject",
                       "--out", str(out))
        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["outcome"] == "exhausted"
        events = [json.loads(line) for line in out.read_text().splitlines()[1:]]
        pipeline_updates = [
            e for e in events
            if e["kind"] == "belief_update" and e.get("update_kind") == "positive"
            and e.get("source", {}).get("type") == "pipeline"
        ]
        assert pipeline_updates == []

    def test_missing_scenario_is_validation_error(self, tmp_path, capsys):
        code = run_cli("run", "--scenario", str(tmp_path / "absent.json"))
        assert code == EXIT_VALIDATION

    def test_invalid_policy_is_validation_error(self):
        assert run_cli("run", "--scenario", SCENARIO, "--policy", "chaotic") == EXIT_VALIDATION

    def test_config_overrides_hyperparams(self, tmp_path, capsys):
        config = tmp_path / "hp.json"
        config.write_text(json.dumps({"coverage_threshold": 0.99}))
        out = tmp_path / "r.ndjson"
        code = run_cli("run", "--scenario", SCENARIO, "--config", str(config), "--out", str(out))
        assert code == EXIT_OK
        header = json.loads(out.read_text().splitlines()[0])
        assert header["config"]["hyperparams"]["coverage_threshold"] == 0.99


class TestVerify:
    def test_fresh_replay_passes(self, tmp_path, capsys):
        out = tmp_path / "replay.ndjson"
        run_cli("run", "--scenario", SCENARIO, "--out", str(out))
        capsys.readouterr()
        assert run_cli("verify", str(out)) == EXIT_OK
        assert "[PASS]" in capsys.readouterr().out

    def test_tampered_probability_fails(self, tmp_path, capsys):
        out = tmp_path / "replay.ndjson"
        run_cli("run", "--scenario", SCENARIO, "--out", str(out))
        lines = out.read_text().splitlines()
        for i, line in enumerate(lines):
            event = json.loads(line)
            if event.get("kind") == "belief_update":
                event["distribution"]["Trail"] += 0.02
                lines[i] = json.dumps(event, sort_keys=True, separators=(",", ":"))
                break
        out.write_text("\n".join(lines))
        assert run_cli("verify", str(out)) == EXIT_VERIFY

    def test_truncated_log_fails(self, tmp_path):
        out = tmp_path / "replay.ndjson"
        run_cli("run", "--scenario", SCENARIO, "--out", str(out))
        lines = out.read_text().splitlines()
        del lines[10]
        out.write_text("\n".join(lines))
        assert run_cli("verify", str(out)) == EXIT_VERIFY

    def test_unreadable_replay_is_validation_error(self, tmp_path):
        assert run_cli("verify", str(tmp_path / "absent.ndjson")) == EXIT_VALIDATION


class TestPlot:
    def test_series_has_one_row_per_update_plus_initial(self, tmp_path, capsys):
        replay = tmp_path / "replay.ndjson"
        run_cli("run", "--scenario", SCENARIO, "--out", str(replay))
        series = tmp_path / "series.csv"
        assert run_cli("plot", str(replay), "--out", str(series)) == EXIT_OK
        rows = list(csv.DictReader(series.open()))
        events = [json.loads(line) for line in replay.read_text().splitlines()[1:]]
        updates = [e for e in events if e["kind"] == "belief_update"]
        assert len(rows) == len(updates) + 1

    def test_series_shows_waterways_crossover(self, tmp_path):
        replay = tmp_path / "replay.ndjson"
        run_cli("run", "--scenario", SCENARIO, "--out", str(replay))
        series = tmp_path / "series.csv"
        run_cli("plot", str(replay), "--out", str(series))
        rows = list(csv.DictReader(series.open()))
        assert float(rows[0]["Region"]) == max(float(rows[0][s]) for s in
                                               ("Trail", "Shelter", "Waterways", "Contour", "Region"))
        last = rows[-1]
        assert float(last["Waterways"]) == max(float(last[s]) for s in
                                               ("Trail", "Shelter", "Waterways", "Contour", "Region"))
