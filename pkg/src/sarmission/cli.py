"""Headless mission runner, replay verifier, trajectory exporter, and server.

Exit codes: 0 success, 2 input validation failure, 3 mission aborted,
4 replay verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from .engine import MissionEngine
from .errors import SarError
from .events import Replay, belief_series, dump_replay, load_replay, verify_replay
from .policies import make_policy
from .strategies import STRATEGIES
from .world import load_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ABORTED = 3
EXIT_VERIFY = 4


def _load_scenario_with_overrides(args) -> "object":
    doc = json.loads(Path(args.scenario).read_text())
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "config", None):
        overrides = json.loads(Path(args.config).read_text())
        doc.setdefault("hyperparams", {}).update(overrides)
    if getattr(args, "ticks_max", None) is not None:
        doc.setdefault("constants", {})["ticks_max"] = args.ticks_max
    return load_scenario(doc)


def cmd_run(args) -> int:
    try:
        scenario = _load_scenario_with_overrides(args)
        policy = make_policy(args.policy)
    except (SarError, OSError, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    start = time.perf_counter()
    engine = MissionEngine(scenario, policy=policy)
    outcome = engine.run()
    elapsed = time.perf_counter() - start

    replay_text = dump_replay(engine.replay_header(), engine.log.events)
    if args.out:
        Path(args.out).write_text(replay_text)

    # Clue handling quality against the scenario's hidden ground truth.
    final_disposition: dict[str, str] = {}
    for trace in engine.traces:
        final_disposition[trace.clue_id] = trace.disposition
    accepted = {c for c, d in final_disposition.items() if d == "updated_belief"}
    relevant = {c.id for c in scenario.clues if c.ground_truth_relevant}
    tp = len(accepted & relevant)
    precision = tp / len(accepted) if accepted else 1.0
    recall = tp / len(relevant) if relevant else 1.0

    summary = {
        "outcome": outcome,
        "ticks": engine.tick_count,
        "wall_seconds": round(elapsed, 3),
        "events": len(engine.log),
        "approvals": sum(1 for e in engine.log.events if e["kind"] == "approval_created"),
        "clue_precision": round(precision, 4),
        "clue_recall": round(recall, 4),
        "final_belief": {s: round(engine.belief[s], 6) for s in STRATEGIES},
        "dominant": engine.belief.dominant(),
    }
    print(json.dumps(summary, indent=2))

    report = verify_replay(Replay(engine.replay_header(), engine.log.events))
    if not report.passed:
        print(report.summary(), file=sys.stderr)
        return EXIT_VERIFY
    if outcome == "aborted":
        return EXIT_ABORTED
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        replay = load_replay(Path(args.replay))
    except (SarError, OSError, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = verify_replay(replay)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_plot(args) -> int:
    try:
        replay = load_replay(Path(args.replay))
    except (SarError, OSError, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rows = belief_series(replay)
    out = Path(args.out) if args.out else Path(args.replay).with_suffix(".belief.csv")
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seq", "tick", "event", *STRATEGIES])
        for row in rows:
            writer.writerow([row["seq"], row["tick"], row["event"], *(row[s] for s in STRATEGIES)])
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(token=args.token)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_bench(args) -> int:
    import runpy

    script = Path(__file__).resolve().parents[2].parent / "benchmarks" / "bench_kernels.py"
    if not script.exists():
        print("benchmark script not found; run benchmarks/bench_kernels.py from a repo checkout",
              file=sys.stderr)
        return EXIT_VALIDATION
    runpy.run_path(str(script), run_name="__main__")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sarmission", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a mission headlessly and write a replay")
    run.add_argument("--scenario", required=True)
    run.add_argument("--policy", default="always-approve",
                     help="always-approve | always-reject | approve-after[:ticks] | none")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="replay output path")
    run.add_argument("--ticks-max", type=int, default=None)
    run.add_argument("--config", default=None, help="JSON file overriding hyperparameters")
    run.set_defaults(fn=cmd_run)

    verify = sub.add_parser("verify", help="check a replay's integrity invariants")
    verify.add_argument("replay")
    verify.set_defaults(fn=cmd_verify)

    plot = sub.add_parser("plot", help="export the belief trajectory as CSV")
    plot.add_argument("replay")
    plot.add_argument("--out", default=None)
    plot.set_defaults(fn=cmd_plot)

    serve = sub.add_parser("serve", help="start the mission service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8340)
    serve.add_argument("--token", default=None)
    serve.set_defaults(fn=cmd_serve)

    bench = sub.add_parser("bench", help="compare compiled and pure kernel backends")
    bench.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
