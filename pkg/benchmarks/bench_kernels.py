#!/usr/bin/env python3
"""Compare the compiled kernel core against the pure-Python fallback.

Times each hot kernel on representative workloads, then times a full shipped
mission under both backends (the mission comparison runs in subprocesses so
the import-time backend selection can differ).

    python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time
from pathlib import Path

from sarmission.kernels import _pure

try:
    from sarmission.kernels import _core
except ImportError:
    _core = None

REPO = Path(__file__).resolve().parent.parent


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_module(mod):
    results = {}

    probs = [0.2, 0.3, 0.25, 0.15, 0.1]
    results["multiplicative_update x100k"] = timeit(
        lambda: [mod.multiplicative_update(probs, 2, 0.8) for _ in range(100_000)]
    )
    results["entropy_norm x100k"] = timeit(
        lambda: [mod.entropy_norm(probs) for _ in range(100_000)]
    )

    wx = [float(i * 13 % 997) for i in range(200)]
    wy = [float(i * 29 % 991) for i in range(200)]

    def advance():
        x, y, leg = 0.0, 0.0, 0
        for _ in range(20_000):
            x, y, leg, done = mod.advance_along_path(x, y, leg, wx, wy, 10.0)
            if done:
                x, y, leg = 0.0, 0.0, 0

    results["advance_along_path x20k"] = timeit(advance)

    def coverage():
        covered = bytearray(200 * 200)
        for i in range(5_000):
            mod.mark_disk(covered, 200, 200, float(i % 3900), float(i % 3700), 30.0, 20.0)

    results["mark_disk x5k"] = timeit(coverage)
    return results


def bench_mission(pure: bool) -> float:
    env = dict(os.environ)
    if pure:
        env["SARMISSION_PURE"] = "1"
    else:
        env.pop("SARMISSION_PURE", None)
    code = (
        "import time; from pathlib import Path; "
        "from sarmission.world import load_scenario; "
        "from sarmission.engine import MissionEngine; "
        "from sarmission.policies import AlwaysApprove; "
        "from sarmission import kernels; "
        f"sc = load_scenario(Path(r'{REPO / 'scenarios' / 'rockies_lake.json'}')); "
        "t0 = time.perf_counter(); "
        "eng = MissionEngine(sc, policy=AlwaysApprove()); eng.run(); "
        "print(kernels.BACKEND, time.perf_counter() - t0)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    expected = "pure" if pure else "compiled"
    if backend != expected and not pure:
        print(f"  (compiled extension unavailable; mission ran on {backend})")
    return float(seconds)


def main() -> None:
    mods = {"pure": _pure}
    if _core is not None:
        mods["compiled"] = _core
    else:
        print("compiled extension not built; only the pure backend is benchmarked")

    all_results = {name: bench_module(mod) for name, mod in mods.items()}
    workloads = list(all_results["pure"])
    print(f"\n{'kernel workload':32s}" + "".join(f"{name:>12s}" for name in mods) + f"{'speedup':>10s}")
    for wl in workloads:
        row = f"{wl:32s}"
        for name in mods:
            row += f"{all_results[name][wl] * 1e3:10.1f}ms"
        if "compiled" in mods:
            ratio = all_results["pure"][wl] / all_results["compiled"][wl]
            row += f"{ratio:9.1f}x"
        print(row)

    print("\nfull rockies-lake mission (always-approve):")
    pure_s = bench_mission(pure=True)
    print(f"  pure      {pure_s * 1e3:8.1f}ms")
    if _core is not None:
        compiled_s = bench_mission(pure=False)
        print(f"  compiled  {compiled_s * 1e3:8.1f}ms   ({pure_s / compiled_s:.1f}x)")


if __name__ == "__main__":
    main()
