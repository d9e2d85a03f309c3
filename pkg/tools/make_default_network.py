#!/usr/bin/env python3
"""Author the default strategy network file.

Strategy rows are produced from per-age base weights multiplied by
environment modifiers and renormalized, so the shipped CPTs stay consistent
with documented lost-person behavior orderings (children stay near the last
known point and gravitate to water; adults range far on trails and contours;
night and bad weather push toward shelter; terrain features reweight the
matching strategies).

Run from the repo root:  python tools/make_default_network.py
"""

import json
from itertools import product
from pathlib import Path

STRATEGIES = ["Trail", "Shelter", "Waterways", "Contour", "Region"]

AGE_BASE = {
    "child":   {"Trail": 0.10, "Shelter": 0.12, "Waterways": 0.28, "Contour": 0.07, "Region": 0.43},
    "adult":   {"Trail": 0.30, "Shelter": 0.12, "Waterways": 0.16, "Contour": 0.22, "Region": 0.20},
    "elderly": {"Trail": 0.24, "Shelter": 0.20, "Waterways": 0.14, "Contour": 0.10, "Region": 0.32},
}

DAYLIGHT_MOD = {
    "day":   {},
    "dusk":  {"Shelter": 1.5},
    "night": {"Shelter": 2.5, "Contour": 0.8, "Waterways": 0.9},
}

WEATHER_MOD = {
    "clear": {},
    "rain":  {"Shelter": 1.5, "Waterways": 0.9},
    "snow":  {"Shelter": 2.0, "Contour": 0.8},
}

ELAPSED_MOD = {
    "under_hour": {"Region": 1.4},
    "few_hours":  {},
    "many_hours": {"Region": 0.7, "Trail": 1.2, "Contour": 1.15},
}

# P(flag = yes | strategy): how strongly each terrain feature supports a strategy.
EVIDENCE_YES = {
    "water_present":      {"Trail": 0.45, "Shelter": 0.45, "Waterways": 0.85, "Contour": 0.40, "Region": 0.55},
    "trails_present":     {"Trail": 0.90, "Shelter": 0.55, "Waterways": 0.55, "Contour": 0.50, "Region": 0.60},
    "structures_present": {"Trail": 0.45, "Shelter": 0.75, "Waterways": 0.45, "Contour": 0.40, "Region": 0.50},
    "steep_terrain":      {"Trail": 0.55, "Shelter": 0.50, "Waterways": 0.45, "Contour": 0.85, "Region": 0.50},
}

ROOT_PRIORS = {
    "age_group": {"states": ["child", "adult", "elderly"], "probs": [1 / 3, 1 / 3, 1 / 3], "group": "profile"},
    "daylight": {"states": ["day", "dusk", "night"], "probs": [0.5, 0.25, 0.25], "group": "environment"},
    "weather": {"states": ["clear", "rain", "snow"], "probs": [0.6, 0.25, 0.15], "group": "environment"},
    "elapsed": {"states": ["under_hour", "few_hours", "many_hours"], "probs": [0.3, 0.45, 0.25], "group": "profile"},
}


def strategy_row(age: str, daylight: str, weather: str, elapsed: str) -> list[float]:
    weights = []
    for s in STRATEGIES:
        w = AGE_BASE[age][s]
        w *= DAYLIGHT_MOD[daylight].get(s, 1.0)
        w *= WEATHER_MOD[weather].get(s, 1.0)
        w *= ELAPSED_MOD[elapsed].get(s, 1.0)
        weights.append(w)
    total = sum(weights)
    row = [round(w / total, 6) for w in weights[:-1]]
    row.append(1.0 - sum(row))
    return row


def main() -> None:
    nodes = []
    cpts = {}
    for nid, spec in ROOT_PRIORS.items():
        nodes.append({"id": nid, "states": spec["states"], "group": spec["group"]})
        cpts[nid] = {"rows": {"": spec["probs"]}}

    nodes.append({"id": "search_strategy", "states": STRATEGIES, "group": "strategy"})
    edges = [[p, "search_strategy"] for p in ("age_group", "daylight", "weather", "elapsed")]
    rows = {}
    for age, daylight, weather, elapsed in product(
        ROOT_PRIORS["age_group"]["states"],
        ROOT_PRIORS["daylight"]["states"],
        ROOT_PRIORS["weather"]["states"],
        ROOT_PRIORS["elapsed"]["states"],
    ):
        rows["|".join([age, daylight, weather, elapsed])] = strategy_row(age, daylight, weather, elapsed)
    cpts["search_strategy"] = {"rows": rows}

    for nid, table in EVIDENCE_YES.items():
        nodes.append({"id": nid, "states": ["yes", "no"], "group": "evidence"})
        edges.append(["search_strategy", nid])
        cpts[nid] = {
            "rows": {s: [table[s], round(1.0 - table[s], 6)] for s in STRATEGIES}
        }

    doc = {
        "schema_version": 1,
        "description": "Default strategy network: profile and environment drive the strategy prior; terrain flags act as evidence.",
        "nodes": nodes,
        "edges": edges,
        "cpts": cpts,
    }
    out = Path(__file__).resolve().parent.parent / "src" / "sarmission" / "data" / "default_network.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
