#!/usr/bin/env python3
"""Author the shipped scenario files.

Geometry is computed here (lake ellipse, shoreline ring, trails, clue
placement) and frozen into JSON so the shipped artifacts stay stable even if
this generator changes. Run from the repo root:

    python tools/make_scenarios.py
"""

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "scenarios"


def rle(values):
    runs = []
    for v in values:
        if runs and runs[-1][1] == v:
            runs[-1][0] += 1
        else:
            runs.append([1, v])
    return runs


def build_grid(width, height, feature_fn, elevation_fn):
    features = [[feature_fn(c, r) for c in range(width)] for r in range(height)]
    # Shoreline ring: land cells that touch water.
    for r in range(height):
        for c in range(width):
            if features[r][c] == "water":
                continue
            touches = any(
                0 <= c + dc < width and 0 <= r + dr < height and features[r + dr][c + dc] == "water"
                for dc in (-1, 0, 1) for dr in (-1, 0, 1) if (dc, dr) != (0, 0)
            )
            if touches:
                features[r][c] = "shoreline"
    elevation = [[elevation_fn(c, r, features[r][c]) for c in range(width)] for r in range(height)]
    return features, elevation


def shoreline_cells(features):
    return sorted(
        (c, r) for r, row in enumerate(features) for c, f in enumerate(row) if f == "shoreline"
    )


def rockies_lake():
    width, height = 60, 48
    lake_c, lake_r, rx, ry = 42, 24, 14, 10

    def feature(c, r):
        if (c - lake_c) ** 2 / rx**2 + (r - lake_r) ** 2 / ry**2 <= 1.0:
            return "water"
        if r == 24 and 2 <= c <= 26:
            return "trail"
        if c == 20 and 9 <= r <= 23:
            return "trail"
        if 10 <= r <= 20 and 14 <= c <= 26:
            return "forest"
        if 28 <= r <= 40 and 4 <= c <= 16:
            return "shrubland"
        return "open"

    def elevation(c, r, f):
        if f in ("water",):
            return 2440.0
        return round(2520.0 - 1.4 * c - 0.4 * abs(r - 24), 1)

    features, elev = build_grid(width, height, feature, elevation)
    shore = shoreline_cells(features)

    # Red hat on the south-west shore (reached late in the region sweep);
    # the child on the southern shoreline just east of the region sweep's
    # reach, so only the water search can find her, early in its loop.
    red_hat_cell = min((c for c in shore if c[1] in (32, 33, 34) and c[0] <= 40),
                       key=lambda c: (abs(c[1] - 33), c[0]))
    person_cell = min(c for c in shore if c[0] >= 38 and c[1] >= 34)

    doc = {
        "schema_version": 1,
        "name": "rockies-lake",
        "seed": 7,
        "agent_count": 7,
        "home_cell": [12, 24],
        "profile": {
            "age_group": "child",
            "description": "small girl wearing a red hat, yellow shirt, blue shorts and gym shoes, carrying a doll and a teddy bear",
            "attire": [
                {"color": "red", "item": "hat"},
                {"color": "yellow", "item": "shirt"},
                {"color": "blue", "item": "shorts"},
                {"item": "gym shoes"},
            ],
            "carrying": [{"item": "doll"}, {"item": "teddy bear"}, {"item": "backpack"}],
            "lkp_cell": [12, 24],
            "elapsed_minutes": 60,
        },
        "environment": {"weather": "clear", "daylight": "day"},
        "person": {
            "cell": list(person_cell),
            "description": "a child playing near the lake, matching the lost girl's description",
        },
        "clues": [
            {
                "id": "doll",
                "cell": [15, 23],
                "description": "a small doll lying in the grass",
                "tags": {"stage1_label": "doll", "stage1_confidence": "Medium",
                         "stage2_label": "a child's doll", "stage2_confidence": "Medium"},
                "ground_truth_relevant": True,
            },
            {
                "id": "spectacles",
                "cell": [10, 27],
                "description": "a pair of adult spectacles on the ground",
                "tags": {"stage1_label": "spectacles", "stage1_confidence": "Medium",
                         "stage2_label": "reading glasses", "stage2_confidence": "Medium"},
                "ground_truth_relevant": False,
            },
            {
                "id": "bicycle",
                "cell": [8, 21],
                "description": "a damaged blue bicycle leaning against a rock",
                "tags": {"stage1_label": "bicycle", "stage1_confidence": "High"},
                "ground_truth_relevant": False,
            },
            {
                "id": "old-boots",
                "cell": [18, 30],
                "description": "a pair of old adult hiking boots",
                "tags": {"stage1_label": "boots", "stage1_confidence": "Medium",
                         "stage2_label": "worn adult boots", "stage2_confidence": "Medium"},
                "ground_truth_relevant": False,
            },
            {
                "id": "red-cloth",
                "cell": [14, 28],
                "description": "a blurry red object partially hidden in a tree",
                "tags": {"stage1_label": "red object", "stage1_confidence": "Low",
                         "stage2_label": "red cloth or fabric", "stage2_confidence": "Medium"},
                "inspection": {
                    "description": "a weathered red tarp snagged in the branches",
                    "tags": {"stage1_label": "red tarp", "stage1_confidence": "High"},
                },
                "ground_truth_relevant": False,
            },
            {
                "id": "red-hat",
                "cell": list(red_hat_cell),
                "description": "a red hat floating at the water's edge",
                "tags": {"stage1_label": "red hat", "stage1_confidence": "High"},
                "ground_truth_relevant": True,
            },
        ],
        "envelope": {
            "min_altitude_m": 30.0,
            "max_altitude_m": 110.0,
            "max_range_m": 1500.0,
            "battery_reserve_fraction": 0.2,
            "include_geofence": [[-20.0, -20.0], [1220.0, -20.0], [1220.0, 980.0], [-20.0, 980.0]],
            "exclude_geofences": [],
        },
        "constants": {
            "tick_seconds": 1.0,
            "cruise_speed_mps": 10.0,
            "footprint_radius_m": 30.0,
            "cruise_altitude_m": 60.0,
            "endurance_s": 1500.0,
            "region_radius_cells": 24,
            "lane_spacing_cells": 3,
            "ticks_max": 200,
            "approval_timeout_s": 300.0,
            "status_interval_ticks": 10,
        },
        "grid": {
            "width": width,
            "height": height,
            "cell_size_m": 20.0,
            "feature_rows": [rle(row) for row in features],
            "elevation_rows": [rle(row) for row in elev],
        },
    }
    return doc


def quarry_ponds():
    width, height = 40, 32

    def feature(c, r):
        if (c - 12) ** 2 / 25 + (r - 10) ** 2 / 16 <= 1.0:
            return "water"
        if (c - 30) ** 2 / 36 + (r - 22) ** 2 / 20 <= 1.0:
            return "water"
        if r == 16 and 4 <= c <= 34:
            return "trail"
        if c == 34 and 16 <= r <= 27:
            return "trail"
        if 26 <= r <= 27 and 6 <= c <= 8:
            return "building"
        if 2 <= r <= 7 and 24 <= c <= 38:
            return "forest"
        return "shrubland" if (r + c) % 7 == 0 else "open"

    def elevation(c, r, f):
        if f == "water":
            return 210.0
        return round(230.0 - 0.3 * c - 0.2 * r, 1)

    features, elev = build_grid(width, height, feature, elevation)
    shore = shoreline_cells(features)
    # Teddy bear near the LKP; shoe on the trail; person by the SE pond, on the trail spur.
    person_cell = (34, 26)

    doc = {
        "schema_version": 1,
        "name": "quarry-ponds",
        "seed": 11,
        "agent_count": 4,
        "home_cell": [6, 16],
        "profile": {
            "age_group": "child",
            "description": "small girl in a yellow raincoat carrying a teddy bear, last seen at the quarry entrance",
            "attire": [
                {"color": "yellow", "item": "raincoat"},
                {"item": "gym shoes"},
            ],
            "carrying": [{"item": "teddy bear"}],
            "lkp_cell": [6, 16],
            "elapsed_minutes": 45,
        },
        "environment": {"weather": "clear", "daylight": "day"},
        "person": {
            "cell": list(person_cell),
            "description": "a child beside the pond, matching the lost girl's description",
        },
        "clues": [
            {
                "id": "teddy-bear",
                "cell": [9, 17],
                "description": "a small teddy bear dropped beside the path",
                "tags": {"stage1_label": "teddy bear", "stage1_confidence": "Medium",
                         "stage2_label": "a plush teddy bear", "stage2_confidence": "Medium"},
                "ground_truth_relevant": True,
            },
            {
                "id": "gym-shoe",
                "cell": [16, 16],
                "description": "one of the girl's gym shoes lying on the trail",
                "tags": {"stage1_label": "gym shoes", "stage1_confidence": "High"},
                "ground_truth_relevant": True,
            },
            {
                "id": "plastic-bottle",
                "cell": [10, 13],
                "description": "a crushed plastic bottle",
                "tags": {"stage1_label": "plastic bottle", "stage1_confidence": "Medium",
                         "stage2_label": "discarded bottle", "stage2_confidence": "Medium"},
                "ground_truth_relevant": False,
            },
            {
                "id": "blue-tarp",
                "cell": [16, 20],
                "description": "a blue tarp weighted with stones",
                "tags": {"stage1_label": "tarp", "stage1_confidence": "Medium",
                         "stage2_label": "construction tarp", "stage2_confidence": "Medium"},
                "ground_truth_relevant": False,
            },
        ],
        "envelope": {
            "min_altitude_m": 30.0,
            "max_altitude_m": 100.0,
            "max_range_m": 900.0,
            "battery_reserve_fraction": 0.25,
            "include_geofence": [[-20.0, -20.0], [820.0, -20.0], [820.0, 660.0], [-20.0, 660.0]],
            "exclude_geofences": [[[200.0, 430.0], [280.0, 430.0], [280.0, 470.0], [200.0, 470.0]]],
        },
        "constants": {
            "tick_seconds": 1.0,
            "cruise_speed_mps": 10.0,
            "footprint_radius_m": 30.0,
            "cruise_altitude_m": 55.0,
            "endurance_s": 600.0,
            "region_radius_cells": 12,
            "lane_spacing_cells": 3,
            "ticks_max": 600,
            "approval_timeout_s": 300.0,
            "status_interval_ticks": 10,
        },
        "grid": {
            "width": width,
            "height": height,
            "cell_size_m": 20.0,
            "feature_rows": [rle(row) for row in features],
            "elevation_rows": [rle(row) for row in elev],
        },
    }
    return doc


def main() -> None:
    OUT.mkdir(exist_ok=True)
    for doc in (rockies_lake(), quarry_ponds()):
        path = OUT / f"{doc['name'].replace('-', '_')}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
