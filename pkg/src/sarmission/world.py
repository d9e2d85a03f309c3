"""Deterministic grid world: terrain, scenarios, agents, tasks, and coverage.

Everything here is integer-cell or float-meter math with no randomness; the
same scenario file always produces the same geometry, task order, and
coverage accounting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .bayes import EvidenceAssignment
from .errors import ScenarioError
from .guardrails import SafetyEnvelope, clamp_waypoint
from .strategies import STRATEGIES

FEATURES = ("open", "forest", "shrubland", "water", "trail", "building", "shoreline")
_FEATURE_CODE = {name: i for i, name in enumerate(FEATURES)}

# Terrain feature -> clue location context used by the reasoning stages.
LOCATION_CONTEXT = {
    "water": "water",
    "shoreline": "shoreline",
    "trail": "trail",
    "building": "building",
    "forest": "forest",
    "shrubland": "forest",
    "open": "open",
}

SCENARIO_SCHEMA_VERSION = 1

Cell = tuple[int, int]  # (col, row)


def _expand_rle(rows: list, width: int, height: int, value_map=None) -> list[list]:
    if len(rows) != height:
        raise ScenarioError(f"grid has {len(rows)} rows, expected {height}")
    grid = []
    for r, row in enumerate(rows):
        expanded: list = []
        for count, value in row:
            expanded.extend([value] * count)
        if len(expanded) != width:
            raise ScenarioError(f"row {r} expands to {len(expanded)} cells, expected {width}")
        if value_map is not None:
            try:
                expanded = [value_map[v] for v in expanded]
            except KeyError as exc:
                raise ScenarioError(f"row {r}: unknown feature class {exc}") from None
        grid.append(expanded)
    return grid


def rle_encode(values: list) -> list:
    runs: list = []
    for v in values:
        if runs and runs[-1][1] == v:
            runs[-1][0] += 1
        else:
            runs.append([1, v])
    return runs


class TerrainGrid:
    def __init__(self, width: int, height: int, cell_size_m: float,
                 features: np.ndarray, elevation: np.ndarray):
        self.width = width
        self.height = height
        self.cell_size_m = cell_size_m
        self.features = features
        self.elevation = elevation
        self._validate()

    @classmethod
    def from_dict(cls, doc: dict) -> "TerrainGrid":
        width, height = int(doc["width"]), int(doc["height"])
        cell = float(doc["cell_size_m"])
        feat = _expand_rle(doc["feature_rows"], width, height, _FEATURE_CODE)
        elev = _expand_rle(doc["elevation_rows"], width, height)
        return cls(width, height, cell,
                   np.array(feat, dtype=np.int8),
                   np.array(elev, dtype=np.float64))

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "cell_size_m": self.cell_size_m,
            "feature_rows": [rle_encode([FEATURES[c] for c in row]) for row in self.features.tolist()],
            "elevation_rows": [rle_encode(row) for row in self.elevation.tolist()],
        }

    def _validate(self) -> None:
        for (row, col) in zip(*np.where(self.features == _FEATURE_CODE["shoreline"])):
            if not any(
                self.feature_at((int(col) + dc, int(row) + dr)) == "water"
                for dc in (-1, 0, 1) for dr in (-1, 0, 1) if (dc, dr) != (0, 0)
            ):
                raise ScenarioError(f"shoreline cell ({col}, {row}) has no adjacent water")

    def in_bounds(self, cell: Cell) -> bool:
        col, row = cell
        return 0 <= col < self.width and 0 <= row < self.height

    def feature_at(self, cell: Cell) -> str | None:
        if not self.in_bounds(cell):
            return None
        return FEATURES[self.features[cell[1], cell[0]]]

    def elevation_at(self, cell: Cell) -> float:
        return float(self.elevation[cell[1], cell[0]])

    def center(self, cell: Cell) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.cell_size_m, (cell[1] + 0.5) * self.cell_size_m)

    def cells_of(self, feature: str) -> list[Cell]:
        rows, cols = np.where(self.features == _FEATURE_CODE[feature])
        return sorted((int(c), int(r)) for c, r in zip(cols, rows))

    def flat_index(self, cell: Cell) -> int:
        return cell[1] * self.width + cell[0]

    def trail_components(self) -> list[list[Cell]]:
        """Connected trail segments (4-connectivity), ordered for downhill search."""
        trail_cells = set(self.cells_of("trail"))
        seen: set[Cell] = set()
        components: list[list[Cell]] = []
        for start in sorted(trail_cells):
            if start in seen:
                continue
            comp: set[Cell] = set()
            stack = [start]
            while stack:
                cell = stack.pop()
                if cell in comp:
                    continue
                comp.add(cell)
                col, row = cell
                for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    nxt = (col + dc, row + dr)
                    if nxt in trail_cells and nxt not in comp:
                        stack.append(nxt)
            seen |= comp
            components.append(self._downhill_walk(comp))
        components.sort(key=lambda comp: (-self.elevation_at(comp[0]), comp[0]))
        return components

    def _downhill_walk(self, comp: set[Cell]) -> list[Cell]:
        """Depth-first walk starting at the highest cell, preferring descent."""
        start = max(comp, key=lambda c: (self.elevation_at(c), (-c[0], -c[1])))
        order: list[Cell] = []
        visited: set[Cell] = set()
        stack = [start]
        while stack:
            cell = stack.pop()
            if cell in visited:
                continue
            visited.add(cell)
            order.append(cell)
            col, row = cell
            neighbors = [
                (col + dc, row + dr)
                for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1))
                if (col + dc, row + dr) in comp and (col + dc, row + dr) not in visited
            ]
            # Stack pops last-first, so push uphill neighbors first.
            neighbors.sort(key=lambda c: (-self.elevation_at(c), c))
            stack.extend(neighbors)
        return order

    def building_clusters(self) -> list[list[Cell]]:
        cells = set(self.cells_of("building"))
        seen: set[Cell] = set()
        clusters = []
        for start in sorted(cells):
            if start in seen:
                continue
            comp = []
            stack = [start]
            while stack:
                cell = stack.pop()
                if cell in seen:
                    continue
                seen.add(cell)
                comp.append(cell)
                col, row = cell
                for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    nxt = (col + dc, row + dr)
                    if nxt in cells and nxt not in seen:
                        stack.append(nxt)
            clusters.append(sorted(comp))
        return clusters


@dataclass(frozen=True)
class ClueSpec:
    id: str
    cell: Cell
    description: str
    tags: dict
    ground_truth_relevant: bool
    inspection: dict | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "cell": list(self.cell),
            "description": self.description,
            "tags": self.tags,
            "ground_truth_relevant": self.ground_truth_relevant,
            "inspection": self.inspection,
        }


@dataclass
class Scenario:
    name: str
    grid: TerrainGrid
    profile: dict
    environment: dict
    clues: list[ClueSpec]
    person: dict
    envelope: SafetyEnvelope
    agent_count: int
    home_cell: Cell
    seed: int
    constants: dict
    hyperparams: dict
    raw: dict  # the validated source document, kept for replay embedding

    @property
    def lkp_cell(self) -> Cell:
        return tuple(self.profile["lkp_cell"])

    def profile_items(self) -> list[dict]:
        return list(self.profile.get("attire", [])) + list(self.profile.get("carrying", []))


DEFAULT_CONSTANTS = {
    "tick_seconds": 1.0,
    "cruise_speed_mps": 10.0,
    "footprint_radius_m": 30.0,
    "cruise_altitude_m": 60.0,
    "endurance_s": 3600.0,
    "region_radius_cells": 15,
    "lane_spacing_cells": 3,
    "contour_band_m": 10.0,
    "steep_relief_m": 50.0,
    "inspect_orbit_radius_m": 30.0,
    "ticks_max": 3000,
    "approval_timeout_s": 300.0,
    "status_interval_ticks": 10,
    "preempt_on_strategy_change": False,
}


def load_scenario(source: str | dict | Path) -> Scenario:
    if isinstance(source, Path):
        source = source.read_text()
    if isinstance(source, str):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    doc = source
    if doc.get("schema_version") != SCENARIO_SCHEMA_VERSION:
        raise ScenarioError(f"unsupported scenario schema_version {doc.get('schema_version')!r}")

    grid = TerrainGrid.from_dict(doc["grid"])
    profile = doc["profile"]
    clues = [
        ClueSpec(
            id=c["id"],
            cell=tuple(c["cell"]),
            description=c["description"],
            tags=c.get("tags", {}),
            ground_truth_relevant=bool(c["ground_truth_relevant"]),
            inspection=c.get("inspection"),
        )
        for c in doc.get("clues", [])
    ]

    ids = [c.id for c in clues]
    if len(set(ids)) != len(ids):
        raise ScenarioError("duplicate clue ids")
    relevant = sum(1 for c in clues if c.ground_truth_relevant)
    non_relevant = len(clues) - relevant
    if not 2 <= relevant <= 5:
        raise ScenarioError(f"scenario must place 2-5 relevant clues, found {relevant}")
    if not 2 <= non_relevant <= 5:
        raise ScenarioError(f"scenario must place 2-5 non-relevant clues, found {non_relevant}")
    for c in clues:
        if not c.description:
            raise ScenarioError(f"clue {c.id}: empty description")
        if not grid.in_bounds(c.cell):
            raise ScenarioError(f"clue {c.id} at {c.cell} is outside the grid")
    lkp = tuple(profile["lkp_cell"])
    if not grid.in_bounds(lkp):
        raise ScenarioError(f"LKP {lkp} is outside the grid")
    person = doc["person"]
    if not grid.in_bounds(tuple(person["cell"])):
        raise ScenarioError(f"person cell {person['cell']} is outside the grid")
    agent_count = int(doc.get("agent_count", 1))
    if agent_count < 1:
        raise ScenarioError("agent_count must be >= 1")
    home = tuple(doc.get("home_cell", lkp))
    if not grid.in_bounds(home):
        raise ScenarioError(f"home cell {home} is outside the grid")

    constants = dict(DEFAULT_CONSTANTS)
    constants.update(doc.get("constants", {}))
    envelope = SafetyEnvelope.from_dict(doc["envelope"])

    return Scenario(
        name=doc.get("name", "unnamed"),
        grid=grid,
        profile=profile,
        environment=doc["environment"],
        clues=clues,
        person=person,
        envelope=envelope,
        agent_count=agent_count,
        home_cell=home,
        seed=int(doc.get("seed", 0)),
        constants=constants,
        hyperparams=doc.get("hyperparams", {}),
        raw=doc,
    )


def evidence_from_scenario(scenario: Scenario) -> EvidenceAssignment:
    """Initial evidence: profile, environment, and terrain-derived flags."""
    minutes = float(scenario.profile.get("elapsed_minutes", 60.0))
    if minutes < 60.0:
        elapsed = "under_hour"
    elif minutes <= 240.0:
        elapsed = "few_hours"
    else:
        elapsed = "many_hours"
    grid = scenario.grid
    relief = float(grid.elevation.max() - grid.elevation.min())
    return {
        "age_group": scenario.profile["age_group"],
        "daylight": scenario.environment["daylight"],
        "weather": scenario.environment["weather"],
        "elapsed": elapsed,
        "water_present": "yes" if grid.cells_of("water") else "no",
        "trails_present": "yes" if grid.cells_of("trail") else "no",
        "structures_present": "yes" if grid.cells_of("building") else "no",
        "steep_terrain": "yes" if relief >= scenario.constants["steep_relief_m"] else "no",
    }


# ---------------------------------------------------------------------------
# Tasks


@dataclass
class Task:
    id: str
    kind: str
    strategy: str
    waypoints: list[tuple[float, float]]
    priority: int
    provenance: str = "planner"
    clue_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "strategy": self.strategy,
            "waypoints": [[x, y] for x, y in self.waypoints],
            "priority": self.priority,
            "provenance": self.provenance,
            "clue_id": self.clue_id,
        }


TASK_KINDS = (
    "waypoint-sweep", "trail-follow", "shoreline-follow", "water-sweep",
    "circle-inspect", "contour-follow", "shelter-visit",
)


def _clamp_waypoints(waypoints: list[tuple[float, float]], envelope: SafetyEnvelope) -> list[tuple[float, float]]:
    return [clamp_waypoint(x, y, envelope) for x, y in waypoints]


def strategy_eligible_cells(strategy: str, scenario: Scenario, region_scale: float = 1.0) -> set[Cell]:
    """Cells a strategy is responsible for covering."""
    grid = scenario.grid
    if strategy == "Region":
        radius = int(round(scenario.constants["region_radius_cells"] * region_scale))
        c0, r0 = scenario.lkp_cell
        return {
            (col, row)
            for col in range(max(0, c0 - radius), min(grid.width, c0 + radius + 1))
            for row in range(max(0, r0 - radius), min(grid.height, r0 + radius + 1))
        }
    if strategy == "Trail":
        return set(grid.cells_of("trail"))
    if strategy == "Waterways":
        return set(grid.cells_of("water")) | set(grid.cells_of("shoreline"))
    if strategy == "Shelter":
        return set(grid.cells_of("building"))
    if strategy == "Contour":
        band = scenario.constants["contour_band_m"]
        anchor = grid.elevation_at(scenario.lkp_cell)
        rows, cols = np.where(
            (np.abs(grid.elevation - anchor) <= band)
            & (grid.features != _FEATURE_CODE["water"])
        )
        return {(int(c), int(r)) for c, r in zip(cols, rows)}
    raise ScenarioError(f"unknown strategy {strategy!r}")


def generate_tasks(strategy: str, scenario: Scenario, region_scale: float = 1.0,
                   provenance: str = "planner") -> list[Task]:
    """Strategy-specific maneuver plans covering the strategy's eligible cells.

    Returns an empty list when the strategy has nothing to search on this
    terrain (the caller logs it; repeated emptiness feeds negative evidence).
    """
    grid = scenario.grid
    envelope = scenario.envelope
    spacing = int(scenario.constants["lane_spacing_cells"])
    tasks: list[Task] = []

    if strategy == "Region":
        radius = int(round(scenario.constants["region_radius_cells"] * region_scale))
        c0, r0 = scenario.lkp_cell
        col_lo, col_hi = max(0, c0 - radius), min(grid.width - 1, c0 + radius)
        row_lo, row_hi = max(0, r0 - radius), min(grid.height - 1, r0 + radius)
        lane_rows = sorted(
            {row for row in range(row_lo, row_hi + 1) if (row - r0) % spacing == 0},
            key=lambda row: (abs(row - r0), row),
        )
        x_lo = (col_lo + 0.5) * grid.cell_size_m
        x_hi = (col_hi + 0.5) * grid.cell_size_m
        for i, row in enumerate(lane_rows):
            y = (row + 0.5) * grid.cell_size_m
            points = [(x_lo, y), (x_hi, y)] if i % 2 == 0 else [(x_hi, y), (x_lo, y)]
            tasks.append(Task(
                id=f"region-sweep-{i:03d}",
                kind="waypoint-sweep",
                strategy="Region",
                waypoints=_clamp_waypoints(points, envelope),
                priority=i,
                provenance=provenance,
            ))

    elif strategy == "Trail":
        for i, comp in enumerate(grid.trail_components()):
            waypoints = [grid.center(c) for c in comp]
            tasks.append(Task(
                id=f"trail-follow-{i:03d}",
                kind="trail-follow",
                strategy="Trail",
                waypoints=_clamp_waypoints(waypoints, envelope),
                priority=i,
                provenance=provenance,
            ))

    elif strategy == "Waterways":
        shoreline = grid.cells_of("shoreline")
        if shoreline:
            path = _boundary_walk(shoreline)
            tasks.append(Task(
                id="shoreline-follow-000",
                kind="shoreline-follow",
                strategy="Waterways",
                waypoints=_clamp_waypoints([grid.center(c) for c in path], envelope),
                priority=0,
                provenance=provenance,
            ))
        water = grid.cells_of("water")
        if water:
            rows = sorted({row for _, row in water})
            row_set = set(rows)
            # Greedy banding: each lane's footprint spans its row +/- 1.
            lane_rows: list[int] = []
            covered_until = -2
            for row in rows:
                if row > covered_until:
                    lane = row + 1 if (row + 1) in row_set else row
                    lane_rows.append(lane)
                    covered_until = lane + 1
            for i, lane in enumerate(lane_rows):
                band_cols = [col for col, r in water if abs(r - lane) <= 1]
                x_lo = (min(band_cols) + 0.5) * grid.cell_size_m
                x_hi = (max(band_cols) + 0.5) * grid.cell_size_m
                y = (lane + 0.5) * grid.cell_size_m
                points = [(x_lo, y), (x_hi, y)] if i % 2 == 0 else [(x_hi, y), (x_lo, y)]
                tasks.append(Task(
                    id=f"water-sweep-{i:03d}",
                    kind="water-sweep",
                    strategy="Waterways",
                    waypoints=_clamp_waypoints(points, envelope),
                    priority=i + 1,
                    provenance=provenance,
                ))

    elif strategy == "Shelter":
        clusters = grid.building_clusters()
        lkp_xy = grid.center(scenario.lkp_cell)
        ordered = sorted(
            clusters,
            key=lambda comp: (
                min(math.dist(grid.center(c), lkp_xy) for c in comp),
                comp[0],
            ),
        )
        for i, comp in enumerate(ordered):
            cx = sum(grid.center(c)[0] for c in comp) / len(comp)
            cy = sum(grid.center(c)[1] for c in comp) / len(comp)
            radius = scenario.constants["inspect_orbit_radius_m"]
            waypoints = [(cx, cy)] + _orbit(cx, cy, radius)
            tasks.append(Task(
                id=f"shelter-visit-{i:03d}",
                kind="shelter-visit",
                strategy="Shelter",
                waypoints=_clamp_waypoints(waypoints, envelope),
                priority=i,
                provenance=provenance,
            ))

    elif strategy == "Contour":
        cells = sorted(strategy_eligible_cells("Contour", scenario, region_scale))
        if len(cells) >= 3:
            lkp_xy = grid.center(scenario.lkp_cell)
            def angle(cell: Cell) -> float:
                x, y = grid.center(cell)
                return math.atan2(y - lkp_xy[1], x - lkp_xy[0])
            ordered = sorted(cells, key=lambda c: (angle(c), c))
            # Thin to one waypoint per spacing to keep the polyline flyable.
            waypoints = [grid.center(c) for c in ordered[::spacing] or ordered]
            tasks.append(Task(
                id="contour-follow-000",
                kind="contour-follow",
                strategy="Contour",
                waypoints=_clamp_waypoints(waypoints, envelope),
                priority=0,
                provenance=provenance,
            ))
    else:
        raise ScenarioError(f"unknown strategy {strategy!r}")

    return tasks


def _orbit(cx: float, cy: float, radius: float, points: int = 8) -> list[tuple[float, float]]:
    out = []
    for i in range(points + 1):
        theta = 2.0 * math.pi * i / points
        out.append((cx + radius * math.cos(theta), cy + radius * math.sin(theta)))
    return out


def inspect_task(clue: ClueSpec, scenario: Scenario, seq: int) -> Task:
    cx, cy = scenario.grid.center(clue.cell)
    radius = scenario.constants["inspect_orbit_radius_m"]
    waypoints = _clamp_waypoints([(cx, cy)] + _orbit(cx, cy, radius), scenario.envelope)
    return Task(
        id=f"inspect-{clue.id}-{seq:03d}",
        kind="circle-inspect",
        strategy="Region",
        waypoints=waypoints,
        priority=-1,  # inspections preempt ordinary sweeps
        provenance="pipeline",
        clue_id=clue.id,
    )


def _boundary_walk(cells: list[Cell]) -> list[Cell]:
    """Deterministic walk visiting every cell, preferring adjacent steps."""
    remaining = set(cells)
    current = min(remaining)
    path = [current]
    remaining.remove(current)
    while remaining:
        col, row = current
        neighbors = [
            c for c in (
                (col + dc, row + dr)
                for dc in (-1, 0, 1) for dr in (-1, 0, 1)
                if (dc, dr) != (0, 0)
            ) if c in remaining
        ]
        if neighbors:
            current = min(neighbors)
        else:
            current = min(remaining, key=lambda c: ((c[0] - col) ** 2 + (c[1] - row) ** 2, c))
        path.append(current)
        remaining.remove(current)
    return path


# ---------------------------------------------------------------------------
# Agents and coverage


MODES = ("idle", "enroute", "searching", "inspecting", "returning", "landed")


@dataclass
class AgentState:
    id: str
    x: float
    y: float
    altitude_m: float
    battery_fraction: float
    home: tuple[float, float]
    mode: str = "idle"
    task: Task | None = None
    leg: int = 0
    stuck_ticks: int = 0

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "x": self.x,
            "y": self.y,
            "altitude_m": self.altitude_m,
            "battery_fraction": self.battery_fraction,
            "mode": self.mode,
            "task_id": self.task.id if self.task else None,
        }


class CoverageMap:
    """Mission-wide covered-cell bitmap with per-strategy accounting."""

    def __init__(self, scenario: Scenario, region_scale: float = 1.0):
        grid = scenario.grid
        self.grid = grid
        self.covered = bytearray(grid.width * grid.height)
        self.eligible: dict[str, set[int]] = {}
        self.covered_count: dict[str, int] = {}
        self.scenario = scenario
        self.rebuild_eligibility(region_scale)

    def rebuild_eligibility(self, region_scale: float) -> None:
        previously_covered = [i for i, v in enumerate(self.covered) if v]
        self.eligible = {
            s: {self.grid.flat_index(c) for c in strategy_eligible_cells(s, self.scenario, region_scale)}
            for s in STRATEGIES
        }
        self.covered_count = {
            s: sum(1 for i in previously_covered if i in self.eligible[s]) for s in STRATEGIES
        }

    def mark(self, x: float, y: float, radius: float) -> int:
        newly = kernels.mark_disk(
            self.covered, self.grid.width, self.grid.height, x, y, radius, self.grid.cell_size_m
        )
        for idx in newly:
            for s in STRATEGIES:
                if idx in self.eligible[s]:
                    self.covered_count[s] += 1
        return len(newly)

    def fraction(self, strategy: str) -> float:
        eligible = self.eligible[strategy]
        if not eligible:
            return 1.0
        return self.covered_count[strategy] / len(eligible)


def coverage_fraction(strategy: str, coverage: CoverageMap) -> float:
    """Searched fraction of a strategy's eligible cells (1.0 when none exist)."""
    return coverage.fraction(strategy)
