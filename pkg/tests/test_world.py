import math

import pytest

from sarmission import kernels
from sarmission.errors import ScenarioError
from sarmission.world import (
    CoverageMap,
    coverage_fraction,
    evidence_from_scenario,
    generate_tasks,
    load_scenario,
    rle_encode,
    strategy_eligible_cells,
    TerrainGrid,
)


class TestGridLoading:
    def test_rle_round_trip(self, rockies_doc):
        grid = TerrainGrid.from_dict(rockies_doc["grid"])
        again = TerrainGrid.from_dict(grid.to_dict())
        assert (grid.features == again.features).all()
        assert (grid.elevation == again.elevation).all()

    def test_rle_encode_compacts_runs(self):
        assert rle_encode(["a", "a", "b"]) == [[2, "a"], [1, "b"]]

    def test_row_length_mismatch_rejected(self, rockies_doc):
        doc = dict(rockies_doc["grid"])
        doc["feature_rows"] = [rows[:1] for rows in doc["feature_rows"]]
        with pytest.raises(ScenarioError):
            TerrainGrid.from_dict(doc)

    def test_unknown_feature_rejected(self, rockies_doc):
        doc = dict(rockies_doc["grid"])
        doc["feature_rows"][0] = [[doc["width"], "lava"]]
        with pytest.raises(ScenarioError, match="lava"):
            TerrainGrid.from_dict(doc)

    def test_shoreline_requires_adjacent_water(self):
        doc = {
            "width": 3, "height": 1, "cell_size_m": 10.0,
            "feature_rows": [[[1, "open"], [1, "shoreline"], [1, "open"]]],
            "elevation_rows": [[[3, 100.0]]],
        }
        with pytest.raises(ScenarioError, match="shoreline"):
            TerrainGrid.from_dict(doc)


class TestScenarioValidation:
    def test_shipped_rockies_scenario_loads(self, rockies):
        assert rockies.agent_count == 7
        assert rockies.grid.cells_of("water")
        assert rockies.grid.cells_of("shoreline")

    def test_too_many_relevant_clues_rejected(self, rockies_doc):
        doc = dict(rockies_doc)
        extra = []
        for i in range(5):
            clue = dict(doc["clues"][0])
            clue["id"] = f"dup-{i}"
            extra.append(clue)
        doc["clues"] = doc["clues"] + extra
        with pytest.raises(ScenarioError, match="2-5 relevant"):
            load_scenario(doc)

    def test_lkp_off_grid_rejected(self, rockies_doc):
        doc = dict(rockies_doc)
        doc["profile"] = dict(doc["profile"], lkp_cell=[999, 999])
        with pytest.raises(ScenarioError, match="LKP"):
            load_scenario(doc)

    def test_clue_off_grid_rejected(self, rockies_doc):
        doc = dict(rockies_doc)
        clues = [dict(c) for c in doc["clues"]]
        clues[0]["cell"] = [999, 0]
        doc["clues"] = clues
        with pytest.raises(ScenarioError, match="outside the grid"):
            load_scenario(doc)

    def test_evidence_derivation(self, rockies):
        evidence = evidence_from_scenario(rockies)
        assert evidence["age_group"] == "child"
        assert evidence["water_present"] == "yes"
        assert evidence["trails_present"] == "yes"
        assert evidence["structures_present"] == "no"
        assert evidence["steep_terrain"] == "yes"
        assert evidence["elapsed"] == "few_hours"


class TestTaskGeneration:
    def test_region_first_task_sweeps_over_lkp(self, rockies):
        tasks = generate_tasks("Region", rockies)
        assert tasks
        first = tasks[0]
        lkp_x, lkp_y = rockies.grid.center(rockies.lkp_cell)
        (x1, y1), (x2, y2) = first.waypoints[0], first.waypoints[-1]
        assert y1 == pytest.approx(lkp_y)
        assert min(x1, x2) <= lkp_x <= max(x1, x2)

    def test_waterways_covers_all_water_and_shoreline(self, rockies):
        tasks = generate_tasks("Waterways", rockies)
        kinds = {t.kind for t in tasks}
        assert "shoreline-follow" in kinds and "water-sweep" in kinds
        loop = next(t for t in tasks if t.kind == "shoreline-follow")
        assert loop.priority == 0  # the shoreline asset launches first

        shoreline = rockies.grid.cells_of("shoreline")
        loop_cells = {
            (int(x // rockies.grid.cell_size_m), int(y // rockies.grid.cell_size_m))
            for x, y in loop.waypoints
        }
        assert set(shoreline) <= loop_cells

        # Every water cell lies within one lane spacing of a sweep lane.
        lane_rows = set()
        for t in tasks:
            if t.kind == "water-sweep":
                lane_rows.add(int(t.waypoints[0][1] // rockies.grid.cell_size_m))
        for col, row in rockies.grid.cells_of("water"):
            assert any(abs(row - lane) <= 1 for lane in lane_rows)

    def test_shelter_on_grid_without_buildings_is_empty(self, rockies):
        assert generate_tasks("Shelter", rockies) == []

    def test_shelter_visits_each_building_cluster(self, quarry):
        tasks = generate_tasks("Shelter", quarry)
        assert len(tasks) == len(quarry.grid.building_clusters())
        assert all(t.kind == "shelter-visit" for t in tasks)

    def test_trail_tasks_start_at_high_elevation(self, quarry):
        tasks = generate_tasks("Trail", quarry)
        assert tasks
        for task in tasks:
            start = task.waypoints[0]
            end = task.waypoints[-1]
            grid = quarry.grid
            start_cell = (int(start[0] // grid.cell_size_m), int(start[1] // grid.cell_size_m))
            end_cell = (int(end[0] // grid.cell_size_m), int(end[1] // grid.cell_size_m))
            assert grid.elevation_at(start_cell) >= grid.elevation_at(end_cell)

    def test_unknown_strategy_rejected(self, rockies):
        with pytest.raises(ScenarioError):
            generate_tasks("Binary", rockies)


class TestKinematics:
    def test_advance_100m_at_10mps_for_5s_moves_50m(self):
        x, y, leg, done = kernels.advance_along_path(0.0, 0.0, 0, [100.0], [0.0], 50.0)
        assert (x, y) == (50.0, 0.0)
        assert not done

    def test_advance_through_corner(self):
        x, y, leg, done = kernels.advance_along_path(0.0, 0.0, 0, [10.0, 10.0], [0.0, 10.0], 15.0)
        assert x == pytest.approx(10.0)
        assert y == pytest.approx(5.0)
        assert leg == 1

    def test_reaching_final_waypoint_reports_done(self):
        x, y, leg, done = kernels.advance_along_path(0.0, 0.0, 0, [3.0], [4.0], 10.0)
        assert done and (x, y) == (3.0, 4.0)


class TestCoverage:
    def test_coverage_starts_at_zero_and_is_monotone(self, rockies):
        cov = CoverageMap(rockies)
        assert coverage_fraction("Region", cov) == 0.0
        x, y = rockies.grid.center(rockies.lkp_cell)
        cov.mark(x, y, 30.0)
        first = coverage_fraction("Region", cov)
        assert first > 0.0
        cov.mark(x, y, 30.0)  # same spot marks nothing new
        assert coverage_fraction("Region", cov) == first

    def test_zero_eligible_strategy_is_vacuously_complete(self, rockies):
        cov = CoverageMap(rockies)
        assert coverage_fraction("Shelter", cov) == 1.0  # no buildings on this grid

    def test_mark_disk_marks_cells_within_radius_only(self):
        covered = bytearray(100)
        newly = kernels.mark_disk(covered, 10, 10, 50.0, 50.0, 15.0, 10.0)
        cells = {(i % 10, i // 10) for i in newly}
        for col, row in cells:
            cx, cy = (col + 0.5) * 10.0, (row + 0.5) * 10.0
            assert math.hypot(cx - 50.0, cy - 50.0) <= 15.0
        assert (4, 4) in cells and (5, 5) in cells

    def test_eligibility_sets_follow_region_scale(self, rockies):
        small = strategy_eligible_cells("Region", rockies, region_scale=1.0)
        big = strategy_eligible_cells("Region", rockies, region_scale=1.5)
        assert small < big
