import numpy as np
import pytest

from ajdn.detector import JumpRecord, StatisticField, detect_jumps
from ajdn.errors import DegenerateDataError
from ajdn.mask import AdmissibleMask, admissible_range
from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid

from tests.common import (
    JUMP_INDEX,
    detection_params,
    jump_panel,
    single_jump,
    small_grid,
    white_noise,
)


def _locations(records):
    return sorted((r.dimension, r.time_index) for r in records)


def test_admissible_range_excludes_the_edges():
    assert admissible_range(1000, 0.1) == (101, 900)
    assert admissible_range(300, 0.05) == (16, 285)


def test_exclusion_only_touches_one_dimension():
    grid = ScaleGrid.shared(0.05, 0.1, 2, 2)
    mask = AdmissibleMask.initial(grid, 200)

    narrowed = mask.exclude(0, 100, 0.05)

    assert narrowed.times(0).tolist() == list(range(21, 90)) + list(range(111, 181))
    assert narrowed.times(1).tolist() == list(range(21, 181))
    assert narrowed.is_subset_of(mask)
    assert narrowed.changed_dimensions(mask) == [0]
    assert mask.times(0).tolist() == list(range(21, 181))


def test_field_maximum_breaks_ties_by_time_then_scale_then_dimension():
    values = np.zeros((2, 10, 2))
    values[1, 3, 0] = 5.0
    values[0, 3, 1] = 5.0
    values[0, 6, 0] = 5.0
    field = StatisticField(values, np.array([[0.1, 0.2], [0.1, 0.2]]))
    mask = AdmissibleMask(np.ones((2, 10), dtype=bool))

    best = field.maximum(mask)

    assert (best.dimension, best.time_index, best.scale_index) == (1, 4, 0)
    assert best.value == 5.0


def test_field_maximum_respects_the_mask():
    values = np.zeros((1, 10, 1))
    values[0, 3, 0] = 9.0
    values[0, 7, 0] = 4.0
    field = StatisticField(values, np.array([[0.1]]))
    allowed = np.ones((1, 10), dtype=bool)
    allowed[0, 3] = False

    assert field.maximum(AdmissibleMask(allowed)).time_index == 8
    assert field.maximum(AdmissibleMask(np.zeros((1, 10), dtype=bool))) is None


def test_max_over_scales_skips_undefined_times():
    values = np.full((1, 4, 2), np.nan)
    values[0, 1] = [1.0, 3.0]
    field = StatisticField(values, np.array([[0.1, 0.2]]))

    trace = field.max_over_scales(0)

    assert np.isnan(trace[0]) and trace[1] == 3.0


def test_location_prefers_the_refined_index():
    record = JumpRecord(0, 250, 0.5, 0.1, 12.0, 4.0, 1)

    assert record.location_index == 250
    assert record._replace(refined_time_index=252, refined_time=0.504).location_index == 252


def test_detects_a_single_jump(single_jump, small_grid, detection_params):
    records = detect_jumps(single_jump, small_grid, None, detection_params)

    first = records[0]
    assert first.dimension == 0
    assert abs(first.time_index - JUMP_INDEX) <= 5
    assert first.time == first.time_index / single_jump.n
    assert first.statistic >= first.critical_value
    assert first.iteration == 1
    assert first.refined_time is None


def test_white_noise_gives_no_jumps(white_noise, small_grid, detection_params):
    assert detect_jumps(white_noise, small_grid, None, detection_params) == []


def test_iteration_limit(single_jump, small_grid, detection_params):
    records = detect_jumps(
        single_jump, small_grid, None, detection_params._replace(max_iterations=0)
    )

    assert records == []


def test_identical_seeds_reproduce_records(single_jump, small_grid, detection_params):
    assert detect_jumps(single_jump, small_grid, None, detection_params) == detect_jumps(
        single_jump, small_grid, None, detection_params._replace(n_jobs=3)
    )


def test_asynchronous_jumps_are_found_in_their_own_dimensions(small_grid, detection_params):
    panel = jump_panel(500, 2, [(0, 200, 8.0), (1, 300, 8.0)])

    records = detect_jumps(panel, small_grid, None, detection_params)

    found = {(r.dimension, round(r.time_index / 10)) for r in records}
    assert {(0, 20), (1, 30)} <= found


def test_scaling_a_dimension_keeps_the_jump_set(small_grid, detection_params):
    panel = jump_panel(500, 2, [(0, 200, 8.0), (1, 300, 8.0)])
    scaled = panel.with_values(panel.values * np.array([3.0, 1.0]))

    assert _locations(detect_jumps(scaled, small_grid, None, detection_params)) == _locations(
        detect_jumps(panel, small_grid, None, detection_params)
    )


def test_permuting_dimensions_permutes_detections(detection_params):
    panel = jump_panel(500, 3, [(0, 200, 8.0), (2, 300, 8.0)])
    grid = ScaleGrid.shared(0.05, 0.1, 3, 3)
    order = [2, 0, 1]
    permuted = panel.with_values(panel.values[:, order])

    original = _locations(detect_jumps(panel, grid, None, detection_params))
    moved = _locations(detect_jumps(permuted, grid, None, detection_params))

    assert moved == sorted((order.index(r), i) for r, i in original)


def test_grid_must_match_the_panel(single_jump, detection_params):
    with pytest.raises(ValueError):
        detect_jumps(single_jump, ScaleGrid.shared(0.05, 0.1, 3, 5), None, detection_params)


def test_constant_dimension_is_degenerate(small_grid, detection_params):
    values = np.random.default_rng(0).standard_normal((500, 2))
    values[:, 1] = 1.0

    with pytest.raises(DegenerateDataError):
        detect_jumps(TimeSeriesPanel(values), small_grid, None, detection_params)


def test_close_jumps_in_one_dimension_give_one_record(small_grid, detection_params):
    panel = jump_panel(500, 2, [(0, 248, 8.0), (0, 252, 8.0)])

    records = [r for r in detect_jumps(panel, small_grid, None, detection_params) if r.dimension == 0]

    assert len(records) == 1
    assert abs(records[0].time_index - 250) <= 10


def test_statistic_and_critical_value_never_grow(small_grid, detection_params):
    panel = jump_panel(500, 2, [(0, 150, 8.0), (0, 350, 6.0), (1, 250, 7.0)])

    records = detect_jumps(panel, small_grid, None, detection_params)

    assert len(records) >= 3
    assert [r.iteration for r in records] == list(range(1, len(records) + 1))
    assert np.all(np.diff([r.statistic for r in records]) <= 0.0)
    assert np.all(np.diff([r.critical_value for r in records]) <= 1e-9)
