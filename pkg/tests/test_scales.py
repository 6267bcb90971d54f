import numpy as np
import pytest
from numpy.testing import assert_allclose

from ajdn.scales import (
    ScaleGrid,
    build_scale_grid,
    check_scale_assumptions,
    delta_n_default,
)


def test_scale_grid_is_geometric_with_exact_endpoints():
    scales = build_scale_grid(0.01, 0.04, 3)

    assert_allclose(scales, [0.01, 0.02, 0.04])
    assert scales[0] == 0.01
    assert scales[-1] == 0.04


def test_scale_grid_has_constant_ratio():
    scales = build_scale_grid(0.03, 0.2, 7)

    assert_allclose(scales[1:] / scales[:-1], (0.2 / 0.03) ** (1 / 6))


@pytest.mark.parametrize(
    "s_min,s_max,delta_n",
    [(0.1, 0.1, 3), (0.2, 0.1, 3), (0.1, 0.5, 3), (0.0, 0.1, 3), (0.01, 0.1, 1)],
)
def test_scale_grid_rejects_invalid_bounds(s_min, s_max, delta_n):
    with pytest.raises(ValueError):
        build_scale_grid(s_min, s_max, delta_n)


def test_delta_n_default():
    assert delta_n_default(1000, 100, C=1e-3) == 8
    assert delta_n_default(1000, 100, C=1e-4) == 2
    assert delta_n_default(1000, 100, C=1e-2) == 40
    assert delta_n_default(1000, 100, C=1e-2, delta_cap=12) == 12


def test_delta_n_default_rejects_small_epsilon():
    with pytest.raises(ValueError):
        delta_n_default(1000, 100, C=1e-3, epsilon=0.5)


def test_shared_grid_forms_one_group():
    grid = ScaleGrid.shared(0.05, 0.1, delta_n=4, p=5)

    assert grid.scales.shape == (5, 4)
    assert list(grid.groups().values()) == [[0, 1, 2, 3, 4]]


def test_per_dimension_bounds_form_separate_groups():
    grid = ScaleGrid.from_bounds([0.05, 0.05, 0.02], [0.1, 0.1, 0.2], delta_n=3)

    groups = sorted(grid.groups().values())
    assert groups == [[0, 1], [2]]
    assert ScaleGrid.from_json(grid.to_json()).scales.tolist() == grid.scales.tolist()


def test_scale_assumptions_hold_for_reasonable_grid():
    report = check_scale_assumptions(ScaleGrid.shared(0.05, 0.1, 3, 2), n=1000)

    assert report.passed
    assert report.warnings == []


def test_short_windows_only_warn(caplog):
    report = check_scale_assumptions(ScaleGrid.shared(0.001, 0.1, 3, 2), n=1000)

    assert report.passed
    assert {c.name for c in report.warnings} == {"nonempty_windows", "asymptotic_regime"}
    assert "nonempty_windows" in caplog.text


def test_unordered_bounds_fail():
    grid = ScaleGrid(
        s_min=np.array([0.2]), s_max=np.array([0.1]), scales=np.array([[0.2, 0.1]]), delta_n=2
    )

    report = check_scale_assumptions(grid, n=1000)

    assert not report.passed
    assert [c.name for c in report.failures] == ["ordered_bounds"]
