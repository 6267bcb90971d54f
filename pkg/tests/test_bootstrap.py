import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ajdn.bootstrap import (
    BootstrapState,
    bootstrap_statistic,
    build_upsilon,
    conditional_variance,
    critical_value,
    draw_multipliers,
    run_bootstrap,
)
from ajdn.filter import JumpPassFilter, filter_weights, window_half_width
from ajdn.mask import AdmissibleMask
from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid
from ajdn.variance import local_variance_field

from ajdn.tuning import rule_of_thumb

from tests.common import ar1_autocovariance, ar1_lrv_ratio, ar1_series, noise_panel


def test_upsilon_of_constant_panel_is_zero():
    upsilon = build_upsilon(TimeSeriesPanel(np.full((100, 2), 7.3)), 0.05)

    assert upsilon.block_length == 5
    assert upsilon.valid_range == (6, 95)
    assert np.all(upsilon.values == 0.0)


def test_upsilon_is_a_scaled_block_difference():
    panel = noise_panel(100, 1)
    y = panel.column(0)
    upsilon = build_upsilon(panel, 0.04)
    i, m = 50, 4

    expected = (y[i - m - 1 : i - 1].sum() - y[i - 1 : i + m - 1].sum()) / math.sqrt(2 * m)

    assert upsilon.values[i - 1, 0] == pytest.approx(expected, rel=1e-12)
    assert np.all(upsilon.values[:m, 0] == 0.0)
    assert np.all(upsilon.values[100 - m + 1 :, 0] == 0.0)


@pytest.mark.parametrize("s_prime", [0.0, 0.001, 0.6])
def test_upsilon_rejects_invalid_blocks(s_prime):
    with pytest.raises(ValueError):
        build_upsilon(noise_panel(100, 1), s_prime)


def test_multiplier_streams_are_reproducible_and_distinct():
    assert_array_equal(draw_multipliers(3, 0, 50), draw_multipliers(3, 0, 50))
    assert not np.array_equal(draw_multipliers(3, 0, 50), draw_multipliers(3, 1, 50))
    assert not np.array_equal(draw_multipliers(3, 0, 50), draw_multipliers(4, 0, 50))


def test_replicate_variance_matches_conditional_variance():
    panel = noise_panel(300, 1, seed=11)
    upsilon = build_upsilon(panel, 0.02)
    t, s, K0 = 0.5, 0.08, 2000

    replicates = np.array(
        [
            bootstrap_statistic(upsilon, t, s, 0, draw_multipliers(5, ell, panel.n))
            for ell in range(K0)
        ]
    )
    expected = conditional_variance(upsilon, t, s, 0)
    standard_error = expected * math.sqrt(2.0 / (K0 - 1))

    assert abs(replicates.var(ddof=1) - expected) <= 3 * standard_error


def test_replicates_are_centred():
    panel = noise_panel(300, 1, seed=12)
    upsilon = build_upsilon(panel, 0.02)
    K0 = 2000

    replicates = np.array(
        [
            bootstrap_statistic(upsilon, 0.4, 0.08, 0, draw_multipliers(6, ell, panel.n))
            for ell in range(K0)
        ]
    )

    assert abs(replicates.mean()) <= 4 * replicates.std(ddof=1) / math.sqrt(K0)


def test_replicate_variance_tracks_the_long_run_variance():
    n, s = 20_000, 0.2
    rot = rule_of_thumb(n, 1)
    ns_prime_max = rot.ns_prime_max(n)
    ns_prime = min(
        range(1, ns_prime_max + 1),
        key=lambda m: abs(ar1_lrv_ratio(m, ns_prime_max) - rot.lrv_target),
    )
    half = window_half_width(n, s)
    weights = filter_weights(JumpPassFilter(), np.arange(-half, half + 1), n, s)
    gamma = ar1_autocovariance(60)
    exact = gamma[0] * np.dot(weights, weights) + 2.0 * sum(
        gamma[h] * np.dot(weights[:-h], weights[h:]) for h in range(1, 61)
    )

    replicate_variances = [
        conditional_variance(
            build_upsilon(TimeSeriesPanel(ar1_series(n, seed=seed)), ns_prime / n), t, s, 0
        )
        for seed in range(40, 80)
        for t in (0.25, 0.75)
    ]

    assert np.mean(replicate_variances) / exact == pytest.approx(1.0, abs=0.15)


def _bootstrap_inputs(n=300, p=3):
    panel = noise_panel(n, p)
    grid = ScaleGrid.shared(0.05, 0.1, 3, p)
    return (
        build_upsilon(panel, 0.02),
        local_variance_field(panel, grid),
        grid,
        AdmissibleMask.initial(grid, n),
    )


def test_threaded_bootstrap_equals_serial():
    upsilon, variance, grid, mask = _bootstrap_inputs()

    serial = run_bootstrap(upsilon, variance, grid, mask, K0=40, seed=2, n_jobs=1)
    threaded = run_bootstrap(upsilon, variance, grid, mask, K0=40, seed=2, n_jobs=4)

    assert_array_equal(serial.maxima, threaded.maxima)


def test_shrinking_recomputes_like_a_fresh_run():
    upsilon, variance, grid, mask = _bootstrap_inputs()
    narrowed = mask.exclude(1, 150, 0.1)
    state = run_bootstrap(upsilon, variance, grid, mask, K0=30, seed=9)

    state.shrink(narrowed)
    fresh = run_bootstrap(upsilon, variance, grid, narrowed, K0=30, seed=9)

    assert_allclose(state.maxima, fresh.maxima, rtol=1e-10)
    assert state.mask is narrowed


def test_masks_may_only_shrink():
    upsilon, variance, grid, mask = _bootstrap_inputs()
    state = run_bootstrap(upsilon, variance, grid, mask.exclude(0, 150, 0.1), K0=5)

    with pytest.raises(ValueError):
        state.shrink(mask)


def test_critical_value_is_an_order_statistic():
    maxima = np.column_stack([np.arange(1.0, 11.0), np.zeros(10)])
    state = BootstrapState(maxima, mask=None, seed=0, upsilon=None, variance=None, banks=None)

    assert critical_value(state, 0.05) == 10.0
    assert critical_value(state, 0.5) == 5.0
    assert critical_value(state, 0.1) == 9.0


def test_critical_value_falls_as_alpha_grows():
    upsilon, variance, grid, mask = _bootstrap_inputs()
    state = run_bootstrap(upsilon, variance, grid, mask, K0=60, seed=4)

    values = [critical_value(state, alpha) for alpha in (0.01, 0.05, 0.1, 0.25, 0.5)]

    assert values == sorted(values, reverse=True)


def test_critical_value_falls_as_the_mask_shrinks():
    upsilon, variance, grid, mask = _bootstrap_inputs()
    state = run_bootstrap(upsilon, variance, grid, mask, K0=60, seed=4)
    narrower = mask.exclude(0, 150, 0.1)
    narrowest = narrower.exclude(1, 100, 0.1).exclude(2, 200, 0.1)

    values = [critical_value(state, 0.05, m) for m in (mask, narrower, narrowest)]

    assert np.all(np.diff(values) <= 1e-9)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_critical_value_rejects_invalid_alpha(alpha):
    state = BootstrapState(np.ones((5, 1)), mask=None, seed=0, upsilon=None, variance=None, banks=None)

    with pytest.raises(ValueError):
        critical_value(state, alpha)


def test_bootstrap_needs_replicates():
    upsilon, variance, grid, mask = _bootstrap_inputs()

    with pytest.raises(ValueError):
        run_bootstrap(upsilon, variance, grid, mask, K0=1)
