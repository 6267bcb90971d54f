from typing import Sequence, Tuple

import numpy as np
import pytest
from scipy import signal

from ajdn.detector import DetectionParams
from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid

# every jump in the fixtures below sits at this index of dimension 0
JUMP_INDEX = 250
AR_PHI = 0.25


def noise_panel(n: int, p: int, seed: int = 1) -> TimeSeriesPanel:
    return TimeSeriesPanel(np.random.default_rng(seed).standard_normal((n, p)))


def jump_panel(
    n: int,
    p: int,
    jumps: Sequence[Tuple[int, int, float]],
    seed: int = 1,
    noise: float = 1.0,
) -> TimeSeriesPanel:
    """Gaussian noise plus a step of the given size after each (dimension, index)."""
    values = noise * np.random.default_rng(seed).standard_normal((n, p))
    for r, d, size in jumps:
        values[d:, r] += size
    return TimeSeriesPanel(values)


def ar1_series(length: int, seed: int, phi: float = AR_PHI) -> np.ndarray:
    eta = np.random.default_rng(seed).standard_normal(length + 200)
    return signal.lfilter([1.0], [1.0, -phi], eta)[200:]


def ar1_autocovariance(max_lag: int, phi: float = AR_PHI) -> np.ndarray:
    return phi ** np.arange(max_lag + 1) / (1.0 - phi**2)


def ar1_lrv_ratio(ns_prime: int, ns_prime_max: int, phi: float = AR_PHI) -> float:
    """Long-run variance ratio of an AR(1) process from its exact autocovariances."""
    gamma = ar1_autocovariance(max(ns_prime, ns_prime_max), phi)
    numerator = gamma[0] + 2.0 * gamma[1:ns_prime_max].sum()
    h = np.arange(1, ns_prime)
    return numerator / (gamma[0] + 2.0 * np.sum((ns_prime - h) / ns_prime * gamma[h]))


@pytest.fixture(scope="session")
def white_noise() -> TimeSeriesPanel:
    return noise_panel(500, 2)


@pytest.fixture(scope="session")
def single_jump() -> TimeSeriesPanel:
    return jump_panel(500, 2, [(0, JUMP_INDEX, 8.0)])


@pytest.fixture(scope="session")
def small_grid() -> ScaleGrid:
    return ScaleGrid.shared(0.05, 0.1, delta_n=3, p=2)


@pytest.fixture(scope="session")
def detection_params() -> DetectionParams:
    return DetectionParams(s_prime=0.01, alpha=0.01, k0=100, seed=7)
