import logging
import math
from typing import NamedTuple, Tuple

import numpy as np

from ajdn.errors import DegenerateDataError
from ajdn.filter import time_index
from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid

_log = logging.getLogger(__name__)

# pooled variance at or below (DEGENERATE_RTOL * max|y|)^2 counts as zero
DEGENERATE_RTOL = 1e-12
SHORT_WINDOW = 4


def window_offsets(n: int, s_min: float, s_max: float) -> Tuple[int, int]:
    """
    Integer offsets (lo, hi) such that the left window of time i is [i - hi, i - lo] and the
    right window is [i + lo, i + hi], i.e. the indices j with s_min <= |j/n - t| <= s_max.
    """
    lo = int(math.ceil(round(n * s_min, 9)))
    hi = int(math.floor(round(n * s_max, 9)))
    return lo, hi


def local_variance(
    panel: TimeSeriesPanel, r: int, t: float, s_min: float, s_max: float
) -> float:
    """
    Pooled two-sided variance at grid time t: squared deviations from the left window mean
    over K_left = {i : i/n in [t - s_max, t - s_min]} plus those from the right window mean
    over the mirrored K_right, divided by |K_left| + |K_right|.

    Raises ValueError for an empty window and DegenerateDataError when the pooled variance
    is zero.
    """
    n = panel.n
    i = time_index(n, t)
    lo, hi = window_offsets(n, s_min, s_max)
    y = panel.column(r)
    left = y[max(i - hi, 1) - 1 : max(i - lo, 0)]
    right = y[min(i + lo, n + 1) - 1 : min(i + hi, n)]
    if len(left) == 0 or len(right) == 0:
        raise ValueError(
            f"Empty variance window at t={t} for scales ({s_min}, {s_max}) and n={n}"
        )
    if min(len(left), len(right)) < SHORT_WINDOW:
        _log.warning(
            "Variance window at t=%s holds only %d/%d points",
            t,
            len(left),
            len(right),
        )
    pooled = (np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)) / (
        len(left) + len(right)
    )
    if pooled <= (DEGENERATE_RTOL * float(np.max(np.abs(y)))) ** 2:
        raise DegenerateDataError(f"Zero local variance in dimension {r} at t={t}")
    return float(pooled)


class LocalVarianceField(NamedTuple):
    """
    Local variances sigma^2_{r,t} for every dimension and grid time.

    Parameters:
        values (array of float, required):
            Shape (p, n). Column i - 1 holds time i/n. NaN outside [s_max_r, 1 - s_max_r].

        s_min (array of float, required):
            Inner window bound per dimension.

        s_max (array of float, required):
            Outer window bound per dimension.

        scale (array of float, required):
            max |y_r| per dimension, the reference for the degenerate-variance test.
    """

    values: np.ndarray
    s_min: np.ndarray
    s_max: np.ndarray
    scale: np.ndarray

    def require_positive(self, r: int, indices: np.ndarray) -> None:
        """Raises DegenerateDataError if any variance at the 1-based indices is zero."""
        sigma2 = self.values[r, indices - 1]
        if np.any(np.isnan(sigma2)):
            raise ValueError(f"Variance undefined at some requested times in dimension {r}")
        threshold = (DEGENERATE_RTOL * self.scale[r]) ** 2
        if np.any(sigma2 <= threshold):
            bad = int(indices[np.argmax(sigma2 <= threshold)])
            raise DegenerateDataError(
                f"Zero local variance in dimension {r} at t={bad / self.values.shape[1]}"
            )


def local_variance_field(panel: TimeSeriesPanel, grid: ScaleGrid) -> LocalVarianceField:
    """
    Precomputes sigma^2 for all grid times with running sums, one dimension at a time.
    Each dimension is centred before the sums of squares are taken.
    """
    n, p = panel.n, panel.p
    values = np.full((p, n), np.nan)
    scale = np.max(np.abs(panel.values), axis=0)
    for r in range(p):
        lo, hi = window_offsets(n, grid.s_min[r], grid.s_max[r])
        first = int(math.ceil(round(n * grid.s_max[r], 9)))
        last = int(math.floor(round(n * (1.0 - grid.s_max[r]), 9)))
        first = max(first, 1)
        if first > last or hi < lo:
            continue
        y = panel.values[:, r]
        centred = y - y.mean()
        s1 = np.concatenate([[0.0], np.cumsum(centred)])
        s2 = np.concatenate([[0.0], np.cumsum(centred**2)])
        i = np.arange(first, last + 1)
        left_start = np.maximum(i - hi, 1)
        left_stop = i - lo
        right_start = i + lo
        right_stop = np.minimum(i + hi, n)
        left_n = left_stop - left_start + 1
        right_n = right_stop - right_start + 1
        left_sum = s1[left_stop] - s1[left_start - 1]
        right_sum = s1[right_stop] - s1[right_start - 1]
        left_ss = s2[left_stop] - s2[left_start - 1] - left_sum**2 / left_n
        right_ss = s2[right_stop] - s2[right_start - 1] - right_sum**2 / right_n
        pooled = (left_ss + right_ss) / (left_n + right_n)
        values[r, first - 1 : last] = np.maximum(pooled, 0.0)
    _log.debug("Computed local variance field for %d dimensions", p)
    return LocalVarianceField(
        values=values,
        s_min=np.asarray(grid.s_min, dtype=float),
        s_max=np.asarray(grid.s_max, dtype=float),
        scale=scale,
    )
