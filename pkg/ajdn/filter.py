import math
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, sparse

from ajdn.panel import TimeSeriesPanel
from ajdn.validation import Check, ValidationReport

# Coefficients of |x|, |x|^2, ..., |x|^6, printed to four decimals.
OPTIMAL_COEFFICIENTS: Tuple[float, ...] = (
    112.0,
    -933.3333,
    3188.8889,
    -5320.0,
    4246.6667,
    -1294.2222,
)
MOMENT_TOLERANCE = 1e-3


class JumpPassFilter(NamedTuple):
    """
    An odd, compactly supported kernel W on [-1, 1] with vanishing moments. Applied to a
    window of observations it annihilates smooth trends while responding to jumps.

    W(x) = sign(x) * sum_k coefficients[k-1] * |x|^k for |x| <= 1 and 0 otherwise.

    Parameters:
        coefficients (sequence of float, optional, default OPTIMAL_COEFFICIENTS):
            Polynomial coefficients of |x|^1 .. |x|^len(coefficients).

        order_k (int, optional, default 2):
            Highest moment u for which the integral of x^u W(x) over [-1, 1] vanishes.

    Examples:
        >>> W = JumpPassFilter()
        >>> round(eval_filter(W, 0.5), 4)
        1.2639
    """

    coefficients: Sequence[float] = OPTIMAL_COEFFICIENTS
    order_k: int = 2

    def evaluate(self, x: Union[float, np.ndarray]) -> np.ndarray:
        """Vectorised evaluation. Values with |x| > 1 map to 0."""
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        # Horner on |x|: W(-x) == -W(x) exactly
        acc = np.zeros_like(ax)
        for c in reversed(self.coefficients):
            acc = (acc + c) * ax
        return np.where(ax > 1.0, 0.0, np.sign(x) * acc)


def eval_filter(filter: JumpPassFilter, x: float) -> float:
    return float(filter.evaluate(x))


def validate_filter(
    filter: JumpPassFilter, quadrature_points: int = 10_000
) -> ValidationReport:
    """
    Checks a filter against the conditions the detector relies on: unit integral on [0, 1],
    vanishing moments u = 1..order_k, oddness, compact support, and that |F(x)| with
    F(x) = integral of W from -1 to x is maximised at 0. Quadrature is composite Simpson
    on a grid symmetric about 0. Failures are reported, never raised.
    """
    if quadrature_points < 1000:
        raise ValueError(
            f"quadrature_points must be at least 1000, got {quadrature_points}"
        )
    half = quadrature_points // 2
    x = np.linspace(-1.0, 1.0, 2 * half + 1)
    w = filter.evaluate(x)
    positive = x[half:]
    checks = []

    unit = integrate.simpson(w[half:], x=positive)
    checks.append(
        Check(
            "unit_integral",
            abs(unit - 1.0) <= MOMENT_TOLERANCE,
            value=float(unit),
            tolerance=MOMENT_TOLERANCE,
            message="integral of W over [0, 1] must be 1",
        )
    )
    for u in range(1, filter.order_k + 1):
        moment = integrate.simpson(x**u * w, x=x)
        checks.append(
            Check(
                f"moment_{u}",
                abs(moment) <= MOMENT_TOLERANCE,
                value=float(moment),
                tolerance=MOMENT_TOLERANCE,
                message=f"integral of x^{u} W over [-1, 1] must vanish",
            )
        )

    points = np.random.default_rng(0).uniform(-2.0, 2.0, 10_000)
    asymmetry = float(np.max(np.abs(filter.evaluate(-points) + filter.evaluate(points))))
    checks.append(
        Check("oddness", asymmetry == 0.0, value=asymmetry, message="W(-x) = -W(x)")
    )
    outside = np.concatenate([np.linspace(-3.0, -1.0, 200)[:-1], np.linspace(1.0, 3.0, 200)[1:]])
    leak = float(np.max(np.abs(filter.evaluate(outside))))
    checks.append(
        Check("support", leak == 0.0, value=leak, message="W(x) = 0 for |x| > 1")
    )

    cumulative = np.abs(integrate.cumulative_trapezoid(w, x=x, initial=0.0))
    peak = x[int(np.argmax(cumulative))]
    step = x[1] - x[0]
    checks.append(
        Check(
            "cumulative_peak_at_zero",
            abs(peak) <= step,
            value=float(peak),
            tolerance=float(step),
            message="|integral of W from -1 to x| must peak at x = 0",
        )
    )
    slope = np.abs(np.diff(w)) / step
    checks.append(
        Check(
            "bounded_derivative",
            bool(np.all(np.isfinite(slope))),
            value=float(np.max(slope)),
            severity="warning",
            message="Lipschitz constant of W estimated on the quadrature grid",
        )
    )
    return ValidationReport(subject="filter", checks=checks)


def filter_weights(
    filter: JumpPassFilter, offsets: np.ndarray, n: int, s: float
) -> np.ndarray:
    """Weights W(k/(ns)) / sqrt(ns) for integer offsets k = j - i."""
    ns = n * s
    return filter.evaluate(offsets / ns) / math.sqrt(ns)


def window_half_width(n: int, s: float) -> int:
    """Largest integer k with k/n <= s."""
    return int(math.floor(round(n * s, 9)))


def time_index(n: int, t: float) -> int:
    """Maps a grid time t = i/n to its 1-based index i."""
    i = int(round(t * n))
    if abs(i - t * n) > 1e-6:
        raise ValueError(f"t={t} is not on the observation grid i/{n}")
    return i


def compute_H(
    panel: TimeSeriesPanel,
    t: float,
    s: float,
    r: int,
    filter: Optional[JumpPassFilter] = None,
) -> float:
    """
    Raw multiscale statistic H(t, s, r) = (ns)^-1/2 sum_j y_rj W((j/n - t)/s) at one grid
    time. Only observations with |j/n - t| <= s contribute, and all of them must exist:
    the window [t - s, t + s] has to stay inside [1/n, 1].

    Parameters:
        panel (TimeSeriesPanel, required):
            The observations.

        t (float, required):
            Grid time i/n with a full window around it.

        s (float, required):
            Scale as a fraction of the sample span, must be positive.

        r (int, required):
            0-based dimension index.

        filter (JumpPassFilter, optional, default None):
            Defaults to the optimal jump-pass filter.
    """
    filter = filter or JumpPassFilter()
    n = panel.n
    if s <= 0:
        raise ValueError(f"Scale must be positive, got {s}")
    if not 0.0 < t <= 1.0:
        raise ValueError(f"Time must lie in (0, 1], got {t}")
    if not 0 <= r < panel.p:
        raise ValueError(f"Dimension {r} out of range for p={panel.p}")
    i = time_index(n, t)
    m = window_half_width(n, s)
    if i - m < 1 or i + m > n:
        raise ValueError(
            f"Window of half-width {m} around index {i} leaves the sample 1..{n}"
        )
    offsets = np.arange(-m, m + 1)
    y = panel.values[i - 1 + offsets, r]
    return float(np.dot(filter_weights(filter, offsets, n, s), y))


class FilterBank:
    """
    Sparse (time × scale)-by-sample weight matrix for one scale sequence. Row
    ``a * len(scales) + j`` holds the weights of centre ``times[a]`` at scale ``scales[j]``,
    so one sparse product evaluates H for every (time, scale) pair of a column of data.
    Built once and shared by the statistic field and every bootstrap replicate.

    Parameters:
        n (int, required):
            Sample size.

        scales (sequence of float, required):
            Scales of the bank.

        times (sequence of int, required):
            1-based centre indices i. Windows are truncated at the sample edges.

        filter (JumpPassFilter, optional, default None):
            Defaults to the optimal jump-pass filter.
    """

    def __init__(
        self,
        n: int,
        scales: Sequence[float],
        times: Sequence[int],
        filter: Optional[JumpPassFilter] = None,
    ):
        filter = filter or JumpPassFilter()
        self.n = n
        self.scales = np.asarray(scales, dtype=float)
        self.times = np.asarray(times, dtype=int)
        n_scales = len(self.scales)
        rows, cols, data = [], [], []
        for j, s in enumerate(self.scales):
            m = window_half_width(n, s)
            offsets = np.arange(-m, m + 1)
            weights = filter_weights(filter, offsets, n, s)
            centre_cols = self.times[:, None] - 1 + offsets[None, :]
            inside = (centre_cols >= 0) & (centre_cols < n) & (weights[None, :] != 0.0)
            row_ids = np.broadcast_to(
                (np.arange(len(self.times)) * n_scales + j)[:, None], inside.shape
            )
            rows.append(row_ids[inside])
            cols.append(centre_cols[inside])
            data.append(np.broadcast_to(weights[None, :], inside.shape)[inside])
        shape = (len(self.times) * n_scales, n)
        if rows:
            self.matrix = sparse.csr_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=shape,
            )
        else:
            self.matrix = sparse.csr_matrix(shape)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """
        Evaluates H for every (time, scale) pair of each column of ``values``.
        Returns an array of shape (len(times), len(scales), q) for an (n, q) input.
        """
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        out = np.asarray(self.matrix @ values)
        return out.reshape(len(self.times), len(self.scales), values.shape[1])
