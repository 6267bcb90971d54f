import logging
import math
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np

from ajdn.validation import Check, ValidationReport

_log = logging.getLogger(__name__)

DEFAULT_DELTA_CAP = 40
DEFAULT_EPSILON = 0.51
# n * s_min^2 below this means the windows are too short for the asymptotics to bite
ASYMPTOTIC_WINDOW_FLOOR = 0.5


def build_scale_grid(s_min: float, s_max: float, delta_n: int) -> np.ndarray:
    """
    Geometric grid s_i = 2^g_i with g_i equally spaced between log2(s_min) and log2(s_max).
    The endpoints are returned exactly.

    Examples:
        >>> build_scale_grid(0.01, 0.04, 3)
        array([0.01, 0.02, 0.04])
    """
    if not 0.0 < s_min < s_max < 0.5:
        raise ValueError(
            f"Scale bounds must satisfy 0 < s_min < s_max < 0.5, got ({s_min}, {s_max})"
        )
    if delta_n < 2:
        raise ValueError(f"delta_n must be at least 2, got {delta_n}")
    g = np.linspace(math.log2(s_min), math.log2(s_max), delta_n)
    scales = np.exp2(g)
    scales[0] = s_min
    scales[-1] = s_max
    return scales


def delta_n_default(
    n: int,
    p: int,
    C: float,
    epsilon: float = DEFAULT_EPSILON,
    delta_cap: int = DEFAULT_DELTA_CAP,
) -> int:
    """
    Number of scales C (ln n)^(1+epsilon) (ln pn)^(5/2), rounded and clamped to
    [2, delta_cap].
    """
    if n < 10 or p < 1:
        raise ValueError(f"Need n >= 10 and p >= 1, got n={n}, p={p}")
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")
    if epsilon <= 0.5:
        raise ValueError(f"epsilon must exceed 0.5, got {epsilon}")
    raw = C * math.log(n) ** (1.0 + epsilon) * math.log(p * n) ** 2.5
    return int(min(max(round(raw), 2), delta_cap))


class ScaleGrid(NamedTuple):
    """
    Per-dimension sparse scale sequences.

    Parameters:
        s_min (array of float, required):
            Smallest scale per dimension, shape (p,).

        s_max (array of float, required):
            Largest scale per dimension, shape (p,).

        scales (array of float, required):
            Geometric scale sequences, shape (p, delta_n).

        delta_n (int, required):
            Number of scales per dimension.

    Examples:
        >>> grid = ScaleGrid.shared(0.05, 0.1, delta_n=4, p=10)
        >>> grid.scales.shape
        (10, 4)
    """

    s_min: np.ndarray
    s_max: np.ndarray
    scales: np.ndarray
    delta_n: int

    @property
    def p(self) -> int:
        return len(self.s_min)

    @staticmethod
    def shared(s_min: float, s_max: float, delta_n: int, p: int) -> "ScaleGrid":
        return ScaleGrid.from_bounds([s_min] * p, [s_max] * p, delta_n)

    @staticmethod
    def from_bounds(
        s_min: Sequence[float], s_max: Sequence[float], delta_n: int
    ) -> "ScaleGrid":
        if len(s_min) != len(s_max) or len(s_min) == 0:
            raise ValueError("Need one (s_min, s_max) pair per dimension")
        scales = np.vstack(
            [build_scale_grid(lo, hi, delta_n) for lo, hi in zip(s_min, s_max)]
        )
        return ScaleGrid(
            s_min=np.asarray(s_min, dtype=float),
            s_max=np.asarray(s_max, dtype=float),
            scales=scales,
            delta_n=delta_n,
        )

    def groups(self) -> Mapping[tuple, Sequence[int]]:
        """Dimensions sharing one scale sequence, keyed by the sequence."""
        groups: dict = {}
        for r in range(self.p):
            groups.setdefault(tuple(self.scales[r]), []).append(r)
        return groups

    def to_json(self) -> Mapping[str, Any]:
        return {
            "s_min": self.s_min.tolist(),
            "s_max": self.s_max.tolist(),
            "delta_n": self.delta_n,
        }

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "ScaleGrid":
        return ScaleGrid.from_bounds(json["s_min"], json["s_max"], json["delta_n"])


def check_scale_assumptions(grid: ScaleGrid, n: int) -> ValidationReport:
    """
    Checks the scale bounds against the sample size: windows must hold at least two
    points, s_max must stay below 0.5 so that interior times exist, and n * s_min^2 should
    not be tiny. Never raises.
    """
    s_min = float(np.min(grid.s_min))
    s_max = float(np.max(grid.s_max))
    checks = [
        Check(
            "nonempty_windows",
            n * s_min >= 2,
            value=n * s_min,
            tolerance=2.0,
            severity="warning",
            message="n * s_min must be at least 2 for the smallest window to hold two points",
        ),
        Check(
            "interior_times",
            s_max < 0.5,
            value=s_max,
            tolerance=0.5,
            message="s_max must be below 0.5, otherwise no admissible time remains",
        ),
        Check(
            "ordered_bounds",
            bool(np.all(grid.s_min < grid.s_max)),
            message="s_min < s_max in every dimension",
        ),
        Check(
            "asymptotic_regime",
            n * s_min**2 >= ASYMPTOTIC_WINDOW_FLOOR,
            value=n * s_min**2,
            tolerance=ASYMPTOTIC_WINDOW_FLOOR,
            severity="warning",
            message="n * s_min^2 is small, critical values may be unreliable",
        ),
    ]
    report = ValidationReport(subject="scales", checks=checks)
    for check in report.warnings + report.failures:
        _log.warning("Scale check %s failed: %s", check.name, check.message)
    return report
