import itertools
import logging
import math
import warnings
from typing import Any, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ajdn.detector import DetectionParams, detect_jumps
from ajdn.errors import ConfigurationError, DegenerateDataError
from ajdn.filter import JumpPassFilter
from ajdn.panel import TimeSeriesPanel
from ajdn.refine import refine_records
from ajdn.scales import ScaleGrid

_log = logging.getLogger(__name__)

PILOT_ALPHA = 0.2
PILOT_K0 = 100
SCALE_FACTORS = (0.75, 1.0, 1.25)
# rows of the smoother evaluated at once
SMOOTHER_CHUNK = 512


class HyperParams(NamedTuple):
    """
    Hyperparameters of one detection run.

    Parameters:
        s_min (float, required):
            Smallest scale, a fraction of the sample span.

        s_max (float, required):
            Largest scale, also the half-width of the variance windows and of the exclusion
            windows.

        s_prime (float, required):
            Bootstrap block length as a fraction of n. Must satisfy 1 <= n s' <= n s_min.

        alpha (float, optional, default 0.05):
            Significance level.

        k0 (int, optional, default 500):
            Number of bootstrap replicates.

        seed (int, optional, default 0):
            Master seed of the bootstrap multipliers.
    """

    s_min: float
    s_max: float
    s_prime: float
    alpha: float = 0.05
    k0: int = 500
    seed: int = 0

    def validate(self, n: int) -> "HyperParams":
        if not 0.0 < self.s_min < self.s_max < 0.5:
            raise ConfigurationError(
                f"Need 0 < s_min < s_max < 0.5, got ({self.s_min}, {self.s_max})"
            )
        ns_prime = round(n * self.s_prime)
        if not 1 <= ns_prime <= n * self.s_min + 1e-9:
            raise ConfigurationError(
                f"Block length n*s'={n * self.s_prime:g} must lie in [1, n*s_min={n * self.s_min:g}]"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k0 < 2:
            raise ConfigurationError(f"k0 must be at least 2, got {self.k0}")
        return self

    def ns_prime(self, n: int) -> int:
        return int(round(n * self.s_prime))

    def to_json(self) -> Mapping[str, Any]:
        return self._asdict()

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "HyperParams":
        return HyperParams(
            s_min=float(json["s_min"]),
            s_max=float(json["s_max"]),
            s_prime=float(json["s_prime"]),
            alpha=float(json.get("alpha", 0.05)),
            k0=int(json.get("k0", 500)),
            seed=int(json.get("seed", 0)),
        )


class RuleOfThumb(NamedTuple):
    """
    Default hyperparameters for a panel of size n×p.

    Parameters:
        s_min (float):
            n^(-1/3) (ln pn)^2 / 120.

        s_max (float):
            n^(-1/6) ln(pn) / 27.

        s_prime_max (float):
            n^(-2/3), the largest block length considered.

        lrv_target (float):
            1 + 17 / (20 ln n), the long-run variance ratio the block length aims for.

        conflict (bool):
            True when the rules give s_min >= s_max.
    """

    s_min: float
    s_max: float
    s_prime_max: float
    lrv_target: float
    conflict: bool

    def ns_prime_max(self, n: int) -> int:
        return max(int(round(n * self.s_prime_max)), 1)


def rule_of_thumb(n: int, p: int) -> RuleOfThumb:
    if n < 100 or p < 1:
        raise ValueError(f"Rule of thumb needs n >= 100 and p >= 1, got n={n}, p={p}")
    log_pn = math.log(p * n)
    s_min = n ** (-1.0 / 3.0) * log_pn**2 / 120.0
    s_max = n ** (-1.0 / 6.0) * log_pn / 27.0
    conflict = s_min >= s_max
    if conflict:
        _log.warning(
            "Rule-of-thumb scales conflict for n=%d, p=%d: s_min=%.4f >= s_max=%.4f",
            n,
            p,
            s_min,
            s_max,
        )
    return RuleOfThumb(
        s_min=s_min,
        s_max=s_max,
        s_prime_max=n ** (-2.0 / 3.0),
        lrv_target=1.0 + 17.0 / (20.0 * math.log(n)),
        conflict=conflict,
    )


def autocovariances(segment: np.ndarray, max_lag: int) -> np.ndarray:
    """gamma(h) = 1/(L - h) sum_k (y_k - mean)(y_{k+h} - mean) for h = 0..max_lag."""
    y = np.asarray(segment, dtype=float)
    y = y - y.mean()
    length = len(y)
    return np.array(
        [np.dot(y[: length - h], y[h:]) / (length - h) for h in range(max_lag + 1)]
    )


def lrv_ratio(segment: np.ndarray, ns_prime: int, ns_prime_max: int) -> float:
    """
    Ratio of the long-run variance over lags below ns_prime_max to the variance the
    bootstrap blocks of length ns_prime reproduce:
    (gamma(0) + 2 sum_{j<M} gamma(j)) / (gamma(0) + 2 sum_{h<m} (m - h)/m gamma(h)).
    The segment should be free of jumps.
    """
    if ns_prime < 1 or ns_prime_max < 1:
        raise ValueError("Block lengths must be positive")
    if ns_prime > ns_prime_max:
        warnings.warn(
            f"ns_prime={ns_prime} exceeds ns_prime_max={ns_prime_max}",
            stacklevel=2,
        )
    if len(segment) < 4 * ns_prime_max:
        raise ValueError(
            f"Segment of length {len(segment)} is shorter than 4 * ns_prime_max = {4 * ns_prime_max}"
        )
    gamma = autocovariances(segment, max(ns_prime, ns_prime_max))
    numerator = gamma[0] + 2.0 * np.sum(gamma[1:ns_prime_max])
    h = np.arange(1, ns_prime)
    denominator = gamma[0] + 2.0 * np.sum((ns_prime - h) / ns_prime * gamma[h])
    if not denominator > 0:
        raise DegenerateDataError(
            f"Nonpositive long-run variance denominator {denominator} for ns'={ns_prime}"
        )
    return float(numerator / denominator)


def select_s_prime(
    segment: np.ndarray,
    ns_prime_max: int,
    lrv_target: float,
) -> int:
    """
    The block length in [1, ns_prime_max] whose lrv_ratio is closest to ``lrv_target``.
    Float-equal distances are ties and go to the smaller block length.
    """
    distances = np.array(
        [
            abs(lrv_ratio(segment, m, ns_prime_max) - lrv_target)
            for m in range(1, ns_prime_max + 1)
        ]
    )
    tied = np.isclose(distances, distances.min(), rtol=0.0, atol=1e-12)
    return int(np.flatnonzero(tied)[0]) + 1


def pilot_segment(
    panel: TimeSeriesPanel,
    rot: RuleOfThumb,
    alpha: float = PILOT_ALPHA,
    k0: int = PILOT_K0,
    seed: int = 0,
    n_jobs: int = 1,
) -> Tuple[int, int, int]:
    """
    A jump-free stretch for :func:`select_s_prime`: runs a cheap two-scale detection on the
    rule-of-thumb bounds and returns (dimension, start, stop), 1-based and inclusive, of the
    longest stretch that keeps s_max clear of every detection.
    """
    if rot.conflict:
        raise ConfigurationError("Rule-of-thumb scales conflict, cannot run the pilot")
    n = panel.n
    grid = ScaleGrid.shared(rot.s_min, rot.s_max, 2, panel.p)
    ns_prime = min(rot.ns_prime_max(n), max(int(n * rot.s_min), 1))
    records = detect_jumps(
        panel,
        grid,
        None,
        DetectionParams(
            s_prime=ns_prime / n, alpha=alpha, k0=k0, seed=seed, n_jobs=n_jobs
        ),
    )
    clearance = int(math.ceil(rot.s_max * n))
    best = (0, 1, n)
    best_length = -1
    for r in range(panel.p):
        cuts = sorted(rec.time_index for rec in records if rec.dimension == r)
        start = 1
        for cut in cuts + [None]:
            stop = n if cut is None else cut - clearance
            if stop - start + 1 > best_length:
                best, best_length = (r, start, stop), stop - start + 1
            if cut is not None:
                start = cut + clearance + 1
    _log.info(
        "Pilot found %d jumps, using segment %d..%d of dimension %d",
        len(records),
        best[1],
        best[2],
        best[0],
    )
    return best


def local_linear_smooth(y: np.ndarray, bandwidth: Optional[float] = None) -> np.ndarray:
    """
    Local-linear fit at every point of an evenly spaced series with Epanechnikov weights.
    The default bandwidth is Silverman's rule on the design, 1.06 sd(x) L^(-1/5), in index
    units and never below 2.
    """
    y = np.asarray(y, dtype=float)
    length = len(y)
    if length < 3:
        return np.full(length, y.mean()) if length else y.copy()
    x = np.arange(length, dtype=float)
    if bandwidth is None:
        bandwidth = max(1.06 * x.std() * length ** (-0.2), 2.0)
    fitted = np.empty(length)
    for start in range(0, length, SMOOTHER_CHUNK):
        x0 = x[start : start + SMOOTHER_CHUNK, None]
        d = x[None, :] - x0
        u = d / bandwidth
        w = np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u**2), 0.0)
        s0 = w.sum(axis=1)
        s1 = (w * d).sum(axis=1)
        s2 = (w * d**2).sum(axis=1)
        t0 = w @ y
        t1 = (w * d) @ y
        det = s0 * s2 - s1**2
        with np.errstate(divide="ignore", invalid="ignore"):
            local = np.where(det > 1e-12 * s0 * s2, (s2 * t0 - s1 * t1) / det, t0 / s0)
        fitted[start : start + SMOOTHER_CHUNK] = local
    return fitted


def piecewise_residuals(y: np.ndarray, cuts: Sequence[int]) -> np.ndarray:
    """
    Residuals after smoothing each stretch between jumps on its own. A cut at index d
    (1-based) ends a stretch at d, the next one starts at d + 1.
    """
    y = np.asarray(y, dtype=float)
    bounds = [0] + sorted(set(int(c) for c in cuts if 0 < c < len(y))) + [len(y)]
    residuals = np.empty_like(y)
    for a, b in zip(bounds[:-1], bounds[1:]):
        residuals[a:b] = y[a:b] - local_linear_smooth(y[a:b])
    return residuals


class CandidateScore(NamedTuple):
    params: HyperParams
    gm: float
    n_jumps: int
    status: str = "ok"


def gm_criterion(sse: Sequence[float], jumps: Sequence[int], n: int) -> float:
    """GM = sum_r n ln(SSE_r / n) + M_r ln n."""
    sse = np.asarray(sse, dtype=float)
    if np.any(sse <= 0):
        raise DegenerateDataError("Detrended series fits exactly, SSE is zero")
    return float(np.sum(n * np.log(sse / n) + np.asarray(jumps) * math.log(n)))


def score_candidate(
    panel: TimeSeriesPanel,
    params: HyperParams,
    delta_n: int,
    config: DetectionParams,
    filter: Optional[JumpPassFilter] = None,
) -> CandidateScore:
    """Runs one candidate through detection, refinement and detrending and scores it."""
    n = panel.n
    params.validate(n)
    grid = ScaleGrid.shared(params.s_min, params.s_max, delta_n, panel.p)
    records = detect_jumps(
        panel,
        grid,
        filter,
        config._replace(
            s_prime=params.s_prime, alpha=params.alpha, k0=params.k0, seed=params.seed
        ),
    )
    records = refine_records(panel, records, z_n=params.s_min / 2.0)
    sse, jumps = [], []
    for r in range(panel.p):
        cuts = [rec.location_index for rec in records if rec.dimension == r]
        sse.append(float(np.sum(piecewise_residuals(panel.column(r), cuts) ** 2)))
        jumps.append(len(cuts))
    return CandidateScore(params, gm_criterion(sse, jumps, n), len(records))


def bic_table(
    panel: TimeSeriesPanel,
    candidates: Sequence[HyperParams],
    delta_n: int,
    config: Optional[DetectionParams] = None,
    filter: Optional[JumpPassFilter] = None,
    n_jobs: int = 1,
) -> List[CandidateScore]:
    """Scores every candidate. Candidates that fail keep status "failed" and GM = inf."""
    if not candidates:
        raise ValueError("Need at least one candidate")
    config = config or DetectionParams(s_prime=candidates[0].s_prime)

    def attempt(params: HyperParams) -> CandidateScore:
        try:
            score = score_candidate(panel, params, delta_n, config, filter)
            _log.debug("Candidate %s: GM=%.3f", params, score.gm)
            return score
        except (ValueError, ArithmeticError) as e:
            _log.warning("Candidate %s failed: %s", params, e)
            return CandidateScore(params, math.inf, 0, status=f"failed: {e}")

    return list(
        Parallel(n_jobs=n_jobs, backend="threading")(
            delayed(attempt)(params) for params in candidates
        )
    )


def best_candidate(table: Sequence[CandidateScore]) -> HyperParams:
    scored = [row for row in table if row.status == "ok"]
    if not scored:
        raise DegenerateDataError("Every tuning candidate failed")
    lowest = min(row.gm for row in scored)
    tied = [
        row.params for row in scored if math.isclose(row.gm, lowest, rel_tol=1e-12, abs_tol=1e-12)
    ]
    return min(tied, key=lambda h: (h.s_prime, h.s_min + h.s_max))


def penalized_bic(
    panel: TimeSeriesPanel,
    candidate_params: Sequence[HyperParams],
    delta_n: int = 2,
    config: Optional[DetectionParams] = None,
    filter: Optional[JumpPassFilter] = None,
    n_jobs: int = 1,
) -> HyperParams:
    """
    Joint choice of scales and block length: the candidate minimising
    GM = sum_r [n ln(SSE_r / n) + M_r ln n], where SSE_r is the residual sum of squares
    after smoothing dimension r piecewise between its detected jumps and M_r counts those
    jumps. Ties go to the smallest s', then the smallest s_min + s_max. A single candidate
    is returned unchanged.
    """
    if len(candidate_params) == 1:
        return candidate_params[0]
    return best_candidate(bic_table(panel, candidate_params, delta_n, config, filter, n_jobs))


def candidate_grid(
    n: int,
    p: int,
    s_mins: Optional[Sequence[float]] = None,
    s_maxs: Optional[Sequence[float]] = None,
    ns_primes: Optional[Sequence[int]] = None,
    alpha: float = 0.05,
    k0: int = 500,
    seed: int = 0,
    selected_ns_prime: Optional[int] = None,
) -> List[HyperParams]:
    """
    Cartesian product of scale bounds and block lengths, keeping only valid combinations.
    Unset bounds default to the rule of thumb times 0.75, 1 and 1.25; unset block lengths
    to the neighbours of ``selected_ns_prime``, or to every length up to n^(1/3).
    """
    rot = rule_of_thumb(n, p)
    s_mins = s_mins or [rot.s_min * f for f in SCALE_FACTORS]
    s_maxs = s_maxs or [rot.s_max * f for f in SCALE_FACTORS]
    if not ns_primes:
        top = rot.ns_prime_max(n)
        if selected_ns_prime is None:
            ns_primes = list(range(1, top + 1))
        else:
            ns_primes = [
                m for m in (selected_ns_prime - 1, selected_ns_prime, selected_ns_prime + 1) if 1 <= m <= top
            ]
    candidates = []
    for s_min, s_max, m in itertools.product(s_mins, s_maxs, ns_primes):
        params = HyperParams(s_min, s_max, m / n, alpha, k0, seed)
        try:
            candidates.append(params.validate(n))
        except ConfigurationError:
            continue
    if not candidates:
        raise ConfigurationError("The candidate grid holds no valid combination")
    return candidates

