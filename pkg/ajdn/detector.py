import logging
from typing import Any, List, Mapping, NamedTuple, Optional

import numpy as np

from ajdn.bootstrap import (
    FilterBankSet,
    build_upsilon,
    critical_value,
    inverse_sigma,
    run_bootstrap,
)
from ajdn.filter import JumpPassFilter
from ajdn.mask import AdmissibleMask, admissible_range
from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid
from ajdn.variance import LocalVarianceField, local_variance_field

_log = logging.getLogger(__name__)

EXCLUSION_C = 0.01


class JumpRecord(NamedTuple):
    """
    One detected jump.

    Parameters:
        dimension (int, required):
            0-based dimension r of the jump.

        time_index (int, required):
            1-based grid index i of the first-stage location t = i/n.

        time (float, required):
            First-stage location as a fraction of the sample span.

        scale (float, required):
            Scale at which the statistic peaked.

        statistic (float, required):
            Normalised statistic G at (time, scale, dimension).

        critical_value (float, required):
            Bootstrap critical value the statistic was compared against.

        iteration (int, required):
            1-based iteration of the detection loop that found the jump.

        refined_time_index (int, optional, default None):
            1-based index of the second-stage CUSUM location, if refinement ran.

        refined_time (float, optional, default None):
            Second-stage location as a fraction of the sample span.
    """

    dimension: int
    time_index: int
    time: float
    scale: float
    statistic: float
    critical_value: float
    iteration: int
    refined_time_index: Optional[int] = None
    refined_time: Optional[float] = None

    @property
    def location_index(self) -> int:
        """Refined index when available, else the first-stage index."""
        if self.refined_time_index is not None:
            return self.refined_time_index
        return self.time_index

    def to_json(self) -> Mapping[str, Any]:
        return self._asdict()

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "JumpRecord":
        return JumpRecord(
            dimension=int(json["dimension"]),
            time_index=int(json["time_index"]),
            time=float(json["time"]),
            scale=float(json["scale"]),
            statistic=float(json["statistic"]),
            critical_value=float(json["critical_value"]),
            iteration=int(json["iteration"]),
            refined_time_index=json.get("refined_time_index"),
            refined_time=json.get("refined_time"),
        )


class DetectionParams(NamedTuple):
    """
    Settings of one detection run.

    Parameters:
        s_prime (float, required):
            Bootstrap block length as a fraction of n.

        alpha (float, optional, default 0.05):
            Significance level of every iteration's test.

        k0 (int, optional, default 500):
            Number of bootstrap replicates.

        seed (int, optional, default 0):
            Master seed of the multiplier substreams.

        c (float, optional, default 0.01):
            Exclusion windows extend (1 + c) s_max either side of a detection.

        n_jobs (int, optional, default 1):
            Worker threads for bootstrap replicates.

        max_iterations (int, optional, default None):
            Stop after this many detections. None runs until the test stops rejecting.
    """

    s_prime: float
    alpha: float = 0.05
    k0: int = 500
    seed: int = 0
    c: float = EXCLUSION_C
    n_jobs: int = 1
    max_iterations: Optional[int] = None


class FieldMaximum(NamedTuple):
    value: float
    dimension: int
    time_index: int
    scale_index: int


class StatisticField:
    """
    Normalised statistics G(t_i, s_rj, r) = |H| / sigma over the initially admissible times.
    ``values[r, i - 1, j]`` is NaN where time i/n was never admissible in dimension r.
    """

    def __init__(self, values: np.ndarray, scales: np.ndarray):
        self.values = values
        self.scales = scales

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def maximum(self, mask: AdmissibleMask) -> Optional[FieldMaximum]:
        """
        Largest statistic over the mask. Ties go to the smallest time, then the smallest
        scale, then the smallest dimension. None when the mask leaves nothing.
        """
        masked = np.where(mask.allowed[:, :, None], self.values, -np.inf)
        masked = np.nan_to_num(masked, nan=-np.inf)
        top = masked.max()
        if not np.isfinite(top):
            return None
        hits = np.argwhere(masked == top)
        r, i, j = hits[np.lexsort((hits[:, 0], hits[:, 2], hits[:, 1]))[0]]
        return FieldMaximum(float(top), int(r), int(i) + 1, int(j))

    def max_over_scales(self, r: int) -> np.ndarray:
        """G_max(t) per time of dimension ``r``, NaN where undefined."""
        row = self.values[r]
        out = np.full(self.n, np.nan)
        defined = ~np.all(np.isnan(row), axis=1)
        out[defined] = np.nanmax(row[defined], axis=1)
        return out


def statistic_field(
    panel: TimeSeriesPanel,
    grid: ScaleGrid,
    variance: LocalVarianceField,
    filter: Optional[JumpPassFilter] = None,
    mask: Optional[AdmissibleMask] = None,
    banks: Optional[FilterBankSet] = None,
) -> StatisticField:
    """
    Evaluates G = |H| / sigma for every admissible (time, scale, dimension) triple through
    one sparse product per scale group. Raises DegenerateDataError if sigma vanishes at an
    admissible time.
    """
    n, p = panel.n, panel.p
    mask = mask or AdmissibleMask.initial(grid, n)
    banks = banks or FilterBankSet(grid, n, filter)
    values = np.full((p, n, grid.delta_n), np.nan)
    for bank, dims in banks:
        if len(bank.times) == 0:
            continue
        for r in dims:
            open_times = bank.times[mask.allowed[r, bank.times - 1]]
            if len(open_times):
                variance.require_positive(r, open_times)
        with np.errstate(invalid="ignore"):
            g = np.abs(bank.apply(panel.values[:, dims])) * inverse_sigma(
                variance, bank, dims
            )[:, None, :]
        values[np.ix_(dims, bank.times - 1, np.arange(grid.delta_n))] = g.transpose(
            2, 0, 1
        )
    values = np.where(mask.allowed[:, :, None], values, np.nan)
    return StatisticField(values, np.asarray(grid.scales))


def detect_jumps(
    panel: TimeSeriesPanel,
    grid: ScaleGrid,
    filter: Optional[JumpPassFilter],
    config: DetectionParams,
) -> List[JumpRecord]:
    """
    First-stage detection. Each iteration compares the largest admissible statistic with
    the bootstrap critical value over the same mask; on rejection the argmax is recorded
    and a window of (1 + c) s_max around it is removed from that dimension alone, which
    also triggers recomputation of that dimension's bootstrap maxima. The loop ends when
    the test stops rejecting or the masks run out.

    Examples:
        >>> grid = ScaleGrid.shared(0.08, 0.12, delta_n=4, p=panel.p)
        >>> records = detect_jumps(panel, grid, None, DetectionParams(s_prime=0.005))
    """
    if grid.p != panel.p:
        raise ValueError(f"Grid has {grid.p} dimensions, panel has {panel.p}")
    if not 0.0 < config.alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {config.alpha}")
    if config.s_prime <= 0:
        raise ValueError("s_prime must be resolved to a positive block length")
    n = panel.n
    for r in range(panel.p):
        first, last = admissible_range(n, grid.s_max[r])
        if first > last:
            raise ValueError(f"No admissible time in dimension {r} for s_max={grid.s_max[r]}")
    if config.s_prime > float(np.min(grid.s_min)) + 1e-12:
        _log.warning(
            "Block length s'=%s exceeds the smallest scale %s",
            config.s_prime,
            float(np.min(grid.s_min)),
        )

    filter = filter or JumpPassFilter()
    mask = AdmissibleMask.initial(grid, n)
    banks = FilterBankSet(grid, n, filter)
    variance = local_variance_field(panel, grid)
    field = statistic_field(panel, grid, variance, filter, mask, banks)
    upsilon = build_upsilon(panel, config.s_prime)
    state = run_bootstrap(
        upsilon,
        variance,
        grid,
        mask,
        K0=config.k0,
        seed=config.seed,
        filter=filter,
        n_jobs=config.n_jobs,
        banks=banks,
    )

    records: List[JumpRecord] = []
    iteration = 1
    while not mask.is_empty:
        if config.max_iterations is not None and len(records) >= config.max_iterations:
            break
        best = field.maximum(mask)
        if best is None:
            break
        crit = critical_value(state, config.alpha, mask)
        _log.debug(
            "Iteration %d: G_max=%.4f crit=%.4f at dimension %d, t=%d/%d",
            iteration,
            best.value,
            crit,
            best.dimension,
            best.time_index,
            n,
        )
        if best.value < crit:
            break
        scale = float(grid.scales[best.dimension, best.scale_index])
        records.append(
            JumpRecord(
                dimension=best.dimension,
                time_index=best.time_index,
                time=best.time_index / n,
                scale=scale,
                statistic=best.value,
                critical_value=crit,
                iteration=iteration,
            )
        )
        mask = mask.exclude(
            best.dimension,
            best.time_index,
            (1.0 + config.c) * float(grid.s_max[best.dimension]),
        )
        iteration += 1
    _log.info("Detected %d jumps in %d dimensions", len(records), panel.p)
    return records
