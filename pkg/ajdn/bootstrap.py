import logging
import math
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from numpy.lib.stride_tricks import sliding_window_view

from ajdn.filter import (
    FilterBank,
    JumpPassFilter,
    filter_weights,
    time_index,
    window_half_width,
)
from ajdn.mask import AdmissibleMask, admissible_range
from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid
from ajdn.variance import LocalVarianceField

_log = logging.getLogger(__name__)

# replicates evaluated together when a single dimension is recomputed
RECOMPUTE_CHUNK = 64


class UpsilonPanel(NamedTuple):
    """
    Block difference statistics feeding the multiplier bootstrap.

    Parameters:
        values (array of float, required):
            Shape (n, p). Row i - 1 holds (2m)^-1/2 (sum of the m observations before i minus
            the sum of the m observations from i on), zero outside ``valid_range``.

        block (float, required):
            Block length s' as a fraction of n.

        valid_range (tuple of int, required):
            Inclusive 1-based index range where both blocks fit.
    """

    values: np.ndarray
    block: float
    valid_range: Tuple[int, int]

    @property
    def block_length(self) -> int:
        return int(round(self.block * self.values.shape[0]))


def build_upsilon(panel: TimeSeriesPanel, s_prime: float) -> UpsilonPanel:
    n = panel.n
    m = int(round(n * s_prime))
    if not (1 <= m and 2 * m <= n) or not 0.0 < s_prime <= 0.5:
        raise ValueError(f"Block s'={s_prime} needs 1 <= n*s' <= n/2 for n={n}")
    first, last = m + 1, n - m
    values = np.zeros((n, panel.p))
    if first <= last:
        # block sums taken the same way on both sides, so a constant series cancels exactly
        block_sums = sliding_window_view(panel.values, m, axis=0).sum(axis=-1)
        i = np.arange(first, last + 1)
        left = block_sums[i - m - 1]
        right = block_sums[i - 1]
        values[first - 1 : last] = (left - right) / math.sqrt(2 * m)
    return UpsilonPanel(values=values, block=m / n, valid_range=(first, last))


def draw_multipliers(seed: int, ell: int, n: int) -> np.ndarray:
    """Standard normal multipliers Z_1..n of replicate ``ell``, from the substream (seed, ell)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ell,)))
    return rng.standard_normal(n)


def bootstrap_statistic(
    upsilon: UpsilonPanel,
    t: float,
    s: float,
    r: int,
    multipliers: np.ndarray,
    filter: Optional[JumpPassFilter] = None,
) -> float:
    """One bootstrap replicate (ns)^-1/2 sum_k W((k/n - t)/s) Upsilon_rk Z_k, unnormalised."""
    filter = filter or JumpPassFilter()
    n = upsilon.values.shape[0]
    i = time_index(n, t)
    m = window_half_width(n, s)
    offsets = np.arange(max(-m, 1 - i), min(m, n - i) + 1)
    k = i - 1 + offsets
    return float(
        np.dot(filter_weights(filter, offsets, n, s), upsilon.values[k, r] * multipliers[k])
    )


def conditional_variance(
    upsilon: UpsilonPanel,
    t: float,
    s: float,
    r: int,
    filter: Optional[JumpPassFilter] = None,
) -> float:
    """Variance of a replicate given the data: sum_k W^2((k/n - t)/s) Upsilon_rk^2 / (ns)."""
    filter = filter or JumpPassFilter()
    n = upsilon.values.shape[0]
    i = time_index(n, t)
    m = window_half_width(n, s)
    offsets = np.arange(max(-m, 1 - i), min(m, n - i) + 1)
    weights = filter_weights(filter, offsets, n, s)
    return float(np.sum(weights**2 * upsilon.values[i - 1 + offsets, r] ** 2))


class FilterBankSet:
    """
    One FilterBank per distinct scale sequence of a grid, centred on the initially
    admissible times of that group. Dimensions with identical grids share a bank.
    """

    def __init__(
        self, grid: ScaleGrid, n: int, filter: Optional[JumpPassFilter] = None
    ):
        self.n = n
        self.filter = filter or JumpPassFilter()
        self.banks: List[FilterBank] = []
        self.dimensions: List[np.ndarray] = []
        self.bank_of: Dict[int, int] = {}
        for scales, dims in grid.groups().items():
            first, last = admissible_range(n, grid.s_max[dims[0]])
            times = np.arange(first, last + 1)
            self.banks.append(FilterBank(n, scales, times, self.filter))
            self.dimensions.append(np.asarray(dims))
            for r in dims:
                self.bank_of[r] = len(self.banks) - 1

    def __iter__(self):
        return iter(zip(self.banks, self.dimensions))

    def bank(self, r: int) -> FilterBank:
        return self.banks[self.bank_of[r]]


def inverse_sigma(variance: LocalVarianceField, bank: FilterBank, dims) -> np.ndarray:
    """1 / sigma at the bank's centres, shape (len(times), q)."""
    with np.errstate(divide="ignore"):
        return 1.0 / np.sqrt(variance.values[np.asarray(dims)][:, bank.times - 1].T)


class BootstrapState:
    """
    Per-replicate, per-dimension maxima of normalised bootstrap statistics over an
    admissible mask. Holds the Upsilon panel, the filter banks and the normalisation so
    that a dimension's maxima can be recomputed after its mask shrinks.

    Built by :func:`run_bootstrap`; afterwards it changes only through
    :func:`critical_value` narrowing the mask. That path is not thread safe.
    """

    def __init__(
        self,
        maxima: np.ndarray,
        mask: AdmissibleMask,
        seed: int,
        upsilon: UpsilonPanel,
        variance: LocalVarianceField,
        banks: FilterBankSet,
        n_jobs: int = 1,
    ):
        self.maxima = maxima
        self.mask = mask
        self.seed = seed
        self.upsilon = upsilon
        self.variance = variance
        self.banks = banks
        self.n_jobs = n_jobs

    @property
    def k0(self) -> int:
        return self.maxima.shape[0]

    def recompute_dimension(self, r: int, mask: AdmissibleMask) -> np.ndarray:
        """Maxima of dimension ``r`` over ``mask`` for every replicate, from scratch."""
        bank = self.banks.bank(r)
        allowed = mask.allowed[r, bank.times - 1]
        if not np.any(allowed):
            return np.zeros(self.k0)
        n = self.upsilon.values.shape[0]
        weights = self.upsilon.values[:, r]
        inv_sigma = inverse_sigma(self.variance, bank, [r])[allowed, 0]
        chunks = [
            range(start, min(start + RECOMPUTE_CHUNK, self.k0))
            for start in range(0, self.k0, RECOMPUTE_CHUNK)
        ]

        def chunk_maxima(ells: range) -> np.ndarray:
            z = np.column_stack([draw_multipliers(self.seed, ell, n) for ell in ells])
            h = bank.apply(weights[:, None] * z)[allowed]
            return np.max(np.abs(h) * inv_sigma[:, None, None], axis=(0, 1))

        results = Parallel(n_jobs=self.n_jobs, backend="threading")(
            delayed(chunk_maxima)(ells) for ells in chunks
        )
        return np.concatenate(results)

    def shrink(self, mask: AdmissibleMask) -> None:
        if not mask.is_subset_of(self.mask):
            raise ValueError("Bootstrap masks may only shrink")
        changed = mask.changed_dimensions(self.mask)
        for r in changed:
            self.maxima[:, r] = self.recompute_dimension(r, mask)
        if changed:
            _log.debug("Recomputed bootstrap maxima of dimensions %s", changed)
        self.mask = mask


def run_bootstrap(
    upsilon: UpsilonPanel,
    variance: LocalVarianceField,
    grid: ScaleGrid,
    mask: AdmissibleMask,
    K0: int = 500,
    seed: int = 0,
    filter: Optional[JumpPassFilter] = None,
    n_jobs: int = 1,
    banks: Optional[FilterBankSet] = None,
) -> BootstrapState:
    """
    Draws K0 multiplier replicates and stores, per replicate and dimension, the maximum of
    |H^(l)(t_i, s_rj, r)| / sigma_{r,t_i} over the mask. Replicate ``ell`` uses the
    substream (seed, ell) and shares its multipliers across dimensions, so serial and
    threaded runs give identical results.
    """
    if K0 < 2:
        raise ValueError(f"K0 must be at least 2, got {K0}")
    if mask.is_empty:
        raise ValueError("Bootstrap needs a nonempty admissible mask")
    n, p = upsilon.values.shape
    banks = banks or FilterBankSet(grid, n, filter)
    prepared = []
    for bank, dims in banks:
        if len(bank.times) == 0:
            continue
        allowed = mask.allowed[dims][:, bank.times - 1].T
        for r in dims:
            if np.any(mask.allowed[r, bank.times - 1]):
                variance.require_positive(r, bank.times[mask.allowed[r, bank.times - 1]])
        prepared.append((bank, dims, allowed, inverse_sigma(variance, bank, dims)))

    def replicate_maxima(ell: int) -> np.ndarray:
        z = draw_multipliers(seed, ell, n)
        weighted = upsilon.values * z[:, None]
        out = np.zeros(p)
        for bank, dims, allowed, inv_sigma in prepared:
            with np.errstate(invalid="ignore"):
                g = np.abs(bank.apply(weighted[:, dims])) * inv_sigma[:, None, :]
            g = np.where(allowed[:, None, :], g, 0.0)
            out[dims] = g.max(axis=(0, 1))
        return out

    maxima = Parallel(n_jobs=n_jobs, backend="threading")(
        delayed(replicate_maxima)(ell) for ell in range(K0)
    )
    _log.debug("Ran %d bootstrap replicates for %d dimensions", K0, p)
    return BootstrapState(
        maxima=np.vstack(maxima),
        mask=mask,
        seed=seed,
        upsilon=upsilon,
        variance=variance,
        banks=banks,
        n_jobs=n_jobs,
    )


def critical_value(
    state: BootstrapState, alpha: float, mask: Optional[AdmissibleMask] = None
) -> float:
    """
    Empirical (1 - alpha) quantile of the per-replicate overall maxima, taken as the
    ceil((1 - alpha) K0)-th order statistic. A narrower ``mask`` first recomputes the
    dimensions whose admissible times changed.

    Examples:
        >>> # maxima 1..10 and alpha 0.05 select the 10th order statistic
        >>> critical_value(state, 0.05)
        10.0
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if mask is not None:
        state.shrink(mask)
    overall = np.sort(state.maxima.max(axis=1))
    rank = int(math.ceil((1.0 - alpha) * state.k0 - 1e-9))
    rank = min(max(rank, 1), state.k0)
    return float(overall[rank - 1])
