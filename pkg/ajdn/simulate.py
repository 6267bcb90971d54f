import enum
import logging
import math
from typing import Any, List, Mapping, NamedTuple, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg, signal

from ajdn.panel import TimeSeriesPanel
from ajdn.scales import ScaleGrid
from ajdn.variance import local_variance_field

_log = logging.getLogger(__name__)

BURN_IN = 200
AR_COEFFICIENT = 0.25
EQUICORRELATION = 0.5
KMS_RHO = 0.5
SCENARIO_ONE_TIMES = (0.25, 0.75)
SCENARIO_TWO_SPAN = (0.2, 0.8)
SD_WINDOW_POINTS = 3


class Process(str, enum.Enum):
    IID = "IID"
    GS = "GS"
    PS = "PS"
    LS = "LS"
    PLS = "PLS"


class Scenario(str, enum.Enum):
    # one jump at t = 0.5 in the first dimension
    S0 = "S0"
    S1 = "S1"
    S2 = "S2"


class DgpSpec(NamedTuple):
    """
    Declarative description of a simulated panel.

    Parameters:
        process (Process, required):
            Error process. IID: standard normal. GS: AR(1) with coefficient 0.25 per dimension.
            PS: VMA(3) with equicorrelated uniform innovations whose covariance quadruples
            after n/2. LS: time-varying VAR(1) with centred binomial innovations. PLS: LS
            with the innovation scale doubled on the middle third.

        n (int, required):
            Number of time points.

        p (int, required):
            Number of dimensions.

        with_trend (bool, optional, default False):
            Add the smoothly time-varying mean of :func:`generate_trend`.

        scenario (Scenario, optional, default None):
            Jump layout, None for a jump-free panel.

        gamma (float, optional, default 1.0):
            Share of dimensions that jump.

        delta (float, optional, default 5.0):
            Jump size in units of the local standard deviation.

        seed (int, optional, default 0):
            Seed of every random draw.

    Examples:
        >>> spec = DgpSpec(Process.GS, n=1000, p=20, scenario=Scenario.S2, gamma=0.2236)
        >>> panel, truth = simulate(spec)
    """

    process: Process
    n: int
    p: int
    with_trend: bool = False
    scenario: Optional[Scenario] = None
    gamma: float = 1.0
    delta: float = 5.0
    seed: int = 0

    def to_json(self) -> Mapping[str, Any]:
        return {
            "process": self.process.value,
            "n": self.n,
            "p": self.p,
            "with_trend": self.with_trend,
            "scenario": self.scenario.value if self.scenario else None,
            "gamma": self.gamma,
            "delta": self.delta,
            "seed": self.seed,
        }

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "DgpSpec":
        scenario = json.get("scenario")
        return DgpSpec(
            process=Process(json["process"]),
            n=int(json["n"]),
            p=int(json["p"]),
            with_trend=bool(json.get("with_trend", False)),
            scenario=Scenario(scenario) if scenario else None,
            gamma=float(json.get("gamma", 1.0)),
            delta=float(json.get("delta", 5.0)),
            seed=int(json.get("seed", 0)),
        )


class TrueJump(NamedTuple):
    """
    A planted jump: the mean of ``dimension`` shifts by ``size`` after ``time_index``.
    """

    dimension: int
    time_index: int
    time: float
    size: float
    delta: float

    def to_json(self) -> Mapping[str, Any]:
        return self._asdict()

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "TrueJump":
        return TrueJump(
            dimension=int(json["dimension"]),
            time_index=int(json["time_index"]),
            time=float(json["time"]),
            size=float(json["size"]),
            delta=float(json["delta"]),
        )


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _gaussian_dimension(seed: int, r: int, n: int, ar: float) -> np.ndarray:
    eta = _stream(seed, 0, r).standard_normal(n + BURN_IN)
    if ar == 0.0:
        return eta[BURN_IN:]
    return signal.lfilter([1.0], [1.0, -ar], eta)[BURN_IN:]


def _equicorrelation(p: int, rho: float) -> np.ndarray:
    return np.full((p, p), rho) + (1.0 - rho) * np.eye(p)


def _kms(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def ls_coefficient_matrix(p: int) -> np.ndarray:
    """0.25 on the diagonal and the anti-diagonal; a single 0.25 where they meet."""
    a = np.zeros((p, p))
    a[np.arange(p), np.arange(p)] = 0.25
    a[np.arange(p), np.arange(p)[::-1]] = 0.25
    return a


def centred_binomial(rng: np.random.Generator, size) -> np.ndarray:
    """Q - 3 with Q ~ Binomial(10, 0.3), mean zero and variance 2.1."""
    return rng.binomial(10, 0.3, size=size) - 3.0


def _piecewise_scale(n: int) -> np.ndarray:
    third = math.ceil(n / 3)
    c = np.ones(n)
    c[third : 2 * third] = 2.0
    return c


def generate_errors(spec: DgpSpec, n_jobs: int = 1) -> TimeSeriesPanel:
    """
    Draws the error panel of ``spec.process``. Dimension-separable processes draw each
    dimension from its own substream, so the result does not depend on ``n_jobs``.
    AR and VAR recursions discard a burn-in of 200 steps.
    """
    n, p = spec.n, spec.p
    if n < 10 or p < 1:
        raise ValueError(f"Need n >= 10 and p >= 1, got n={n}, p={p}")
    process = Process(spec.process)
    if process in (Process.IID, Process.GS):
        ar = AR_COEFFICIENT if process is Process.GS else 0.0
        columns = Parallel(n_jobs=n_jobs, backend="threading")(
            delayed(_gaussian_dimension)(spec.seed, r, n, ar) for r in range(p)
        )
        return TimeSeriesPanel(np.column_stack(columns))

    rng = _stream(spec.seed, 1)
    if process is Process.PS:
        root = linalg.cholesky(_equicorrelation(p, EQUICORRELATION), lower=True)
        half_width = math.sqrt(12.0) / 2.0
        u = rng.uniform(-half_width, half_width, size=(n + BURN_IN, p))
        eta = u @ root.T
        # B_i = 2 B_1 after n/2
        eta[BURN_IN + n // 2 :] *= 2.0
        eps = eta.copy()
        eps[1:] += 0.5 * eta[:-1]
        eps[3:] += 0.5 * eta[:-3]
        return TimeSeriesPanel(eps[BURN_IN:])

    root = linalg.cholesky(_kms(p, KMS_RHO), lower=True)
    q = centred_binomial(rng, (n + BURN_IN, p))
    eta = q @ root.T
    if process is Process.PLS:
        eta[BURN_IN:] *= _piecewise_scale(n)[:, None]
    a = ls_coefficient_matrix(p)
    i = np.arange(1 - BURN_IN, n + 1)
    envelope = (np.sin(2.0 * np.pi * i / n) + 1.0) / 2.0
    eps = np.empty_like(eta)
    previous = np.zeros(p)
    for k in range(len(i)):
        previous = envelope[k] * (a @ previous) + eta[k]
        eps[k] = previous
    return TimeSeriesPanel(eps[BURN_IN:])


def sd_window(n: int) -> Tuple[float, float]:
    """
    Inner and outer bounds of the local standard deviation windows. They follow the
    rule-of-thumb scales for a single dimension, so they depend on n only, and widen
    to hold at least SD_WINDOW_POINTS observations per side for short series.
    """
    if n < 10:
        raise ValueError(f"Need n >= 10 for local standard deviations, got {n}")
    log_n = math.log(n)
    s_min = max(n ** (-1.0 / 3.0) * log_n**2 / 120.0, 1.0 / n)
    s_max = max(n ** (-1.0 / 6.0) * log_n / 27.0, s_min + SD_WINDOW_POINTS / n)
    return s_min, s_max


def local_sd_profile(panel: TimeSeriesPanel) -> np.ndarray:
    """
    Local standard deviation per (dimension, time), shape (p, n), on the windows of
    :func:`sd_window`. Times too close to the edges take the nearest defined value.
    """
    s_min, s_max = sd_window(panel.n)
    grid = ScaleGrid.shared(s_min, s_max, 2, panel.p)
    sd = np.sqrt(local_variance_field(panel, grid).values)
    for r in range(panel.p):
        defined = np.flatnonzero(~np.isnan(sd[r]))
        if len(defined) == 0:
            raise ValueError(f"No local standard deviation defined for n={panel.n}")
        sd[r, : defined[0]] = sd[r, defined[0]]
        sd[r, defined[-1] + 1 :] = sd[r, defined[-1]]
    return sd


def generate_trend(
    n: int,
    p: int,
    errors: TimeSeriesPanel,
    local_sd: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Smooth means beta_r(i/n) of shape (n, p). The unscaled trend is sin(2 pi i/n + 2 pi r/p)
    for dimensions r = 1..p; its increments are multiplied by the local standard deviation
    of the errors at time i so the trend stays comparable to the noise level.

    Parameters:
        local_sd (array of float, optional, default None):
            Shape (p, n) profile to use instead of estimating it from ``errors``.
    """
    if local_sd is None:
        local_sd = local_sd_profile(errors)
    i = np.arange(1, n + 1)[:, None]
    r = np.arange(1, p + 1)[None, :]
    unscaled = np.sin(2.0 * np.pi * i / n + 2.0 * np.pi * r / p)
    increments = np.diff(unscaled, axis=0) * local_sd.T[1:]
    return unscaled[0] + np.vstack([np.zeros((1, p)), np.cumsum(increments, axis=0)])


def scenario_layout(
    scenario: Scenario, gamma: float, p: int
) -> List[Tuple[int, float]]:
    """(dimension, time) of every jump a scenario plants."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    scenario = Scenario(scenario)
    if scenario is Scenario.S0:
        return [(0, 0.5)]
    if scenario is Scenario.S1:
        k = max(math.ceil(gamma * p / 2.0 - 1e-9), 1)
        early = [(r, SCENARIO_ONE_TIMES[0]) for r in range(min(k, p))]
        late = [(r, SCENARIO_ONE_TIMES[1]) for r in range(k, min(2 * k, p))]
        return early + late
    m = min(max(math.ceil(gamma * p - 1e-9), 1), p)
    if m == 1:
        return [(0, 0.5)]
    lo, hi = SCENARIO_TWO_SPAN
    return [(r, lo + (hi - lo) * r / (m - 1)) for r in range(m)]


def apply_scenario(
    panel: TimeSeriesPanel,
    scenario: Optional[Scenario],
    gamma: float,
    delta: float,
    local_sd: Optional[np.ndarray] = None,
) -> Tuple[TimeSeriesPanel, List[TrueJump]]:
    """
    Plants the jumps of ``scenario``: a jump at time t in dimension r raises the mean of all
    observations after round(t n) by delta times the local standard deviation there.
    S1 puts ceil(gamma p / 2) jumps at 0.25 and as many in other dimensions at 0.75; S2 puts
    ceil(gamma p) single-dimension jumps evenly on [0.2, 0.8].
    """
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if scenario is None:
        return panel, []
    if local_sd is None:
        local_sd = local_sd_profile(panel)
    n = panel.n
    values = np.array(panel.values)
    truth = []
    for r, t in scenario_layout(scenario, gamma, panel.p):
        d = int(round(t * n))
        size = delta * float(local_sd[r, d - 1])
        values[d:, r] += size
        truth.append(TrueJump(r, d, d / n, size, delta))
    return panel.with_values(values), truth


def simulate(spec: DgpSpec) -> Tuple[TimeSeriesPanel, List[TrueJump]]:
    """Errors, optional trend and the scenario's jumps, all determined by ``spec``."""
    errors = generate_errors(spec)
    local_sd = (
        local_sd_profile(errors) if spec.with_trend or spec.scenario else None
    )
    panel = errors
    if spec.with_trend:
        panel = errors.with_values(
            errors.values + generate_trend(spec.n, spec.p, errors, local_sd)
        )
    panel, truth = apply_scenario(panel, spec.scenario, spec.gamma, spec.delta, local_sd)
    _log.debug("Simulated %s panel n=%d p=%d with %d jumps", spec.process, spec.n, spec.p, len(truth))
    return panel, truth
