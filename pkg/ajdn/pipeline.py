import logging
import math
from typing import Any, List, Mapping, NamedTuple, Optional

from joblib import Parallel, delayed

from ajdn.config import AjdnConfig
from ajdn.detector import (
    DetectionParams,
    JumpRecord,
    StatisticField,
    detect_jumps,
    statistic_field,
)
from ajdn.errors import ConfigurationError
from ajdn.evaluate import EvaluationResult, aggregate, match_and_score
from ajdn.filter import JumpPassFilter
from ajdn.panel import TimeSeriesPanel
from ajdn.refine import refine_records
from ajdn.scales import ScaleGrid, check_scale_assumptions, delta_n_default
from ajdn.simulate import DgpSpec, Process, Scenario, simulate
from ajdn.tuning import (
    CandidateScore,
    HyperParams,
    RuleOfThumb,
    best_candidate,
    bic_table,
    candidate_grid,
    pilot_segment,
    rule_of_thumb,
    select_s_prime,
)
from ajdn.variance import LocalVarianceField, local_variance_field

_log = logging.getLogger(__name__)


class DetectionResult(NamedTuple):
    """
    Outcome of :meth:`Pipeline.detect`.

    Parameters:
        records (list of JumpRecord):
            Detected jumps in detection order.

        hyperparams (HyperParams):
            Hyperparameters the run used after auto-resolution.

        seed (int):
            Master seed of the bootstrap.

        n (int):
            Number of time points.

        p (int):
            Number of dimensions.

        field (StatisticField, optional, default None):
            Statistic field, kept only when requested. Not serialized.

        variance (LocalVarianceField, optional, default None):
            Local variances, kept only when requested. Not serialized.
    """

    records: List[JumpRecord]
    hyperparams: HyperParams
    seed: int
    n: int
    p: int
    field: Optional[StatisticField] = None
    variance: Optional[LocalVarianceField] = None

    def to_json(self) -> Mapping[str, Any]:
        return {
            "seed": self.seed,
            "hyperparams": self.hyperparams.to_json(),
            "n": self.n,
            "p": self.p,
            "jumps": [record.to_json() for record in self.records],
        }

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "DetectionResult":
        return DetectionResult(
            records=[JumpRecord.from_json(item) for item in json["jumps"]],
            hyperparams=HyperParams.from_json(json["hyperparams"]),
            seed=int(json["seed"]),
            n=int(json["n"]),
            p=int(json["p"]),
        )


class TuneResult(NamedTuple):
    table: List[CandidateScore]
    best: HyperParams
    delta_n: int


class BenchRow(NamedTuple):
    run: int
    seed: int
    n_detected: int
    count: float
    exact: bool
    mad: Optional[float]
    n_matched: int


class BenchReport(NamedTuple):
    rows: List[BenchRow]
    summary: EvaluationResult


def dgp_spec_from_config(config: AjdnConfig) -> DgpSpec:
    """Reads the [simulate] section into a DgpSpec."""
    section = config.simulate
    try:
        process = Process(section.process.upper())
        scenario = Scenario(section.scenario.upper()) if section.scenario else None
    except ValueError as e:
        raise ConfigurationError(f"Invalid [simulate] setting: {e}") from e
    return DgpSpec(
        process=process,
        n=section.n,
        p=section.p,
        with_trend=section.with_trend,
        scenario=scenario,
        gamma=section.gamma,
        delta=section.delta,
        seed=section.seed,
    )


class Pipeline:
    """
    Runs the detector end to end on the settings of one configuration: hyperparameter
    resolution, detection, refinement, tuning tables and Monte Carlo benchmarks.

    Parameters:
        config (AjdnConfig, optional, default AjdnConfig()):
            Settings. Zero-valued scales and block length are resolved per panel.

        n_jobs (int, optional, default None):
            Worker threads. Defaults to ``config.detect.threads``.

        filter (JumpPassFilter, optional, default None):
            Jump-pass filter; None uses the default coefficients.

    Example usage:
        >>> pipeline = Pipeline(load_config("ajdn.toml"))
        >>> result = pipeline.detect(ingest_csv("panel.csv"))
        >>> [(r.dimension, r.refined_time) for r in result.records]
    """

    def __init__(
        self,
        config: Optional[AjdnConfig] = None,
        n_jobs: Optional[int] = None,
        filter: Optional[JumpPassFilter] = None,
    ) -> None:
        self.config = config or AjdnConfig()
        self.n_jobs = n_jobs or self.config.detect.threads
        self.filter = filter or JumpPassFilter()

    def delta_n(self, n: int, p: int) -> int:
        scales = self.config.scales
        if scales.delta_n:
            return scales.delta_n
        return delta_n_default(n, p, scales.C, scales.epsilon, scales.delta_cap)

    def _rule_of_thumb(self, n: int, p: int) -> RuleOfThumb:
        rot = rule_of_thumb(n, p)
        scales = self.config.scales
        s_min = scales.s_min or rot.s_min
        s_max = scales.s_max or rot.s_max
        if s_min >= s_max:
            raise ConfigurationError(
                f"Scale bounds conflict for n={n}, p={p}: s_min={s_min:.4f} >= s_max={s_max:.4f}; "
                "set [scales] s_min and s_max explicitly"
            )
        return rot._replace(s_min=s_min, s_max=s_max, conflict=False)

    def resolve_hyperparams(
        self,
        panel: TimeSeriesPanel,
        seed: Optional[int] = None,
        n_jobs: Optional[int] = None,
    ) -> HyperParams:
        """
        Fills zero-valued settings: scale bounds from the rule of thumb, the block length
        from the long-run variance ratio on a jump-free segment. The segment is the
        configured one or the longest stretch a pilot detection leaves clear. The block
        length is capped at n s_min.
        """
        n, p = panel.n, panel.p
        scales, bootstrap = self.config.scales, self.config.bootstrap
        seed = bootstrap.seed if seed is None else seed
        auto = not (scales.s_min and scales.s_max and bootstrap.s_prime)
        if auto:
            rot = self._rule_of_thumb(n, p)
            s_min, s_max = rot.s_min, rot.s_max
        else:
            s_min, s_max = scales.s_min, scales.s_max

        if bootstrap.s_prime:
            s_prime = bootstrap.s_prime
        else:
            ns_prime = self._select_ns_prime(panel, rot, seed, n_jobs or self.n_jobs)
            ns_prime = max(min(ns_prime, int(math.floor(n * s_min + 1e-9))), 1)
            s_prime = ns_prime / n

        params = HyperParams(
            s_min=s_min,
            s_max=s_max,
            s_prime=s_prime,
            alpha=self.config.detect.alpha,
            k0=bootstrap.k0,
            seed=seed,
        ).validate(n)
        _log.info(
            "Hyperparameters: s_min=%.5f s_max=%.5f ns'=%d alpha=%g K0=%d",
            params.s_min,
            params.s_max,
            params.ns_prime(n),
            params.alpha,
            params.k0,
        )
        return params

    def _select_ns_prime(
        self, panel: TimeSeriesPanel, rot: RuleOfThumb, seed: int, n_jobs: int
    ) -> int:
        tune = self.config.tune
        n = panel.n
        if tune.segment:
            if len(tune.segment) != 2:
                raise ConfigurationError(f"tune.segment must be [start, stop], got {tune.segment}")
            r = tune.segment_dimension
            start, stop = (int(v) for v in tune.segment)
            if not (0 <= r < panel.p and 1 <= start < stop <= n):
                raise ConfigurationError(
                    f"tune.segment {start}..{stop} in dimension {r} lies outside the panel"
                )
        else:
            r, start, stop = pilot_segment(
                panel, rot, tune.pilot_alpha, tune.pilot_k0, seed, n_jobs
            )
        ns_prime_max = rot.ns_prime_max(n)
        segment = panel.column(r)[start - 1 : stop]
        if len(segment) < 4 * ns_prime_max:
            _log.warning(
                "Jump-free segment of length %d is too short for the block length choice, using ns'=1",
                len(segment),
            )
            return 1
        return select_s_prime(segment, ns_prime_max, rot.lrv_target)

    def detect(
        self,
        panel: TimeSeriesPanel,
        params: Optional[HyperParams] = None,
        keep_field: bool = False,
        n_jobs: Optional[int] = None,
    ) -> DetectionResult:
        """
        Detects and, unless disabled, refines jumps in ``panel``.

        Parameters:
            params (HyperParams, optional, default None):
                Hyperparameters to use as given; None resolves them from the configuration.

            keep_field (bool, optional, default False):
                Keep the statistic and variance fields on the result for dumping.
        """
        n_jobs = n_jobs or self.n_jobs
        params = (params or self.resolve_hyperparams(panel)).validate(panel.n)
        grid = ScaleGrid.shared(params.s_min, params.s_max, self.delta_n(panel.n, panel.p), panel.p)
        check_scale_assumptions(grid, panel.n)
        records = detect_jumps(
            panel,
            grid,
            self.filter,
            DetectionParams(
                s_prime=params.s_prime,
                alpha=params.alpha,
                k0=params.k0,
                seed=params.seed,
                c=self.config.detect.c,
                n_jobs=n_jobs,
            ),
        )
        refine = self.config.refine
        if refine.enabled and records:
            records = refine_records(
                panel,
                records,
                z_n=refine.z_n or params.s_min / 2.0,
                alpha_tilde=refine.alpha_tilde,
                n_jobs=n_jobs,
            )
        field = variance = None
        if keep_field:
            variance = local_variance_field(panel, grid)
            field = statistic_field(panel, grid, variance, self.filter)
        return DetectionResult(
            records, params, params.seed, panel.n, panel.p, field=field, variance=variance
        )

    def tune(self, panel: TimeSeriesPanel) -> TuneResult:
        """
        Scores the candidate grid of the [tune] section with the penalized criterion and
        returns the table together with the winner.
        """
        n, p = panel.n, panel.p
        tune, bootstrap = self.config.tune, self.config.bootstrap
        selected = None
        if not tune.ns_prime:
            if bootstrap.s_prime:
                selected = max(int(round(n * bootstrap.s_prime)), 1)
            else:
                selected = self._select_ns_prime(
                    panel, self._rule_of_thumb(n, p), bootstrap.seed, self.n_jobs
                )
        candidates = candidate_grid(
            n,
            p,
            s_mins=list(tune.s_min),
            s_maxs=list(tune.s_max),
            ns_primes=[int(m) for m in tune.ns_prime],
            alpha=self.config.detect.alpha,
            k0=bootstrap.k0,
            seed=bootstrap.seed,
            selected_ns_prime=selected,
        )
        delta_n = self.delta_n(n, p)
        _log.info("Scoring %d tuning candidates with %d scales", len(candidates), delta_n)
        table = bic_table(
            panel,
            candidates,
            delta_n,
            DetectionParams(s_prime=candidates[0].s_prime, c=self.config.detect.c),
            self.filter,
            self.n_jobs,
        )
        return TuneResult(table, best_candidate(table), delta_n)

    def bench(self, spec: DgpSpec, runs: Optional[int] = None) -> BenchReport:
        """
        Repeats simulate, detect and evaluate. Run k simulates with seed ``spec.seed + k``
        and bootstraps with the configured seed plus k. Runs go to worker threads; each run
        detects single-threaded.
        """
        runs = runs if runs is not None else self.config.bench.runs
        if runs < 1:
            raise ConfigurationError(f"bench.runs must be at least 1, got {runs}")
        margin = self.config.bench.margin or None

        def one_run(run: int) -> tuple:
            run_spec = spec._replace(seed=spec.seed + run)
            panel, truth = simulate(run_spec)
            params = self.resolve_hyperparams(
                panel, seed=self.config.bootstrap.seed + run, n_jobs=1
            )
            result = self.detect(panel, params, n_jobs=1)
            score = match_and_score(
                result.records, truth, spec.n, spec.p, Delta=spec.delta, margin=margin
            )
            _log.debug("Run %d: %d detections, exact=%s", run, len(result.records), score.m_hat_p)
            row = BenchRow(
                run=run,
                seed=run_spec.seed,
                n_detected=len(result.records),
                count=score.m_bar,
                exact=score.m_hat_p == 1.0,
                mad=score.mad,
                n_matched=score.n_matched,
            )
            return row, score

        outcomes = Parallel(n_jobs=self.n_jobs, backend="threading")(
            delayed(one_run)(run) for run in range(runs)
        )
        rows = [row for row, _ in outcomes]
        summary = aggregate([score for _, score in outcomes])
        _log.info(
            "Bench over %d runs: m_bar=%.3f m_hat_p=%.3f rejection_rate=%.3f",
            runs,
            summary.m_bar,
            summary.m_hat_p,
            summary.rejection_rate,
        )
        return BenchReport(rows, summary)

