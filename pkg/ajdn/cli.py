import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from ajdn.config import AjdnConfig, RunConfig, load_config
from ajdn.errors import EXIT_NUMERIC, EXIT_OK, ConfigurationError, exit_code_for
from ajdn.evaluate import match_and_score
from ajdn.filter import JumpPassFilter, validate_filter
from ajdn.output import (
    best_as_toml,
    emit_results,
    read_jumps,
    read_truth,
    write_bench,
    write_table,
    write_truth,
)
from ajdn.panel import ingest_csv
from ajdn.pipeline import Pipeline, dgp_spec_from_config
from ajdn.simulate import simulate
from ajdn.version import __version__

_log = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigurationError(message)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration file")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--seed", type=int, help="master seed")
    return common


def _detection_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="panel CSV path or http(s) URL")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--k0", type=int)
    parser.add_argument("--s-min", type=float)
    parser.add_argument("--s-max", type=float)
    parser.add_argument("--s-prime", type=float)
    parser.add_argument("--delta-n", type=int)


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    common = _common_options()
    parser = _ArgumentParser(
        prog="ajdn",
        description="Asynchronous jump detection for high-dimensional time series.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    detect = commands.add_parser("detect", parents=[common], help="detect jumps in a panel")
    _detection_options(detect)
    detect.add_argument("--output", default="jumps.json")
    detect.add_argument("--summary", help="defaults to summary.txt next to --output")
    detect.add_argument("--no-refine", action="store_true")
    detect.add_argument("--dump-field", metavar="DIR")
    detect.add_argument("--dump-variance", metavar="PATH")

    tune = commands.add_parser("tune", parents=[common], help="score candidate hyperparameters")
    _detection_options(tune)
    tune.add_argument("--output", default="best.toml")
    tune.add_argument("--table", help="CSV of every scored candidate")
    tune.add_argument("--grid-spec", type=Path, help="candidate grid TOML, used as --config")

    sim = commands.add_parser("simulate", parents=[common], help="simulate a panel")
    sim.add_argument("--spec", type=Path, help="process TOML, used as --config")
    sim.add_argument("--output", default="panel.csv")
    sim.add_argument("--truth", default="truth.json")
    sim.add_argument("--process")
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--trend", action="store_true", default=None)
    sim.add_argument("--scenario")
    sim.add_argument("--gamma", type=float)
    sim.add_argument("--delta", type=float)

    evaluate = commands.add_parser("evaluate", parents=[common], help="score detections")
    evaluate.add_argument("--detected", required=True)
    evaluate.add_argument("--truth", required=True)
    evaluate.add_argument("--delta", type=float, help="defaults to the simulated jump size")
    evaluate.add_argument("--margin", type=float)

    bench = commands.add_parser("bench", parents=[common], help="Monte Carlo benchmark")
    bench.add_argument("--spec", type=Path, help="experiment TOML, used as --config")
    bench.add_argument("--runs", type=int)
    bench.add_argument("--output", default="bench.csv")
    bench.add_argument("--alpha", type=float)
    bench.add_argument("--k0", type=int)

    check = commands.add_parser("filter-check", parents=[common], help="validate the filter")
    check.add_argument("--points", type=int, default=10_000)

    return parser.parse_args(argv)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    flags = {
        "detect.alpha": "alpha",
        "detect.threads": "threads",
        "bootstrap.seed": "seed",
        "bootstrap.k0": "k0",
        "bootstrap.s_prime": "s_prime",
        "scales.s_min": "s_min",
        "scales.s_max": "s_max",
        "scales.delta_n": "delta_n",
        "simulate.process": "process",
        "simulate.n": "n",
        "simulate.p": "p",
        "simulate.with_trend": "trend",
        "simulate.scenario": "scenario",
        "simulate.gamma": "gamma",
        "simulate.delta": "delta",
        "bench.runs": "runs",
    }
    overrides = {key: getattr(args, name, None) for key, name in flags.items()}
    if args.command == "simulate" and args.seed is not None:
        overrides["simulate.seed"] = args.seed
    if args.command == "evaluate":
        overrides.pop("simulate.delta")
    if getattr(args, "no_refine", False):
        overrides["refine.enabled"] = False
    return overrides


def _run_config(args: argparse.Namespace) -> RunConfig:
    path = getattr(args, "spec", None) or getattr(args, "grid_spec", None) or args.config
    config = load_config(path).with_overrides(_overrides(args))
    return RunConfig(
        config=config,
        input=getattr(args, "input", None),
        output=getattr(args, "output", None),
        summary=getattr(args, "summary", None),
        dump_field=getattr(args, "dump_field", None),
        dump_variance=getattr(args, "dump_variance", None),
        threads=config.detect.threads,
    ).validate()


def _detect(run: RunConfig) -> int:
    panel = ingest_csv(run.input)
    pipeline = Pipeline(run.config, n_jobs=run.threads)
    keep = bool(run.dump_field or run.dump_variance)
    result = pipeline.detect(panel, keep_field=keep)
    emit_results(result, run)
    return EXIT_OK


def _tune(run: RunConfig, table: Optional[str]) -> int:
    panel = ingest_csv(run.input)
    result = Pipeline(run.config, n_jobs=run.threads).tune(panel)
    Path(run.output).write_text(best_as_toml(result.best, result.delta_n))
    if table:
        write_table(result.table, table)
    _log.info("Best candidate %s written to %s", result.best, run.output)
    return EXIT_OK


def _simulate(run: RunConfig, truth_path: str) -> int:
    spec = dgp_spec_from_config(run.config)
    panel, truth = simulate(spec)
    panel.to_csv(run.output)
    write_truth(spec, truth, truth_path)
    _log.info("Simulated %d jumps with seed %d", len(truth), spec.seed)
    return EXIT_OK


def _evaluate(args: argparse.Namespace) -> int:
    detected = read_jumps(args.detected)
    spec, truth = read_truth(args.truth)
    delta = args.delta if args.delta is not None else (spec.delta if spec else 5.0)
    result = match_and_score(
        detected.records, truth, detected.n, detected.p, Delta=delta, margin=args.margin
    )
    print(json.dumps(dict(result.to_json(), seed=detected.seed)))
    return EXIT_OK


def _bench(run: RunConfig) -> int:
    spec = dgp_spec_from_config(run.config)
    report = Pipeline(run.config, n_jobs=run.threads).bench(spec)
    write_bench(report.rows, run.output)
    print(json.dumps(dict(report.summary.to_json(), seed=spec.seed)))
    return EXIT_OK


def _filter_check(points: int) -> int:
    report = validate_filter(JumpPassFilter(), quadrature_points=points)
    print(json.dumps(report.to_json(), indent=2))
    return EXIT_OK if report.passed else EXIT_NUMERIC


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the ``ajdn`` command. Returns the exit code: 0 on success (also when
    nothing is detected), 1 for usage and configuration errors, 2 for data errors and
    3 for degenerate numerics.
    """
    try:
        args = _parse_args(argv)
        logging.basicConfig(
            level=getattr(logging, args.log_level),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        if args.command == "evaluate":
            return _evaluate(args)
        if args.command == "filter-check":
            return _filter_check(args.points)
        run = _run_config(args)
        if args.command == "detect":
            return _detect(run)
        if args.command == "tune":
            return _tune(run, args.table)
        if args.command == "simulate":
            return _simulate(run, args.truth)
        return _bench(run)
    except Exception as e:
        code = exit_code_for(e)
        _log.error("%s", e)
        print(f"ajdn: error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    raise SystemExit(main())
