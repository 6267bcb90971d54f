import csv
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from ajdn.config import RunConfig, dump_toml
from ajdn.detector import JumpRecord, StatisticField
from ajdn.errors import IngestionError
from ajdn.pipeline import BenchRow, DetectionResult
from ajdn.simulate import DgpSpec, TrueJump
from ajdn.tuning import CandidateScore, HyperParams
from ajdn.variance import LocalVarianceField

_log = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")

TABLE_COLUMNS = ("s_min", "s_max", "s_prime", "n_jumps", "gm", "status")
BENCH_COLUMNS = ("run", "seed", "n_detected", "count", "exact", "mad", "n_matched")


def counts_per_dimension(records: Sequence[JumpRecord], p: int) -> List[int]:
    counts = [0] * p
    for record in records:
        counts[record.dimension] += 1
    return counts


def write_jumps(result: DetectionResult, path: PathLike) -> None:
    with open(path, "w") as f:
        json.dump(result.to_json(), f, indent=2)
        f.write("\n")


def _read_json(path: PathLike, kind: str, parse: Callable[[Any], T]) -> T:
    """Parses a JSON file written by this package; malformed content is an IngestionError."""
    with open(path) as f:
        try:
            return parse(json.load(f))
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise IngestionError(f"Malformed {kind} file {path}: {e!r}") from e


def read_jumps(path: PathLike) -> DetectionResult:
    return _read_json(path, "detections", DetectionResult.from_json)


def write_summary(result: DetectionResult, path: PathLike) -> None:
    params = result.hyperparams
    lines = [
        f"seed {result.seed}",
        f"n {result.n} p {result.p}",
        f"s_min {params.s_min!r} s_max {params.s_max!r} s_prime {params.s_prime!r} "
        f"alpha {params.alpha!r} k0 {params.k0}",
        f"total {len(result.records)}",
    ]
    for r, count in enumerate(counts_per_dimension(result.records, result.p)):
        lines.append(f"dimension {r}: {count}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_field_traces(field: StatisticField, directory: PathLike, seed: int) -> List[Path]:
    """One ``G_dim<r>.csv`` per dimension with the maximum statistic over scales per time."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for r in range(field.p):
        trace = field.max_over_scales(r)
        path = directory / f"G_dim{r}.csv"
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "G_max"])
            for i in np.flatnonzero(~np.isnan(trace)):
                writer.writerow([repr((i + 1) / field.n), repr(float(trace[i]))])
        written.append(path)
    _log.info("Wrote %d field traces to %s (seed %d)", len(written), directory, seed)
    return written


def write_variance(variance: LocalVarianceField, path: PathLike) -> None:
    values = variance.values
    p, n = values.shape
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["dimension", "time_index", "t", "sigma2"])
        for r in range(p):
            for i in np.flatnonzero(~np.isnan(values[r])):
                writer.writerow([r, i + 1, repr((i + 1) / n), repr(float(values[r, i]))])


def emit_results(result: DetectionResult, run_config: RunConfig) -> List[Path]:
    """
    Writes every file ``run_config`` asks for: jumps.json, summary.txt, and the optional
    field traces and variance dump. Returns the paths written.

    Examples:
        >>> emit_results(pipeline.detect(panel, keep_field=True), run_config)
        [PosixPath('out/jumps.json'), PosixPath('out/summary.txt')]
    """
    written: List[Path] = []
    output = Path(run_config.output or "jumps.json")
    write_jumps(result, output)
    written.append(output)
    summary = Path(run_config.summary) if run_config.summary else output.parent / "summary.txt"
    write_summary(result, summary)
    written.append(summary)
    if run_config.dump_field:
        if result.field is None:
            raise ValueError("Field traces requested but the statistic field was not kept")
        written.extend(write_field_traces(result.field, run_config.dump_field, result.seed))
    if run_config.dump_variance:
        if result.variance is None:
            raise ValueError("Variance dump requested but the variance field was not kept")
        write_variance(result.variance, run_config.dump_variance)
        written.append(Path(run_config.dump_variance))
    _log.info("Wrote %d jumps to %s", len(result.records), output)
    return written


def write_truth(spec: DgpSpec, truth: Sequence[TrueJump], path: PathLike) -> None:
    with open(path, "w") as f:
        json.dump(
            {
                "seed": spec.seed,
                "spec": spec.to_json(),
                "jumps": [jump.to_json() for jump in truth],
            },
            f,
            indent=2,
        )
        f.write("\n")


def read_truth(path: PathLike) -> Tuple[Optional[DgpSpec], List[TrueJump]]:
    def parse(data: Mapping[str, Any]) -> Tuple[Optional[DgpSpec], List[TrueJump]]:
        spec = DgpSpec.from_json(data["spec"]) if data.get("spec") else None
        return spec, [TrueJump.from_json(item) for item in data["jumps"]]

    return _read_json(path, "truth", parse)


def write_table(table: Sequence[CandidateScore], path: PathLike) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for row in table:
            writer.writerow(
                [
                    repr(row.params.s_min),
                    repr(row.params.s_max),
                    repr(row.params.s_prime),
                    row.n_jumps,
                    repr(row.gm),
                    row.status,
                ]
            )


def best_as_toml(best: HyperParams, delta_n: int) -> str:
    """The winning candidate as [scales] and [bootstrap] sections of a configuration file."""
    sections: Dict[str, Mapping[str, Any]] = {
        "scales": {"s_min": best.s_min, "s_max": best.s_max, "delta_n": delta_n},
        "bootstrap": {"k0": best.k0, "s_prime": best.s_prime, "seed": best.seed},
    }
    return dump_toml(sections)


def write_bench(rows: Sequence[BenchRow], path: PathLike) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.run,
                    row.seed,
                    row.n_detected,
                    repr(row.count),
                    int(row.exact),
                    "" if row.mad is None else repr(row.mad),
                    row.n_matched,
                ]
            )
