import math
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from ajdn.detector import JumpRecord
from ajdn.simulate import TrueJump


class EvaluationResult(NamedTuple):
    """
    Detection quality against known jumps, for one run or averaged over runs.

    Parameters:
        m_bar (float):
            Average number of detected jumps. Detections matching the same true jump time
            count once, every unmatched detection counts once.

        m_hat_p (float):
            Share of runs that found every true jump time and nothing else.

        mad (float, optional):
            Mean absolute deviation |d - d_true| on the index scale [0, n] over matched
            detections in dimensions that really jump, averaged over runs with at least
            one such match. None when nothing matched.

        margin (float):
            Matching half-width as a fraction of the sample span.

        rejection_rate (float):
            Share of runs with at least one detection; the Type-I error for jump-free data.

        runs (int):
            Number of runs aggregated.

        n_matched (int):
            Matched detections in dimensions that really jump, summed over runs.
    """

    m_bar: float
    m_hat_p: float
    mad: Optional[float]
    margin: float
    rejection_rate: float
    runs: int = 1
    n_matched: int = 0

    def to_json(self) -> Mapping[str, Any]:
        return self._asdict()

    @staticmethod
    def from_json(json: Mapping[str, Any]) -> "EvaluationResult":
        return EvaluationResult(**json)


def matching_margin(n: int, p: int, delta: float) -> float:
    """ln n ln p / (2 n delta^2) on the fraction scale."""
    if delta <= 0:
        raise ValueError(f"delta must be positive to derive a margin, got {delta}")
    return math.log(n) * math.log(p) / (2.0 * n * delta**2)


def match_and_score(
    detected: Sequence[JumpRecord],
    truth: Sequence[TrueJump],
    n: int,
    p: int,
    Delta: float = 5.0,
    margin: Optional[float] = None,
) -> EvaluationResult:
    """
    Scores one run. A detection matches the nearest true jump time within the margin
    (ties go to the earlier time); each true jump uses a margin from its own delta unless
    ``margin`` overrides it. Locations use the refined index when present.

    Examples:
        >>> result = match_and_score(records, truth, n=1000, p=20, Delta=5.0)
        >>> result.m_hat_p
        1.0
    """
    events: Dict[int, List[TrueJump]] = {}
    for jump in truth:
        events.setdefault(jump.time_index, []).append(jump)
    event_times = sorted(events)
    reach = {
        d: margin
        if margin is not None
        else max(matching_margin(n, p, j.delta if j.delta > 0 else Delta) for j in events[d])
        for d in event_times
    }

    hit_events = set()
    false_positives = 0
    deviations: List[float] = []
    for record in detected:
        d_hat = record.location_index
        candidates = [
            d for d in event_times if abs(d_hat - d) / n <= reach[d] + 1e-12
        ]
        if not candidates:
            false_positives += 1
            continue
        d = min(candidates, key=lambda e: (abs(d_hat - e), e))
        hit_events.add(d)
        if any(j.dimension == record.dimension for j in events[d]):
            deviations.append(abs(d_hat - d))

    count = len(hit_events) + false_positives
    exact = len(hit_events) == len(event_times) and false_positives == 0
    shown_margin = margin if margin is not None else (
        min(reach.values()) if reach else matching_margin(n, p, Delta)
    )
    return EvaluationResult(
        m_bar=float(count),
        m_hat_p=1.0 if exact else 0.0,
        mad=float(np.mean(deviations)) if deviations else None,
        margin=shown_margin,
        rejection_rate=1.0 if detected else 0.0,
        runs=1,
        n_matched=len(deviations),
    )


def aggregate(results: Sequence[EvaluationResult]) -> EvaluationResult:
    """Averages per-run results; MAD is averaged over runs that matched anything."""
    if not results:
        raise ValueError("Nothing to aggregate")
    runs = sum(r.runs for r in results)
    mads = [(r.mad, r.runs) for r in results if r.mad is not None]
    return EvaluationResult(
        m_bar=sum(r.m_bar * r.runs for r in results) / runs,
        m_hat_p=sum(r.m_hat_p * r.runs for r in results) / runs,
        mad=sum(m * w for m, w in mads) / sum(w for _, w in mads) if mads else None,
        margin=min(r.margin for r in results),
        rejection_rate=sum(r.rejection_rate * r.runs for r in results) / runs,
        runs=runs,
        n_matched=sum(r.n_matched for r in results),
    )
