import math
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from ajdn.detector import JumpRecord
from ajdn.panel import TimeSeriesPanel

DEFAULT_ALPHA_TILDE = -0.5


class CusumWindow(NamedTuple):
    """
    Windows of the second-stage CUSUM search around a first-stage location d.

    The wide window [d - (2 + alpha_tilde) z_n, d + (2 + alpha_tilde) z_n] supplies the
    partial sums, the narrow window [d - z_n, d + z_n] is where the argmax is searched.
    Both are clamped to [1/n, 1].

    Parameters:
        center (float, required):
            First-stage location d as a fraction of the sample span.

        z_n (float, required):
            Half-width of the narrow window, typically half the smallest scale.

        alpha_tilde (float, optional, default -0.5):
            Widening of the outer window, must exceed -1.
    """

    center: float
    z_n: float
    alpha_tilde: float = DEFAULT_ALPHA_TILDE

    @property
    def wide(self) -> Tuple[float, float]:
        half = (2.0 + self.alpha_tilde) * self.z_n
        return self.center - half, self.center + half

    @property
    def narrow(self) -> Tuple[float, float]:
        return self.center - self.z_n, self.center + self.z_n

    def indices(self, n: int, interval: Tuple[float, float]) -> Tuple[int, int]:
        """Inclusive 1-based index range lambda(I) = {i : i/n in I}, clamped to [1, n]."""
        a, b = interval
        first = max(int(math.ceil(round(n * a, 9))), 1)
        last = min(int(math.floor(round(n * b, 9))), n)
        return first, last


def refine_jump(
    panel: TimeSeriesPanel, r: int, d_hat: float, window: CusumWindow
) -> float:
    """
    Local CUSUM refinement. For every grid t in the narrow window,
    V(t) = S[l, t] - |lambda([l, t])| / |lambda([l, u])| * S[l, u] with partial sums over the
    wide window [l, u]; returns the t maximising |V|, the earliest on ties.

    Examples:
        >>> window = CusumWindow(center=0.5, z_n=0.02)
        >>> refine_jump(panel, r=0, d_hat=0.5, window=window)
        0.497
    """
    window = window._replace(center=d_hat)
    if window.alpha_tilde <= -1.0:
        raise ValueError(f"alpha_tilde must exceed -1, got {window.alpha_tilde}")
    if window.z_n <= 0:
        raise ValueError(f"z_n must be positive, got {window.z_n}")
    n = panel.n
    lo, hi = window.indices(n, window.wide)
    first, last = window.indices(n, window.narrow)
    first, last = max(first, lo), min(last, hi)
    if hi - lo + 1 < 3:
        raise ValueError(
            f"CUSUM window around {d_hat} holds {max(hi - lo + 1, 0)} observations, need 3"
        )
    if first > last:
        raise ValueError(f"CUSUM search window around {d_hat} lies outside the data")
    y = panel.column(r)[lo - 1 : hi]
    # levels cancel in V; subtracting one exactly keeps a flat window at V == 0
    y = y - y[0]
    partial = np.cumsum(y)
    counts = np.arange(1, len(y) + 1)
    cusum = partial - counts / len(y) * partial[-1]
    search = np.abs(cusum[first - lo : last - lo + 1])
    return (first + int(np.argmax(search))) / n


def refine_records(
    panel: TimeSeriesPanel,
    records: Sequence[JumpRecord],
    z_n: float,
    alpha_tilde: float = DEFAULT_ALPHA_TILDE,
    n_jobs: int = 1,
) -> List[JumpRecord]:
    """Fills ``refined_time`` and ``refined_time_index`` of every record."""

    def refine(record: JumpRecord) -> JumpRecord:
        window = CusumWindow(center=record.time, z_n=z_n, alpha_tilde=alpha_tilde)
        d = refine_jump(panel, record.dimension, record.time, window)
        index = int(round(d * panel.n))
        return record._replace(refined_time_index=index, refined_time=index / panel.n)

    return list(
        Parallel(n_jobs=n_jobs, backend="threading")(
            delayed(refine)(record) for record in records
        )
    )
