import math
from typing import List, Tuple

import numpy as np

from ajdn.scales import ScaleGrid


def admissible_range(n: int, s_max: float) -> Tuple[int, int]:
    """Inclusive 1-based index range of the times i/n in (s_max, 1 - s_max]."""
    outer = round(n * s_max, 9)
    return int(math.floor(outer)) + 1, n - int(math.ceil(outer))


class AdmissibleMask:
    """
    Per-dimension sets of grid times still open for detection.

    ``allowed[r, i - 1]`` is True when time i/n is admissible in dimension r. Masks are
    immutable; :meth:`exclude` returns a narrower copy.

    Parameters:
        allowed (array of bool, required):
            Shape (p, n).

    Examples:
        >>> mask = AdmissibleMask.initial(grid, n=1000)
        >>> mask = mask.exclude(r=0, index=500, half_width=0.1)
    """

    def __init__(self, allowed: np.ndarray):
        allowed = np.array(allowed, dtype=bool)
        allowed.setflags(write=False)
        self.allowed = allowed

    @classmethod
    def initial(cls, grid: ScaleGrid, n: int) -> "AdmissibleMask":
        allowed = np.zeros((grid.p, n), dtype=bool)
        for r in range(grid.p):
            first, last = admissible_range(n, grid.s_max[r])
            allowed[r, max(first, 1) - 1 : last] = True
        return cls(allowed)

    @property
    def p(self) -> int:
        return self.allowed.shape[0]

    @property
    def n(self) -> int:
        return self.allowed.shape[1]

    @property
    def is_empty(self) -> bool:
        return not bool(self.allowed.any())

    def times(self, r: int) -> np.ndarray:
        """Admissible 1-based indices of dimension ``r``."""
        return np.flatnonzero(self.allowed[r]) + 1

    def size(self) -> int:
        return int(self.allowed.sum())

    def exclude(self, r: int, index: int, half_width: float) -> "AdmissibleMask":
        """
        Removes the times i/n with |i/n - index/n| <= half_width from dimension ``r`` only.
        """
        k = int(math.floor(round(self.n * half_width, 9)))
        allowed = self.allowed.copy()
        allowed[r, max(index - k, 1) - 1 : min(index + k, self.n)] = False
        return AdmissibleMask(allowed)

    def is_subset_of(self, other: "AdmissibleMask") -> bool:
        return self.allowed.shape == other.allowed.shape and not bool(
            np.any(self.allowed & ~other.allowed)
        )

    def changed_dimensions(self, other: "AdmissibleMask") -> List[int]:
        return [
            int(r) for r in np.flatnonzero(np.any(self.allowed != other.allowed, axis=1))
        ]

    def permuted(self, order) -> "AdmissibleMask":
        return AdmissibleMask(self.allowed[np.asarray(order)])
