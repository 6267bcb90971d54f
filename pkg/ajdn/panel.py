import csv
import io
import math
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from ajdn.errors import IngestionError

RETRY_STATUS_CODES = frozenset({408, 429, 500, 502, 503, 504})
DEFAULT_REQUEST_TIMEOUT = 60


class TimeSeriesPanel:
    """
    An immutable n×p panel of observations, rows are time and columns are dimensions.

    Parameters:
        values (array-like, required):
            Two dimensional array of shape (n, p). A one dimensional array is read as a single dimension.
            The data is copied and the copy is marked read-only.

        names (sequence of str, optional, default None):
            Column names, e.g. taken from a CSV header row. Defaults to "y0", "y1", ...

    Examples:
        >>> panel = TimeSeriesPanel.from_array(np.zeros((100, 3)))
        >>> panel.n, panel.p
        (100, 3)
        >>> panel = TimeSeriesPanel.from_csv("panel.csv")
    """

    def __init__(self, values: np.ndarray, names: Optional[Sequence[str]] = None):
        array = np.array(values, dtype=float)
        if array.ndim == 1:
            array = array[:, None]
        if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
            raise ValueError(f"Panel must be a non-empty n×p array, got {array.shape}")
        if not np.all(np.isfinite(array)):
            row, col = np.argwhere(~np.isfinite(array))[0]
            raise ValueError(f"Panel contains a non-finite value at ({row}, {col})")
        array.setflags(write=False)
        self.values = array
        if names is None:
            names = [f"y{r}" for r in range(array.shape[1])]
        if len(names) != array.shape[1]:
            raise ValueError(
                f"Got {len(names)} names for a panel with {array.shape[1]} dimensions"
            )
        self.names: Sequence[str] = list(names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, r: int) -> np.ndarray:
        if not 0 <= r < self.p:
            raise ValueError(f"Dimension {r} out of range for p={self.p}")
        return self.values[:, r]

    def with_values(self, values: np.ndarray) -> "TimeSeriesPanel":
        return TimeSeriesPanel(values, self.names)

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(self.names)
            for row in self.values:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_array(
        cls, values: np.ndarray, names: Optional[Sequence[str]] = None
    ) -> "TimeSeriesPanel":
        return cls(values, names)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TimeSeriesPanel":
        with open(path, newline="") as f:
            return cls.from_text(f.read())

    @classmethod
    def from_url(cls, url: str) -> "TimeSeriesPanel":
        """
        Downloads a CSV file and parses it like :func:`ingest_csv`.
        Failed requests are retried a few times before the HTTP error is raised.
        """
        return cls.from_text(cls._get_url(url))

    @classmethod
    def from_text(cls, text: str) -> "TimeSeriesPanel":
        rows = [row for row in csv.reader(io.StringIO(text))]
        # trailing blank lines are common and carry no data
        while rows and not any(cell.strip() for cell in rows[-1]):
            rows.pop()
        if not rows:
            raise IngestionError("Empty input, no rows found")

        names: Optional[List[str]] = None
        first_data_row = 0
        # a header row holds no numeric cell at all
        if not any(_is_number(cell) for cell in rows[0]):
            names = [cell.strip() for cell in rows[0]]
            first_data_row = 1
        if first_data_row == len(rows):
            raise IngestionError("Input has a header but no data rows", row=1)

        width = len(rows[first_data_row])
        if names is not None and len(names) != width:
            raise IngestionError(
                f"Header has {len(names)} columns but data has {width}", row=1
            )
        values = np.empty((len(rows) - first_data_row, width))
        for i, row in enumerate(rows[first_data_row:]):
            line = i + first_data_row + 1
            if len(row) != width:
                raise IngestionError(
                    f"Ragged row with {len(row)} columns, expected {width}", row=line
                )
            for j, cell in enumerate(row):
                try:
                    value = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"Non-numeric cell {cell!r}", row=line, column=j + 1
                    ) from None
                if not math.isfinite(value):
                    raise IngestionError(
                        f"Non-finite cell {cell!r}", row=line, column=j + 1
                    )
                values[i, j] = value
        return cls(values, names)

    @staticmethod
    def _get_url(url: str) -> str:
        retry_strategy = Retry(
            total=3,
            backoff_factor=0.25,
            status_forcelist=RETRY_STATUS_CODES,
            allowed_methods=["GET"],
            raise_on_status=False,
        )
        adapter = HTTPAdapter(max_retries=retry_strategy)
        with requests.Session() as session:
            session.mount("https://", adapter)
            session.mount("http://", adapter)
            response = session.get(url, timeout=DEFAULT_REQUEST_TIMEOUT)
            response.raise_for_status()
            return response.text


def ingest_csv(path: Union[str, Path]) -> TimeSeriesPanel:
    """
    Reads a rectangular numeric CSV file into a panel. Rows are time points, columns are
    dimensions. A first row that is not entirely numeric is taken as a header of names.

    Raises an IngestionError naming the row and column of ragged rows, non-numeric cells,
    NaN or infinite values, and for empty files. Paths starting with http:// or https://
    are downloaded.
    """
    if str(path).startswith(("http://", "https://")):
        return TimeSeriesPanel.from_url(str(path))
    return TimeSeriesPanel.from_csv(path)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
