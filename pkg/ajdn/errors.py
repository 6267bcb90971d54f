from typing import Optional

import requests


class AjdnError(Exception):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)


class ConfigurationError(AjdnError, ValueError):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)


class DegenerateDataError(AjdnError, ArithmeticError):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)


class IngestionError(AjdnError):
    """
    Raised when an input panel cannot be read.

    Parameters:
        message (str, required):
            What went wrong.

        row (int, optional, default None):
            1-based line in the source file where the problem was found.

        column (int, optional, default None):
            1-based column in the source file where the problem was found.
    """

    def __init__(
        self, message: str, row: Optional[int] = None, column: Optional[int] = None
    ):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


def exit_code_for(exc: BaseException) -> int:
    """Translates an exception raised by a command into the process exit code."""
    # Order matters: the package errors also derive from builtin error types.
    if isinstance(exc, DegenerateDataError):
        return EXIT_NUMERIC
    elif isinstance(exc, ConfigurationError):
        return EXIT_USAGE
    elif isinstance(exc, IngestionError):
        return EXIT_DATA
    elif isinstance(exc, FloatingPointError):
        return EXIT_NUMERIC
    elif isinstance(exc, ValueError):
        return EXIT_USAGE
    elif isinstance(exc, (OSError, requests.RequestException)):
        return EXIT_DATA
    else:
        raise exc
