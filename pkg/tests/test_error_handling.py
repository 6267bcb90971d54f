from http import HTTPStatus
import time

import pytest
import requests
from pytest_httpserver import HTTPServer

from ajdn.errors import (
    EXIT_DATA,
    EXIT_NUMERIC,
    EXIT_USAGE,
    ConfigurationError,
    DegenerateDataError,
    IngestionError,
    exit_code_for,
)
from ajdn.output import read_jumps, read_truth
from ajdn.panel import RETRY_STATUS_CODES, TimeSeriesPanel


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigurationError("bad alpha"), EXIT_USAGE),
        (ValueError("bad argument"), EXIT_USAGE),
        (IngestionError("ragged", row=3), EXIT_DATA),
        (FileNotFoundError("panel.csv"), EXIT_DATA),
        (requests.HTTPError("403"), EXIT_DATA),
        (DegenerateDataError("zero variance"), EXIT_NUMERIC),
        (FloatingPointError("overflow"), EXIT_NUMERIC),
    ],
)
def test_translate_errors(error, code):
    assert exit_code_for(error) == code


def test_unknown_errors_are_reraised():
    with pytest.raises(KeyError):
        exit_code_for(KeyError("surprise"))


def test_degenerate_data_wins_over_its_builtin_base():
    assert isinstance(DegenerateDataError("x"), ArithmeticError)
    assert isinstance(ConfigurationError("x"), ValueError)


def test_ingestion_error_names_its_location():
    error = IngestionError("Non-numeric cell 'x'", row=4, column=2)

    assert str(error) == "Non-numeric cell 'x' (row 4, column 2)"
    assert str(IngestionError("Empty input")) == "Empty input"


@pytest.mark.parametrize("reader", [read_jumps, read_truth])
def test_malformed_json_is_an_ingestion_error(tmp_path, reader):
    path = tmp_path / "broken.json"
    path.write_text('["not", "an", "object"]')

    with pytest.raises(IngestionError, match="broken.json") as e:
        reader(path)

    assert exit_code_for(e.value) == EXIT_DATA


def test_retry_download(httpserver: HTTPServer):
    for status in sorted(RETRY_STATUS_CODES)[:2]:
        httpserver.expect_ordered_request("/panel.csv").respond_with_data(
            "error", status=status
        )
    httpserver.expect_ordered_request("/panel.csv").respond_with_data("1\n2\n")

    assert TimeSeriesPanel.from_url(httpserver.url_for("/panel.csv")).n == 2


def test_exhaust_retries(httpserver: HTTPServer):
    for _ in range(4):
        httpserver.expect_ordered_request("/panel.csv").respond_with_data(
            "busy", status=HTTPStatus.SERVICE_UNAVAILABLE
        )

    with pytest.raises(requests.HTTPError) as e:
        TimeSeriesPanel.from_url(httpserver.url_for("/panel.csv"))

    assert exit_code_for(e.value) == EXIT_DATA


# Keep last in this file, the sleeping handler blocks the server.
def test_timeout(httpserver: HTTPServer, monkeypatch):
    def handler(request):
        time.sleep(1)

    monkeypatch.setattr("ajdn.panel.DEFAULT_REQUEST_TIMEOUT", 0.1)
    httpserver.expect_request("/panel.csv").respond_with_handler(handler)

    with pytest.raises(requests.exceptions.ConnectionError):
        TimeSeriesPanel.from_url(httpserver.url_for("/panel.csv"))
