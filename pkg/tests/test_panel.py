from http import HTTPStatus

import numpy as np
import pytest
from pytest import raises
from pytest_httpserver import HTTPServer
from requests import RequestException

from ajdn.errors import IngestionError
from ajdn.panel import TimeSeriesPanel, ingest_csv


def test_reads_a_plain_csv(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text("1,2\n3,4\n5,6\n")

    panel = ingest_csv(path)

    assert (panel.n, panel.p) == (3, 2)
    assert panel.column(1).tolist() == [2.0, 4.0, 6.0]
    assert panel.names == ["y0", "y1"]


def test_header_row_names_the_dimensions():
    panel = TimeSeriesPanel.from_text("temperature,pressure\n1.5,2\n-3,4e2\n\n")

    assert panel.names == ["temperature", "pressure"]
    assert panel.values.tolist() == [[1.5, 2.0], [-3.0, 400.0]]


def test_csv_written_by_the_panel_reads_back(tmp_path):
    panel = TimeSeriesPanel(np.random.default_rng(0).standard_normal((20, 3)))
    path = tmp_path / "out.csv"

    panel.to_csv(path)

    assert np.array_equal(ingest_csv(path).values, panel.values)


@pytest.mark.parametrize(
    "text, row, column",
    [
        ("1,2\n3,nan\n", 2, 2),
        ("1,2\ninf,4\n", 2, 1),
        ("a,b\n1,2\n3,x\n", 3, 2),
        ("1,2\n3,4,5\n", 2, None),
        ("a,b,c\n1,2\n", 1, None),
        ("1,abc\n2,3\n", 1, 2),
        ("time,2\n3,4\n", 1, 1),
    ],
)
def test_bad_cells_are_located(text, row, column):
    with raises(IngestionError) as e:
        TimeSeriesPanel.from_text(text)

    assert e.value.row == row
    assert e.value.column == column
    assert f"row {row}" in str(e.value)


@pytest.mark.parametrize("text", ["", "\n\n", "a,b\n"])
def test_empty_input_is_rejected(text):
    with raises(IngestionError):
        TimeSeriesPanel.from_text(text)


def test_missing_file(tmp_path):
    with raises(OSError):
        ingest_csv(tmp_path / "nope.csv")


def test_panel_is_immutable():
    source = np.zeros((10, 2))
    panel = TimeSeriesPanel(source)
    source[0, 0] = 1.0

    assert panel.values[0, 0] == 0.0
    with raises(ValueError):
        panel.values[0, 0] = 1.0


def test_one_dimensional_input_is_a_single_dimension():
    assert TimeSeriesPanel(np.arange(5.0)).p == 1


def test_constructor_rejects_non_finite_values():
    with raises(ValueError):
        TimeSeriesPanel(np.array([[1.0, np.nan]]))
    with raises(ValueError):
        TimeSeriesPanel(np.zeros((3, 2)), names=["only-one"])


def test_column_out_of_range():
    with raises(ValueError):
        TimeSeriesPanel(np.zeros((3, 2))).column(2)


def test_from_url(httpserver: HTTPServer):
    httpserver.expect_request("/panel.csv").respond_with_data("x\n1\n2\n3\n")

    panel = ingest_csv(httpserver.url_for("/panel.csv"))

    assert panel.names == ["x"]
    assert panel.column(0).tolist() == [1.0, 2.0, 3.0]


def test_from_url_with_non_OK_response(httpserver: HTTPServer):
    path = "/panel.csv"
    httpserver.expect_request(path).respond_with_data(
        "html", status=HTTPStatus.FORBIDDEN
    )

    with raises(RequestException) as e:
        TimeSeriesPanel.from_url(httpserver.url_for(path))

    assert e.value.response.status_code == HTTPStatus.FORBIDDEN


def test_from_url_retries_busy_servers(httpserver: HTTPServer):
    httpserver.expect_ordered_request("/panel.csv").respond_with_data(
        "busy", status=HTTPStatus.SERVICE_UNAVAILABLE
    )
    httpserver.expect_ordered_request("/panel.csv").respond_with_data("1,2\n3,4\n")

    panel = TimeSeriesPanel.from_url(httpserver.url_for("/panel.csv"))

    assert panel.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]
