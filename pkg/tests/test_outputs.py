"""Unit tests for output writers and SVG plots"""
import json
import math

import numpy as np
import pytest

from config.settings import VERSION
from persistence.outputs import (
    format_value,
    read_csv,
    to_jsonable,
    write_csv,
    write_json,
    write_resolved_config,
    write_rows,
)
from ui.svg_plot import LinePlot, plot_columns


@pytest.mark.unit
class TestFormatValue:
    """Test CSV cell formatting"""

    def test_full_precision(self):
        """Test floats keep 17 significant digits"""
        assert format_value(0.1) == "0.10000000000000001"
        assert float(format_value(math.pi)) == math.pi

    def test_missing(self):
        """Test None and NaN are empty cells"""
        assert format_value(None) == ""
        assert format_value(float("nan")) == ""

    def test_bool_and_int(self):
        """Test booleans and numpy integers"""
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(np.int64(7)) == "7"

    def test_jsonable(self):
        """Test numpy values become plain JSON types"""
        data = to_jsonable({"a": np.array([1.0, np.inf]), 2: (np.int32(3), np.bool_(True))})
        assert data == {"a": [1.0, None], "2": [3, True]}


@pytest.mark.unit
class TestWriters:
    """Test deterministic files"""

    def test_csv_rerun_identical(self, tmp_path):
        """Test writing the same rows twice gives identical bytes"""
        rows = [{"iter": 0, "u": 1.0 / 3.0, "eps": None}, {"iter": 1, "u": 2.0, "eps": 1e-9}]
        a = write_csv(tmp_path / "a.csv", rows).read_bytes()
        b = write_csv(tmp_path / "b.csv", rows).read_bytes()
        assert a == b
        assert a.decode().splitlines()[0] == "iter,u,eps"

    def test_csv_list_rows(self, tmp_path):
        """Test list rows with an explicit header"""
        path = write_csv(tmp_path / "t.csv", [[0, 1.5], [1, 2.5]], fieldnames=["iter", "u"])
        assert read_csv(path) == [{"iter": "0", "u": "1.5"}, {"iter": "1", "u": "2.5"}]

    def test_json_sorted(self, tmp_path):
        """Test keys are sorted and the file ends in a newline"""
        text = write_json(tmp_path / "x.json", {"b": 1, "a": 2.5}).read_text()
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_rows_format(self, tmp_path):
        """Test csv and json variants of the same rows"""
        rows = [{"k": 1}]
        assert write_rows(tmp_path, "r", rows).name == "r.csv"
        path = write_rows(tmp_path, "r", rows, "json")
        assert json.loads(path.read_text()) == rows

    def test_resolved_config(self, tmp_path):
        """Test config.json carries the version"""
        path = write_resolved_config(tmp_path / "out", {"command": "oracle"})
        assert json.loads(path.read_text()) == {"command": "oracle", "version": VERSION}


@pytest.mark.unit
class TestLinePlot:
    """Test the SVG chart"""

    def test_polyline_per_series(self):
        """Test one polyline per non-empty series"""
        svg = LinePlot("t", "x", "y").add("a", [0, 1, 2], [1, 2, 3]).add("b", [0, 1], [3, 1]).to_svg()
        assert svg.startswith("<svg")
        assert svg.count("<polyline") == 2

    def test_log_axis_drops_nonpositive(self):
        """Test zero and NaN values are skipped on a log axis"""
        chart = LinePlot("t", "x", "y", log_y=True).add("a", [0, 1, 2, 3], [1e-3, 0.0, np.nan, 1e-6])
        x, y = chart._points(chart.series[0])
        np.testing.assert_array_equal(x, [0.0, 3.0])
        np.testing.assert_allclose(y, [-3.0, -6.0])

    def test_empty_plot(self):
        """Test a chart with no data still renders"""
        assert "</svg>" in LinePlot("t", "x", "y").to_svg()

    def test_plot_columns(self, tmp_path):
        """Test row dicts become series and save to disk"""
        rows = [{"g": -80.0, "p": 0.2, "q": ""}, {"g": -40.0, "p": 0.05, "q": 1.0}]
        chart = plot_columns(rows, "g", ["p", "q"], "sweep")
        assert [s.label for s in chart.series] == ["p", "q"]
        path = chart.save(tmp_path / "plots" / "sweep.svg")
        assert path.read_text().count("<polyline") == 2
