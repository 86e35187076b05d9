#!/usr/bin/env python3
import math

import numpy as np
import pytest
from lxml import etree

from app.config import PlotLayout
from gen.csv.writer import format_cell, read_csv, write_csv
from gen.svg.writer import PlotSpec, emit_plot, load_series
from utils.xml import coord, tick_label


class TestFormatCell:
    @pytest.mark.parametrize("value, text", [
        (None, ""),
        (True, "true"),
        (np.bool_(False), "false"),
        (3, "3"),
        (np.int64(-7), "-7"),
        (0.1, "0.10000000000000001"),
        (np.float64(2.5), "2.5"),
        (float("nan"), "nan"),
        (-math.inf, "-inf"),
        ("speed", "speed"),
    ])
    def test_cells(self, value, text):
        assert format_cell(value) == text

    def test_floats_round_trip(self):
        for x in (1 / 3, 1e-300, 123456789.123456789, -2.0 ** -40):
            assert float(format_cell(x)) == x


class TestCsv:
    def test_lf_endings_and_rows(self, tmp_path):
        path = tmp_path / "t.csv"
        assert write_csv(path, ["t", "ok"], [[0.0, True], [0.5, False]]) == 2
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw == b"t,ok\n0,true\n0.5,false\n"
        header, rows = read_csv(path)
        assert header == ["t", "ok"]
        assert rows == [["0", "true"], ["0.5", "false"]]

    def test_row_length_mismatch(self, tmp_path):
        with pytest.raises(ValueError, match="2 cells"):
            write_csv(tmp_path / "bad.csv", ["a", "b", "c"], [[1, 2]])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty CSV"):
            read_csv(path)


class TestPlotSpec:
    def test_parse(self):
        spec = PlotSpec.parse("t: H , K")
        assert spec.x == "t"
        assert spec.ys == ("H", "K")
        assert str(spec) == "t:H,K"

    @pytest.mark.parametrize("text", ["t", ":H", "t:", "t: ,"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            PlotSpec.parse(text)


class TestSvg:
    @pytest.fixture
    def table(self, tmp_path):
        path = tmp_path / "series.csv"
        rows = [[k * 0.1, k * k * 0.01, math.sin(k), "x" if k == 99 else k] for k in range(11)]
        write_csv(path, ["t", "a", "b", "label"], rows)
        return path

    def test_document_shape(self, table, tmp_path):
        out = emit_plot(table, "t:a,b", tmp_path / "plot.svg")
        root = etree.parse(str(out)).getroot()
        assert root.get("width") == "800"
        assert root.get("height") == "600"
        assert root.get("viewBox") == "0 0 800 600"
        ns = {"svg": "http://www.w3.org/2000/svg"}
        assert len(root.findall(".//svg:polyline", ns)) == 2
        texts = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
        assert "t:a,b" in texts and "a" in texts and "b" in texts

    def test_bytes_are_deterministic(self, table, tmp_path):
        first = emit_plot(table, "t:a,b", tmp_path / "one.svg").read_bytes()
        second = emit_plot(table, PlotSpec("t", ("a", "b")), tmp_path / "two.svg").read_bytes()
        assert first == second

    def test_custom_layout(self, table, tmp_path):
        out = emit_plot(table, "t:a", tmp_path / "small.svg", layout=PlotLayout(width=400, height=300))
        root = etree.parse(str(out)).getroot()
        assert root.get("viewBox") == "0 0 400 300"

    def test_missing_column(self, table):
        with pytest.raises(ValueError, match="missing column"):
            load_series(table, PlotSpec.parse("t:c"))

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "words.csv"
        write_csv(path, ["t", "kind"], [[0.0, "speed"]])
        with pytest.raises(ValueError, match="non-numeric"):
            load_series(path, PlotSpec.parse("t:kind"))

    def test_short_row(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_bytes(b"x,y\n1,2\n3\n")
        with pytest.raises(ValueError, match="row 3 has 1 cells"):
            load_series(path, PlotSpec.parse("x:y"))

    def test_non_finite_values_split_the_line(self, tmp_path):
        path = tmp_path / "gap.csv"
        write_csv(path, ["t", "y"], [[0, 1.0], [1, 2.0], [2, float("nan")], [3, 1.0], [4, 0.5]])
        out = emit_plot(path, "t:y", tmp_path / "gap.svg")
        root = etree.parse(str(out)).getroot()
        assert len(root.findall(".//{http://www.w3.org/2000/svg}polyline")) == 2


@pytest.mark.parametrize("x, label", [(0.0, "0"), (-0.0, "0"), (-1e-9, "-1e-09"), (12346.0, "1.235e+04"),
                                      (0.125, "0.125"), (2.0 / 3.0, "0.6667")])
def test_tick_label(x, label):
    assert tick_label(x) == label


@pytest.mark.parametrize("x, text", [(-0.001, "0.00"), (-0.0, "0.00"), (79.996, "80.00"), (-3.14159, "-3.14")])
def test_coord(x, text):
    assert coord(x) == text
