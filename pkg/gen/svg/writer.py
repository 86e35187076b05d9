from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from lxml import etree

from app.config import DEFAULT_LAYOUT, PlotLayout
from gen.csv.writer import read_csv
from meta import DEFAULT_SVG_META, SvgMetaModel
from utils.ids import stable_id
from utils.xml import coord, tick_label

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PlotSpec:
    """'x:y1,y2' selects the x column and one or more y columns."""
    x: str
    ys: Tuple[str, ...]

    @classmethod
    def parse(cls, text: str) -> "PlotSpec":
        if ":" not in text:
            raise ValueError(f"plot spec must look like 'x:y1,y2', got {text!r}")
        x, ys = text.split(":", 1)
        names = tuple(y.strip() for y in ys.split(",") if y.strip())
        if not x.strip() or not names:
            raise ValueError(f"plot spec needs an x column and at least one y column, got {text!r}")
        return cls(x.strip(), names)

    def __str__(self) -> str:
        return f"{self.x}:{','.join(self.ys)}"


@dataclass
class Series:
    name: str
    xs: List[float]
    ys: List[float]


def _to_float(cell: str, column: str, row: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValueError(f"non-numeric cell {cell!r} in column {column!r}, row {row}") from None


def load_series(csv_path: PathLike, spec: PlotSpec) -> List[Series]:
    header, rows = read_csv(csv_path)
    missing = [c for c in (spec.x, *spec.ys) if c not in header]
    if missing:
        raise ValueError(f"{csv_path}: missing column(s) {', '.join(missing)}; have {', '.join(header)}")
    for k, r in enumerate(rows):
        if len(r) != len(header):
            raise ValueError(f"{csv_path}: row {k + 2} has {len(r)} cells, header has {len(header)}")
    xi = header.index(spec.x)
    out = []
    for name in spec.ys:
        yi = header.index(name)
        xs = [_to_float(r[xi], spec.x, k + 2) for k, r in enumerate(rows)]
        ys = [_to_float(r[yi], name, k + 2) for k, r in enumerate(rows)]
        out.append(Series(name, xs, ys))
    return out


def _extent(values: Sequence[float]) -> Tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        pad = 0.5 * abs(lo) if lo != 0 else 0.5
        return lo - pad, hi + pad
    return lo, hi


class SvgPlotWriter:
    def __init__(self, series: List[Series], title: str, x_label: str,
                 layout: Optional[PlotLayout] = None, meta: Optional[SvgMetaModel] = None) -> None:
        self.series = series
        self.title = title
        self.x_label = x_label
        self.layout: PlotLayout = layout or DEFAULT_LAYOUT
        self.meta: SvgMetaModel = meta or DEFAULT_SVG_META
        self.x_range = _extent([x for s in series for x in s.xs])
        self.y_range = _extent([y for s in series for y in s.ys])

    def _sx(self, x: float) -> float:
        lo, hi = self.x_range
        return self.layout.margin_left + (x - lo) / (hi - lo) * self.layout.plot_width

    def _sy(self, y: float) -> float:
        lo, hi = self.y_range
        return self.layout.margin_top + (hi - y) / (hi - lo) * self.layout.plot_height

    def _sub(self, parent: etree._Element, name: str, attrs: Dict[str, str], text: Optional[str] = None):
        el = etree.SubElement(parent, self.meta.tag(name), attrib=attrs)
        if text is not None:
            el.text = text
        return el

    def _axes(self, root: etree._Element) -> None:
        lay = self.layout
        axes = self._sub(root, "g", {"id": stable_id("axes"), "stroke": "#000000", "fill": "none"})
        self._sub(axes, "rect", {
            "x": str(lay.margin_left), "y": str(lay.margin_top),
            "width": str(lay.plot_width), "height": str(lay.plot_height),
        })
        labels = self._sub(root, "g", {"id": stable_id("ticks"), "font-family": "sans-serif",
                                       "font-size": str(lay.font_size), "fill": "#000000"})
        bottom = lay.margin_top + lay.plot_height
        for k in range(lay.ticks):
            frac = k / (lay.ticks - 1)
            xv = self.x_range[0] + frac * (self.x_range[1] - self.x_range[0])
            yv = self.y_range[0] + frac * (self.y_range[1] - self.y_range[0])
            px, py = coord(self._sx(xv)), coord(self._sy(yv))
            self._sub(axes, "line", {"x1": px, "y1": str(bottom), "x2": px, "y2": str(bottom + 5)})
            self._sub(axes, "line", {"x1": str(lay.margin_left - 5), "y1": py, "x2": str(lay.margin_left), "y2": py})
            self._sub(labels, "text", {"x": px, "y": str(bottom + 20), "text-anchor": "middle"}, tick_label(xv))
            self._sub(labels, "text", {"x": str(lay.margin_left - 8), "y": py, "text-anchor": "end"}, tick_label(yv))
        self._sub(labels, "text", {"x": coord(lay.margin_left + 0.5 * lay.plot_width),
                                   "y": str(lay.height - 15), "text-anchor": "middle"}, self.x_label)
        self._sub(labels, "text", {"x": coord(0.5 * lay.width), "y": str(lay.margin_top - 20),
                                   "text-anchor": "middle"}, self.title)

    def _polylines(self, root: etree._Element) -> None:
        lay = self.layout
        for idx, s in enumerate(self.series):
            group = self._sub(root, "g", {
                "id": stable_id(f"series:{idx}:{s.name}"),
                "stroke": lay.color(idx), "fill": "none", "stroke-width": str(lay.stroke_width),
            })
            runs: List[List[str]] = [[]]
            for x, y in zip(s.xs, s.ys):
                if math.isfinite(x) and math.isfinite(y):
                    runs[-1].append(f"{coord(self._sx(x))},{coord(self._sy(y))}")
                elif runs[-1]:
                    runs.append([])
            for run in runs:
                if run:
                    self._sub(group, "polyline", {"points": " ".join(run)})
            ly = lay.margin_top + 15 + 16 * idx
            self._sub(root, "text", {
                "x": str(lay.width - lay.margin_right - 5), "y": str(ly), "text-anchor": "end",
                "font-family": "sans-serif", "font-size": str(lay.font_size), "fill": lay.color(idx),
            }, s.name)

    def to_bytes(self) -> bytes:
        lay = self.layout
        root = etree.Element(self.meta.tag("svg"), nsmap=self.meta.nsmap, attrib={
            "version": self.meta.version,
            "width": str(lay.width),
            "height": str(lay.height),
            "viewBox": f"0 0 {lay.width} {lay.height}",
        })
        self._axes(root)
        self._polylines(root)
        return etree.tostring(root, pretty_print=True, xml_declaration=True, encoding="UTF-8")

    def write(self, out_path: PathLike) -> None:
        with open(out_path, "wb") as fh:
            fh.write(self.to_bytes())


def emit_plot(csv_path: PathLike, spec: Union[str, PlotSpec], out_path: PathLike,
              layout: Optional[PlotLayout] = None) -> Path:
    """Render the selected CSV columns as a fixed-size SVG line plot."""
    if isinstance(spec, str):
        spec = PlotSpec.parse(spec)
    series = load_series(csv_path, spec)
    writer = SvgPlotWriter(series, title=str(spec), x_label=spec.x, layout=layout)
    writer.write(out_path)
    logger.info(f"Plot written to {out_path}")
    return Path(out_path)


__all__ = ["PlotSpec", "Series", "load_series", "SvgPlotWriter", "emit_plot"]
