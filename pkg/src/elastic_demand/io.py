"""Flat-file formats for panels, plans and bounds.

Panel CSV::

    series,<slot_1>,...,<slot_T>
    <label>,<value>,...,<value>

Panel JSON: ``{"slots": [...], "series": [{"label": ..., "values": [...]}]}``.
Floats are written with ``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .panel import DemandPanel, ForecastVector, ShiftBounds, ShiftPlan, edge_endpoints

__all__ = [
    "PanelFormatError",
    "parse_panel_csv",
    "panel_to_csv",
    "panel_from_json",
    "panel_to_json",
    "read_panel",
    "write_panel",
    "plan_to_csv",
    "read_bounds",
    "read_forecast",
]


class PanelFormatError(ValueError):
    """Malformed input file. ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


def _fmt(v: float) -> str:
    return repr(float(v))


def parse_panel_csv(text: str) -> DemandPanel:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not rows:
        raise PanelFormatError("empty panel file")
    header_line, header = rows[0]
    if header[0].strip().lower() != "series":
        raise PanelFormatError("header must start with 'series'", header_line, 1)
    slots = [h.strip() for h in header[1:]]
    if len(slots) < 2:
        raise PanelFormatError("need at least two slot columns", header_line)
    labels, values = [], []
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise PanelFormatError(f"expected {len(header)} fields, got {len(row)}", line)
        labels.append(row[0].strip())
        vals = []
        for col, cell in enumerate(row[1:], start=2):
            try:
                v = float(cell)
            except ValueError:
                raise PanelFormatError(f"not a number: {cell!r}", line, col) from None
            if not np.isfinite(v) or v < 0:
                raise PanelFormatError(f"demand must be finite and >= 0: {cell!r}", line, col)
            vals.append(v)
        values.append(vals)
    if not values:
        raise PanelFormatError("panel has no series rows", header_line)
    return DemandPanel(np.array(values), tuple(labels), tuple(slots))


def panel_to_csv(panel: DemandPanel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", *panel.slot_labels])
    for label, row in zip(panel.series_labels, panel.values):
        w.writerow([label, *(_fmt(v) for v in row)])
    return buf.getvalue()


def panel_from_json(doc: dict) -> DemandPanel:
    try:
        series = doc["series"]
        values = [[float(v) for v in s["values"]] for s in series]
        labels = tuple(str(s.get("label", i + 1)) for i, s in enumerate(series))
        slots = tuple(str(s) for s in doc.get("slots", ()))
    except (KeyError, TypeError, ValueError) as exc:
        raise PanelFormatError(f"bad panel JSON: {exc}") from None
    return DemandPanel(np.array(values), labels, slots)


def panel_to_json(panel: DemandPanel) -> dict:
    return {
        "slots": list(panel.slot_labels),
        "series": [
            {"label": label, "values": [float(v) for v in row]}
            for label, row in zip(panel.series_labels, panel.values)
        ],
    }


def read_panel(path: str | Path) -> DemandPanel:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PanelFormatError(exc.msg, exc.lineno, exc.colno) from None
        return panel_from_json(doc)
    return parse_panel_csv(text)


def write_panel(panel: DemandPanel, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(panel_to_json(panel), indent=2) + "\n", encoding="utf-8")
    else:
        path.write_text(panel_to_csv(panel), encoding="utf-8")


def plan_to_csv(plan: ShiftPlan, panel: DemandPanel) -> str:
    """One column per edge, named ``<from>-><to>``."""
    T = panel.n_slots
    cyclic = plan.shape[1] == T
    src, dst = edge_endpoints(T, cyclic)
    names = [f"{panel.slot_labels[s]}->{panel.slot_labels[d]}" for s, d in zip(src, dst)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", *names])
    for label, row in zip(panel.series_labels, plan.x):
        w.writerow([label, *(_fmt(v) for v in row)])
    return buf.getvalue()


def read_bounds(path: str | Path) -> ShiftBounds:
    """JSON ``{"lower": [[...], ...], "upper": [[...], ...]}``, one row per series."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return ShiftBounds(np.array(doc["lower"], dtype=float), np.array(doc["upper"], dtype=float))
    except json.JSONDecodeError as exc:
        raise PanelFormatError(exc.msg, exc.lineno, exc.colno) from None
    except (KeyError, TypeError) as exc:
        raise PanelFormatError(f"bad bounds file: {exc}") from None


def read_forecast(path: str | Path) -> ForecastVector:
    """A JSON list, ``{"values": [...]}``, or a CSV with a header row and one value row."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PanelFormatError(exc.msg, exc.lineno, exc.colno) from None
        values = doc["values"] if isinstance(doc, dict) else doc
        return ForecastVector(np.array(values, dtype=float))
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise PanelFormatError("forecast CSV needs a header row and a value row")
    vals = []
    for col, cell in enumerate(rows[1], start=1):
        try:
            vals.append(float(cell))
        except ValueError:
            raise PanelFormatError(f"not a number: {cell!r}", 2, col) from None
    return ForecastVector(np.array(vals))
