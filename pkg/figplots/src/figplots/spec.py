"""Plot specifications: what to draw, from which CSV files, to which image.

A spec is a JSON file.  Two kinds exist:

``timeseries``
    Overlays the log-negativity column of one or more trajectory CSVs,
    with an optional second panel showing the per-resonator populations of
    selected curves, optional vertical gridlines at multiples of a period,
    and a configurable time-axis scale (e.g. showing omega_1 * t).

``sweep``
    A line-with-markers summary of late-time log-negativity versus the
    swept axis value, read from a sweep summary CSV.

Relative CSV and output paths resolve against the current working
directory, so bundled specs line up with the simulator's default output
layout (``runs/<scenario>/...``).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

TIMESERIES_COLUMNS = ("t", "EN", "n1", "n2", "na", "trace_err", "min_eig")
SWEEP_COLUMNS = ("axis", "value", "peak_EN", "late_EN", "dominance_margin")

SPEC_KINDS = ("timeseries", "sweep")

_TOP_KEYS = {
    "kind",
    "title",
    "x_label",
    "time_scale",
    "gridline_period",
    "curves",
    "population_panel",
    "csv",
    "output",
}
_CURVE_KEYS = {"csv", "label"}


class SpecError(Exception):
    """A plot spec or one of its input files is missing or malformed."""


@dataclass(frozen=True)
class CurveRef:
    """One CSV input and the legend label its curve carries."""

    csv: Path
    label: str


@dataclass(frozen=True)
class PlotSpec:
    """A fully validated description of one figure."""

    kind: str
    output: Path
    title: str | None = None
    x_label: str = "t"
    time_scale: float = 1.0
    gridline_period: float | None = None
    curves: tuple[CurveRef, ...] = ()
    population_panel: tuple[CurveRef, ...] = ()
    sweep_csv: Path | None = None


def bundled_spec_path(name: str) -> Path:
    """Filesystem path of a packaged plot spec (name without .json)."""
    entry = resources.files(__package__) / "specs" / f"{name}.json"
    path = Path(str(entry))
    if not path.is_file():
        available = sorted(
            p.name.removesuffix(".json")
            for p in (resources.files(__package__) / "specs").iterdir()
        )
        raise SpecError(f"no bundled spec {name!r}; available: {', '.join(available)}")
    return path


def _curve_list(raw, key: str, spec_path) -> tuple[CurveRef, ...]:
    entries = raw.get(key, [])
    if not isinstance(entries, list):
        raise SpecError(f"{spec_path}: {key} must be a list")
    refs = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or not _CURVE_KEYS >= set(entry):
            raise SpecError(
                f"{spec_path}: {key}[{i}] must be an object with 'csv' and 'label'"
            )
        for required in _CURVE_KEYS:
            if required not in entry:
                raise SpecError(f"{spec_path}: {key}[{i}] is missing {required!r}")
        refs.append(CurveRef(csv=Path(entry["csv"]), label=str(entry["label"])))
    return tuple(refs)


def load_spec(path) -> PlotSpec:
    """Load and validate a plot spec; input CSVs are checked at read time."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SpecError(f"{path}: spec root must be a JSON object")
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise SpecError(f"{path}: unknown key(s) {', '.join(map(repr, unknown))}")

    kind = raw.get("kind")
    if kind not in SPEC_KINDS:
        raise SpecError(
            f"{path}: kind must be one of {', '.join(SPEC_KINDS)}, got {kind!r}"
        )
    if "output" not in raw:
        raise SpecError(f"{path}: missing required key 'output'")
    output = Path(raw["output"])

    time_scale = float(raw.get("time_scale", 1.0))
    if not np.isfinite(time_scale) or time_scale <= 0:
        raise SpecError(f"{path}: time_scale must be positive")
    gridline_period = raw.get("gridline_period")
    if gridline_period is not None:
        gridline_period = float(gridline_period)
        if not np.isfinite(gridline_period) or gridline_period <= 0:
            raise SpecError(f"{path}: gridline_period must be positive")

    if kind == "timeseries":
        curves = _curve_list(raw, "curves", path)
        if not curves:
            raise SpecError(f"{path}: timeseries spec needs at least one curve")
        if "csv" in raw:
            raise SpecError(f"{path}: 'csv' belongs to sweep specs only")
        population = _curve_list(raw, "population_panel", path)
        return PlotSpec(
            kind=kind,
            output=output,
            title=raw.get("title"),
            x_label=str(raw.get("x_label", "t")),
            time_scale=time_scale,
            gridline_period=gridline_period,
            curves=curves,
            population_panel=population,
        )

    if "csv" not in raw:
        raise SpecError(f"{path}: sweep spec needs a 'csv' entry")
    if raw.get("curves") or raw.get("population_panel"):
        raise SpecError(f"{path}: sweep specs take 'csv', not curve lists")
    return PlotSpec(
        kind=kind,
        output=output,
        title=raw.get("title"),
        x_label=str(raw.get("x_label", "")),
        sweep_csv=Path(raw["csv"]),
    )


def _read_rows(path: Path, expected_columns) -> list[list[str]]:
    if not path.is_file():
        raise SpecError(f"missing input file {path}")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SpecError(f"{path}: empty file, expected header "
                            f"{','.join(expected_columns)}") from None
        header = [h.strip() for h in header]
        for i, expected in enumerate(expected_columns):
            found = header[i] if i < len(header) else "<missing>"
            if found != expected:
                raise SpecError(
                    f"{path}: expected column {i + 1} to be {expected!r}, "
                    f"found {found!r}"
                )
        if len(header) > len(expected_columns):
            raise SpecError(
                f"{path}: unexpected extra column {header[len(expected_columns)]!r}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SpecError(f"{path}: no data rows")
    return rows


def _numeric(rows, path: Path, skip: tuple[int, ...] = ()) -> np.ndarray:
    out = np.empty((len(rows), len(rows[0])))
    for r, row in enumerate(rows):
        for c, cell in enumerate(row):
            if c in skip:
                out[r, c] = np.nan
                continue
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise SpecError(
                    f"{path}: row {r + 2}, column {c + 1}: "
                    f"cannot parse {cell!r} as a number"
                ) from None
    return out


def read_timeseries(path: Path) -> dict[str, np.ndarray]:
    """Read one trajectory CSV into named columns."""
    rows = _read_rows(path, TIMESERIES_COLUMNS)
    if any(len(row) != len(TIMESERIES_COLUMNS) for row in rows):
        bad = next(i for i, row in enumerate(rows) if len(row) != len(TIMESERIES_COLUMNS))
        raise SpecError(
            f"{path}: row {bad + 2} has {len(rows[bad])} fields, "
            f"expected {len(TIMESERIES_COLUMNS)}"
        )
    data = _numeric(rows, path)
    return {name: data[:, i] for i, name in enumerate(TIMESERIES_COLUMNS)}


def read_sweep(path: Path) -> dict[str, np.ndarray | list[str]]:
    """Read a sweep summary CSV; the axis name column stays textual."""
    rows = _read_rows(path, SWEEP_COLUMNS)
    if any(len(row) != len(SWEEP_COLUMNS) for row in rows):
        bad = next(i for i, row in enumerate(rows) if len(row) != len(SWEEP_COLUMNS))
        raise SpecError(
            f"{path}: row {bad + 2} has {len(rows[bad])} fields, "
            f"expected {len(SWEEP_COLUMNS)}"
        )
    data = _numeric(rows, path, skip=(0,))
    out: dict[str, np.ndarray | list[str]] = {
        name: data[:, i] for i, name in enumerate(SWEEP_COLUMNS) if i != 0
    }
    out["axis"] = [row[0] for row in rows]
    return out
