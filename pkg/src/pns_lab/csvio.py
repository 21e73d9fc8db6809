"""CSV writers and readers for the figure data and simulation histograms.

Floats are written with 17 significant digits so every value parses back to
the identical double.  Files always start with a header row and use LF line
endings.
"""
from __future__ import annotations

import csv
import io
from typing import IO, Iterable

import numpy as np

from .boundary import BoundaryCurve, RegionGrid
from .montecarlo import SimulationResult

GRID_COLUMNS = ("mu", "eta", "d1", "feasible")
CURVE_COLUMNS = ("mu", "eta0_exact", "eta0_approx")
HISTOGRAM_COLUMNS = ("n", "count", "empirical_p", "analytic_p", "z")


def fmt(x: float) -> str:
    return f"{x:.17g}"


def _writer(stream: IO[str]):
    return csv.writer(stream, lineterminator="\n")


def _rows(text: str | IO[str], columns: Iterable[str]) -> list[dict[str, str]]:
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != tuple(columns):
        raise ValueError(f"expected header {','.join(columns)}, got {reader.fieldnames}")
    return list(reader)


def write_grid(grid: RegionGrid, stream: IO[str]) -> None:
    w = _writer(stream)
    w.writerow(GRID_COLUMNS)
    for mu, eta, d1, feasible in grid.cells():
        w.writerow([fmt(mu), fmt(eta), fmt(d1), int(feasible)])


def read_grid(text: str | IO[str]) -> RegionGrid:
    rows = _rows(text, GRID_COLUMNS)
    mus = list(dict.fromkeys(float(r["mu"]) for r in rows))
    etas = list(dict.fromkeys(float(r["eta"]) for r in rows))
    d1 = np.array([float(r["d1"]) for r in rows]).reshape(len(mus), len(etas))
    for r in rows:
        if int(r["feasible"]) != int(float(r["d1"]) <= 0):
            raise ValueError(f"inconsistent feasible flag in row {r}")
    return RegionGrid(np.array(mus), np.array(etas), d1)


def write_curve(curve: BoundaryCurve, stream: IO[str]) -> None:
    w = _writer(stream)
    w.writerow(CURVE_COLUMNS)
    for sample in curve.samples:
        w.writerow([fmt(v) for v in sample])


def read_curve(text: str | IO[str]) -> BoundaryCurve:
    rows = _rows(text, CURVE_COLUMNS)
    samples = [tuple(float(r[c]) for c in CURVE_COLUMNS) for r in rows]
    mu_range = (samples[0][0], samples[-1][0]) if samples else (float("nan"), float("nan"))
    return BoundaryCurve(samples, mu_range, len(samples))


def write_histogram(result: SimulationResult, stream: IO[str]) -> None:
    w = _writer(stream)
    w.writerow(HISTOGRAM_COLUMNS)
    emp = result.empirical
    for n, count in enumerate(result.counts):
        w.writerow([n, int(count), fmt(emp[n]), fmt(result.analytic[n]), fmt(result.per_bin_z[n])])


def read_histogram(text: str | IO[str]) -> dict[str, np.ndarray]:
    """Columns of a histogram CSV as arrays keyed by column name."""
    rows = _rows(text, HISTOGRAM_COLUMNS)
    out = {
        "n": np.array([int(r["n"]) for r in rows]),
        "count": np.array([int(r["count"]) for r in rows]),
    }
    for c in HISTOGRAM_COLUMNS[2:]:
        out[c] = np.array([float(r[c]) for r in rows])
    return out
