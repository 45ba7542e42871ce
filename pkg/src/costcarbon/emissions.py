"""Average and marginal emissions factors on the month-hour grid."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _time
from .reconcile import HOURS, MONTHS, MonthHourMatrix, Unit, read_timeseries_csv, to_hourly_grid


@dataclass(frozen=True)
class GenEmisSeries:
    """Hourly generation (MWh) and emissions (kg CO2-eq) for one region; NaN = missing."""

    region: str
    start: object
    generation: np.ndarray
    emissions: np.ndarray

    def __post_init__(self):
        gen = np.array(self.generation, dtype=float)
        emis = np.array(self.emissions, dtype=float)
        if gen.shape != emis.shape or gen.ndim != 1:
            raise ValueError("generation and emissions must be equal-length vectors")
        if np.any(gen[np.isfinite(gen)] < 0):
            raise ValueError("generation must be non-negative")
        gen.setflags(write=False)
        emis.setflags(write=False)
        object.__setattr__(self, "generation", gen)
        object.__setattr__(self, "emissions", emis)
        object.__setattr__(self, "start", _time.to_hour(self.start))

    def __len__(self):
        return self.generation.size


def _cells(series):
    cal = _time.calendar_fields(series.start, len(series))
    return (cal["month"] - 1) * HOURS + cal["hour"], cal["month_id"]


def average_aef(series):
    """Ratio of mean emissions to mean generation in each (month, hour) cell."""
    cell, _ = _cells(series)
    ok = np.isfinite(series.generation) & np.isfinite(series.emissions)
    size = MONTHS * HOURS
    counts = np.bincount(cell[ok], minlength=size)
    gen_sum = np.bincount(cell[ok], weights=series.generation[ok], minlength=size)
    emis_sum = np.bincount(cell[ok], weights=series.emissions[ok], minlength=size)
    # the counts cancel in the ratio of means, so zero generation is what empties a cell
    usable = (counts > 0) & (gen_sum > 0)
    values = np.full(size, np.nan)
    values[usable] = emis_sum[usable] / gen_sum[usable]
    return MonthHourMatrix(
        series.region,
        Unit.KG_CO2E_PER_MWH,
        values.reshape(MONTHS, HOURS),
        np.where(usable, counts, 0).reshape(MONTHS, HOURS),
    )


def estimate_mef(series, min_pairs=2):
    """Marginal emissions factor per (month, hour) by regression on hourly changes.

    Within each calendar month, consecutive-hour differences dE and dG are
    binned by the month and hour-of-day of the later hour; each cell is the
    least-squares slope through the origin, sum(dG*dE) / sum(dG**2).
    """
    cell, month_id = _cells(series)
    g, e = series.generation, series.emissions
    d_gen = g[1:] - g[:-1]
    d_emis = e[1:] - e[:-1]
    ok = np.isfinite(d_gen) & np.isfinite(d_emis) & (month_id[1:] == month_id[:-1])
    bins = cell[1:][ok]
    size = MONTHS * HOURS
    pairs = np.bincount(bins, minlength=size)
    sxy = np.bincount(bins, weights=d_gen[ok] * d_emis[ok], minlength=size)
    sxx = np.bincount(bins, weights=d_gen[ok] ** 2, minlength=size)
    usable = (pairs >= min_pairs) & (sxx > 0)
    values = np.full(size, np.nan)
    values[usable] = sxy[usable] / sxx[usable]
    return MonthHourMatrix(
        series.region,
        Unit.KG_CO2E_PER_MWH,
        values.reshape(MONTHS, HOURS),
        np.where(usable, pairs, 0).reshape(MONTHS, HOURS),
    )


@dataclass(frozen=True)
class RatioSummary:
    mean: float
    min: float
    max: float
    n_cells: int


def mef_aef_summary(mef, aef):
    """Mean, min and max of the cellwise MEF/AEF ratio over cells present in both."""
    ok = np.isfinite(mef.cells) & np.isfinite(aef.cells) & (aef.cells != 0)
    if not ok.any():
        raise ValueError(f"{mef.label!r} and {aef.label!r} have no common non-missing cells")
    ratio = mef.cells[ok] / aef.cells[ok]
    return RatioSummary(float(ratio.mean()), float(ratio.min()), float(ratio.max()), int(ok.sum()))


def read_genemis(path, region=None):
    """Read ``timestamp,generation_mwh,emissions_kg``; the region defaults to the file stem."""
    path = Path(path)
    stamps, (gen, emis) = read_timeseries_csv(
        path.read_text(encoding="utf-8"), ["generation_mwh", "emissions_kg"]
    )
    start, (gen, emis) = to_hourly_grid(stamps, gen, emis)
    return GenEmisSeries(path.stem if region is None else region, start, gen, emis)
