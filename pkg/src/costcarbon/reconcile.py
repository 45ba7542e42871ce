"""Map tariffs, wholesale prices and emissions onto a shared month-hour grid."""

import csv
import enum
import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _time
from .billing import KWH_PER_MWH, LoadProfile, item_charges
from .exceptions import AlignmentError
from .tariff import ChargeKind

logger = logging.getLogger(__name__)

MONTHS = 12
HOURS = 24


class Unit(str, enum.Enum):
    USD_PER_KWH = "usd_per_kwh"
    USD_PER_MWH = "usd_per_mwh"
    KG_CO2E_PER_MWH = "kg_co2e_per_mwh"


@dataclass(frozen=True)
class HourlySeries:
    """Hourly values from ``start``; NaN marks a missing hour."""

    label: str
    unit: Unit
    start: object
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "unit", Unit(self.unit))
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("hourly series values must be one-dimensional")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "start", _time.to_hour(self.start))

    def __len__(self):
        return self.values.size

    def timestamps(self):
        return _time.hour_stamps(self.start, len(self))


@dataclass(frozen=True)
class MonthHourMatrix:
    """12 x 24 means by (month, hour-of-day); NaN cells have no samples."""

    label: str
    unit: Unit
    cells: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "unit", Unit(self.unit))
        cells = np.array(self.cells, dtype=float)
        counts = np.array(self.counts, dtype=np.int64)
        if cells.shape != (MONTHS, HOURS) or counts.shape != (MONTHS, HOURS):
            raise ValueError("month-hour matrix must be 12 x 24")
        cells[counts == 0] = np.nan
        cells.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "counts", counts)

    def month(self, month):
        return self.cells[month - 1]


def flatten_tariff(schedule, year=2023, kinds=(ChargeKind.ENERGY, ChargeKind.DEMAND)):
    """Hourly $/kWh equivalent of ``schedule`` for a flat 1 MW load over ``year``.

    Every energy and demand row's dollar charge in each billing period is
    spread evenly over the row's active hours in that period and divided by
    the 1,000 kWh drawn per hour. Customer charges are left out.
    """
    kinds = {ChargeKind(k) for k in kinds} - {ChargeKind.CUSTOMER}
    load = LoadProfile.flat_year(year)
    series = np.zeros(len(load))
    for ch in item_charges(schedule, load):
        item = schedule.items[ch.item]
        if item.kind not in kinds or ch.amount == 0.0:
            continue
        series[ch.hours] += ch.amount / ch.hours.size / KWH_PER_MWH
    return HourlySeries(schedule.tariff_id, Unit.USD_PER_KWH, _time.year_start(year), series)


def resample_to_hourly(timestamps, values, label="", unit=Unit.USD_PER_MWH):
    """Average uniform sub-hourly samples into hours.

    An hour is missing unless every one of its sub-steps is present and
    finite.
    """
    stamps = np.asarray(timestamps, dtype="datetime64[m]")
    vals = np.asarray(values, dtype=float)
    if stamps.shape != vals.shape or stamps.ndim != 1 or stamps.size == 0:
        raise ValueError("timestamps and values must be equal-length non-empty vectors")
    if stamps.size == 1:
        step = 60
    else:
        diffs = np.diff(stamps).astype(np.int64)
        if not np.all(diffs == diffs[0]):
            raise ValueError("sub-hourly series must have a uniform time step")
        step = int(diffs[0])
    if step <= 0 or 60 % step:
        raise ValueError(f"time step of {step} min does not evenly divide an hour")
    per_hour = 60 // step
    hours = stamps.astype("datetime64[h]")
    first = hours[0]
    n_hours = int((hours[-1] - first).astype(int)) + 1
    slot = (hours - first).astype(np.int64)
    sums = np.zeros(n_hours)
    counts = np.zeros(n_hours, dtype=np.int64)
    ok = np.isfinite(vals)
    np.add.at(sums, slot[ok], vals[ok])
    np.add.at(counts, slot[ok], 1)
    out = np.full(n_hours, np.nan)
    full = counts == per_hour
    out[full] = sums[full] / per_hour
    return HourlySeries(label, unit, first, out)


def month_hour_average(series):
    cal = _time.calendar_fields(series.start, len(series))
    ok = np.isfinite(series.values)
    cell = (cal["month"] - 1) * HOURS + cal["hour"]
    sums = np.zeros(MONTHS * HOURS)
    counts = np.zeros(MONTHS * HOURS, dtype=np.int64)
    np.add.at(sums, cell[ok], series.values[ok])
    np.add.at(counts, cell[ok], 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cells = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return MonthHourMatrix(
        series.label, series.unit, cells.reshape(MONTHS, HOURS), counts.reshape(MONTHS, HOURS)
    )


def align(a, b, month):
    """24-hour vectors of ``a`` and ``b`` in ``month``, restricted to hours present in both."""
    if not 1 <= month <= MONTHS:
        raise ValueError(f"month {month} outside 1..12")
    x, y = a.month(month), b.month(month)
    keep = np.isfinite(x) & np.isfinite(y)
    if np.count_nonzero(keep) < 2:
        raise AlignmentError(
            f"{a.label!r} and {b.label!r} share {int(np.count_nonzero(keep))} hour(s) in month {month}; need 2"
        )
    return x[keep], y[keep]


def matrix_filename(label, unit):
    return f"{label}__{Unit(unit).value}.csv"


def write_matrix(matrix, directory):
    path = Path(directory) / matrix_filename(matrix.label, matrix.unit)
    path.write_text(matrix_to_csv(matrix), encoding="utf-8")
    return path


def matrix_to_csv(matrix):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"h{h:02d}" for h in range(HOURS)])
    for row in matrix.cells:
        writer.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])
    return buf.getvalue()


def read_matrix(path):
    """Load a matrix file; sample counts are not stored, so present cells count as 1."""
    path = Path(path)
    label, _, unit = path.stem.rpartition("__")
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    body = rows[1:]
    if len(body) != MONTHS or any(len(r) != HOURS for r in body):
        raise ValueError(f"{path}: expected 12 rows of 24 values")
    cells = np.array([[float(v) if v.strip() else np.nan for v in r] for r in body])
    return MonthHourMatrix(label, unit, cells, np.isfinite(cells).astype(np.int64))


def series_to_csv(series):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["timestamp", "value"])
    for stamp, v in zip(series.timestamps(), series.values):
        writer.writerow([_time.format_stamp(stamp), "" if np.isnan(v) else repr(float(v))])
    return buf.getvalue()


def read_timeseries_csv(text, columns):
    """Parse ``timestamp,<columns...>`` rows; returns stamps (minute resolution) and value arrays."""
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    expected = ["timestamp", *columns]
    missing = [c for c in expected if c not in header]
    if missing:
        raise ValueError(f"header lacks column(s) {', '.join(missing)}")
    pos = [header.index(c) for c in expected]
    stamps, data = [], [[] for _ in columns]
    for rownum, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        try:
            stamps.append(_time.parse_stamp(row[pos[0]]))
            for out, p in zip(data, pos[1:]):
                cell = row[p].strip()
                out.append(float(cell) if cell else np.nan)
        except (ValueError, IndexError) as exc:
            raise ValueError(f"row {rownum}: {exc}") from None
    stamps = np.array(stamps, dtype="datetime64[m]")
    if stamps.size > 1 and not np.all(np.diff(stamps).astype(np.int64) > 0):
        raise ValueError("timestamps must be strictly increasing")
    return stamps, [np.array(d, dtype=float) for d in data]


def to_hourly_grid(stamps, *columns):
    """Place strictly increasing on-the-hour samples onto a gap-free hourly grid (gaps -> NaN)."""
    if stamps.size == 0:
        raise ValueError("no samples")
    if np.any(stamps.astype(np.int64) % 60):
        raise ValueError("hourly data must be stamped on the hour")
    hours = stamps.astype("datetime64[h]")
    slot = (hours - hours[0]).astype(np.int64)
    n = int(slot[-1]) + 1
    grids = []
    for col in columns:
        grid = np.full(n, np.nan)
        grid[slot] = col
        grids.append(grid)
    return hours[0], grids


def read_hourly_series(path, label=None, unit=Unit.USD_PER_MWH):
    """Read a ``timestamp,value`` file, resampling when the step is sub-hourly."""
    path = Path(path)
    stamps, (vals,) = read_timeseries_csv(path.read_text(encoding="utf-8"), ["value"])
    label = path.stem if label is None else label
    if stamps.size > 1 and int(np.diff(stamps).astype(np.int64).min()) < 60:
        return resample_to_hourly(stamps, vals, label, unit)
    start, (grid,) = to_hourly_grid(stamps, vals)
    return HourlySeries(label, unit, start, grid)
