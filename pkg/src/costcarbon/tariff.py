"""Retail tariff domain model, CSV format, validation and metadata filtering.

A tariff is an ordered list of charge rows. Each row carries a time-of-use
window (months, weekdays, hours) and a tier floor; rows that share a
``charge_family`` are the blocks of one tiered charge.
"""

import csv
import datetime as dt
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import ScheduleValidationError, TariffParseError

logger = logging.getLogger(__name__)

TARIFF_COLUMNS = (
    "kind",
    "charge_family",
    "rate",
    "tier_floor",
    "month_start",
    "month_end",
    "weekday_start",
    "weekday_end",
    "hour_start",
    "hour_end",
    "assessed",
)
METADATA_COLUMNS = (
    "tariff_id",
    "utility_name",
    "eia_id",
    "zip",
    "latitude",
    "longitude",
    "sector",
    "service_type",
    "iso_label",
)
# Optional metadata columns consulted by ``filter_applicable``.
METADATA_OPTIONAL_COLUMNS = ("start_date", "end_date", "min_peak_kw", "max_peak_kw")

_INT_FIELDS = ("month_start", "month_end", "weekday_start", "weekday_end", "hour_start", "hour_end")


class ChargeKind(str, enum.Enum):
    ENERGY = "energy"
    DEMAND = "demand"
    CUSTOMER = "customer"


class Assessed(str, enum.Enum):
    MONTHLY = "monthly"
    DAILY = "daily"


class Bundling(str, enum.Enum):
    BUNDLED = "bundled"
    DELIVERY_ONLY = "delivery_only"


@dataclass(frozen=True)
class ChargeItem:
    kind: ChargeKind
    charge_family: str
    rate: float
    tier_floor: float = 0.0
    month_start: int = 1
    month_end: int = 12
    weekday_start: int = 0
    weekday_end: int = 6
    hour_start: int = 0
    hour_end: int = 24
    assessed: Assessed = Assessed.MONTHLY
    # original text of each field, kept so a parsed file re-serializes verbatim
    source: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", ChargeKind(self.kind))
        object.__setattr__(self, "assessed", Assessed(self.assessed))

    @property
    def window(self):
        return (
            f"m{self.month_start}-{self.month_end}"
            f"/d{self.weekday_start}-{self.weekday_end}"
            f"/h{self.hour_start}-{self.hour_end}"
        )

    def covers(self, month, weekday, hour):
        """Elementwise window test; works on scalars and numpy arrays alike."""
        if self.kind is ChargeKind.CUSTOMER:
            return (month >= self.month_start) & (month <= self.month_end)
        return (
            (month >= self.month_start)
            & (month <= self.month_end)
            & (weekday >= self.weekday_start)
            & (weekday <= self.weekday_end)
            & (hour >= self.hour_start)
            & (hour < self.hour_end)
        )

    def as_row(self):
        values = (
            self.kind.value,
            self.charge_family,
            _fmt_number(self.rate),
            _fmt_number(self.tier_floor),
            *(str(getattr(self, name)) for name in _INT_FIELDS),
            self.assessed.value,
        )
        if self.source is None:
            return list(values)
        # keep original spelling (e.g. "0.10") wherever it still means the same value
        row = []
        for name, text, original in zip(TARIFF_COLUMNS, values, self.source):
            row.append(original if _same_token(name, text, original) else text)
        return row


@dataclass(frozen=True)
class TariffSchedule:
    tariff_id: str
    items: tuple
    bundling: Bundling = Bundling.BUNDLED

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "bundling", Bundling(self.bundling))

    def families(self):
        """Map ``(kind, charge_family)`` to the indices of its rows, in file order."""
        groups = {}
        for i, item in enumerate(self.items):
            groups.setdefault((item.kind, item.charge_family), []).append(i)
        return groups

    def tier_ceilings(self):
        """Upper bound of each row's block (next floor in the family, else infinity)."""
        ceilings = [math.inf] * len(self.items)
        for indices in self.families().values():
            for here, nxt in zip(indices, indices[1:]):
                ceilings[here] = self.items[nxt].tier_floor
        return ceilings

    def of_kind(self, *kinds):
        kinds = {ChargeKind(k) for k in kinds}
        return TariffSchedule(
            self.tariff_id, [it for it in self.items if it.kind in kinds], self.bundling
        )


@dataclass(frozen=True)
class TariffMetadata:
    tariff_id: str
    utility_name: str = ""
    eia_id: Optional[int] = None
    zip: str = ""
    latitude: Optional[float] = None
    longitude: Optional[float] = None
    sector: str = ""
    service_type: str = ""
    iso_label: str = ""
    start_date: Optional[dt.date] = None
    end_date: Optional[dt.date] = None
    min_peak_kw: Optional[float] = None
    max_peak_kw: Optional[float] = None


@dataclass(frozen=True)
class Violation:
    item: Optional[int]
    field: str
    rule: str

    def __str__(self):
        where = "schedule" if self.item is None else f"item {self.item}"
        return f"{where}, {self.field}: {self.rule}"


@dataclass(frozen=True)
class FilterCriteria:
    """Tariff applicability filter. ``None`` disables a criterion."""

    sectors: Optional[frozenset] = None
    service_types: Optional[frozenset] = None
    effective_on: Optional[dt.date] = None
    reference_demand_kw: Optional[float] = None

    @classmethod
    def default(cls):
        """Industrial/commercial bundled tariffs in force on 2023-01-01 that admit a 1 MW load."""
        return cls(
            sectors=frozenset({"industrial", "commercial"}),
            service_types=frozenset({"bundled", "delivery with standard offer"}),
            effective_on=dt.date(2023, 1, 1),
            reference_demand_kw=1000.0,
        )


def _fmt_number(value):
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _same_token(name, text, original):
    if name in ("rate", "tier_floor"):
        try:
            return float(original) == float(text)
        except ValueError:
            return False
    if name in _INT_FIELDS:
        try:
            return int(original) == int(text)
        except ValueError:
            return False
    return original.strip() == text


def tariff_filename(tariff_id, bundling):
    return f"{tariff_id}_{Bundling(bundling).value}.csv"


def split_tariff_filename(name):
    """Inverse of :func:`tariff_filename`; returns ``(tariff_id, Bundling)``."""
    stem = name[:-4] if name.endswith(".csv") else name
    for bundling in (Bundling.DELIVERY_ONLY, Bundling.BUNDLED):
        suffix = "_" + bundling.value
        if stem.endswith(suffix):
            return stem[: -len(suffix)], bundling
    raise TariffParseError(f"file name {name!r} lacks a _bundled or _delivery_only suffix")


def parse_tariff_file(text, tariff_id="", bundling=Bundling.BUNDLED, validate=True):
    """Parse tariff CSV text into a :class:`TariffSchedule`.

    Row numbers in errors count the header as row 1. Extra columns are
    ignored with a warning.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TariffParseError("empty file: missing header", row=1) from None
    missing = [c for c in TARIFF_COLUMNS if c not in header]
    if missing:
        raise TariffParseError(f"header lacks column(s) {', '.join(missing)}", row=1)
    extra = [c for c in header if c not in TARIFF_COLUMNS]
    if extra:
        logger.warning("tariff %s: ignoring unknown column(s) %s", tariff_id or "?", ", ".join(extra))
    positions = [header.index(c) for c in TARIFF_COLUMNS]

    items = []
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise TariffParseError(
                f"expected {len(header)} fields, found {len(row)}", row=rownum
            )
        cells = tuple(row[p] for p in positions)
        items.append(_parse_item(cells, rownum))

    schedule = TariffSchedule(tariff_id, items, bundling)
    if validate:
        violations = validate_schedule(schedule)
        if violations:
            raise ScheduleValidationError(violations)
    return schedule


def _parse_item(cells, rownum):
    values = {}
    for name, raw in zip(TARIFF_COLUMNS, cells):
        text = raw.strip()
        try:
            if name == "kind":
                values[name] = ChargeKind(text.lower())
            elif name == "assessed":
                values[name] = Assessed((text or "monthly").lower())
            elif name in ("rate", "tier_floor"):
                number = float(text) if text else 0.0
                if not math.isfinite(number):
                    raise ValueError("not finite")
                values[name] = number
            elif name in _INT_FIELDS:
                values[name] = int(text)
            else:
                if not text:
                    raise ValueError("empty")
                values[name] = text
        except ValueError as exc:
            raise TariffParseError(f"bad value {raw!r} ({exc})", row=rownum, column=name) from None
    return ChargeItem(**values, source=tuple(cells))


def serialize_tariff(schedule):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TARIFF_COLUMNS)
    for item in schedule.items:
        writer.writerow(item.as_row())
    return buf.getvalue()


def read_tariff(path, validate=True):
    from pathlib import Path

    path = Path(path)
    tariff_id, bundling = split_tariff_filename(path.name)
    return parse_tariff_file(path.read_text(encoding="utf-8"), tariff_id, bundling, validate)


def validate_schedule(schedule):
    """List every invariant violation; an empty list means the schedule is valid."""
    out = []
    for i, item in enumerate(schedule.items):
        if not (item.rate >= 0):
            out.append(Violation(i, "rate", "rate must be non-negative"))
        if not (item.tier_floor >= 0):
            out.append(Violation(i, "tier_floor", "tier floor must be non-negative"))
        if not (1 <= item.month_start <= 12 and 1 <= item.month_end <= 12):
            out.append(Violation(i, "month_start", "months must lie in 1..12"))
        if item.month_start > item.month_end:
            out.append(Violation(i, "month_end", "month_start must not exceed month_end"))
        if not (0 <= item.weekday_start <= 6 and 0 <= item.weekday_end <= 6):
            out.append(Violation(i, "weekday_start", "weekdays must lie in 0..6"))
        if item.weekday_start > item.weekday_end:
            out.append(Violation(i, "weekday_end", "weekday_start must not exceed weekday_end"))
        if not (0 <= item.hour_start <= 23 and 1 <= item.hour_end <= 24):
            out.append(Violation(i, "hour_start", "hour_start must lie in 0..23 and hour_end in 1..24"))
        if item.hour_start >= item.hour_end:
            out.append(Violation(i, "hour_end", "hour_start must be less than hour_end"))
    for (kind, family), indices in schedule.families().items():
        floors = [schedule.items[i].tier_floor for i in indices]
        if floors[0] != 0:
            out.append(Violation(indices[0], "tier_floor", f"family {family!r} ({kind.value}) must start at tier floor 0"))
        for prev, i in zip(indices, indices[1:]):
            if not schedule.items[i].tier_floor > schedule.items[prev].tier_floor:
                out.append(
                    Violation(i, "tier_floor", f"tier floors in family {family!r} ({kind.value}) must be strictly increasing")
                )
    return out


def _opt(text, cast):
    text = (text or "").strip()
    if not text or text.lower() in ("n/a", "na", "nan", "none"):
        return None
    return cast(text)


def parse_metadata(text):
    """Parse ``metadata.csv`` text into a list of :class:`TariffMetadata`."""
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in METADATA_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise TariffParseError(f"metadata header lacks column(s) {', '.join(missing)}", row=1)
    rows = []
    seen = set()
    for rownum, rec in enumerate(reader, start=2):
        column = None
        try:
            column = "eia_id"
            eia_id = _opt(rec["eia_id"], int)
            column = "latitude"
            lat = _opt(rec["latitude"], float)
            column = "longitude"
            lon = _opt(rec["longitude"], float)
            column = "start_date"
            start = _opt(rec.get("start_date"), dt.date.fromisoformat)
            column = "end_date"
            end = _opt(rec.get("end_date"), dt.date.fromisoformat)
            column = "min_peak_kw"
            lo = _opt(rec.get("min_peak_kw"), float)
            column = "max_peak_kw"
            hi = _opt(rec.get("max_peak_kw"), float)
        except ValueError as exc:
            raise TariffParseError(str(exc), row=rownum, column=column) from None
        if lat is not None and not -90 <= lat <= 90:
            raise TariffParseError(f"latitude {lat} out of range", row=rownum, column="latitude")
        if lon is not None and not -180 <= lon <= 180:
            raise TariffParseError(f"longitude {lon} out of range", row=rownum, column="longitude")
        tariff_id = rec["tariff_id"].strip()
        if tariff_id in seen:
            raise TariffParseError(f"duplicate tariff_id {tariff_id!r}", row=rownum, column="tariff_id")
        seen.add(tariff_id)
        rows.append(
            TariffMetadata(
                tariff_id=tariff_id,
                utility_name=rec["utility_name"].strip(),
                eia_id=eia_id,
                zip=rec["zip"].strip().zfill(5) if rec["zip"].strip() else "",
                latitude=lat,
                longitude=lon,
                sector=rec["sector"].strip().lower(),
                service_type=rec["service_type"].strip(),
                iso_label=rec["iso_label"].strip(),
                start_date=start,
                end_date=end,
                min_peak_kw=lo,
                max_peak_kw=hi,
            )
        )
    return rows


def filter_applicable(rows, criteria=None):
    """Keep metadata rows that satisfy every active criterion.

    The capacity criterion keeps a tariff when its ``[min_peak_kw,
    max_peak_kw]`` applicability range contains the reference demand.
    Missing bounds and dates are treated as open.
    """
    if criteria is None:
        return list(rows)
    sectors = {s.lower() for s in criteria.sectors} if criteria.sectors is not None else None
    services = {s.lower() for s in criteria.service_types} if criteria.service_types is not None else None
    day = criteria.effective_on
    ref = criteria.reference_demand_kw
    kept = []
    for row in rows:
        if sectors is not None and row.sector.lower() not in sectors:
            continue
        if services is not None and row.service_type.lower() not in services:
            continue
        if day is not None:
            if row.start_date is not None and not row.start_date < day:
                continue
            if row.end_date is not None and not row.end_date > day:
                continue
        if ref is not None:
            if row.min_peak_kw is not None and not row.min_peak_kw <= ref:
                continue
            if row.max_peak_kw is not None and not ref <= row.max_peak_kw:
                continue
        kept.append(row)
    return kept
