"""Cost/emissions alignment statistics on reconciled month-hour data."""

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _time
from .billing import KWH_PER_MWH, LoadProfile, item_charges
from .exceptions import AlignmentError
from .reconcile import align, flatten_tariff

SUMMER_MONTHS = (6, 7, 8, 9)


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def pearson(x, y):
    """Sample Pearson correlation; NaN when either vector is constant."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"pearson needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("pearson needs at least two samples")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return math.nan
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy))))
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class CorrelationRecord:
    label_a: str
    label_b: str
    region: str
    month: int
    r: float  # NaN when undefined
    n: int

    @property
    def defined(self):
        return not math.isnan(self.r)


def correlate_month(a, b, month, region=""):
    try:
        x, y = align(a, b, month)
    except AlignmentError:
        n = int(np.count_nonzero(np.isfinite(a.month(month)) & np.isfinite(b.month(month))))
        return CorrelationRecord(a.label, b.label, region, month, math.nan, n)
    return CorrelationRecord(a.label, b.label, region, month, pearson(x, y), int(x.size))


def correlation_table(pairs):
    """Region x month grid of correlations from ``{region: (matrix_a, matrix_b)}``."""
    return [
        correlate_month(a, b, month, region)
        for region, (a, b) in sorted(pairs.items())
        for month in range(1, 13)
    ]


def correlations_csv(scoped):
    """``scoped`` holds ``(scope, CorrelationRecord)`` pairs."""
    return _csv(
        ["scope", "label_a", "label_b", "region", "month", "r", "n"],
        [(scope, r.label_a, r.label_b, r.region, r.month, r.r, r.n) for scope, r in scoped],
    )


class TariffCategory(str, enum.Enum):
    FLAT = "Flat"
    SEASONAL_TOU = "SeasonalTOU"
    NONSEASONAL_TOU = "NonseasonalTOU"
    SEASONAL_NONTOU = "SeasonalNonTOU"

    @classmethod
    def from_variation(cls, monthly, intraday):
        return {
            (False, False): cls.FLAT,
            (True, True): cls.SEASONAL_TOU,
            (False, True): cls.NONSEASONAL_TOU,
            (True, False): cls.SEASONAL_NONTOU,
        }[(bool(monthly), bool(intraday))]


@dataclass(frozen=True)
class Categorization:
    tariff_id: str
    energy: TariffCategory
    demand: TariffCategory
    overall: TariffCategory


def rate_grid(schedule, kind, year=2023):
    """Summed rate of ``kind`` rows by (month, weekday, hour), shape 12 x 7 x 24."""
    start = _time.year_start(year)
    cal = _time.calendar_fields(start, _time.hours_in_year(year))
    hourly = np.zeros(cal["hour"].size)
    for item in schedule.items:
        if item.kind.value == kind:
            hourly += item.rate * item.covers(cal["month"], cal["weekday"], cal["hour"])
    grid = np.zeros((12, 7, 24))
    grid[cal["month"] - 1, cal["weekday"], cal["hour"]] = hourly
    return grid


def _scale(*arrays):
    return max(1.0, *(float(np.max(np.abs(a))) for a in arrays))


def _varies(values, tol=1e-12):
    return bool(np.ptp(values) > tol * _scale(values))


def _differs(a, b, tol=1e-12):
    return bool(np.max(np.abs(a - b)) > tol * _scale(a, b))


def variation(grid):
    """``(monthly, intraday)`` variation flags of a 12 x 7 x 24 rate grid."""
    flat = grid.reshape(12, -1)
    monthly = any(_differs(flat[0], flat[m]) for m in range(1, 12))
    intraday = any(_varies(flat[m]) for m in range(12))
    return monthly, intraday


def categorize(schedule, year=2023):
    """Flat / seasonal / time-of-use class of the energy charges, demand charges and both together.

    A kind varies monthly when two months' weekday-by-hour rate grids differ,
    and intra-day when any month's grid is not constant (weekday versus
    weekend differences count). The overall class ORs the two kinds' flags.
    """
    flags = {}
    for kind in ("energy", "demand"):
        flags[kind] = variation(rate_grid(schedule, kind, year))
    overall = (flags["energy"][0] or flags["demand"][0], flags["energy"][1] or flags["demand"][1])
    return Categorization(
        schedule.tariff_id,
        TariffCategory.from_variation(*flags["energy"]),
        TariffCategory.from_variation(*flags["demand"]),
        TariffCategory.from_variation(*overall),
    )


def category_shares(categorizations, attr="overall"):
    """Percentage of tariffs in each category; empty input gives all zeros."""
    counts = {c: 0 for c in TariffCategory}
    for cat in categorizations:
        counts[getattr(cat, attr)] += 1
    total = sum(counts.values())
    return {c: (100.0 * n / total if total else 0.0) for c, n in counts.items()}


def categories_csv(categorizations):
    return _csv(
        ["tariff_id", "energy", "demand", "overall"],
        [(c.tariff_id, c.energy.value, c.demand.value, c.overall.value) for c in categorizations],
    )


@dataclass(frozen=True)
class Premium:
    ratio: float  # NaN when undefined
    reason: str = ""


def peak_premium(matrix, month):
    """Maximum over minimum of a month's hourly values."""
    row = matrix.month(month)
    row = row[np.isfinite(row)]
    if not row.size:
        raise ValueError(f"{matrix.label!r} has no values in month {month}")
    low, high = float(row.min()), float(row.max())
    if low <= 0:
        return Premium(math.nan, "non-positive minimum")
    return Premium(high / low)


def premiums_csv(rows):
    """``rows`` of ``(label, source, region, month, Premium)``."""
    return _csv(
        ["label", "source", "region", "month", "peak_premium", "reason"],
        [(label, source, region, month, p.ratio, p.reason) for label, source, region, month, p in rows],
    )


@dataclass(frozen=True)
class FlipResult:
    fraction: float
    n_nodes: int
    n_flipped: int
    n_zero: int


def flip_fraction(r_a, r_b):
    """Share of nodes whose correlation changes sign between two months.

    Takes ``{node: r}`` mappings. Nodes with an exact-zero value in either
    month never count as flipped and are tallied in ``n_zero``.
    """
    common = sorted(set(r_a) & set(r_b))
    if not common:
        raise ValueError("the two correlation sets share no nodes")
    flipped = zeros = 0
    for node in common:
        a, b = float(r_a[node]), float(r_b[node])
        if math.isnan(a) or math.isnan(b):
            raise ValueError(f"node {node!r} has an undefined correlation")
        if a == 0 or b == 0:
            zeros += 1
        elif (a > 0) != (b > 0):
            flipped += 1
    return FlipResult(flipped / len(common), len(common), flipped, zeros)


@dataclass(frozen=True)
class RegimeRow:
    tariff_id: str
    region: str
    month: int
    peak_premium: float
    r_aef_tariff: float
    ibdr_min_rate: float = math.nan
    ibdr_max_rate: float = math.nan


@dataclass(frozen=True)
class RegimeMap:
    rows: list
    boxes: dict  # region -> (min rate, max rate) in $/kW
    dropped: int


def regime_map(premiums, correlations, tariff_regions, ibdr_rates):
    """Join per-tariff premiums and correlations with regional IBDR payment ranges.

    ``premiums`` and ``correlations`` are keyed by ``(tariff_id, month)``;
    ``tariff_regions`` maps tariff to region and ``ibdr_rates`` maps region
    to its programs' $/kW rates. Keys that fail to join are counted in
    ``dropped``.
    """
    boxes = {
        region: (float(min(rates)), float(max(rates)))
        for region, rates in sorted(ibdr_rates.items())
        if len(rates)
    }
    rows = []
    dropped = 0
    for key in sorted(set(premiums) | set(correlations)):
        tariff_id, month = key
        region = tariff_regions.get(tariff_id)
        if key not in premiums or key not in correlations or region is None:
            dropped += 1
            continue
        lo, hi = boxes.get(region, (math.nan, math.nan))
        rows.append(RegimeRow(tariff_id, region, month, premiums[key], correlations[key], lo, hi))
    return RegimeMap(rows, boxes, dropped)


def regime_map_csv(result):
    return _csv(
        ["tariff_id", "region", "month", "peak_premium", "r_aef_tariff", "ibdr_min_rate", "ibdr_max_rate"],
        [(r.tariff_id, r.region, r.month, r.peak_premium, r.r_aef_tariff, r.ibdr_min_rate, r.ibdr_max_rate)
         for r in result.rows],
    )


@dataclass(frozen=True)
class SeasonStats:
    season: str
    kind: str
    n_tariffs: int
    mean_charge: float
    p95_charge: float
    mean_spread: float
    p95_spread: float


def _spread(values):
    active = values[values > 0]
    return float(active.max() / active.min()) if active.size else math.nan


def tariff_season_charges(schedule, year=2023, summer_months=SUMMER_MONTHS):
    """Per-season time-averaged charges and peak/off-peak spreads of one tariff at 1 MW.

    Energy: mean of the flattened energy charge ($/kWh), spread over hours
    with a non-zero charge. Demand: mean over the season's months of the
    monthly demand bill per kW of peak ($/kW), spread of the summed demand
    rate over hours where any demand window is active. Kinds the tariff
    lacks are absent from the result.
    """
    summer = set(summer_months)
    start = _time.year_start(year)
    cal = _time.calendar_fields(start, _time.hours_in_year(year))
    in_summer = np.isin(cal["month"], list(summer))
    out = {}
    kinds = {item.kind.value for item in schedule.items}
    if "energy" in kinds:
        energy = flatten_tariff(schedule, year, kinds=("energy",)).values
        for season, mask in (("summer", in_summer), ("winter", ~in_summer)):
            out[(season, "energy")] = (float(energy[mask].mean()), _spread(energy[mask]))
    if "demand" in kinds:
        load = LoadProfile.flat_year(year)
        monthly = np.zeros(12)
        for ch in item_charges(schedule.of_kind("demand"), load):
            monthly[int(ch.period[5:7]) - 1] += ch.amount
        per_kw = monthly / KWH_PER_MWH
        hourly = rate_grid(schedule, "demand", year)[cal["month"] - 1, cal["weekday"], cal["hour"]]
        for season, mask in (("summer", in_summer), ("winter", ~in_summer)):
            months = [m for m in range(1, 13) if (m in summer) == (season == "summer")]
            if not months:
                continue
            out[(season, "demand")] = (float(per_kw[[m - 1 for m in months]].mean()), _spread(hourly[mask]))
    return out


def summary_stats(schedules, year=2023, summer_months=SUMMER_MONTHS):
    """Cross-tariff mean and 95th percentile of seasonal charges and spreads."""
    per = [tariff_season_charges(s, year, summer_months) for s in schedules]
    stats = []
    for season in ("summer", "winter"):
        for kind in ("energy", "demand"):
            vals = [p[(season, kind)] for p in per if (season, kind) in p]
            if not vals:
                stats.append(SeasonStats(season, kind, 0, math.nan, math.nan, math.nan, math.nan))
                continue
            charge = np.array([v[0] for v in vals])
            spread = np.array([v[1] for v in vals])
            spread = spread[np.isfinite(spread)]
            stats.append(
                SeasonStats(
                    season, kind, len(vals),
                    float(charge.mean()), float(np.percentile(charge, 95)),
                    float(spread.mean()) if spread.size else math.nan,
                    float(np.percentile(spread, 95)) if spread.size else math.nan,
                )
            )
    return stats


def summary_stats_csv(stats):
    return _csv(
        ["season", "kind", "n_tariffs", "mean_charge", "p95_charge", "mean_spread", "p95_spread"],
        [(s.season, s.kind, s.n_tariffs, s.mean_charge, s.p95_charge, s.mean_spread, s.p95_spread) for s in stats],
    )
