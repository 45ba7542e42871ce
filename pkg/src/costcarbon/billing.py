"""Electricity bills and linear charge functions for hourly load profiles."""

import csv
import datetime as dt
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from . import _time
from .exceptions import ScheduleValidationError
from .tariff import Assessed, ChargeKind, validate_schedule

logger = logging.getLogger(__name__)

KWH_PER_MWH = 1000.0


@dataclass(frozen=True)
class LoadProfile:
    """Average power (kW) for consecutive hours starting at ``start``."""

    start: dt.datetime
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("load profile needs a one-dimensional series of at least one hour")
        if not np.all(np.isfinite(values)):
            raise ValueError("load profile contains non-finite values")
        if np.any(values < 0):
            raise ValueError("load profile contains negative values")
        values.setflags(write=False)
        _time.to_hour(self.start)
        object.__setattr__(self, "values", values)

    @classmethod
    def flat(cls, kw, start, end):
        """Constant ``kw`` from ``start`` up to (excluding) ``end``."""
        n = int((_time.to_hour(end) - _time.to_hour(start)).astype(int))
        return cls(start, np.full(n, float(kw)))

    @classmethod
    def flat_year(cls, year, kw=KWH_PER_MWH):
        return cls.flat(kw, dt.datetime(year, 1, 1), dt.datetime(year + 1, 1, 1))

    def __len__(self):
        return self.values.size

    def calendar(self):
        return _time.calendar_fields(self.start, len(self))


@dataclass(frozen=True)
class ItemCharge:
    """One schedule row's charge over one billing period."""

    item: int
    period: str
    hours: np.ndarray  # indices of the row's active hours inside the period
    quantity: float  # in-window kWh (energy) or peak kW (demand); 0 for customer
    amount: float
    peak_hour: int = -1
    tied: bool = False


@dataclass
class BillBreakdown:
    tariff_id: str
    total: float
    per_item: list = field(default_factory=list)  # (charge_family, kind, period, amount)
    per_period_peaks: list = field(default_factory=list)  # (charge_family, window, period, peak_kw)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tariff_id", "period", "charge_family", "kind", "amount_usd"])
        for family, kind, period, amount in self.per_item:
            writer.writerow([self.tariff_id, period, family, kind, repr(float(amount))])
        return buf.getvalue()


@dataclass(frozen=True)
class ChargeFunction:
    """Bill as ``coefficients @ hourly_kwh + constant`` around a fixed operating point."""

    coefficients: np.ndarray
    constant: float
    tied: bool = False
    tied_periods: tuple = ()

    def evaluate(self, energy_kwh):
        return float(np.dot(self.coefficients, energy_kwh)) + self.constant


def check_whole_months(load):
    start = _time.to_hour(load.start)
    end = start + len(load)
    for stamp, label in ((start, "start"), (end, "end")):
        if stamp.astype("datetime64[M]").astype("datetime64[h]") != stamp:
            raise ValueError(
                f"load profile {label} {_time.format_stamp(stamp)} is not a calendar-month boundary"
            )


def item_charges(schedule, load, check=True):
    """Charge of every schedule row in every billing period of ``load``.

    Energy rows bill the in-window kWh of each calendar month against their
    block; demand rows bill the in-window peak kW per month (or per calendar
    day when assessed daily); customer rows bill a fixed amount per month.
    """
    if check:
        violations = validate_schedule(schedule)
        if violations:
            raise ScheduleValidationError(violations)
        check_whole_months(load)
    cal = load.calendar()
    kw = load.values
    month_ids, month_first = np.unique(cal["month_id"], return_index=True)
    month_bounds = list(zip(month_first, list(month_first[1:]) + [len(load)]))
    ceilings = schedule.tier_ceilings()

    charges = []
    for i, item in enumerate(schedule.items):
        mask = item.covers(cal["month"], cal["weekday"], cal["hour"])
        floor, ceiling = item.tier_floor, ceilings[i]
        width = ceiling - floor
        for month_id, (lo, hi) in zip(month_ids, month_bounds):
            label = _time.month_label(month_id)
            in_month = _active_in(mask, lo, hi)
            if item.kind is ChargeKind.CUSTOMER:
                if in_month.size:
                    charges.append(ItemCharge(i, label, in_month, 0.0, item.rate))
                continue
            if item.kind is ChargeKind.ENERGY:
                if not in_month.size:
                    continue
                qty = float(kw[in_month].sum())
                amount = item.rate * min(max(qty - floor, 0.0), width)
                charges.append(ItemCharge(i, label, in_month, qty, amount))
                continue
            # demand
            if item.assessed is Assessed.DAILY:
                periods = _split_days(in_month, cal["day_id"])
            else:
                periods = [(label, in_month)]
            if not in_month.size:
                month = int(month_id % 12 + 1)
                if item.month_start <= month <= item.month_end:
                    logger.warning(
                        "tariff %s item %d: demand window %s has no active hours in %s; charging $0",
                        schedule.tariff_id, i, item.window, label,
                    )
                continue
            for period_label, hours in periods:
                window_kw = kw[hours]
                pos = int(np.argmax(window_kw))  # first maximum = earliest hour
                peak = float(window_kw[pos])
                tied = int(np.count_nonzero(window_kw == peak)) > 1
                amount = item.rate * min(max(peak - floor, 0.0), width)
                charges.append(ItemCharge(i, period_label, hours, peak, amount, int(hours[pos]), tied))
    return charges


def _active_in(mask, lo, hi):
    return lo + np.flatnonzero(mask[lo:hi])


def _split_days(hours, day_id):
    if not hours.size:
        return []
    days = day_id[hours]
    cuts = np.flatnonzero(np.diff(days)) + 1
    return [(_time.day_label(chunk_days[0]), chunk) for chunk, chunk_days in
            zip(np.split(hours, cuts), np.split(days, cuts))]


def compute_bill(schedule, load):
    """Exact bill of ``load`` under ``schedule``; see :func:`item_charges` for the rules."""
    charges = item_charges(schedule, load)
    per_item = {}
    peaks = []
    for ch in charges:
        item = schedule.items[ch.item]
        # daily demand rolls up into its calendar month
        period = ch.period[:7]
        key = (item.charge_family, item.kind.value, period)
        per_item[key] = per_item.get(key, 0.0) + ch.amount
        if item.kind is ChargeKind.DEMAND:
            peaks.append((item.charge_family, item.window, ch.period, ch.quantity))
    rows = [(fam, kind, period, amount) for (fam, kind, period), amount in per_item.items()]
    rows.sort(key=lambda r: r[2])  # stable: item order kept within a period
    total = 0.0
    for ch in charges:
        total += ch.amount
    return BillBreakdown(schedule.tariff_id, total, rows, peaks)


def build_charge_function(schedule, load):
    """Linearize the bill at ``load``.

    Each row's active block is frozen at its operating point: energy rows
    inside their block price every in-window hour at the row rate, demand
    rows inside their block price the period's peak hour (earliest on ties).
    Saturated blocks and customer charges go to the constant.
    """
    charges = item_charges(schedule, load)
    ceilings = schedule.tier_ceilings()
    coef = np.zeros(len(load))
    constant = 0.0
    tied_periods = []
    for ch in charges:
        item = schedule.items[ch.item]
        if item.kind is ChargeKind.CUSTOMER:
            constant += ch.amount
            continue
        floor, ceiling = item.tier_floor, ceilings[ch.item]
        if ch.quantity >= ceiling:
            constant += ch.amount
        elif ch.quantity >= floor:
            if item.kind is ChargeKind.ENERGY:
                coef[ch.hours] += item.rate
            else:
                coef[ch.peak_hour] += item.rate
                if ch.tied:
                    tied_periods.append((item.charge_family, ch.period))
            constant -= item.rate * floor
    return ChargeFunction(coef, constant, bool(tied_periods), tuple(tied_periods))
