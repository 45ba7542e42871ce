"""Incentive-based demand-response programs: schema, parsing and settlement arithmetic."""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import BaselineInfeasibleError, UnsupportedMethodError

MISSING = "n/a"
DEFAULT_MIN_DURATION_H = 1.0
DEFAULT_MAX_DURATION_H = 6.3  # longest event duration observed across the 2023 programs

# (plain-language name, column id, short description), in file order
PARAMETERS = (
    ("Minimum number of event days", "min_days", "Fewest event days called per month"),
    ("Maximum number of event days", "max_days", "Most event days called per month"),
    ("Minimum duration of event", "min_dur", "Shortest allowed event, hours"),
    ("Maximum duration of event", "max_dur", "Longest allowed event, hours"),
    ("Program start time", "start_time", "Daily start of the event window"),
    ("Program end time", "end_time", "Daily end of the event window"),
    ("Maximum events", "max_events", "Event cap per season"),
    ("Maximum event hours", "max_hours", "Cap on total event hours per year"),
    ("Events per day", "events_daily", "Event cap per day"),
    ("Maximum consecutive event days", "max_consec", "Cap on consecutive event days per month"),
    ("Notification type", "notif_type", "Day-ahead or same-day notice"),
    ("Notification time", "notif_time", "Clock time of the notice"),
    ("Notification time delta", "notif_delt", "Hours from notice to event start"),
    ("Baseline calculation method", "base_method", "Named baseline method"),
    ("Presence of historic data", "hist_pres", "Whether historic event data exists"),
    ("Payment function", "pay_function", "Form of compensation"),
    ("Region", "region", "DOE region"),
    ("Day of the week", "dow", "Days on which events may fall"),
    ("Season", "season", "Seasons in which the program runs"),
    ("Eligibility", "elig", "Participation requirements"),
    ("Company", "comp", "Offering company or companies"),
    ("Start month", "sm", "First month of the event season"),
    ("End month", "em", "Last month of the event season"),
    ("State", "state", "State of eligibility"),
    ("Utility", "util", "Eligible utilities"),
    ("Trigger", "trigger", "Event trigger type"),
    ("Eligible load type", "load", "Load types that may participate"),
    ("Program or rate", "program_rate", "Program or rate classification"),
    ("Baseline Function", "function_base", "Function used to settle an event"),
    ("Delivered Ratio", "delivered_ratio", "Reduction divided by nominated reduction"),
    ("Amount reduced", "amount_reduced", "Baseline minus metered consumption"),
    ("Inclusion of weekends", "weekends", "Baseline uses weekend days"),
    ("Inclusion of holidays", "holidays", "Baseline uses holidays"),
    ("Inclusion of previous events", "prev_events", "Baseline uses prior event days"),
    ("Baseline hours", "base_hours", "Hours of day measured for the baseline"),
    ("Range value", "range_val", "Number of measurements in the baseline"),
    ("Range resolution", "range_res", "Measurement frequency for the baseline"),
    ("Date range", "base_dates", "Dates measured for the baseline"),
    ("Function", "function", "Aggregation across baseline measurements"),
    ("Firm level demand", "firm_level", "Firm load level replacing the baseline, kW"),
)
COLUMN_IDS = tuple(p[1] for p in PARAMETERS)

_FLOAT = {"min_days", "max_days", "min_dur", "max_dur", "max_events", "max_hours",
          "events_daily", "max_consec", "notif_delt", "firm_level"}
_INT = {"range_val", "sm", "em"}
_BOOL = {"weekends", "holidays", "prev_events"}
_TRUE = {"yes", "y", "true", "t", "1", "included", "include"}
_FALSE = {"no", "n", "false", "f", "0", "excluded", "exclude"}

BASELINE_FUNCTIONS = {"mean": np.mean, "average": np.mean, "max": np.max, "maximum": np.max,
                      "median": np.median}


@dataclass(frozen=True)
class IbdrProgram:
    """One program row; ``None`` stands for the ``n/a`` marker."""

    min_days: Optional[float] = None
    max_days: Optional[float] = None
    min_dur: Optional[float] = None
    max_dur: Optional[float] = None
    start_time: Optional[str] = None
    end_time: Optional[str] = None
    max_events: Optional[float] = None
    max_hours: Optional[float] = None
    events_daily: Optional[float] = None
    max_consec: Optional[float] = None
    notif_type: Optional[str] = None
    notif_time: Optional[str] = None
    notif_delt: Optional[float] = None
    base_method: Optional[str] = None
    hist_pres: Optional[str] = None
    pay_function: Optional[str] = None
    region: Optional[str] = None
    dow: Optional[str] = None
    season: Optional[str] = None
    elig: Optional[str] = None
    comp: Optional[str] = None
    sm: Optional[int] = None
    em: Optional[int] = None
    state: Optional[str] = None
    util: Optional[str] = None
    trigger: Optional[str] = None
    load: Optional[str] = None
    program_rate: Optional[str] = None
    function_base: Optional[str] = None
    delivered_ratio: Optional[str] = None
    amount_reduced: Optional[str] = None
    weekends: Optional[bool] = None
    holidays: Optional[bool] = None
    prev_events: Optional[bool] = None
    base_hours: Optional[str] = None
    range_val: Optional[int] = None
    range_res: Optional[str] = None
    base_dates: Optional[str] = None
    function: Optional[str] = None
    firm_level: Optional[float] = None
    # columns beyond the standard set (program name, URL, ...), kept for round trips
    extra: tuple = field(default=(), compare=True)

    def __post_init__(self):
        if self.min_dur is not None and self.max_dur is not None and self.min_dur > self.max_dur:
            raise ValueError(f"min_dur {self.min_dur} exceeds max_dur {self.max_dur}")
        if self.range_val is not None and self.range_val < 1:
            raise ValueError(f"range_val must be a positive integer, got {self.range_val}")

    def missing_fields(self):
        return [c for c in COLUMN_IDS if getattr(self, c) is None]


def _parse_cell(column, text):
    text = text.strip()
    if not text or text.lower() == MISSING:
        return None
    if column in _FLOAT:
        return float(text)
    if column in _INT:
        number = float(text)
        if not number.is_integer():
            raise ValueError(f"expected an integer, got {text!r}")
        return int(number)
    if column in _BOOL:
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected yes/no, got {text!r}")
    return text


def _format_cell(value):
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_programs(text):
    """Parse ``us_program_parameters.csv`` text into programs, one per data row."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValueError("program file is empty") from None
    missing = [c for c in COLUMN_IDS if c not in header]
    if missing:
        raise ValueError(f"program file lacks required column(s): {', '.join(missing)}")
    extras = [h for h in header if h not in COLUMN_IDS]
    programs = []
    for rownum, row in enumerate(reader, start=2):
        if not row or not any(c.strip() for c in row):
            continue
        row = row + [""] * (len(header) - len(row))
        record = dict(zip(header, row))
        values = {}
        for column in COLUMN_IDS:
            try:
                values[column] = _parse_cell(column, record[column])
            except ValueError as exc:
                raise ValueError(f"row {rownum}, column {column!r}: {exc}") from None
        values["extra"] = tuple((h, record[h]) for h in extras)
        try:
            programs.append(IbdrProgram(**values))
        except ValueError as exc:
            raise ValueError(f"row {rownum}: {exc}") from None
    return programs


def serialize_programs(programs):
    extras = []
    for p in programs:
        for name, _ in p.extra:
            if name not in extras:
                extras.append(name)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*extras, *COLUMN_IDS])
    for p in programs:
        extra = dict(p.extra)
        writer.writerow([extra.get(e, "") for e in extras] + [_format_cell(getattr(p, c)) for c in COLUMN_IDS])
    return buf.getvalue()


def parameters_csv():
    """Text of ``program_parameters.csv``: one parameter per row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["column_name", "column_id", "description"])
    writer.writerows(PARAMETERS)
    return buf.getvalue()


def parse_parameters(text):
    """Read ``program_parameters.csv`` into ``(column_name, column_id, description)`` tuples."""
    reader = csv.DictReader(io.StringIO(text))
    need = {"column_name", "column_id", "description"}
    if not need <= set(reader.fieldnames or []):
        raise ValueError("parameter file needs columns column_name,column_id,description")
    return [(r["column_name"].strip(), r["column_id"].strip(), r["description"].strip()) for r in reader]


def base_hours(program):
    """Hours of day used for the baseline.

    Accepts ``"H1-H2"`` (end-exclusive) or a comma list of hours; missing
    means all 24 hours.
    """
    text = program.base_hours
    if text is None:
        return list(range(24))
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = (int(float(part)) for part in text.split("-", 1))
        if not 0 <= lo < hi <= 24:
            raise ValueError(f"bad base_hours range {text!r}")
        return list(range(lo, hi))
    hours = sorted({int(float(h)) for h in text.split(",") if h.strip()})
    if not hours or hours[0] < 0 or hours[-1] > 23:
        raise ValueError(f"bad base_hours list {text!r}")
    return hours


def eligible_days(program, history, event_date, holidays=(), event_days=()):
    """Dates before ``event_date`` that the inclusion flags allow, most recent first.

    A flag set to ``False`` excludes that kind of day; a missing flag excludes nothing.
    """
    holidays, event_days = set(holidays), set(event_days)
    days = []
    for day in sorted(history, reverse=True):
        if day >= event_date:
            continue
        if program.weekends is False and day.weekday() >= 5:
            continue
        if program.holidays is False and day in holidays:
            continue
        if program.prev_events is False and day in event_days:
            continue
        days.append(day)
    return days


def compute_baseline(program, history, event_date, holidays=(), event_days=()):
    """Baseline kW for each hour in :func:`base_hours`.

    ``history`` maps dates to 24 hourly kW readings. The most recent
    ``range_val`` eligible days are combined hour by hour with the program's
    ``function`` (mean when unspecified). A firm service level replaces the
    baseline outright.
    """
    hours = base_hours(program)
    if program.firm_level is not None:
        return np.full(len(hours), float(program.firm_level))
    name = (program.function or "mean").strip().lower()
    if name not in BASELINE_FUNCTIONS:
        raise UnsupportedMethodError(f"baseline function {program.function!r} is not supported")
    if program.range_val is None:
        raise BaselineInfeasibleError("program has neither range_val nor firm_level")
    days = eligible_days(program, history, event_date, holidays, event_days)
    if len(days) < program.range_val:
        raise BaselineInfeasibleError(
            f"{len(days)} eligible day(s) before {event_date}; need {program.range_val}"
        )
    chosen = np.array([np.asarray(history[d], dtype=float) for d in days[: program.range_val]])
    if chosen.shape[1] != 24:
        raise ValueError("history days must hold 24 hourly readings")
    return BASELINE_FUNCTIONS[name](chosen[:, hours], axis=0)


@dataclass(frozen=True)
class Settlement:
    payment: float
    delivered_ratio: float
    amount_reduced: np.ndarray


def compute_payment(program, baseline, metered, nomination_kw, rate, rate_unit="per_kw"):
    """Settle one event of hourly readings.

    ``per_kw`` rates pay each hour's reduction capped at the nomination;
    ``per_kwh`` rates pay the whole reduction.
    """
    baseline = np.asarray(baseline, dtype=float)
    metered = np.asarray(metered, dtype=float)
    if baseline.shape != metered.shape or baseline.ndim != 1 or baseline.size == 0:
        raise ValueError("baseline and metered readings must be equal-length hourly vectors")
    if rate < 0:
        raise ValueError("payment rate must be non-negative")
    if rate_unit not in ("per_kw", "per_kwh"):
        raise ValueError(f"unknown rate unit {rate_unit!r}")
    if rate_unit == "per_kw" and nomination_kw <= 0:
        raise ValueError("a per-kW payment needs a positive nomination")
    duration = float(baseline.size)
    lo, hi = duration_bounds(program)
    if not lo <= duration <= hi:
        raise ValueError(f"event of {duration:g} h outside allowed duration [{lo:g}, {hi:g}] h")
    reduced = np.maximum(baseline - metered, 0.0)
    if rate_unit == "per_kw":
        payment = rate * float(np.minimum(reduced, nomination_kw).sum())
    else:
        payment = rate * float(reduced.sum())
    ratio = float(reduced.sum()) / (nomination_kw * duration) if nomination_kw > 0 else math.nan
    return Settlement(payment, ratio, reduced)


def duration_bounds(program):
    lo = DEFAULT_MIN_DURATION_H if program.min_dur is None else float(program.min_dur)
    hi = DEFAULT_MAX_DURATION_H if program.max_dur is None else float(program.max_dur)
    # a single declared bound wins over the opposite default
    if program.min_dur is None and lo > hi:
        lo = hi
    if program.max_dur is None and hi < lo:
        hi = lo
    return lo, hi


def equivalent_hours(payment_per_kw, reference_price):
    """Hours of 1 kW consumption bought by a per-kW payment at ``reference_price`` $/kWh."""
    if not reference_price > 0:
        raise ValueError("reference price must be positive")
    return payment_per_kw / reference_price

