"""Hourly calendar arithmetic on naive local standard time (no DST)."""

import datetime as dt

import numpy as np

HOURS_PER_DAY = 24


def to_hour(start):
    """Return ``start`` as a ``numpy.datetime64`` at hour resolution."""
    if isinstance(start, np.datetime64):
        value = start.astype("datetime64[m]")
    else:
        value = np.datetime64(start, "m")
    if value.astype(int) % 60:
        raise ValueError(f"timestamp {start} is not aligned to the hour")
    return value.astype("datetime64[h]")


def hour_stamps(start, n):
    return to_hour(start) + np.arange(n)


def calendar_fields(start, n):
    """Month (1-12), weekday (0=Monday), hour-of-day, day and month ids for ``n`` hours."""
    stamps = hour_stamps(start, n)
    days = stamps.astype("datetime64[D]")
    months = stamps.astype("datetime64[M]")
    day_id = days.astype(np.int64)
    month_id = months.astype(np.int64)
    return {
        "month": month_id % 12 + 1,
        "weekday": (day_id + 3) % 7,  # 1970-01-01 was a Thursday
        "hour": (stamps - days).astype(np.int64),
        "day_id": day_id,
        "month_id": month_id,
    }


def year_start(year):
    return dt.datetime(year, 1, 1)


def hours_in_year(year):
    return int((np.datetime64(f"{year + 1}-01-01", "h") - np.datetime64(f"{year}-01-01", "h")).astype(int))


def month_label(month_id):
    return str(np.datetime64(int(month_id), "M"))


def day_label(day_id):
    return str(np.datetime64(int(day_id), "D"))


def format_stamp(stamp):
    """ISO text for an hourly timestamp, e.g. ``2023-01-01T05:00``."""
    return str(np.datetime64(stamp, "m"))


def parse_stamp(text):
    try:
        return np.datetime64(text.strip().replace(" ", "T"), "m")
    except ValueError as exc:
        raise ValueError(f"unparseable timestamp {text!r}") from exc
