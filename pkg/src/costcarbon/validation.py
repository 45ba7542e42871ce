"""Input checks shared by the estimator wrappers."""

import datetime as dt

import numpy as np
from sklearn.utils import check_array

from .tariff import TariffSchedule


def check_year(year):
    if int(year) != year or year < 2000:
        raise ValueError(f"year must be an integer >= 2000, got {year!r}")
    return int(year)


def check_start(start):
    if not isinstance(start, (dt.datetime, dt.date, np.datetime64, str)):
        raise TypeError(f"start must be a datetime, got {type(start).__name__}")
    return np.datetime64(start, "h")


def check_schedules(X):
    X = list(X)
    bad = [type(s).__name__ for s in X if not isinstance(s, TariffSchedule)]
    if bad:
        raise TypeError(f"expected TariffSchedule objects, got {', '.join(sorted(set(bad)))}")
    return X


def check_series_matrix(X):
    """2-D float array of hourly series, one per row; NaN marks missing hours."""
    return check_array(X, dtype=float, ensure_all_finite="allow-nan")


def check_hourly_vector(x, name="X"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a single hourly series, got shape {arr.shape}")
    return arr


def check_same_length(*arrays):
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"inconsistent series lengths {sorted(lengths)}")
