"""scikit-learn style wrappers so the reconciliation steps compose in pipelines."""

import datetime as dt

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _time
from .emissions import GenEmisSeries, average_aef, estimate_mef
from .reconcile import HOURS, MONTHS, HourlySeries, Unit, flatten_tariff, month_hour_average
from .validation import (
    check_hourly_vector,
    check_same_length,
    check_schedules,
    check_series_matrix,
    check_start,
    check_year,
)


class TariffFlattener(TransformerMixin, BaseEstimator):
    """Turn tariff schedules into hourly $/kWh rows for a flat 1 MW load.

    Stateless: ``fit`` only records the output width.
    """

    def __init__(self, year=2023, kinds=("energy", "demand")):
        self.year = year
        self.kinds = kinds

    def fit(self, X, y=None):
        check_schedules(X)
        self.n_hours_out_ = _time.hours_in_year(check_year(self.year))
        return self

    def transform(self, X):
        check_is_fitted(self, "n_hours_out_")
        X = check_schedules(X)
        out = np.empty((len(X), self.n_hours_out_))
        for row, schedule in enumerate(X):
            out[row] = flatten_tariff(schedule, self.year, self.kinds).values
        return out


class MonthHourAverager(TransformerMixin, BaseEstimator):
    """Average hourly rows into 288 (month, hour) means, month-major."""

    def __init__(self, start=dt.datetime(2023, 1, 1)):
        self.start = start

    def fit(self, X, y=None):
        X = check_series_matrix(X)
        check_start(self.start)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_series_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} hours; fitted on {self.n_features_in_}")
        out = np.empty((X.shape[0], MONTHS * HOURS))
        for row, values in enumerate(X):
            series = HourlySeries("", Unit.USD_PER_KWH, self.start, values)
            out[row] = month_hour_average(series).cells.ravel()
        return out


class _EmissionsFactorEstimator(BaseEstimator):
    def __init__(self, start=dt.datetime(2023, 1, 1)):
        self.start = start

    def _series(self, X, y):
        gen = check_hourly_vector(X, "X")
        emis = check_hourly_vector(y, "y")
        check_same_length(gen, emis)
        return GenEmisSeries("", check_start(self.start), gen, emis)

    def fit(self, X, y):
        self.matrix_ = self._estimate(self._series(X, y))
        self.coef_ = np.array(self.matrix_.cells)
        return self

    def predict(self, X):
        """Emissions (kg) attributed to an hourly energy profile ``X`` (MWh) starting at ``start``."""
        check_is_fitted(self, "coef_")
        energy = check_hourly_vector(X)
        cal = _time.calendar_fields(self.start, energy.size)
        return self.coef_[cal["month"] - 1, cal["hour"]] * energy


class AverageEmissionsEstimator(_EmissionsFactorEstimator):
    """Fit month-hour average emissions factors from generation (X) and emissions (y)."""

    def _estimate(self, series):
        return average_aef(series)


class MarginalEmissionsRegressor(_EmissionsFactorEstimator):
    """Fit month-hour marginal emissions factors by regression on hourly changes."""

    def __init__(self, start=dt.datetime(2023, 1, 1), min_pairs=2):
        super().__init__(start)
        self.min_pairs = min_pairs

    def _estimate(self, series):
        return estimate_mef(series, self.min_pairs)
