"""Electricity tariff rate engine and cost/emissions reconciliation toolkit."""

from .analysis import (
    TariffCategory,
    categorize,
    correlation_table,
    flip_fraction,
    peak_premium,
    pearson,
    regime_map,
    summary_stats,
)
from .billing import LoadProfile, build_charge_function, compute_bill
from .emissions import GenEmisSeries, average_aef, estimate_mef, mef_aef_summary
from .estimators import (
    AverageEmissionsEstimator,
    MarginalEmissionsRegressor,
    MonthHourAverager,
    TariffFlattener,
)
from .geo import Gazetteer, RegionSet, assign_region, zip_to_coords
from .idropp import (
    IbdrProgram,
    compute_baseline,
    compute_payment,
    duration_bounds,
    equivalent_hours,
    parse_programs,
)
from .reconcile import (
    HourlySeries,
    MonthHourMatrix,
    align,
    flatten_tariff,
    month_hour_average,
    resample_to_hourly,
)
from .tariff import (
    ChargeItem,
    FilterCriteria,
    TariffSchedule,
    filter_applicable,
    parse_tariff_file,
    serialize_tariff,
    validate_schedule,
)

__version__ = "0.1.0"
