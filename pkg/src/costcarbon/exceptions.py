"""Exception types raised across the package."""


class TariffParseError(ValueError):
    """A tariff or metadata row could not be parsed."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ScheduleValidationError(ValueError):
    """A tariff schedule violates one or more structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} invariant violation(s): {lines}")


class AlignmentError(ValueError):
    """Two month-hour matrices share fewer than two hours in a month."""


class BaselineInfeasibleError(ValueError):
    """Not enough eligible history days to build a demand-response baseline."""


class UnsupportedMethodError(ValueError):
    """A baseline aggregation function is recognised but not implemented."""


class ZipNotFoundError(KeyError):
    """A ZIP code is absent from the gazetteer."""
