"""Exception hierarchy.

Errors fall in three families so the CLI can map them to exit codes:
input/data problems (2), estimation problems (1) and solver
non-convergence (3).
"""

from __future__ import annotations


class SdidError(Exception):
    """Base class for every error raised by this package."""


class InputError(SdidError, ValueError):
    """Malformed or insufficient input data."""


class EstimationError(SdidError):
    """Estimation could not be carried out on otherwise valid data."""


# -- panel construction -----------------------------------------------------


class EmptyInput(InputError):
    pass


class DuplicateCell(InputError):
    def __init__(self, unit, period):
        self.unit = unit
        self.period = period
        super().__init__(f"duplicate cell for unit {unit!r}, period {period!r}")


class UnbalancedPanel(InputError):
    def __init__(self, missing):
        # list of (unit, period) pairs without a value
        self.missing = list(missing)
        shown = ", ".join(f"({u!r}, {p!r})" for u, p in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" and {len(self.missing) - 10} more"
        super().__init__(f"unbalanced panel, missing cells: {shown}{more}")


class PeriodParseError(InputError):
    pass


class NoControls(InputError):
    pass


class NoTreated(InputError):
    pass


class NoPrePeriods(InputError):
    pass


class NoPostPeriods(InputError):
    pass


# -- ingestion ----------------------------------------------------------------


class SchemaMismatch(InputError):
    def __init__(self, missing_columns):
        self.missing_columns = list(missing_columns)
        super().__init__(f"missing columns: {', '.join(self.missing_columns)}")


class NoValidRows(InputError):
    pass


class MissingPopulation(InputError):
    def __init__(self, economies):
        self.economies = list(economies)
        super().__init__(f"no population for: {', '.join(map(str, self.economies))}")


class EmptyAfterFilters(InputError):
    pass


# -- estimation -----------------------------------------------------------------


class DimensionMismatch(EstimationError, ValueError):
    pass


class InsufficientPrePeriods(EstimationError, ValueError):
    pass


class DegenerateDesign(EstimationError):
    pass


class TooManyRedraws(EstimationError):
    def __init__(self, redraws, limit):
        self.redraws = redraws
        self.limit = limit
        super().__init__(
            f"{redraws} degenerate bootstrap resamples exceeded the limit of {limit}"
        )


class ProvenanceMismatch(EstimationError):
    pass


class IncompleteBundle(EstimationError):
    pass


class DidNotConverge(SdidError):
    """Raised by the simplex solver when the iteration budget runs out.

    Carries the best iterate so callers can decide whether it is usable.
    """

    def __init__(self, weights, objective, iterations, gap, intercept=None):
        self.weights = weights
        self.objective = objective
        self.iterations = iterations
        self.gap = gap
        self.intercept = intercept
        super().__init__(
            f"simplex solver stopped after {iterations} iterations "
            f"(objective={objective:.6g}, duality gap={gap:.3g})"
        )


def exit_code(exc: BaseException) -> int:
    """Process exit code for an error raised inside a CLI command."""
    if isinstance(exc, DidNotConverge):
        return 3
    if isinstance(exc, (InputError, FileNotFoundError)):
        return 2
    return 1
