"""Exception types raised across the package."""


class StarkError(Exception):
    """Base class for all errors raised by confined_stark."""


class ParameterError(StarkError, ValueError):
    """An argument is outside its admissible range."""


class CapacityError(StarkError):
    """A table, cap or memory budget would be exceeded."""


class ResolutionError(StarkError, ValueError):
    """A grid is too coarse for the scale it has to resolve."""


class RangeError(StarkError, ValueError):
    """A point lies outside the chart it is evaluated on."""


class DomainAssumptionError(StarkError, ValueError):
    """The domain has no unique boundary minimiser of x1 with positive curvature."""


class IntegrityError(StarkError):
    """A result is incomplete or inconsistent with its certificate."""


class CoverageError(StarkError, ValueError):
    """A test function is not covered by the grid it is paired against."""


class ToleranceError(StarkError):
    """A quadrature or iteration did not reach its tolerance."""


class FitError(StarkError, ValueError):
    """Too few usable points for a rate fit."""


class SolverError(StarkError):
    """Factorisation or eigensolver breakdown that could not be recovered."""


class ConfigError(StarkError, ValueError):
    """A study configuration violates its schema."""


class ResolutionWarning(UserWarning):
    """A grid is coarse relative to the boundary-layer scale; results may be inaccurate."""
