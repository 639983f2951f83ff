"""Exception hierarchy shared by all modules."""


class GCFDError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(GCFDError):
    """Invalid problem or run configuration."""


class DomainError(GCFDError, ValueError):
    """Argument outside the domain of a mathematical function."""


class GridMismatchError(GCFDError):
    """A tabulated function was evaluated off its declared grid."""


class DegenerateScaleError(GCFDError):
    """Two consecutive scale values coincide, so a coefficient divides by zero."""


class DegenerateGridError(GCFDError):
    """A grid is too coarse for the requested operation."""


class EmptySeriesError(GCFDError):
    """A derivative series was requested on a grid without interior levels."""


class UnsupportedOracleError(GCFDError):
    """No analytic reference is available for this configuration."""


class DominanceError(GCFDError):
    """A tridiagonal system is not strictly diagonally dominant."""


class DivisionDegeneracyError(GCFDError):
    """The weight function vanishes where it has to be inverted."""
