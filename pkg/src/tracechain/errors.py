"""Exception types shared across the package."""


class TraceChainError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TraceChainError, ValueError):
    """A value fails the structural requirements of its type."""


class DomainError(TraceChainError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateCellError(TraceChainError, ValueError):
    """A partition cell carries zero speed-measure mass.

    The trace chain is undefined on such a cell (the holding rate would be
    infinite), so this is a hard error rather than a silent merge.
    """


class ScaleDegeneracyError(TraceChainError, ValueError):
    """Two neighbouring grid points share the same scale value."""


class UnsupportedEnergyClass(TraceChainError, TypeError):
    """No closed form exists for this (function, scale) combination.

    Raised instead of falling back to quadrature: energy values feed exact
    inequalities, so a silent approximation would be worse than an error.
    """


class CheckFailed(TraceChainError):
    """A numerical property that must hold was violated."""


class ConfigError(TraceChainError, ValueError):
    """A configuration document violates the schema."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
