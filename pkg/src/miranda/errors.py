"""Exception hierarchy shared by the number kernel, the expression layer and the solver."""


class MirandaError(Exception):
    """Base class for all errors raised by this package."""


class DivisionByZeroInterval(MirandaError, ZeroDivisionError):
    """Raised when an interval divisor contains zero."""


class DomainError(MirandaError, ArithmeticError):
    """An expression was evaluated outside its domain (e.g. a zero-containing denominator)."""


class PrecisionCeilingExceeded(MirandaError):
    """Precision escalation reached the configured ceiling without meeting a tolerance."""


class SingularToWorkingPrecision(MirandaError, ArithmeticError):
    """No usable pivot, or the inverse residual could not be certified below one."""


class ExpressionSyntaxError(MirandaError, SyntaxError):
    """Malformed system source."""


class DimensionMismatch(MirandaError, ValueError):
    """The number of components differs from the number of declared variables."""


class UnknownFunction(MirandaError, ValueError):
    """A function name outside {sin, cos, exp} was used."""


class MaxDepthExceeded(MirandaError):
    """Subdividing would create a box deeper than the configured maximum."""


class SingularEnclosure(MirandaError, ArithmeticError):
    """The inverse Jacobian could not be certified on a root neighbourhood."""


class UnsupportedDimension(MirandaError, ValueError):
    """An operation restricted to a particular dimension was called on another one."""
