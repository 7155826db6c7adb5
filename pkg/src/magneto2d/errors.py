"""Exception hierarchy shared by all modules."""


class Magneto2DError(Exception):
    """Base class for every error raised by the package."""


class DomainError(Magneto2DError, ValueError):
    """A field or potential was evaluated outside its regularity domain."""


class QuadratureError(Magneto2DError):
    """Adaptive quadrature failed to reach the requested tolerance.

    ``value`` and ``error`` hold the partial result and the achieved error
    estimate so callers can still inspect them.
    """

    def __init__(self, message, value=float("nan"), error=float("inf")):
        super().__init__(f"{message} (partial value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


class GeometryError(Magneto2DError):
    """The boundary curve does not yield a valid tubular chart."""


class OutOfCollar(DomainError):
    """A point lies outside the collar on which the chart is a diffeomorphism."""


class DegenerateMetric(Magneto2DError):
    """The tubular metric factor 1 - n*kappa vanished."""


class HypothesisViolation(Magneto2DError):
    """Input data does not satisfy the assumptions of the requested computation."""


class SingularityError(Magneto2DError):
    """A singular integral was requested at a point where it is not integrable."""


class UnboundedPotential(Magneto2DError):
    """The effective potential exceeded the boundedness threshold on the grid."""


class ConfigError(Magneto2DError):
    """Scenario configuration could not be parsed."""

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column
