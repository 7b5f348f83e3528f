"""Exception hierarchy shared by every module of the package."""


class SphankelError(Exception):
    """Base class for all errors raised by :mod:`sphankel`."""


class DomainError(SphankelError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class HardEdgeError(DomainError):
    """The lower support endpoint sticks to the origin (t = 0 and alpha = 0)."""


class SaddleAbsentError(DomainError):
    """The exponent v(x) has no stationary point on (0, inf)."""


class QuadratureError(SphankelError, ArithmeticError):
    """Refinement did not converge before the maximum level.

    Attributes
    ----------
    estimates : tuple
        The last two quadrature estimates (coarser first).
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class NewtonError(SphankelError, ArithmeticError):
    """Newton iteration diverged or ran out of iterations.

    Attributes
    ----------
    trace : list of (x, y) tuples
        Every iterate visited, starting point first.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class PrecisionInsufficientError(SphankelError, ArithmeticError):
    """A Cholesky pivot was non-positive or drowned in rounding noise."""

    def __init__(self, message, pivot_index, pivot_value):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value


class EscalationCeilingError(SphankelError, ArithmeticError):
    """Precision escalation would exceed the configured ceiling.

    Attributes
    ----------
    partial : dict
        Whatever was computed before giving up (bits tried, lambda estimates).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = dict(partial or {})
