"""Exception hierarchy shared by all modules."""


class RealGITError(Exception):
    """Base class for every error raised by this package."""


class NonMember(RealGITError):
    """A matrix violates the constraints of its group kind."""


class NumericFailure(RealGITError):
    """A factorization or post-condition check failed numerically."""


class NotInParabolic(RealGITError):
    """Conjugation trajectory exp(t beta) g exp(-t beta) diverges."""


class InvalidPoint(RealGITError):
    """A model point is not valid for its space (e.g. zero projective vector)."""


class NotTangent(RealGITError):
    """A projective tangent vector has a component along the base point."""


class NotFixed(RealGITError):
    """The point is not a zero of the fundamental vector field."""


class Overflow(RealGITError):
    """A linear-model flow left the representable range."""


class Diverged(RealGITError):
    """lim exp(t beta) x does not exist."""


class BudgetExceeded(RealGITError):
    """An iteration budget ran out before a stopping rule fired.

    ``partial`` carries whatever state the caller may still want to report.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ZeroDirection(RealGITError):
    """A nonzero direction was required."""


class NotCommuting(RealGITError):
    """Two directions were expected to commute."""


class EmptyIndexSet(RealGITError):
    """No tangent direction has both Hessian eigenvalues nonzero; delta is +inf."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotSemistable(RealGITError):
    """A destabilizing direction (negative maximal weight) was found."""

    def __init__(self, message, beta=None, weight=None):
        super().__init__(message)
        self.beta = beta
        self.weight = weight


class Undecided(RealGITError):
    """Classification could not be settled within the budget."""


class ScenarioError(RealGITError):
    """Malformed scenario input."""
