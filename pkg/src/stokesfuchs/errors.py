"""Exception hierarchy and warning categories."""


class MonodromyError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(MonodromyError):
    pass


class DuplicateEigenvalue(MonodromyError):
    pass


class InadmissibleDirection(MonodromyError):
    """Raised when a direction angle collides with a critical value.

    Carries the distance (in radians) to the nearest critical value.
    """

    def __init__(self, distance, message=None):
        self.distance = float(distance)
        super().__init__(message or f"direction within {self.distance:.3e} rad of a critical value")


class SeriesDivergence(MonodromyError):
    pass


class OutOfRadius(MonodromyError):
    pass


class PathPlanningFailure(MonodromyError):
    def __init__(self, clearance, message=None):
        self.clearance = float(clearance)
        super().__init__(message or f"could not route path; best clearance {self.clearance:.3e}")


class StepUnderflow(MonodromyError):
    pass


class ToleranceNotMet(MonodromyError):
    pass


class IllConditionedDecomposition(MonodromyError):
    def __init__(self, cond, message=None):
        self.cond = float(cond)
        super().__init__(message or f"local decomposition condition number {self.cond:.3e}")


class Unavailable(MonodromyError):
    """The dual solution family does not exist (eigenvalue of the residue
    matrix too close to a negative integer)."""

    def __init__(self, offending_eigenvalue, message=None):
        self.offending_eigenvalue = complex(offending_eigenvalue)
        super().__init__(message or
                         f"dual basis unavailable: eigenvalue {self.offending_eigenvalue} "
                         "is (near) a negative integer")


class AnchorAccuracyInsufficient(MonodromyError):
    pass


class OverlapConditioning(MonodromyError):
    def __init__(self, spread, message=None):
        self.spread = float(spread)
        super().__init__(message or f"overlap sample spread {self.spread:.3e} too large")


class QuadratureNotConverged(MonodromyError):
    pass


class ParseError(MonodromyError):
    pass


class NearResonance(UserWarning):
    """A diagonal entry of the residue matrix is suspiciously close to an
    integer without being one; conditioning alert, not a failure."""
