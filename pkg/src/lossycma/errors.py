"""Exception hierarchy.

Every numerical precondition failure raises a subclass of ``CMAError`` so
callers (the CLI in particular) can turn them into a nonzero exit status.
"""


class CMAError(Exception):
    pass


class GeometryError(CMAError, ValueError):
    pass


class EvenSegmentCount(GeometryError):
    pass


class PoleAtMinusOne(CMAError, ValueError):
    pass


class SingularCoincidentPoints(CMAError, ValueError):
    pass


class BranchViolation(CMAError, ValueError):
    pass


class IllConditionedPrediction(CMAError):
    def __init__(self, msg, condition):
        super().__init__(f"{msg} (condition estimate {condition:.3e})")
        self.condition = condition


class RankDeficient(CMAError):
    def __init__(self, msg, recoverable):
        super().__init__(f"{msg} (recoverable exponentials: {recoverable})")
        self.recoverable = recoverable


class NonConvergentTail(CMAError):
    def __init__(self, msg, estimate, error_bound):
        super().__init__(f"{msg}: partial sum {estimate!r}, error bound {error_bound:.3e}")
        self.estimate = estimate
        self.error_bound = error_bound


class SingularSelfTerm(CMAError, ValueError):
    pass


class FitMissing(CMAError, ValueError):
    pass


class SingularMatrix(CMAError):
    def __init__(self, msg, condition):
        super().__init__(f"{msg} (condition estimate {condition:.3e})")
        self.condition = condition


class NotPositiveDefinite(CMAError):
    pass


class SingularPMatrix(SingularMatrix):
    pass


class PointOnWire(CMAError, ValueError):
    pass


class GridMismatch(CMAError, ValueError):
    pass


class MeshMismatch(CMAError, ValueError):
    pass


class DegenerateQuadratic(CMAError):
    pass


class ComplexRoots(CMAError):
    def __init__(self, msg, discriminant):
        super().__init__(f"{msg} (discriminant {discriminant:.6e})")
        self.discriminant = discriminant


class ZeroReference(CMAError, ValueError):
    pass


class ZeroVector(CMAError, ValueError):
    pass


class ZeroDenominator(CMAError, ValueError):
    pass
