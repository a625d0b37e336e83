"""Exception types raised by the solver stack."""


class GeodesicError(Exception):
    """Base class for all library errors."""


class NotHolomorphic(GeodesicError):
    pass


class TooCloseToZero(GeodesicError):
    pass


class OutsideDisc(GeodesicError):
    pass


class NotSLC(GeodesicError):
    pass


class SampleOffBoundary(GeodesicError):
    pass


class ChartSingularity(GeodesicError):
    pass


class NotInLp(GeodesicError):
    pass


class NotAdmissible(GeodesicError):
    pass


class IllConditioned(GeodesicError):
    pass


class BasisDegenerate(GeodesicError):
    pass


class DualDegenerate(GeodesicError):
    pass


class FirstComponentVanishes(GeodesicError):
    pass


class NoConvergence(GeodesicError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DualNotHolomorphic(GeodesicError):
    pass


class TooCloseToSingularity(GeodesicError):
    pass


class NotPositiveDefinite(GeodesicError):
    pass


class OutsideCollar(GeodesicError):
    pass
