"""Exception hierarchy shared by all modules."""


class UstLoopError(Exception):
    """Base class for every error raised by the package."""


class DegenerateApproximation(UstLoopError):
    pass


class CutNotSeparating(UstLoopError):
    pass


class DisconnectedRemainder(UstLoopError):
    pass


class MarkedPointRemoved(UstLoopError):
    pass


class SingularSystem(UstLoopError):
    pass


class ZeroDenominator(UstLoopError):
    pass


class CutsIntersect(UstLoopError):
    pass


class NoWiredBoundary(UstLoopError):
    pass


class NotAnnular(UstLoopError):
    pass


class MultipleCycles(UstLoopError):
    """The dual complement holds more than one cycle; indicates a bug upstream."""


class DimensionMismatch(UstLoopError):
    pass


class CutsDoNotSeparate(UstLoopError):
    pass


class LoopTouchesH(UstLoopError):
    pass


class TooLargeToEnumerate(UstLoopError):
    pass


class RadiusOutOfRange(UstLoopError):
    pass


class QuadratureUnstable(UstLoopError):
    pass


class LoopNotSeparated(UstLoopError):
    pass


class NumericalBlowup(UstLoopError):
    pass


class ProbeNotHit(UstLoopError):
    pass


class ConfigInvalid(UstLoopError):
    pass
