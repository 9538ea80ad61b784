"""Exception types raised across the package."""


class QCorrError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(QCorrError, ValueError):
    pass


class NonPhysicalOperator(QCorrError, ValueError):
    pass


class NotPositive(NonPhysicalOperator):
    pass


class InvalidRank(QCorrError, ValueError):
    pass


class OutOfRange(QCorrError, ValueError):
    pass


class EvenN2(QCorrError, ValueError):
    pass


class UnsupportedDim(QCorrError, ValueError):
    pass


class EmptySet(QCorrError, ValueError):
    pass


class InvalidXState(QCorrError, ValueError):
    pass


class GridTooCoarse(QCorrError, ValueError):
    pass


class DegenerateFit(QCorrError, ValueError):
    pass


class NegativeResidual(QCorrError, ValueError):
    pass


class InsufficientSamples(QCorrError, ValueError):
    pass
