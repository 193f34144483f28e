"""Exception types shared across the package."""


class SpikeMetricError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SpikeMetricError):
    pass


class InsufficientClassCount(SpikeMetricError):
    pass


class MalformedRow(SpikeMetricError):
    pass


class NonFiniteValue(SpikeMetricError):
    pass


class LabelPoolEmpty(SpikeMetricError):
    pass


class ZeroScale(SpikeMetricError):
    pass


class ConvergenceFailure(SpikeMetricError):
    pass


class ScaleTooLarge(SpikeMetricError):
    pass


class SingularSystem(SpikeMetricError):
    pass


class EmptyProblem(SpikeMetricError):
    pass


class IndexOutOfRange(SpikeMetricError):
    pass


class NumericalBreakdown(SpikeMetricError):
    pass


class BothInfeasible(SpikeMetricError):
    pass


class ValidationError(SpikeMetricError):
    pass


class IoFailure(SpikeMetricError):
    pass
