"""Exception hierarchy.

Every error raised by the engine derives from :class:`DspinError`. The three
intermediate classes map onto CLI exit codes (2 config, 3 geometry,
4 numerical tolerance).
"""


class DspinError(Exception):
    exit_code = 1


class ConfigError(DspinError):
    exit_code = 2


class GeometryError(DspinError):
    exit_code = 3


class NumericalError(DspinError):
    exit_code = 4


class ConfigInvalid(ConfigError):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UnknownCurve(ConfigError):
    pass


# surface-geometry
class OutOfDomain(GeometryError):
    pass


class DegenerateChart(GeometryError):
    pass


class SingularMetric(GeometryError):
    pass


# curve-frames
class IrregularCurve(GeometryError):
    pass


class VanishingCurvature(GeometryError):
    pass


class NotClosed(GeometryError):
    pass


# fermi-coordinates
class LeftChartDomain(GeometryError):
    pass


class StepTooLarge(NumericalError):
    pass


class FitFailed(NumericalError):
    pass


# su2-transport
class ZeroAxis(NumericalError):
    pass


class ToleranceNotMet(NumericalError):
    pass


class ZeroLengthSegment(GeometryError):
    pass


class GridTooCoarse(NumericalError):
    pass


# topology-flux
class RegionNotResolved(NumericalError):
    pass
