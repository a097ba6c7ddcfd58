"""Named error types.

Every domain error carries a stable ``code`` string; the command-line driver
prints it so failures are greppable in batch logs.
"""


class PhaseflowError(Exception):
    code = "PhaseflowError"

    def __str__(self):
        msg = super().__str__()
        return f"{msg}" if msg else self.code


class InvalidExtent(PhaseflowError):
    code = "InvalidExtent"


class TooCoarse(PhaseflowError):
    code = "TooCoarse"


class GridTooSmall(PhaseflowError):
    code = "GridTooSmall"


class GridTooCoarse(PhaseflowError):
    code = "GridTooCoarse"


class GridMismatch(PhaseflowError):
    code = "GridMismatch"


class DegreeTooHigh(PhaseflowError):
    code = "DegreeTooHigh"


class QuadratureUnderresolved(PhaseflowError):
    code = "QuadratureUnderresolved"


class StationaryPoint(PhaseflowError):
    code = "StationaryPoint"


class EnergyDrift(PhaseflowError):
    code = "EnergyDrift"


class TooFewSamples(PhaseflowError):
    code = "TooFewSamples"


class OutflowDetected(PhaseflowError):
    code = "OutflowDetected"


class GaugeUnsupported(PhaseflowError):
    code = "GaugeUnsupported"


class AllMasked(PhaseflowError):
    code = "AllMasked"


class NoClosedOrbit(PhaseflowError):
    code = "NoClosedOrbit"


class EnergyBelowMinimum(PhaseflowError):
    code = "EnergyBelowMinimum"


class RootNotBracketed(PhaseflowError):
    code = "RootNotBracketed"


class OrbitOutsideGrid(PhaseflowError):
    code = "OrbitOutsideGrid"


class AmplitudeZeroOnOrbit(PhaseflowError):
    code = "AmplitudeZeroOnOrbit"


class SingularJacobian(PhaseflowError):
    code = "SingularJacobian"


class UnsupportedModel(PhaseflowError):
    code = "UnsupportedModel"


class UsageError(PhaseflowError):
    code = "UsageError"


class InvalidFile(PhaseflowError):
    code = "InvalidFile"
