"""Exception and warning classes shared across the toolkit."""


class RectennaError(Exception):
    """Base class for every error raised by this package."""


# netlist validation
class NetlistError(RectennaError, ValueError):
    pass


class EmptyCircuit(NetlistError):
    pass


class DanglingNode(NetlistError):
    pass


class FloatingSubcircuit(NetlistError):
    pass


class NonPositiveValue(NetlistError):
    pass


# solver failures
class SolverFailure(RectennaError):
    pass


class NoConvergence(SolverFailure):
    def __init__(self, message, residual=None, time=None):
        super().__init__(message)
        self.residual = residual
        self.time = time


class SingularMatrix(SolverFailure):
    pass


class NonlinearWithoutOP(RectennaError, ValueError):
    pass


# design-equation input guards
class InvalidGeometry(RectennaError, ValueError):
    pass


class InvalidSubstrate(RectennaError, ValueError):
    pass


class InvalidInput(RectennaError, ValueError):
    pass


class InvalidElement(RectennaError, ValueError):
    pass


class InvalidLink(RectennaError, ValueError):
    pass


class Unmatchable(RectennaError, ValueError):
    pass


class DegenerateInput(RectennaError, ValueError):
    pass


class OutOfCurveRange(RectennaError, ValueError):
    pass


# advisories
class ThickSubstrateWarning(UserWarning):
    pass


class AlreadyMatchedWarning(UserWarning):
    pass


class StepTooLargeWarning(UserWarning):
    pass


class FarFieldWarning(UserWarning):
    pass
