"""Exception hierarchy shared by all solver modules."""


class HsRiccatiError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HsRiccatiError, ValueError):
    pass


class PreconditionError(HsRiccatiError, ValueError):
    pass


class EigenSolverError(HsRiccatiError):
    pass


class CoercivityError(PreconditionError):
    """A coercivity certificate sym(A) - omega*G >= 0 does not hold."""


class SingularSystemError(HsRiccatiError):
    pass


class ConvergenceError(HsRiccatiError):
    """An iteration stopped before meeting its tolerance.

    ``last_residual`` carries the final residual (or increment) seen.
    """

    def __init__(self, message, last_residual=float("nan")):
        super().__init__(message)
        self.last_residual = last_residual


class ContractionViolation(HsRiccatiError):
    pass


class BoundViolation(HsRiccatiError):
    pass


class HypothesesNotMet(PreconditionError):
    pass


class UnstableClosedLoop(HsRiccatiError):
    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class QuadratureError(HsRiccatiError):
    pass


class IntegratorBlowUp(HsRiccatiError):
    pass
