"""Exception types raised across the package.

Every domain error derives from :class:`MelnikovError` so the CLI can map
the whole family onto a single exit status.
"""


class MelnikovError(Exception):
    """Base class for domain errors."""


class DegreeError(MelnikovError, ValueError):
    pass


class ExcludedParameter(MelnikovError, ValueError):
    """The Hamiltonian parameter is one of the excluded values a = 0, 8/9."""


class LevelOutsideAnnulus(MelnikovError, ValueError):
    pass


class QuadratureNotConverged(MelnikovError, ArithmeticError):
    pass


class SingularSystem(MelnikovError, ArithmeticError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StepFailure(MelnikovError, ArithmeticError):
    pass


class HamiltonianPerturbation(MelnikovError):
    """lambda = mu = 0: the perturbation is Hamiltonian and every M_k vanishes."""


class NotVanishing(MelnikovError):
    pass


class ReversibleCase(MelnikovError):
    """Q1 = 0: the perturbed field is time-reversible."""


class DegenerateCaseC(MelnikovError):
    pass


class NoBoundAvailable(MelnikovError):
    pass


class FlatnessViolation(MelnikovError, AssertionError):
    pass


class TargetInfeasible(MelnikovError):
    pass


class InsufficientSamples(MelnikovError, ValueError):
    pass
