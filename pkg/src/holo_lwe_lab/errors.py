"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of an operation."""


class SizeError(LabError, ValueError):
    """A brute-force domain exceeds the configured cap."""


class GenerationError(LabError, RuntimeError):
    """Random instance generation failed to meet its postconditions."""


class UnsupportedModeError(LabError, ValueError):
    """The operation is not defined for the instance's mode."""


class InvalidStateError(LabError, ValueError):
    """A density or covariance matrix violates physicality."""


class PromiseViolationError(LabError, ValueError):
    """An entropy-difference promise does not hold.

    Attributes:
        gap: measured |S1 - S2| in bits.
    """

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class NumericalDegeneracyError(LabError, ArithmeticError):
    """Symplectic eigenvalue pairing failed."""


class InfeasibleParametersError(LabError, ValueError):
    """No BKZ block size satisfies the decoding condition."""
