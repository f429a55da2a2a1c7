"""Exception hierarchy shared by the symbolic and numerical layers."""


class HirotaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HirotaError):
    """Operands built over incompatible rings, or a malformed configuration."""


class CycleError(HirotaError):
    """A substitution rule set does not terminate."""


class ParseError(HirotaError):
    pass


class UnsupportedApplicationError(HirotaError):
    """A nonlocal operator was applied symbolically."""


class NormalizationError(HirotaError):
    """A composition would nest the formal inverse twice."""


class UnsupportedAdjointError(HirotaError):
    pass


class PreconditionError(HirotaError):
    pass


class ValidationError(HirotaError):
    """Coefficient vector violates its case invariants."""


class InternalConsistencyError(HirotaError):
    pass


class VariantError(HirotaError):
    """Operator variant incompatible with the coefficient case."""


class DegenerateInputError(HirotaError):
    pass


class ConstraintError(HirotaError):
    """The Hamiltonian c9 constraint does not hold."""

    def __init__(self, message, expected=None, actual=None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class CaseError(HirotaError):
    """A closed-form solution hit a vanishing divisor."""


class DomainError(HirotaError):
    """A density cannot be evaluated on the periodic grid."""


class BlowUpError(HirotaError):
    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time
