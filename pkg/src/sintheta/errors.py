"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or split rank are incompatible."""


class NonFiniteError(ValueError):
    """A matrix contains NaN or Inf entries."""


class OrthonormalityError(ValueError):
    """A basis that should be orthonormal is not, beyond tolerance."""


class NumericalError(ArithmeticError):
    """An underlying decomposition failed to converge."""


class GapViolation(ValueError):
    """The cross singular-value gaps are not bounded away from zero."""


class ContractionError(ArithmeticError):
    """The series map is not certified to be a contraction."""


class TruncationError(ArithmeticError):
    """A series hit its term limit before the tail certificate met the tolerance."""


class NotLowRankError(ValueError):
    """A routine that needs an exactly rank-r matrix got a higher-rank one."""
