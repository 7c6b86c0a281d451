"""Exception types shared across the package."""


class PadicLieError(Exception):
    """Base class for all errors raised by this package."""


class ContextMismatchError(PadicLieError):
    """Operands belong to different p-adic contexts."""


class UndefinedInverseError(PadicLieError):
    """Inversion of zero (or of an element indistinguishable from zero)."""


class IntegralityError(PadicLieError):
    """A result was required to stay in Z_p but does not."""


class NonSquareMatrixError(PadicLieError):
    """Operation defined only for square matrices."""


class ConvergenceError(PadicLieError):
    """A series does not converge under the stated precondition."""


class DimensionMismatchError(PadicLieError):
    """Vector length does not match the algebra rank."""


class StructureError(PadicLieError):
    """Invalid structure-constant data (antisymmetry, Jacobi, schema)."""


class NonInvariantSubspaceError(PadicLieError):
    """The given basis does not span an ad-invariant subspace."""


class FamilyParameterError(PadicLieError):
    """Invalid family parameters (k < 3, non-unit d, ...)."""


class InvariantPreconditionError(PadicLieError):
    """The normalized adjoint invariant is undefined for this input."""


class TruncationError(PadicLieError):
    """No sound truncation degree exists for the requested data."""


class CertificateViolationError(PadicLieError):
    """An evaluated series term fell below its certified valuation floor.

    This always indicates an implementation bug, never bad input.
    """


class NotPowerfulError(PadicLieError):
    """The operation requires a powerful algebra or group."""


class BackendDisagreementError(PadicLieError):
    """The two group-law backends disagree beyond certified precision."""


class RootError(PadicLieError):
    """Element does not lie in the subgroup of p^n-th powers."""


class ChartError(PadicLieError):
    """Chart conversion failed to converge (implementation bug)."""


class PrecisionExhaustedError(PadicLieError):
    """Not enough working precision left for the requested operation."""


class BudgetExceededError(PadicLieError):
    """An enumeration would exceed the configured element budget."""
