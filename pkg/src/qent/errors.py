"""Exception hierarchy.

Every error raised by the package derives from :class:`QentError`; the CLI
reports ``type(exc).__name__`` as the machine-readable error code.
"""

from __future__ import annotations


class QentError(Exception):
    """Base class for all package errors."""


class InputError(QentError, ValueError):
    """Caller supplied something that violates a precondition."""


class DimensionMismatch(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


class InvariantViolation(InputError):
    """A value failed a type invariant.

    ``invariant`` names the failed check and ``residual`` the measured
    deviation, so reports can show e.g. ``norm = 1.4142``.
    """

    def __init__(self, invariant: str, residual: float | None = None, detail: str = ""):
        self.invariant = invariant
        self.residual = residual
        msg = invariant if residual is None else f"{invariant} (residual {residual:.6g})"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class NonRealExpectation(QentError, ArithmeticError):
    pass


class ConvergenceFailure(QentError, ArithmeticError):
    pass


class WeightsNotNormalized(InputError):
    pass


class InvalidRank(InputError):
    pass


class GraphTooLarge(InputError):
    pass


class NoIdentityResolvingContext(InputError):
    pass


class PowerNotInContext(InputError):
    pass


class NotOrthogonal(InputError):
    pass


class NotInformationallyComplete(InputError):
    pass


class InconsistentValues(InputError):
    pass


class NotPositive(InputError):
    pass


class NonCommutingPair(InputError):
    pass


class NotProductState(InputError):
    pass


class UnequalFactors(InputError):
    pass


class KrausIncomplete(InputError):
    pass


class UnsupportedDimension(InputError):
    pass


class LinearlyDependentSet(InputError):
    pass


class SetNotOrthonormalized(InputError):
    pass


class NotPure(InputError):
    pass


class UnsupportedMixedRegime(InputError):
    pass


class ParseError(InputError):
    """Malformed state or factorization file; ``position`` locates the fault."""

    def __init__(self, message: str, position: str | None = None):
        self.position = position
        super().__init__(message if position is None else f"{position}: {message}")
