"""Exception and warning classes.

Numerical failures derive from :class:`NumericalError` so the CLI can map
them onto a dedicated exit code.
"""


class RectRoomError(Exception):
    """Base class for all package errors."""


class ConfigError(RectRoomError, ValueError):
    """Invalid room, admittance or solver configuration."""


class AdmittanceRangeError(ConfigError):
    """Admittance table evaluated outside its frequency range."""


class NumericalError(RectRoomError):
    """Base class for failures of a numerical procedure."""


class CountMismatch(NumericalError):
    """Root count disagrees with the certified count, even after fallback."""

    def __init__(self, message, found=None, expected=None, roots=()):
        super().__init__(message)
        self.found = found
        self.expected = expected
        self.roots = tuple(roots)


class NearResonance(NumericalError):
    """A series denominator or Wronskian is (numerically) zero."""


class DegenerateWronskian(NearResonance):
    """The closed-form reference is evaluated at an exact lossless resonance."""


class SolveFailure(NumericalError):
    """The finite-difference system is singular."""


class GridTooLarge(NumericalError):
    """The finite-difference grid exceeds the desk-scale unknown budget."""


class ContourOnRoot(NumericalError):
    """A counting contour passes through a root even after perturbation."""


class MaxDepth(NumericalError):
    """Root-enumeration subdivision exceeded its depth limit."""


class NonFinite(NumericalError):
    """The residual overflowed on a counting contour."""


class BoundaryConditionViolation(NumericalError):
    """Eigenfunction data fails a wall condition (spurious root)."""


class LeftBcViolation(BoundaryConditionViolation):
    """A root's phase offset fails the left-wall condition."""


class OutOfDomain(RectRoomError, ValueError):
    """Evaluation point outside the room."""


class NonConvergenceWarning(UserWarning):
    """Newton refinement left candidates unconverged or dropped them."""


class NearDefectiveWarning(UserWarning):
    """An eigenfunction has a normalization constant close to zero."""
