"""Exception types raised by the solver library."""


class RdrSolveError(Exception):
    """Base class for all library errors."""


class BadShape(RdrSolveError):
    """Invalid matrix/vector dimensions or generator parameters."""


class InconsistentSystem(RdrSolveError):
    """The least-squares residual of Ax=b exceeds the consistency tolerance."""


class NotSymmetric(RdrSolveError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class DegenerateMatrix(RdrSolveError):
    """The matrix lacks the structure a routine needs (e.g. rank < 2)."""


class ZeroRow(RdrSolveError):
    """A hyperplane operation was requested for a zero row."""


class DegenerateStep(RdrSolveError):
    """An adaptive step was requested with z equal to the current iterate."""


class StalledAtNonSolution(RdrSolveError):
    """Repeated pair draws produced no movement while the residual is large."""


class ParseError(RdrSolveError):
    """Malformed Matrix Market content."""


class UnsupportedField(RdrSolveError):
    """Matrix Market field/symmetry variant outside the supported subset."""
