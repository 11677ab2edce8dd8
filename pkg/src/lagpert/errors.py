"""Exception hierarchy.

Every numerical or validation failure raised by the package derives from
:class:`LagpertError`, so callers (the CLI in particular) can map the whole
family onto one exit code.
"""


class LagpertError(Exception):
    """Base class for all package errors."""


class NonConvergence(LagpertError):
    """An iterative routine exhausted its budget."""


class SingularMatrix(LagpertError):
    """A pivot fell below the singularity threshold."""


class DimensionMismatch(LagpertError, ValueError):
    pass


class NotSelfAdjointCondition(LagpertError):
    """Boundary blocks violate ``X Y^* = Y X^*``."""


class DegenerateCondition(LagpertError):
    """``X X^* + Y Y^*`` is (numerically) singular."""


class BadPotential(LagpertError, ValueError):
    pass


class BadGrid(LagpertError, ValueError):
    pass


class BoundaryResonance(LagpertError):
    """The boundary condition cannot be solved for the ghost nodes at this h."""


class SelfAdjointnessDefect(LagpertError):
    """An assembled extension failed the Hermitian check.

    This signals a bug: for a Lagrangian plane the discrete Green identity
    makes the assembled matrix Hermitian up to rounding.
    """


class SpectralPointHit(LagpertError):
    """Spectral parameter too close to an eigenvalue."""


class NotIsolated(LagpertError):
    """The requested eigenvalue cluster is not separated from the rest."""


class UnitaryBreakdown(LagpertError):
    """``||P_t - P_t0|| >= 1``: the transformation U_t does not exist."""


class FormulaMismatch(LagpertError):
    """Two independent formula routes disagree (a convention bug)."""


class NotRobin(LagpertError):
    pass


class TrackingAmbiguity(LagpertError):
    """Eigenvector overlaps do not determine a labeling; refine the grid."""


class LadderInconsistent(LagpertError):
    """Finite-difference estimates along the step ladder are inconsistent."""


class UnknownGallery(LagpertError, KeyError):
    pass


class ConfigError(LagpertError, ValueError):
    """Malformed or inconsistent problem configuration."""
