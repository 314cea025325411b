"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI and the
service layer can report precondition violations uniformly.
"""

from __future__ import annotations


class SmalleigError(Exception):
    """Base class; ``code`` is a stable identifier for machine output."""

    code = "internal"


class PreconditionError(SmalleigError):
    """User-visible precondition violation (CLI exit code 2, HTTP 400)."""

    code = "precondition"


class EighFailure(SmalleigError):
    code = "eigh_failure"

    def __init__(self, dim: int, detail: str = ""):
        self.dim = dim
        msg = f"symmetric eigensolver failed to converge at dimension {dim}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class AmbiguousKernelError(PreconditionError):
    """More than one eigenvalue inside the kernel gap window.

    Usually means the basis is too small or the coefficient constant is not
    on the threshold set.
    """

    code = "ambiguous_kernel"


class NotOnSigmaError(PreconditionError):
    """The coefficient constant is not (close enough to) a threshold point."""

    code = "not_on_sigma"


class ConvergenceError(SmalleigError):
    code = "no_convergence"


class InstabilityError(PreconditionError):
    """Truncated potential unbounded below on the resolved region."""

    code = "potential_instability"


class WindowCountError(PreconditionError):
    """The small-eigenvalue window does not contain exactly one eigenvalue."""

    code = "window_count"


class CrossingAmbiguityError(SmalleigError):
    """Two eigenvalue curves too close to track through a scan point."""

    code = "crossing_ambiguity"


class RankDeficientError(PreconditionError):
    code = "rank_deficient"


class DegreeOverflowError(PreconditionError):
    """Exact Hermite algebra ran past its configured degree cap."""

    code = "degree_overflow"


class MonomialCapError(SmalleigError):
    code = "monomial_cap"


class ResolutionError(PreconditionError):
    """Grid too coarse for the requested frequency content."""

    code = "grid_resolution"


class BoundaryError(PreconditionError):
    """Grid function support touches the grid boundary."""

    code = "support_boundary"


class ConstructionError(SmalleigError):
    """Wave-packet construction failed a guaranteed lower bound."""

    code = "construction_failure"
