"""Exception types raised by the library.

Every failure mode that callers are expected to distinguish gets its own
class; all of them derive from RHCanError so a bare ``except RHCanError``
catches library-level problems without swallowing programming errors.
"""


class RHCanError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(RHCanError, ValueError):
    """Malformed argument: bad shapes, invalid interval, bad parameters."""


class ShapeMismatchError(InvalidArgumentError):
    """Matrix or sample dimensions do not agree."""


class NotPSDError(RHCanError):
    """A matrix required to be positive semidefinite has a negative eigenvalue."""


class SingularJModuleError(RHCanError):
    """R(x) is numerically singular where its inverse is needed."""


class InvalidJModuleError(RHCanError):
    """The (J, R) pair violates the field axioms (symmetry or spectrum)."""


class DegenerateWeightError(RHCanError):
    """The multiplicative weight's radicand lost positivity."""


class PVDiagonalError(RHCanError):
    """Kernel evaluated on the diagonal where only a principal value exists."""


class IllConditionedError(RHCanError):
    """Discretized operator condition number exceeds the configured limit."""


class OnCutError(RHCanError, ValueError):
    """Cauchy transform requested at a point on the cut."""


class EndpointSingularityError(RHCanError, ValueError):
    """Boundary values requested too close to an endpoint."""


class OdeDivergenceError(RHCanError):
    """Transport ODE failed to converge under step halving."""


class InconsistentHamiltonianError(RHCanError):
    """Finite-difference Hamiltonian fails positivity or integral consistency."""
