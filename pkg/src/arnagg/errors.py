"""Exception types shared across the package."""


class ArnaggError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(ArnaggError, ValueError):
    """Operand shapes do not agree; signals a caller bug."""


class ValidationError(ArnaggError, ValueError):
    """An input object violates its structural invariants (bad model file,
    non-stochastic matrix, negative probabilities, ...)."""


class InvalidRateError(ArnaggError, ValueError):
    """Uniformisation rate below the largest exit rate of the generator."""


class InvariantSubspaceError(ArnaggError, RuntimeError):
    """Expansion was requested although the Krylov subspace is already
    invariant.  Not a failure of the iteration; the caller must stop."""


class EigenSolverError(ArnaggError, RuntimeError):
    """The eigensolver did not converge within its iteration budget."""


class StateSpaceOverflowError(ArnaggError, RuntimeError):
    """State-space enumeration exceeded the configured hard limit."""
