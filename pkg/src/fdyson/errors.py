"""Exception hierarchy shared by all fdyson modules."""


class FdysonError(Exception):
    """Base class for all package errors."""


class FactorizationFailure(FdysonError):
    """Gram matrix is not positive semidefinite within tolerance."""


class EmbeddingNotPSD(FdysonError):
    """Circulant spectrum has a negative eigenvalue beyond tolerance."""


class GridMismatch(FdysonError):
    """Entry paths do not share a common grid."""


class NonSymmetricOffset(FdysonError):
    """Deterministic offset matrix is not symmetric / Hermitian."""


class SimplexViolation(FdysonError):
    """Eigenvalue vector is not strictly decreasing."""


class NoConvergence(FdysonError):
    """Jacobi sweeps did not reduce the off-diagonal norm in time."""


class NotVeryGood(FdysonError):
    """Decomposition fails the very-good preconditions for derivatives."""


class DimensionMismatch(FdysonError):
    """Matrix dimensions do not agree."""


class GapBelowTolerance(FdysonError):
    """An eigenvalue gap fell below the collision tolerance."""


class OrderingViolated(FdysonError):
    """Euler step destroyed the strict eigenvalue ordering."""


class ResolutionMismatch(FdysonError):
    """Requested resolution does not divide the native one."""


class EmptySample(FdysonError):
    """A sample array required to be nonempty is empty."""


class InsufficientData(FdysonError):
    """Not enough replicates / lags for a reliable estimate."""


class QTooLarge(FdysonError):
    """Negative-moment order q must be strictly below 2."""


class AssumptionViolated(FdysonError):
    """A standing assumption of the check (e.g. zero offset) fails."""


class ConfigInvalid(FdysonError):
    """Experiment configuration failed validation."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))
