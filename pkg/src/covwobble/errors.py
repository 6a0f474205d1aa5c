"""Exception classes shared across the package."""


class CovwobbleError(Exception):
    """Base class for all package errors."""


class DimensionError(CovwobbleError):
    """Matrix dimensions are inconsistent or not square."""


class NotSymmetricError(CovwobbleError):
    """Input matrix is not symmetric within tolerance."""


class NumericalError(CovwobbleError):
    """A numerical routine failed to converge or broke an internal bound."""


class NotPositiveDefiniteError(CovwobbleError):
    """Matrix has an eigenvalue at or below the positive-definiteness floor."""


class OutOfBandError(CovwobbleError):
    """Matrix eigenvalues fall outside the required [a, b] band."""


class ConfigurationError(CovwobbleError):
    """A parameter combination is invalid (grid too small, bad field, ...)."""


class RankNotFoundError(CovwobbleError):
    """No Fejer order up to the scan horizon certifies the requested accuracy."""


class InfeasibleRequestError(CovwobbleError):
    """Perturbation request violates its own hypotheses."""


class SchemeInfeasibleError(CovwobbleError):
    """The selected coefficient scheme would need an unrepresentable series."""


class ConstructionFailedError(CovwobbleError):
    """No candidate perturbation passed verification."""


class BasisIncompleteError(CovwobbleError):
    """The rounded matrix of a target is missing from the basis."""


class EnumerationInfeasibleError(CovwobbleError):
    """Full lattice enumeration would exceed the configured cap."""


class InternalConsistencyError(CovwobbleError):
    """A bound that is guaranteed by construction failed numerically."""


class EmbeddingFailureError(CovwobbleError):
    """Circulant embedding stayed indefinite beyond the padding cap."""


class DegenerateWindowError(CovwobbleError):
    """A window covariance block is singular."""


class TableTooShortError(CovwobbleError):
    """Autocovariance table does not cover the requested lags."""


class ValidationError(CovwobbleError):
    """A run configuration field failed validation."""
