"""Exception types raised across the package."""


class ProxProjError(Exception):
    """Base class for all errors raised by proxproj."""


class FactorizationError(ProxProjError):
    """A matrix factorization (SVD) failed to converge."""


class NotSpdError(ProxProjError):
    """A matrix expected to be symmetric positive definite is not."""


class SingularMatrixError(ProxProjError):
    """A direct solve hit a zero pivot."""


class IllConditionedError(ProxProjError):
    """A constraint is too ill-conditioned for the projection to be evaluated."""


class ConvergenceError(ProxProjError):
    """An iterative 1D solver did not reach its tolerance.

    Carries ``best`` (the best root estimate found) when applicable.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class IllPosedError(ProxProjError):
    """Problem data violates a structural requirement (rank, image, mass)."""


class ConfigError(ProxProjError):
    """Invalid solver or baseline configuration, or missing cached factorization."""


class FormatError(ProxProjError):
    """Malformed input file.

    ``offset`` is the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
