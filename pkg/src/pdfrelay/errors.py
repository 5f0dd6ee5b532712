"""Exception hierarchy shared by all pdfrelay modules."""


class PdfRelayError(Exception):
    """Base class for every error raised by pdfrelay."""


class InvalidInputError(PdfRelayError, ValueError):
    """Malformed array input (wrong shape, not Hermitian, not finite)."""


class NotPSDError(InvalidInputError):
    """A matrix required to be positive semidefinite is not."""


class NotPositiveDefiniteError(InvalidInputError):
    """A matrix required to be positive definite is not (or is numerically singular)."""


class SingularSylvesterError(NotPositiveDefiniteError):
    """The symmetric Sylvester operator X -> XS + SX is (numerically) singular."""


class InvalidConfigError(PdfRelayError, ValueError):
    """Invalid problem configuration (distances, power budgets, floors)."""


class InstanceParseError(PdfRelayError, ValueError):
    """An instance file could not be parsed."""


class MasterProblemError(PdfRelayError):
    """The relaxed master problem is empty or unbounded as posed."""


class NumericalFailure(PdfRelayError, RuntimeError):
    """An iterative solver did not converge.

    The best iterate reached so far is kept on ``best`` (may be None).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
