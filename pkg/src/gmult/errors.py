"""Exception hierarchy for gmult."""


class GMultError(Exception):
    """Base class for all errors raised by gmult."""


class InvalidInputError(GMultError, ValueError):
    """Raised for malformed input: non-finite entries, bad shapes, bad indices."""


class ShapeMismatchError(InvalidInputError):
    """Raised when frames, layouts or symbols do not conform to each other."""


class SingularFrameError(GMultError):
    """Raised when an operation needs a g-frame but the lower bound vanishes."""


class NotRieszError(GMultError):
    """Raised when a g-Riesz basis is required."""


class NotSemiNormalizedError(GMultError):
    """Raised when a symbol has a (numerically) singular block."""


class FactorizationError(GMultError):
    """Raised when a symbol block is not Hermitian positive semidefinite."""


class SingularOperatorError(GMultError):
    """Raised when an operator that must be invertible is not."""


class NotDualError(GMultError):
    """Raised when a claimed dual pair does not reconstruct the identity."""


class PerturbationTooLargeError(GMultError):
    """Raised when the perturbation size reaches the square root of the lower bound."""

    def __init__(self, msg, mu=None, limit=None):
        super().__init__(msg)
        self.mu = mu
        self.limit = limit


class ConditionNotMetError(GMultError):
    """Raised when the summed block deviation is not below one.

    The partially filled report is kept on ``report`` so callers can still
    inspect the measured quantities.
    """

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report
