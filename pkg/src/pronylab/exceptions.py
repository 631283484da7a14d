"""Exception types raised by pronylab."""


class PronyError(Exception):
    """Base class for all pronylab errors."""


class SingularHankel(PronyError):
    """The d x d Hankel matrix is numerically singular."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class NonConvergence(PronyError):
    """Root iteration failed; carries the best iterate and its residual."""

    def __init__(self, message, roots=None, residual=float("nan")):
        super().__init__(message)
        self.roots = roots
        self.residual = residual


class NearDegenerateVandermonde(PronyError):
    """Two nodes are too close for a stable amplitude solve."""

    def __init__(self, message, min_gap=0.0):
        super().__init__(message)
        self.min_gap = min_gap


class HypothesisViolated(PronyError):
    """A theorem hypothesis (e.g. det M_d != 0) does not hold for the input.

    The ``verdict`` attribute holds the rank information computed so far.
    """

    def __init__(self, message, verdict=None):
        super().__init__(message)
        self.verdict = verdict


class DegenerateCluster(PronyError):
    """Cluster half-length h is zero, so the model-space map is undefined."""


class NoFeasiblePoint(PronyError):
    """No parameter value on the Prony curve satisfies the constraints."""


class NotRealSolvable(PronyError):
    """Moments admit no real spike-train solution."""


class GenericityFailure(PronyError):
    """Binary form is not generic in the affine chart x = 1."""


class SolveFailed(PronyError):
    """The Prony system behind an application has no solution.

    ``outcome`` is the :class:`~pronylab.core.Unsolvable` result.
    """

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome
