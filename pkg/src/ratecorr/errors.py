"""Exception hierarchy for ratecorr."""


class RateCorrError(Exception):
    """Base class for all ratecorr errors."""


class ConfigError(RateCorrError):
    """Invalid or inconsistent experiment configuration."""


class IrregularDegree(RateCorrError):
    """Adjacency whose rows do not all have the same number of incoming edges."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = tuple(rows) if rows is not None else ()


class SelfLoop(RateCorrError):
    """Adjacency with a nonzero diagonal entry."""


class BadBand(RateCorrError):
    """Band half-width outside [1, floor(S/2)] or S < 3."""


class RealnessViolation(RateCorrError):
    """Spectral evaluation produced an imaginary residue above tolerance."""


class NonInvariantTopology(RateCorrError):
    """Analytic covariance requested for a topology without exchange invariance."""


class ZeroInDegree(RateCorrError):
    """Weight-randomness term requested for a network with M = 0."""


class DegenerateVariance(RateCorrError):
    """Correlation requested where both variances vanish."""


class NotPSD(RateCorrError):
    """Requested correlation parameter makes the covariance matrix indefinite."""


class NumericalBlowup(RateCorrError):
    """A simulated membrane potential exceeded the divergence guard."""

    def __init__(self, message, trial=None, step=None):
        super().__init__(message)
        self.trial = trial
        self.step = step


class NoRoot(RateCorrError):
    """No stationary state found inside the search bracket."""


class NotFullyConnected(RateCorrError):
    """Closed-form higher-order correlations require a complete graph."""


class DegenerateMoment(RateCorrError):
    """A moment in the higher-order correlation denominator vanished."""


class NonConvergent(RateCorrError):
    """Root-test tail did not stabilize within the requested order budget."""


class NoSolution(RateCorrError):
    """Synchronization constraint has no solution for the given parameters."""
