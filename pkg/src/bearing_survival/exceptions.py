"""Exception and warning types raised across the package."""


class BearingSurvivalError(Exception):
    """Base class for all errors raised by this package."""


# --- signal / features ---

class EmptySignal(BearingSurvivalError):
    """Channel has too few samples for the requested framing."""


class DegenerateSpectrum(BearingSurvivalError):
    """No spectral energy inside any characteristic frequency band."""


class DegenerateFrame(BearingSurvivalError):
    """Frame has zero variance, so moment-ratio features are undefined."""


class AllFramesDegenerate(BearingSurvivalError):
    """Every frame in a sequence failed feature extraction."""


# --- events ---

class InvalidPdf(BearingSurvivalError):
    """Bin masses are negative or do not sum to one."""


class TooFewWindows(BearingSurvivalError):
    """PDF sequence is not longer than the break-in period."""


# --- dataset ---

class MalformedCsv(BearingSurvivalError):
    """A raw archive file has a row that cannot be parsed."""


class NonMonotoneTimestamps(BearingSurvivalError):
    """Timestamps in an acquisition file decrease."""


class EmptyBearing(BearingSurvivalError):
    """A bearing directory holds no usable samples."""


class NoEvent(BearingSurvivalError):
    """Bearing has neither an event annotation nor a censoring time."""


class OverlappingSplit(BearingSurvivalError):
    """Train and test bearing id sets intersect."""


# --- models ---

class EmptyInput(BearingSurvivalError):
    """Estimator received no observations."""


class NoEvents(BearingSurvivalError):
    """All records are censored; the model cannot be fitted."""


class Nonconvergence(BearingSurvivalError):
    """Iterative fit stopped before reaching the requested tolerance."""

    def __init__(self, message, n_iter=None, gradient_norm=None):
        super().__init__(message)
        self.n_iter = n_iter
        self.gradient_norm = gradient_norm


class MonotoneLikelihood(BearingSurvivalError):
    """Coefficients diverge, indicating separation in the covariates."""


class TooFewEvents(BearingSurvivalError):
    """Not enough observed events to grow survival trees."""


class DimensionMismatch(BearingSurvivalError):
    """Covariate vector length differs from the fitted model."""


# --- metrics ---

class NoComparablePairs(BearingSurvivalError):
    """No pair (i, j) with d_i < d_j and event_i = 1 exists."""


class GridTooCoarse(BearingSurvivalError):
    """An observed event time lies beyond the evaluation grid."""


# --- simulate ---

class EmptyGroup(BearingSurvivalError):
    """A covariate split produced an empty group."""


# --- experiment ---

class AllConfigurationsFailed(BearingSurvivalError):
    """Every sampled hyperparameter configuration failed to fit."""


# --- warnings ---

class DegenerateFeatureWarning(UserWarning):
    """A covariate column was constant on the training set and was dropped."""


class DegenerateCensoringKmWarning(UserWarning):
    """Censoring survival reached zero inside the grid; grid truncated."""
