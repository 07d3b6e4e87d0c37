"""Exception and warning types shared across the package."""


class EmptyAssertion(ValueError):
    """An event predicate selected no grid point (or an empty complement)."""


class NotNormalized(ValueError):
    """A contour's supremum falls below its normalization tolerance."""


class EmptyCut(ValueError):
    """An alpha-cut of a possibilistic prior contains no grid point."""


class EmptyFiber(ValueError):
    """No parameter grid point maps to the requested interest value."""


class UnboundedLikelihood(RuntimeError):
    """The likelihood has no finite maximizer; relative likelihood undefined."""


class DegeneratePosterior(RuntimeError):
    """Importance weights collapsed (effective sample size below threshold)."""


class IndependenceRequired(ValueError):
    """Option-1 prediction combination needs Y independent of Z given theta."""


class ConfigError(ValueError):
    """Invalid CLI or file configuration. Carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UncoveredTarget(UserWarning):
    """Extension target grid has cells no source point maps into."""


class LowESS(UserWarning):
    """Importance-sampling effective sample size below 50 at some point."""
