"""Exception hierarchy shared by all modules."""


class SimplexLabError(Exception):
    """Base class for every error raised by the package."""


class DegenerateSimplex(SimplexLabError, ValueError):
    pass


class DimensionMismatch(SimplexLabError, ValueError):
    pass


class DegeneratePrior(SimplexLabError, ArithmeticError):
    """Previously sampled points are numerically linearly dependent."""


class InfeasibleDensity(SimplexLabError, ValueError):
    pass


class BadScale(SimplexLabError, ValueError):
    pass


class BadSpec(SimplexLabError, ValueError):
    pass


class BadWindow(SimplexLabError, ValueError):
    pass


class BadDelta(SimplexLabError, ValueError):
    pass


class ResolutionTooCoarse(SimplexLabError, ValueError):
    pass


class ScaleTooLarge(SimplexLabError, ValueError):
    pass


class ConfigError(SimplexLabError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
