"""Exception types shared across the package."""


class TweedieKdeError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TweedieKdeError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NonConvergence(TweedieKdeError, RuntimeError):
    """Series truncation failed to converge within the policy's index cap."""


class DegenerateSample(TweedieKdeError, ValueError):
    """The sample is too small for the requested operation (e.g. n < 2)."""


class AllZeros(DegenerateSample):
    """The sample contains no positive observations."""


class GridMismatch(TweedieKdeError, ValueError):
    """Two curves that must share an evaluation grid do not."""


class GridTooNarrow(TweedieKdeError, ValueError):
    """The evaluation grid misses a non-negligible part of the target mass."""


class DivergentFunctional(TweedieKdeError, ValueError):
    """A risk functional integral does not converge."""


class MissingDerivative(TweedieKdeError, ValueError):
    """A second derivative is required but not available."""


class DegenerateCurvature(TweedieKdeError, ValueError):
    """The curvature term vanishes, so the optimal bandwidth is undefined."""
