"""Exception types shared across the package."""


class VfdError(Exception):
    """Base class for all package-specific errors."""


class PlacementFailed(VfdError):
    """AP rejection sampling exhausted its retry budget."""


class CovarianceNotPSD(VfdError):
    """Shadowing covariance could not be factorized even after jitter."""


class ShapeMismatch(VfdError):
    """Array arguments are inconsistent with the configured dimensions."""


class DegenerateAnchor(VfdError):
    """Linearization anchor has a nonpositive denominator term."""


class Infeasible(VfdError):
    """No point satisfying the constraints could be found."""


class NumericalFailure(VfdError):
    """The convex solver failed for numerical reasons."""


class EmptySamples(VfdError):
    """Statistic requested on an empty sample set."""
