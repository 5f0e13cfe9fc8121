"""Exception types raised across the package."""


class OracleScaleError(ValueError):
    """Dense-tensor computation would exceed the oracle size limits."""


class OrderOverflowError(ValueError):
    """Moment order is outside the range with exact factorial tables."""


class DegenerateAugmentationError(ValueError):
    """Augmented coordinate of a fitted mean is too close to zero to rescale."""


class NonFiniteObjectiveError(FloatingPointError):
    """Objective evaluation produced a NaN or infinity."""
