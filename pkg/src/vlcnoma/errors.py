"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A configuration or argument value is outside its documented domain."""


class DegenerateConditionError(ArithmeticError):
    """A conditional quantity was requested but the conditioning event has zero mass."""


class NumericFailureError(ArithmeticError):
    """A numerical routine failed to reach its tolerance.

    Carries the best available estimate and the achieved error bound so
    callers can decide whether to accept the degraded result.
    """

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
