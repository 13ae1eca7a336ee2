"""Exception hierarchy shared by every module of the package."""


class ChemofluidError(Exception):
    pass


class ParameterError(ChemofluidError, ValueError):
    """A coefficient or option lies outside its admissible domain."""


class UnsupportedRegimeError(ChemofluidError):
    """The competition coefficients fall outside the three convergence cases."""


class NumericError(ChemofluidError, ArithmeticError):
    pass


class BlowUpError(NumericError):
    """A field became non-finite during time stepping.

    ``series`` carries the diagnostics recorded up to the last valid time,
    when the error is raised from :func:`chemofluid.solver.run`.
    """

    def __init__(self, field, t, series=None):
        super().__init__(f"non-finite values in field {field!r} at t={t:.6g}")
        self.field = field
        self.t = t
        self.series = series


class StepRejectedError(ChemofluidError):
    pass


class NoSandwichError(ChemofluidError):
    """The densities never settle inside the [N/2, 3N/2] bracket."""


class InsufficientDataError(ChemofluidError):
    pass


class ConfigError(ChemofluidError, ValueError):
    """Raised by the config parser; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
