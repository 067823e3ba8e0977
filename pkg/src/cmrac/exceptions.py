"""Exception types shared across the package."""


class CMRACError(Exception):
    """Base class for all errors raised by cmrac."""


class DimensionMismatch(CMRACError, ValueError):
    pass


class SingularSystem(CMRACError, ArithmeticError):
    pass


class NotSymmetric(CMRACError, ValueError):
    pass


class NoConvergence(CMRACError, ArithmeticError):
    pass


class MatchingInfeasible(CMRACError):
    """Raised when no gains satisfy A + B Kx = Ar and B Kr = Br."""

    def __init__(self, residual_x: float, residual_r: float):
        self.residual_x = residual_x
        self.residual_r = residual_r
        super().__init__(
            f"matching conditions violated: |A + B Kx - Ar|_F = {residual_x:.3e}, "
            f"|B Kr - Br|_F = {residual_r:.3e}"
        )


class BarrierBreach(CMRACError):
    """The tracking error left the interior of the barrier region."""

    def __init__(self, ratio: float, t: float | None = None):
        self.ratio = ratio
        self.t = t
        where = "" if t is None else f" at t={t:.6g}"
        super().__init__(f"barrier breached{where}: e'Pe / kb'^2 = {ratio:.9g}")


class ConfigError(CMRACError, ValueError):
    """Invalid scenario configuration; message names the offending field."""
