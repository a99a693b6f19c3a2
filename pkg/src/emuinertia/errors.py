"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Matrix or vector shapes do not line up."""


class EquilibriumNotFoundError(RuntimeError):
    def __init__(self, residual_norm, iterations):
        self.residual_norm = residual_norm
        self.iterations = iterations
        super().__init__(
            f"Newton iteration did not converge after {iterations} iterations "
            f"(last residual inf-norm {residual_norm:.3e})")


class SingularJacobianError(RuntimeError):
    """Newton step could not be computed."""


class EliminationError(RuntimeError):
    """The algebraic block of a linearized DAE is not invertible."""

    def __init__(self, cond):
        self.cond = cond
        super().__init__(
            f"cannot eliminate algebraic variables: dG/dy has condition number {cond:.3e}")


class ClosedFormUnavailableError(ArithmeticError):
    """A closed-form kernel needs an inverse that is numerically unavailable.

    Callers should fall back to the general block-exponential path.
    """


class SingularDenominatorError(ArithmeticError):
    """The frequency signal used as a divisor vanishes at ``t``."""

    def __init__(self, t, value):
        self.t = t
        self.value = value
        super().__init__(f"denominator signal is {value:.3e} at t = {t:g}")


class LoopSingularityError(ArithmeticError):
    """The ROCOF algebraic loop ``1 - (omega_s/2H) D2`` is degenerate."""


class NonpositiveInertiaError(ArithmeticError):
    def __init__(self, t, value):
        self.t = t
        self.value = value
        super().__init__(f"effective inertia H - He(t) = {value:.3e} <= 0 at t = {t:g}")


class SimulationAbortedError(RuntimeError):
    def __init__(self, t_last, cause):
        self.t_last = t_last
        super().__init__(f"simulation aborted after t = {t_last:g}: {cause}")
