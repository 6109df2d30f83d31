"""Exception hierarchy shared by all modules."""


class QuadPropError(Exception):
    """Base class for every error raised by quadprop."""


class SpecError(QuadPropError, ValueError):
    """Invalid Hamiltonian description or run configuration."""


class SubcriticalError(SpecError):
    """Nonlinearity exponent outside the L2-subcritical range 0 < p - 1 < 4/d."""


class NumericalError(QuadPropError, ArithmeticError):
    """Integrator or quadrature failure (step underflow, non-convergence)."""


class CausticError(NumericalError):
    """Evaluation requested at (or too close to) a zero of the characteristic function."""

    def __init__(self, message, time=None, axis=None):
        super().__init__(message)
        self.time = time
        self.axis = axis


class DegenerateError(NumericalError):
    """Two-time kernel requested with coinciding quadratic coefficients."""


class ResolutionError(NumericalError):
    """Grid cannot represent the requested operation."""


class BlowUpError(NumericalError):
    """Blow-up guard of the nonlinear solver triggered."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
