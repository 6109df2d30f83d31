"""Propagators of quadratic Schrödinger Hamiltonians and a split-step NLS solver.

The evolution generated by

    H(t) = -1/2 d^2/dx^2 + b(t)/2 x^2 - f(t) x + i g(t) d/dx - i c(t)/2 (2 x d/dx + 1)

is a Gaussian integral operator whose phase is fixed by a scalar
characteristic ODE.  Submodules:

``hamiltonian``     coefficient functions, Hamiltonian documents, presets
``characteristic``  the characteristic function ``mu`` and its caustics
``mehler``          the six phase coefficients, plus an independent Riccati oracle
``kernel``          kernel evaluation and reference closed forms
``grid``/``gridprop``  grids, states and discrete propagation
``nls``             split-step solver for the nonlinear equation
``strichartz``      admissible pairs, decay weights and mixed norms
``verify``          numerical cross-checks; ``cli`` the command-line tool
"""

__version__ = "0.1.0"

from .errors import (
    BlowUpError,
    CausticError,
    DegenerateError,
    NumericalError,
    QuadPropError,
    ResolutionError,
    SpecError,
    SubcriticalError,
)
from .hamiltonian import AxisCoefficients, CoefficientFn, HamiltonianSpec, PRESETS, preset, validate
from .characteristic import CharacteristicSolution, solve_characteristic
from .mehler import MehlerPhase, phase_coefficients, phases_at, residual_check, riccati_oracle
from .kernel import eval_inverse_kernel, eval_kernel, eval_two_time_kernel, table1_kernel
from .grid import Grid, GridState, gaussian, hermite, random_state, resample, soliton
from .gridprop import (
    ResolutionWarning,
    apply_direct,
    apply_fast,
    apply_inverse_direct,
    apply_inverse_fast,
    dispersive_sup_check,
    propagate,
    two_time_apply,
)
from .nls import Nonlinearity, StrangSolver, Trajectory, solve_nls, subcritical_check
from .strichartz import ExponentPair, decay_weight, endpoint, is_admissible, mixed_norm, weak_l1_check
