"""Emulated inertia and damping of converter-interfaced power sources."""

from .emulation import (EmulationProfile, asymptotic_gains, compute_profile, limits_at_zero,
                        mu1_closed_form, mu2_closed_form, mu_general, reconstruct_power)
from .errors import (ClosedFormUnavailableError, DimensionError, EliminationError,
                     EquilibriumNotFoundError, LoopSingularityError, NonpositiveInertiaError,
                     SimulationAbortedError, SingularDenominatorError, SingularJacobianError)
from .grid_sim import (DeadbandPolicy, DisturbanceEvent, GridParams, Trace, exact_template,
                       extract_template_inputs, simulate_coupled_linear, simulate_nonlinear,
                       simulate_reduced)
from .linearize import (EquilibriumPoint, LinearCipsModel, NonlinearCipsModel,
                        find_equilibrium, linearize)
from .lti_core import convolve_poly_exp, expm, solve_forced, solve_homogeneous
from .models import builtin_model, critical_droop_gain, droop_model
from .templates import FreqTemplate, eval_deviation, eval_rocof, fit_template

__version__ = '0.1.0'
