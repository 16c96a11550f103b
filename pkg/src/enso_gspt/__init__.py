"""Three-timescale ENSO model toolkit.

Singular geometry, (c, k, a) parameter-regime classification, stiff
trajectory simulation, delayed-loss-of-stability computations, and
qualitative classification of the resulting oscillatory dynamics.
"""

from .analysis import (ClassifyThresholds, TrajectoryClass, classify_trajectory,
                       detect_plateaus, extract_extrema, onset_bisection,
                       sweep_a)
from .errors import (ConvergenceError, DomainError, EnsoError,
                     IndeterminateClassification, IntegrationError,
                     NoExitError, NoLandingError, NoRootError,
                     PreconditionError)
from .geometry import (BranchLabel, FoldedSingularities, classify_point,
                       folded_singularities, fx_linearisation, g_graph,
                       h_graph, lambda2, m2s_folds, m2s_point, project_fast,
                       tanh_theta, theta)
from .model import (DimensionalParams, DimensionalState, Params, State,
                    jacobian_full, rhs_dimensional, rhs_full,
                    rhs_in_formulation, t_sub)
from .regimes import (A_qminus, A_qstar_direct, A_qstar_formula,
                      EquilibriumSolution, RegimeReport, a_mp, a_p,
                      classify_regions, curve_C_side, d_mp, p_star,
                      regime_map, solve_equilibrium_full,
                      solve_equilibrium_reduced)
from .simulate import (Event, IntegratorConfig, Trajectory, detect_events,
                       discard_transient, integrate, steady_state_check)
from .slowfast import (ExitPoint, fibre_zeta, intermediate_rhs,
                       m2s_reduced_rhs, mp_flow_explicit, mp_y_of_z,
                       reduced_s_rhs, solve_exit_point, standard_form_rhs,
                       wayinout_W)

__version__ = "0.1.0"
