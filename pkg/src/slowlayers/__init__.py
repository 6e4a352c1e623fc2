"""Metastable internal-layer dynamics for 1D singularly perturbed systems."""

from .grid import (Grid1D, GridFunction, GridError, IncompatibleGridsError,
                   derivative, inner_product, make_grid, norm)
from .models import (BoundaryViolationError, BurgersModel, JinXinModel, State,
                     burgers_rhs, default_initial_data, jinxin_rhs)
from .steady import (LayerAtBoundaryError, MatchedLayerProfile,
                     RootFailureError, derivative_jump, dprofile_dxi,
                     dprofile_dxi_analytic, eval_profile, omega_asymptotic,
                     omega_log, omega_pair, solve_kappas)
from .spectral import (HypothesisReport, LinearizedOperator, SpectralPairs,
                       SpectralFailureError, assemble_linearized,
                       check_hypotheses, eigenpairs, jinxin_eigen_map,
                       lambda1_asymptotic)
from .reduction import (ProjectionFailureError, RateBundle, ReductionContext,
                        assemble_H_M, beta_rate, constraint_value, mu_rate,
                        project_xi, quadratic_terms, rate_bundle, reduced_ode,
                        spectral_coeffs, theta, time_to_reach,
                        time_to_reach_asymptotic, log_time_to_reach_asymptotic,
                        log_travel_time)
from .evolve import (IntegratorConfig, NoLayerError, StepRejectedError,
                     Trajectory, run_adaptive, simulate_coupled, step,
                     track_layer, z_decomposition)

__version__ = "0.1.0"
