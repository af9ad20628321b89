"""Unilateral spatial autoregression on the unit-root boundary.

Simulation, exact second-order structure, least-squares estimation and the
limiting laws of the estimator on the faces, edges and vertices of the
stability tetrahedron, with Monte Carlo checks.
"""
from .errors import (CapacityError, DomainError, MissingNoise, NonConvergence,
                     ParseError, SingularMatrix)
from .params import Params, RegionTag, SignFlip, apply_flip, canonicalize, classify
from .coeffs import binom_conv_pmf, g_table, g_value, local_clt_approx, rate_function, tail_bound
from .simulate import Field, NoiseMatrix, NoiseSpec, draw_noise, simulate_ma, simulate_recursion
from .covariance import SitePair, CovLimitQuery, cov_bound, cov_closed, exact_cov, variance_growth_limit
from .estimator import Accumulators, accumulate, accumulate_with_noise, adjugate3, c_stat, det_identity, lse
from .asymptotics import (k_matrix, limit_law, psi_matrix, rho_pair, sigma_matrix, sigma_sq,
                          theta_matrix)
from .montecarlo import MCConfig, compare_cov, rate_fit, run_experiment, wiener_functionals

__version__ = "0.1.0"
