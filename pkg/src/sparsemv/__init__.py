"""Sparse weighted elastic-net mean-variance portfolios."""
from .calibration import PenaltyWeights, bootstrap_errors, calibrate, quantile_weights
from .estimation import Estimates, ReturnMatrix, estimate, james_stein_mean, ledoit_wolf_covariance
from .exceptions import (
    ConfigurationError,
    DataError,
    NonConvergenceError,
    SparseMVError,
)
from .objective import Portfolio, Problem, objective, robust_objective, scad_penalty
from .solvers import (
    SolverConfig,
    adaptive_support_split_bregman,
    fista,
    sign_enumeration_oracle,
    solve,
    split_bregman,
)

__version__ = "0.1.0"
