"""Bootstrap calibration of the elastic-net weights.

The training window is resampled with replacement ``K`` times.  For each
replicate, the per-asset mean and variance are re-estimated.  The absolute
deviations from the full-sample estimates form an empirical error
distribution.  ``alpha_i`` and ``beta_i`` are percentiles of those
distributions, picked by the estimation-risk aversion factors ``p1``
(variance) and ``p2`` (mean).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .estimation import ReturnMatrix
from .exceptions import ConfigurationError, DataError

ColumnEstimator = Callable[[np.ndarray], np.ndarray]


def column_mean(x: np.ndarray) -> np.ndarray:
    return x.mean(axis=0)


def column_variance(x: np.ndarray) -> np.ndarray:
    """Per-column 1/T variance."""
    return x.var(axis=0)


@dataclass(frozen=True)
class BootstrapErrors:
    """K x N absolute estimation errors of the mean and of the variance."""

    mu_err: np.ndarray
    gamma_err: np.ndarray


@dataclass(frozen=True)
class PenaltyWeights:
    alpha: np.ndarray
    beta: np.ndarray
    p1: float | None = None
    p2: float | None = None
    K: int | None = None
    seed: int | None = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        beta = np.asarray(self.beta, dtype=float).ravel()
        if alpha.shape != beta.shape:
            raise ConfigurationError("alpha and beta must have the same length")
        if np.any(alpha <= 0):
            raise ConfigurationError("alpha must be strictly positive")
        if np.any(beta < 0):
            raise ConfigurationError("beta must be non-negative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)


def bootstrap_indices(t_train: int, K: int, seed) -> np.ndarray:
    """Resampling indices ``v[k, m]``, drawn row by row (k outer, m inner).

    Uses ``numpy.random.default_rng(seed).integers(0, t_train, size=(K, t_train))``
    so runs are reproducible from the seed alone.
    """
    return np.random.default_rng(seed).integers(0, t_train, size=(K, t_train))


def bootstrap_errors(returns, mean_estimator: ColumnEstimator = column_mean,
                     var_estimator: ColumnEstimator = column_variance,
                     K: int = 200, seed=0) -> BootstrapErrors:
    """Bootstrap distribution of per-asset mean and variance estimation errors.

    Both estimators map a (T, N) array to an N-vector and must not depend on
    the order of the rows.
    """
    x = returns.data if isinstance(returns, ReturnMatrix) else np.asarray(returns, dtype=float)
    if K < 1:
        raise ConfigurationError(f"number of bootstrap replicates must be >= 1, got {K}")
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("bootstrap needs at least one training period")
    t = x.shape[0]
    mu_hat = mean_estimator(x)
    var_hat = var_estimator(x)
    idx = bootstrap_indices(t, K, seed)
    mu_err = np.empty((K, x.shape[1]))
    gamma_err = np.empty((K, x.shape[1]))
    for k in range(K):
        sample = x[idx[k]]
        mu_err[k] = np.abs(mean_estimator(sample) - mu_hat)
        gamma_err[k] = np.abs(var_estimator(sample) - var_hat)
    return BootstrapErrors(mu_err, gamma_err)


def order_statistic_rank(p: float, K: int) -> int:
    """1-based rank ``ceil(p K)`` of the p-quantile; 0 means "no weight"."""
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"percentile must lie in [0, 1], got {p}")
    # guard against p*K landing a hair above an integer, e.g. 0.7 * 10
    return min(K, math.ceil(p * K - 1e-9))


def empirical_quantile(samples: np.ndarray, p: float) -> np.ndarray:
    """Column-wise ``ceil(pK)``-th order statistic of a (K, N) array; 0 at p = 0."""
    samples = np.asarray(samples, dtype=float)
    rank = order_statistic_rank(p, samples.shape[0])
    if rank == 0:
        return np.zeros(samples.shape[1])
    return np.sort(samples, axis=0)[rank - 1]


def default_alpha_floor(variances) -> float:
    v = float(np.mean(variances))
    return 1e-10 * v if v > 0 else 1e-12


def quantile_weights(errors: BootstrapErrors, p1: float, p2: float,
                     alpha_floor: float) -> PenaltyWeights:
    """Map bootstrap errors to elastic-net weights.

    ``alpha_i`` is the ``p1`` percentile of the variance errors (at least
    ``alpha_floor``); ``beta_i`` is the ``p2`` percentile of the mean errors.
    """
    if alpha_floor <= 0:
        raise ConfigurationError(f"alpha_floor must be positive, got {alpha_floor}")
    alpha = np.maximum(empirical_quantile(errors.gamma_err, p1), alpha_floor)
    beta = empirical_quantile(errors.mu_err, p2)
    return PenaltyWeights(alpha, beta, p1, p2, errors.mu_err.shape[0])


def calibrate(returns, p1: float, p2: float, K: int = 200, seed=0,
              alpha_floor: float | None = None,
              mean_estimator: ColumnEstimator = column_mean,
              var_estimator: ColumnEstimator = column_variance) -> PenaltyWeights:
    """Bootstrap the training window and return calibrated weights.

    ``alpha_floor`` defaults to ``1e-10`` times the average per-asset
    variance estimate.
    """
    for name, p in (("p1", p1), ("p2", p2)):
        if not 0.0 <= p <= 1.0:
            raise ConfigurationError(f"{name} must lie in [0, 1], got {p}")
    x = returns.data if isinstance(returns, ReturnMatrix) else np.asarray(returns, dtype=float)
    errors = bootstrap_errors(x, mean_estimator, var_estimator, K, seed)
    if alpha_floor is None:
        alpha_floor = default_alpha_floor(var_estimator(x))
    weights = quantile_weights(errors, p1, p2, alpha_floor)
    seed_value = seed if isinstance(seed, (int, np.integer)) else None
    return PenaltyWeights(weights.alpha, weights.beta, p1, p2, K, seed_value)
