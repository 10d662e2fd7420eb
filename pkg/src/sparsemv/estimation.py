"""Mean and covariance estimation from a window of excess returns.

The covariance estimate shrinks the 1/T sample covariance towards a scaled
identity with the data-driven intensity of Ledoit & Wolf (2004, "A
well-conditioned estimator for large-dimensional covariance matrices").  The
mean estimate is a James-Stein estimator shrinking towards a common level.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .exceptions import ConfigurationError, EstimationError

#: Daily historical return of the US stock market used as the lower bound of
#: the James-Stein shrinkage target.
DEFAULT_ETA_FLOOR = 0.0004


@dataclass(frozen=True)
class ReturnMatrix:
    """T x N matrix of per-period excess returns, one column per asset."""

    data: np.ndarray
    asset_ids: tuple = ()
    period_index: tuple = ()

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise EstimationError(f"return matrix must be a non-empty T x N array, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise EstimationError("return matrix contains non-finite entries")
        t, n = data.shape
        asset_ids = tuple(self.asset_ids) if len(self.asset_ids) else tuple(f"A{i}" for i in range(n))
        period_index = tuple(self.period_index) if len(self.period_index) else tuple(range(t))
        if len(asset_ids) != n:
            raise EstimationError(f"got {len(asset_ids)} asset ids for {n} columns")
        if len(set(asset_ids)) != n:
            raise EstimationError("asset ids must be unique")
        if len(period_index) != t:
            raise EstimationError(f"got {len(period_index)} period labels for {t} rows")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "asset_ids", asset_ids)
        object.__setattr__(self, "period_index", period_index)

    @property
    def n_periods(self) -> int:
        return self.data.shape[0]

    @property
    def n_assets(self) -> int:
        return self.data.shape[1]

    def rows(self, start: int, stop: int) -> "ReturnMatrix":
        return ReturnMatrix(self.data[start:stop], self.asset_ids, self.period_index[start:stop])


@dataclass(frozen=True)
class Estimates:
    """Mean vector and positive-definite covariance with their provenance."""

    mu: np.ndarray
    gamma: np.ndarray
    mean_method: str = "sample"
    cov_method: str = "sample"
    intensities: dict = field(default_factory=dict)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.shape != (mu.size, mu.size):
            raise EstimationError(f"gamma shape {gamma.shape} does not match mu of length {mu.size}")
        scale = max(1.0, float(np.max(np.abs(gamma), initial=0.0)))
        if not np.allclose(gamma, gamma.T, rtol=0.0, atol=1e-12 * scale):
            raise EstimationError("covariance estimate is not symmetric")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)


def _as_array(returns) -> np.ndarray:
    if isinstance(returns, ReturnMatrix):
        return returns.data
    data = np.asarray(returns, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    if data.ndim != 2 or data.size == 0:
        raise EstimationError(f"expected a non-empty T x N array, got shape {data.shape}")
    return data


def sample_mean(returns) -> np.ndarray:
    """Column-wise arithmetic mean."""
    return _as_array(returns).mean(axis=0)


def sample_covariance(returns) -> np.ndarray:
    """Maximum-likelihood (1/T) sample covariance of the columns."""
    x = _as_array(returns)
    t = x.shape[0]
    if t < 2:
        raise EstimationError(f"sample covariance needs at least 2 periods, got {t}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / t
    return (cov + cov.T) / 2.0


def default_eigen_floor(sample_cov: np.ndarray) -> float:
    n = sample_cov.shape[0]
    return 1e-8 * max(1.0, float(np.trace(sample_cov)) / n)


def floor_eigenvalues(matrix: np.ndarray, eigen_floor: float) -> np.ndarray:
    """Raise the eigenvalues of a symmetric matrix to at least ``eigen_floor``.

    The matrix is returned untouched (bar symmetrization) when it already
    satisfies the floor.
    """
    sym = (matrix + matrix.T) / 2.0
    if eigen_floor <= 0:
        return sym
    vals, vecs = linalg.eigh(sym)
    if vals[0] >= eigen_floor:
        return sym
    vals = np.maximum(vals, eigen_floor)
    out = (vecs * vals) @ vecs.T
    return (out + out.T) / 2.0


def ledoit_wolf_covariance(returns, eigen_floor: float | None = None) -> tuple[np.ndarray, float, float]:
    """Shrink the sample covariance towards ``m * I`` with m = trace / N.

    Returns ``(gamma, rho1, rho2)`` with ``gamma = rho1 * S + rho2 * I``
    (before any eigenvalue flooring), where ``S`` is the 1/T sample
    covariance.  ``rho1 = 1 - delta`` and ``rho2 = delta * m`` for the
    asymptotically optimal intensity ``delta = b^2 / d^2`` with

    * ``d^2 = ||S - m I||^2``
    * ``b^2 = min(d^2, T^-2 sum_k ||x_k x_k^T - S||^2)``

    and ``||A||^2 = trace(A A^T) / N``.  Pass ``eigen_floor=0`` to disable the
    positive-definiteness floor.
    """
    x = _as_array(returns)
    t, n = x.shape
    s = sample_covariance(x)
    if eigen_floor is None:
        eigen_floor = default_eigen_floor(s)

    m = float(np.trace(s)) / n
    target_gap = s - m * np.eye(n)
    d2 = float(np.sum(target_gap**2)) / n
    if d2 <= 0.0:
        # S is already a multiple of the identity.
        rho1, rho2 = 1.0, 0.0
    else:
        centered = x - x.mean(axis=0)
        # sum_k ||x_k x_k^T - S||_F^2 = sum_k ||x_k||^4 - T ||S||_F^2
        row_sq = np.sum(centered**2, axis=1)
        b2_bar = (float(np.sum(row_sq**2)) - t * float(np.sum(s**2))) / (n * t**2)
        b2 = min(max(b2_bar, 0.0), d2)
        delta = b2 / d2
        rho1, rho2 = 1.0 - delta, delta * m

    gamma = rho1 * s + rho2 * np.eye(n)
    gamma = floor_eigenvalues(gamma, eigen_floor)
    return gamma, rho1, rho2


def james_stein_mean(
    mu_s: Sequence[float],
    gamma: np.ndarray,
    t_train: int,
    eta_floor: float = DEFAULT_ETA_FLOOR,
) -> tuple[np.ndarray, float, float]:
    """Shrink the sample mean towards ``eta * 1``.

    ``eta`` is the cross-sectional average of ``mu_s`` bounded below by
    ``eta_floor``; the intensity is
    ``min(1, (N - 2) / (T (mu_s - eta)^T gamma^-1 (mu_s - eta)))`` clamped to
    [0, 1].  When ``mu_s`` already equals ``eta * 1`` the intensity is 1.

    Returns ``(mu_hat, rho, eta)``.
    """
    mu_s = np.asarray(mu_s, dtype=float).ravel()
    gamma = np.asarray(gamma, dtype=float)
    n = mu_s.size
    if n < 1:
        raise EstimationError("empty mean vector")
    if t_train < 1:
        raise EstimationError(f"t_train must be >= 1, got {t_train}")
    if gamma.shape != (n, n):
        raise EstimationError(f"gamma shape {gamma.shape} does not match mean of length {n}")

    eta = max(float(np.mean(mu_s)), eta_floor)
    diff = mu_s - eta
    try:
        factor = linalg.cho_factor(gamma)
    except linalg.LinAlgError as exc:
        raise EstimationError("covariance estimate is not positive definite") from exc
    quad = t_train * float(diff @ linalg.cho_solve(factor, diff))
    if quad <= 0.0:
        rho = 1.0
    else:
        rho = min(1.0, max(0.0, (n - 2) / quad))
    mu_hat = (1.0 - rho) * mu_s + rho * eta
    return mu_hat, rho, eta


def estimate(returns, eigen_floor: float | None = None, eta_floor: float = DEFAULT_ETA_FLOOR,
             mean_method: str = "james_stein", cov_method: str = "ledoit_wolf") -> Estimates:
    """Estimate mean and covariance from a training window."""
    x = _as_array(returns)
    t = x.shape[0]
    intensities = {}
    if cov_method == "ledoit_wolf":
        gamma, rho1, rho2 = ledoit_wolf_covariance(x, eigen_floor)
        intensities.update(rho1=rho1, rho2=rho2)
    elif cov_method == "sample":
        s = sample_covariance(x)
        gamma = floor_eigenvalues(s, default_eigen_floor(s) if eigen_floor is None else eigen_floor)
    else:
        raise ConfigurationError(f"unknown covariance method {cov_method!r}")

    mu_s = sample_mean(x)
    if mean_method == "james_stein":
        mu, rho, eta = james_stein_mean(mu_s, gamma, t, eta_floor)
        intensities.update(rho=rho, eta=eta)
    elif mean_method == "sample":
        mu = mu_s
    else:
        raise ConfigurationError(f"unknown mean method {mean_method!r}")
    return Estimates(mu, gamma, mean_method, cov_method, intensities)
