"""Reproducible synthetic problems and markets.

``planted_problem`` builds benchmark instances whose optimal support is
close to a chosen size.  ``sparse_mean_market`` draws Gaussian excess
returns whose true mean is non-zero on a few assets only.
"""
from __future__ import annotations

import numpy as np

from .estimation import ReturnMatrix
from .objective import Problem


def planted_problem(n: int, support_size: int, seed=0, n_factors: int | None = None,
                    diag_boost: float = 1.0) -> Problem:
    """Problem with an SPD covariance ``A A^T / N + diag_boost * I``.

    ``A`` is ``N x n_factors`` standard normal (``n_factors`` defaults to N).
    ``beta`` is uniform on [0.5, 1.5], ``alpha`` uniform on [0.01, 0.1].
    ``mu`` exceeds ``beta`` by 1 to 3 in magnitude on ``support_size``
    randomly chosen assets and is uniform on ``(-beta/2, beta/2)`` elsewhere,
    so the optimal support is close to (not exactly) the planted one.
    """
    rng = np.random.default_rng(seed)
    k = n if n_factors is None else n_factors
    a = rng.standard_normal((n, k))
    gamma = a @ a.T / n + diag_boost * np.eye(n)
    beta = rng.uniform(0.5, 1.5, n)
    alpha = rng.uniform(0.01, 0.1, n)
    mu = rng.uniform(-0.5, 0.5, n) * beta
    planted = rng.choice(n, size=min(support_size, n), replace=False)
    sign = rng.choice([-1.0, 1.0], size=planted.size)
    mu[planted] = sign * (beta[planted] + rng.uniform(1.0, 3.0, planted.size))
    return Problem(gamma, mu, alpha, beta)


def sparse_mean_market(n_assets: int = 50, n_periods: int = 756, seed=0,
                       n_signal: int = 5, signal_mean: float = 0.002,
                       vol: float = 0.01, market_vol: float = 0.0) -> tuple[ReturnMatrix, np.ndarray, np.ndarray]:
    """Gaussian market with a sparse mean vector.

    The covariance is ``market_vol^2 * 1 1^T + vol^2 * I`` (daily units); the
    default has no common factor, i.e. independent assets.
    The first ``n_signal`` assets have mean ``signal_mean``; the rest have
    mean zero.  Returns ``(returns, mu, gamma)`` where the last two are the
    true parameters.
    """
    rng = np.random.default_rng(seed)
    mu = np.zeros(n_assets)
    mu[:n_signal] = signal_mean
    gamma = market_vol**2 * np.ones((n_assets, n_assets)) + vol**2 * np.eye(n_assets)
    chol = np.linalg.cholesky(gamma)
    data = mu + rng.standard_normal((n_periods, n_assets)) @ chol.T
    ids = tuple(f"S{i:03d}" for i in range(n_assets))
    return ReturnMatrix(data, ids), mu, gamma


def sample_price_table(n_assets: int = 10, n_periods: int = 378, seed=2024,
                       risk_free: float = 1e-4, **market):
    """Price path of a :func:`sparse_mean_market` with a constant risk-free rate.

    Prices start at 100 on business days from 2020-01-02 and compound the
    excess returns plus ``risk_free``, so ``compute_excess_returns`` recovers
    the drawn returns up to rounding.  This generates the bundled sample file.
    """
    from .io import PriceTable

    market.setdefault("n_signal", 2)
    returns, _, _ = sparse_mean_market(n_assets, n_periods, seed, **market)
    growth = np.vstack([np.ones(n_assets), 1.0 + returns.data + risk_free])
    prices = np.round(100.0 * np.cumprod(growth, axis=0), 6)
    days = np.busday_offset(np.datetime64("2020-01-02"), np.arange(n_periods + 1), roll="forward")
    ids = tuple(f"ASSET{i:02d}" for i in range(n_assets))
    return PriceTable(tuple(str(d) for d in days), prices, np.full(n_periods, risk_free), ids)
