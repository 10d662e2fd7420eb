"""Rolling-window out-of-sample backtest.

Every ``hold_len`` periods the portfolio is re-estimated from the preceding
``train_len`` periods, then held fixed.  Only out-of-sample periods are
scored.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .calibration import PenaltyWeights, calibrate, default_alpha_floor
from .estimation import DEFAULT_ETA_FLOOR, ReturnMatrix, estimate
from .exceptions import ConfigurationError, DegenerateSeriesError, InsufficientHistoryError, NonConvergenceError
from .objective import Problem
from .solvers import SOLVERS, SolverConfig, solve

logger = logging.getLogger(__name__)

CRITERIA = ("unpenalized", "weighted_elastic_net", "uniform_elastic_net", "weighted_lasso")


@dataclass(frozen=True)
class BacktestConfig:
    train_len: int = 252
    hold_len: int = 63
    criterion: str = "weighted_elastic_net"
    p1: float = 0.7
    p2: float = 0.7
    n_bootstrap: int = 200
    solver: str = "adaptive"
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    alpha_floor: float | None = None
    mean_method: str = "james_stein"
    cov_method: str = "ledoit_wolf"
    eigen_floor: float | None = None
    eta_floor: float = DEFAULT_ETA_FLOOR

    def __post_init__(self):
        if self.train_len < 2:
            raise ConfigurationError(f"train_len must be >= 2, got {self.train_len}")
        if self.hold_len < 1:
            raise ConfigurationError(f"hold_len must be >= 1, got {self.hold_len}")
        if self.criterion not in CRITERIA:
            raise ConfigurationError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {p}")
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {tuple(SOLVERS)}, got {self.solver!r}")
        if self.mean_method not in ("james_stein", "sample"):
            raise ConfigurationError(f"mean_method must be 'james_stein' or 'sample', got {self.mean_method!r}")
        if self.cov_method not in ("ledoit_wolf", "sample"):
            raise ConfigurationError(f"cov_method must be 'ledoit_wolf' or 'sample', got {self.cov_method!r}")
        if self.alpha_floor is not None and not self.alpha_floor > 0:
            raise ConfigurationError(f"alpha_floor must be positive, got {self.alpha_floor}")
        if self.n_bootstrap < 1:
            raise ConfigurationError(f"n_bootstrap must be >= 1, got {self.n_bootstrap}")


@dataclass
class BacktestReport:
    """Daily out-of-sample returns and per-rebalance diagnostics."""

    returns: np.ndarray
    periods: list
    sharpe: float
    rebalance_dates: list
    support_sizes: list
    turnover: list
    weights: list
    asset_ids: tuple = ()


def rolling_windows(T: int, train_len: int, hold_len: int) -> list[tuple[range, range]]:
    """(train, hold) index ranges; the last hold is truncated to the data."""
    if train_len < 1 or hold_len < 1:
        raise ConfigurationError("train_len and hold_len must be positive")
    if T <= train_len:
        raise InsufficientHistoryError(
            f"{T} periods leave no out-of-sample data after a {train_len}-period training window")
    return [(range(start - train_len, start), range(start, min(start + hold_len, T)))
            for start in range(train_len, T, hold_len)]


def sharpe_ratio(portfolio_returns) -> float:
    """Mean over population standard deviation, not annualized."""
    r = np.asarray(portfolio_returns, dtype=float).ravel()
    if r.size < 2:
        raise DegenerateSeriesError(f"need at least 2 returns, got {r.size}")
    sd = float(np.sqrt(np.mean((r - r.mean()) ** 2)))
    if sd <= 1e-15 * max(1.0, float(np.max(np.abs(r)))):
        raise DegenerateSeriesError("portfolio returns have zero dispersion")
    return float(np.mean(r)) / sd


def window_seed(seed: int, window: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, window])


def penalty_weights(train: np.ndarray, config: BacktestConfig, seed) -> PenaltyWeights:
    """Elastic-net weights for one training window under the configured criterion.

    ``seed`` drives the bootstrap (anything ``numpy.random.default_rng``
    accepts).
    """
    floor = config.alpha_floor or default_alpha_floor(train.var(axis=0))
    n = train.shape[1]
    if config.criterion == "unpenalized":
        return PenaltyWeights(np.full(n, floor), np.zeros(n))
    w = calibrate(train, config.p1, config.p2, config.n_bootstrap, seed, alpha_floor=floor)
    if config.criterion == "uniform_elastic_net":
        return PenaltyWeights(np.full(n, w.alpha.mean()), np.full(n, w.beta.mean()))
    if config.criterion == "weighted_lasso":
        return PenaltyWeights(np.full(n, floor), w.beta)
    return w


def build_problem(train: np.ndarray, config: BacktestConfig, seed) -> Problem:
    """Estimate, calibrate and assemble the penalized problem for one window."""
    est = estimate(train, config.eigen_floor, config.eta_floor, config.mean_method, config.cov_method)
    pw = penalty_weights(train, config, seed)
    return Problem(est.gamma, est.mu, pw.alpha, pw.beta)


def window_portfolio(train: np.ndarray, config: BacktestConfig, window: int) -> np.ndarray:
    problem = build_problem(train, config, window_seed(config.seed, window))
    return solve(problem, config.solver_config, config.solver).w


def run_backtest(returns: ReturnMatrix, config: BacktestConfig | None = None) -> BacktestReport:
    """Estimate, calibrate and solve on each window; score the hold periods.

    Raises :class:`DegenerateSeriesError` (with the report attached as
    ``exc.report``) when the out-of-sample returns have zero dispersion, for
    example when every window yields the empty portfolio.
    """
    config = config or BacktestConfig()
    if not isinstance(returns, ReturnMatrix):
        returns = ReturnMatrix(returns)
    data = returns.data
    windows = rolling_windows(returns.n_periods, config.train_len, config.hold_len)

    daily, periods, dates, supports, turnover, weights = [], [], [], [], [], []
    previous = np.zeros(returns.n_assets)
    for j, (train, hold) in enumerate(windows):
        try:
            w = window_portfolio(data[train.start:train.stop], config, j)
        except NonConvergenceError as exc:
            exc.window = j
            raise NonConvergenceError(f"window {j} (hold starting at period {hold.start}): {exc}",
                                      best=exc.best, window=j) from exc
        logger.debug("window %d: support %d", j, np.count_nonzero(w))
        daily.append(data[hold.start:hold.stop] @ w)
        periods.extend(returns.period_index[hold.start:hold.stop])
        dates.append(returns.period_index[hold.start])
        supports.append(int(np.count_nonzero(w)))
        turnover.append(float(np.abs(w - previous).sum()))
        weights.append(w)
        previous = w

    series = np.concatenate(daily)
    report = BacktestReport(series, periods, None, dates, supports, turnover, weights, returns.asset_ids)
    try:
        report.sharpe = sharpe_ratio(series)
    except DegenerateSeriesError as exc:
        exc.report = report
        raise
    return report
