"""Solvers for the weighted elastic-net portfolio problem.

All solvers stop on the same certificate: an iterate ``w`` is accepted once
dropping its entries below a threshold ``eta`` yields a portfolio whose
objective is provably within ``tol`` of the optimum (see
:func:`sparsemv.objective.truncate_and_certify`).  If an optimal weight is
itself smaller than ``eta`` that test can never pass, so a few nearby sparse
points are also checked with :func:`sparsemv.objective.check_theorem2`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .exceptions import ConfigurationError, NonConvergenceError
from .objective import (
    TRUNCATION_GAP_FACTOR,
    Portfolio,
    Problem,
    _gradient_certificate,
    _truncate,
    objective,
    spectral_norm_bound,
    truncation_threshold,
)

ORACLE_MAX_ASSETS = 15


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    Attributes
    ----------
    lam : float or None
        Bregman coupling.  ``None`` picks :func:`default_lambda`.
    tol : float
        Certified objective gap of the returned portfolio.
    batch_size : int or None
        Minimum number of indices admitted per adaptive-support round.
        ``None`` means ``max(10, ceil(N / 10))``.
    max_inner : int
        Iteration cap of a single Split-Bregman or FISTA run.
    max_outer : int or None
        Cap on adaptive-support rounds; ``None`` means N.
    """

    lam: float | None = None
    tol: float = 1e-6
    batch_size: int | None = None
    max_inner: int = 10_000
    max_outer: int | None = None

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ConfigurationError(f"lam must be positive, got {self.lam}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_inner < 1:
            raise ConfigurationError(f"max_inner must be >= 1, got {self.max_inner}")
        if self.max_outer is not None and self.max_outer < 1:
            raise ConfigurationError(f"max_outer must be >= 1, got {self.max_outer}")

    @property
    def epsilon(self) -> float:
        """Truncation-certificate epsilon that guarantees a gap of ``tol``."""
        return self.tol / TRUNCATION_GAP_FACTOR


@dataclass(frozen=True)
class BregmanState:
    """Split-Bregman iterate: weights, split variable and Bregman variable."""

    w: np.ndarray
    d: np.ndarray
    b: np.ndarray
    iteration: int = 0


def shrink(x, gamma):
    """Soft threshold ``sign(x) * max(|x| - gamma, 0)``, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)
    return float(out) if out.ndim == 0 else out


def default_lambda(problem: Problem) -> float:
    """Bregman coupling balancing ``lam * beta_i^2`` against the scale of ``2 R``."""
    beta2 = problem.beta**2
    if not np.any(beta2 > 0):
        return 1.0
    scale = 2.0 * float(np.mean(np.diag(problem.R)))
    return scale / float(np.mean(beta2[beta2 > 0]))


class _Certifier:
    """Evaluates the stopping certificate for one problem.

    The truncation certificate is tried first.  When it fails only because
    of entries below the truncation threshold (for instance an optimal
    weight that is itself tiny), a few candidate points are checked against
    the exact-support certificate with ``epsilon = tol``: the truncated
    point, the iterate itself and any caller-supplied sparsity patterns.
    """

    def __init__(self, problem: Problem, tol: float):
        self.problem = problem
        self.tol = tol
        self.epsilon = tol / TRUNCATION_GAP_FACTOR
        self.m_bound = 2.0 * spectral_norm_bound(problem.R)
        self.eta = truncation_threshold(problem.n, problem.alpha_o, self.epsilon, self.m_bound)

    def exact_gradient(self, w):
        on = np.flatnonzero(w)
        return 2.0 * (self.problem.R[:, on] @ w[on]) - self.problem.mu

    def __call__(self, w, g=None, masks=()):
        """Return certified weights or ``None``.

        ``g`` may be a cheaply computed gradient at ``w``; a positive
        verdict based on it is confirmed with the exact gradient.
        """
        p = self.problem
        exact = g is None
        if exact:
            g = self.exact_gradient(w)
        zeta, ok = _truncate(p.beta, p.alpha_o, w, g, self.epsilon, self.m_bound)
        if ok:
            return zeta if exact else self(w, masks=masks)
        large = np.abs(w) >= self.eta
        r = g[large] + p.beta[large] * np.sign(w[large])
        if float(r @ r) > 2.0 * self.epsilon * p.alpha_o:
            return None
        candidates = [np.where(large, w, 0.0), w]
        candidates += [np.where(mask, w, 0.0) for mask in masks]
        for cand in candidates:
            if _gradient_certificate(p.beta, p.alpha_o, cand, self.exact_gradient(cand), self.tol):
                return cand
        return None


def _initial_state(problem: Problem, init: BregmanState | None):
    n = problem.n
    if init is None:
        return np.zeros(n), np.zeros(n), np.zeros(n)
    w, d, b = (np.array(v, dtype=float).ravel() for v in (init.w, init.d, init.b))
    if not w.size == d.size == b.size == n:
        raise ConfigurationError("warm-start state does not match the problem dimension")
    return w, d, b


def split_bregman(problem: Problem, config: SolverConfig | None = None,
                  init: BregmanState | None = None) -> tuple[Portfolio, BregmanState]:
    """Split-Bregman iterations with a certified stopping rule.

    Each iteration solves ``(2R + lam D_beta^2) w = mu + lam D_beta (d - b)``
    with a cached Cholesky factor, then ``d = shrink(beta w + b, 1/lam)`` and
    ``b += beta w - d``.  The certificate is checked before every iteration,
    so restarting from a returned state stops immediately.

    Returns the certified portfolio and the final state for warm starts.
    """
    config = config or SolverConfig()
    lam = config.lam if config.lam is not None else default_lambda(problem)
    beta, mu = problem.beta, problem.mu
    w, d, b = _initial_state(problem, init)
    start = 0 if init is None else init.iteration
    certify = _Certifier(problem, config.tol)

    zeta = certify(w, masks=(d != 0,))
    if zeta is not None:
        return (Portfolio(zeta, config.tol, 0, info={"lam": lam}),
                BregmanState(w, d, b, start))

    lam_beta = lam * beta
    factor = linalg.cho_factor(2.0 * problem.R + np.diag(lam_beta * beta))
    for k in range(1, config.max_inner + 1):
        rhs = mu + lam_beta * (d - b)
        w = linalg.cho_solve(factor, rhs)
        # 2 R w - mu, read off the linear system instead of a matvec
        g = rhs - lam_beta * beta * w - mu
        bw = beta * w
        d = shrink(bw + b, 1.0 / lam)
        b = b + bw - d
        zeta = certify(w, g, masks=(d != 0,))
        if zeta is not None:
            return (Portfolio(zeta, config.tol, k, info={"lam": lam}),
                    BregmanState(w, d, b, start + k))
    raise NonConvergenceError(
        f"split Bregman did not certify tol={config.tol} within {config.max_inner} iterations",
        best=Portfolio(w, None, config.max_inner, info={"lam": lam}),
    )


def _batch_size(config: SolverConfig, n: int) -> int:
    if config.batch_size is not None:
        return config.batch_size
    return max(10, math.ceil(n / 10))


def adaptive_support_split_bregman(problem: Problem, config: SolverConfig | None = None) -> Portfolio:
    """Split Bregman on a growing working set of assets.

    Each round screens every asset off the current support with the
    subgradient condition ``|(2Rw - mu)_i| <= beta_i``.  Violators are
    ranked by ``|(2Rw - mu)_i| - beta_i``; the top
    ``max(batch_size, k + 1 - |supp w|)`` of them join the support, and the
    restricted problem is re-solved warm-started from the zero-filled
    previous state, with the Bregman variable set to its limiting value
    ``-(2Rw - mu)_i / (beta_i lam)``.  Assets with ``beta_i = 0`` carry no l1
    penalty and are always in the working set.
    """
    config = config or SolverConfig()
    n = problem.n
    beta, mu, R = problem.beta, problem.mu, problem.R
    lam = config.lam if config.lam is not None else default_lambda(problem)
    inner = replace(config, lam=lam)
    batch = _batch_size(config, n)
    max_rounds = config.max_outer if config.max_outer is not None else n
    free = np.flatnonzero(beta == 0)
    pos = beta > 0

    w, d, b = np.zeros(n), np.zeros(n), np.zeros(n)
    g = -mu.copy()
    iterations = rounds = 0
    for k in range(max_rounds):
        on = w != 0
        violators = np.flatnonzero(~on & (np.abs(g) > beta))
        if violators.size == 0:
            break
        margin = np.abs(g[violators]) - beta[violators]
        count = max(batch, k + 1 - int(on.sum()))
        admitted = violators[np.argsort(-margin, kind="stable")[:count]]
        index = np.union1d(np.union1d(admitted, np.flatnonzero(on)), free)

        try:
            sub, state = split_bregman(problem.restrict(index), inner,
                                       BregmanState(w[index], d[index], b[index]))
        except NonConvergenceError as exc:
            best = np.zeros(n)
            best[index] = exc.best.w
            raise NonConvergenceError(str(exc), best=Portfolio(best, None, iterations)) from exc
        iterations += sub.iterations
        rounds += 1

        w = np.zeros(n)
        w[index] = sub.w
        d = np.zeros(n)
        d[index] = state.d
        support = np.flatnonzero(w)
        g = 2.0 * (R[:, support] @ w[support]) - mu
        b = np.zeros(n)
        b[pos] = -g[pos] / (beta[pos] * lam)

    if _gradient_certificate(beta, problem.alpha_o, w, g, config.tol):
        return Portfolio(w, config.tol, iterations, info={"lam": lam, "rounds": rounds})

    # Round cap reached (or rounding defeated the restricted certificate):
    # finish on the full problem from the prolonged state.
    full, _ = split_bregman(problem, inner, BregmanState(w, d, b))
    return Portfolio(full.w, config.tol, iterations + full.iterations,
                     info={"lam": lam, "rounds": rounds + 1})


def fista(problem: Problem, config: SolverConfig | None = None) -> Portfolio:
    """Accelerated proximal gradient with gradient-based momentum restart.

    Step size is ``1 / L`` with ``L`` an estimate of ``||2R||_2``; the prox
    of the weighted l1 term is ``shrink(., beta / L)``.
    """
    config = config or SolverConfig()
    R, mu, beta = problem.R, problem.mu, problem.beta
    certify = _Certifier(problem, config.tol)
    lip = certify.m_bound
    if lip == 0.0:
        lip = 1.0
    step_beta = beta / lip

    x = np.zeros(problem.n)
    rx = np.zeros(problem.n)
    y, ry = x, rx
    t = 1.0
    for k in range(config.max_inner + 1):
        zeta = certify(x, 2.0 * rx - mu)
        if zeta is not None:
            return Portfolio(zeta, config.tol, k, info={"lipschitz": lip})
        if k == config.max_inner:
            break
        x_new = shrink(y - (2.0 * ry - mu) / lip, step_beta)
        rx_new = R @ x_new
        if float((y - x_new) @ (x_new - x)) > 0.0:
            t = 1.0
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        mom = (t - 1.0) / t_new
        y = x_new + mom * (x_new - x)
        ry = rx_new + mom * (rx_new - rx)
        x, rx, t = x_new, rx_new, t_new
    raise NonConvergenceError(
        f"FISTA did not certify tol={config.tol} within {config.max_inner} iterations",
        best=Portfolio(x, None, config.max_inner),
    )


_SIGN_TABLES: dict[int, np.ndarray] = {}


def _sign_table(size: int) -> np.ndarray:
    """All 2^size sign vectors as the columns of a (size, 2^size) array."""
    if size not in _SIGN_TABLES:
        bits = (np.arange(2**size)[None, :] >> np.arange(size)[:, None]) & 1
        _SIGN_TABLES[size] = 1.0 - 2.0 * bits
    return _SIGN_TABLES[size]


def sign_enumeration_oracle(problem: Problem) -> Portfolio:
    """Exact minimizer by enumerating every sign pattern in {-1, 0, +1}^N.

    For each pattern the stationarity equations ``2 (R w)_i = mu_i - beta_i s_i``
    are solved on the pattern's support.  A candidate is kept when its signs
    match the pattern and every zero coordinate satisfies
    ``|(2Rw - mu)_i| <= beta_i``.  Meant for tests; cost grows like 3^N.
    """
    n = problem.n
    if n > ORACLE_MAX_ASSETS:
        raise ConfigurationError(f"sign enumeration supports at most {ORACLE_MAX_ASSETS} assets, got {n}")
    r2, mu, beta = 2.0 * problem.R, problem.mu, problem.beta
    slack = 1e-9 * (1.0 + float(np.max(np.abs(mu))) + float(np.max(beta)))

    best_w = np.zeros(n)
    best_val = 0.0 if np.all(np.abs(mu) <= beta + slack) else math.inf
    for mask in range(1, 2**n):
        sup = np.flatnonzero((mask >> np.arange(n)) & 1)
        signs = _sign_table(sup.size)
        rhs = mu[sup, None] - beta[sup, None] * signs
        sol = linalg.solve(r2[np.ix_(sup, sup)], rhs, assume_a="pos")
        keep = np.all(sol * signs > 0, axis=0)
        if not keep.any():
            continue
        sol = sol[:, keep]
        g = r2[:, sup] @ sol - mu[:, None]
        off = np.ones(n, dtype=bool)
        off[sup] = False
        keep = np.all(np.abs(g[off]) <= beta[off, None] + slack, axis=0)
        for col in np.flatnonzero(keep):
            cand = np.zeros(n)
            cand[sup] = sol[:, col]
            val = objective(problem, cand)
            if val < best_val:
                best_val, best_w = val, cand
    if not math.isfinite(best_val):
        raise RuntimeError("sign enumeration found no stationary point")
    return Portfolio(best_w, 0.0, 0)


SOLVERS = {
    "adaptive": adaptive_support_split_bregman,
    "split_bregman": lambda problem, config=None: split_bregman(problem, config)[0],
    "fista": fista,
}


def solve(problem: Problem, config: SolverConfig | None = None, method: str = "adaptive") -> Portfolio:
    """Dispatch to a solver by name: ``adaptive``, ``split_bregman`` or ``fista``."""
    try:
        solver = SOLVERS[method]
    except KeyError:
        raise ConfigurationError(f"unknown solver {method!r}; choose from {sorted(SOLVERS)}") from None
    return solver(problem, config)
