"""Penalized mean-variance objective and its optimality certificates.

The objective of a weighted elastic-net portfolio is::

    psi(w) = w' G w - w' mu + sum_i beta_i |w_i| + sum_i alpha_i w_i^2
           = w' R w - w' mu + sum_i beta_i |w_i|,      R = G + diag(alpha)

Everything here is a pure function of an immutable :class:`Problem`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from .exceptions import ConfigurationError

#: (sqrt(2) + 1)^2 / 2, the gap inflation of the truncation certificate.
TRUNCATION_GAP_FACTOR = (math.sqrt(2.0) + 1.0) ** 2 / 2.0


@dataclass(frozen=True, eq=False)
class Problem:
    """Weighted elastic-net portfolio problem.

    Parameters
    ----------
    gamma : (N, N) array
        Symmetric positive semi-definite covariance estimate.
    mu : (N,) array
        Mean excess return estimate.
    alpha : (N,) array
        Squared-l2 weights, non-negative.  Zeros are allowed as long as
        ``R`` stays positive definite.
    beta : (N,) array
        l1 weights, non-negative.
    alpha_o : float, optional
        Positive lower bound on the spectrum of ``R`` used by the
        certificates.  Defaults to ``min(alpha)``, or to the smallest
        eigenvalue of ``R`` when some ``alpha_i`` is zero.  Restricted
        sub-problems inherit the parent's value, which remains a valid bound.
    """

    gamma: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_o: float | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        n = mu.size
        gamma = np.array(self.gamma, dtype=float, ndmin=2)
        if gamma.shape != (n, n):
            raise ConfigurationError(f"gamma has shape {gamma.shape}, expected ({n}, {n})")
        try:
            alpha = np.broadcast_to(np.asarray(self.alpha, dtype=float).ravel(), (n,)).copy()
            beta = np.broadcast_to(np.asarray(self.beta, dtype=float).ravel(), (n,)).copy()
        except ValueError as exc:
            raise ConfigurationError("alpha and beta must match the number of assets") from exc
        if n == 0:
            raise ConfigurationError("empty problem")
        if not (np.all(np.isfinite(gamma)) and np.all(np.isfinite(mu))
                and np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ConfigurationError("problem data must be finite")
        if np.any(alpha < 0):
            raise ConfigurationError("alpha must be non-negative")
        if np.any(beta < 0):
            raise ConfigurationError("beta must be non-negative")
        scale = max(1.0, float(np.max(np.abs(gamma))))
        if not np.allclose(gamma, gamma.T, rtol=0.0, atol=1e-10 * scale):
            raise ConfigurationError("gamma must be symmetric")
        gamma = (gamma + gamma.T) / 2.0
        if self.alpha_o is not None:
            alpha_o = float(self.alpha_o)
            if alpha_o <= 0 or (alpha.min() > 0 and alpha_o > alpha.min() * (1 + 1e-12)):
                raise ConfigurationError("alpha_o must lie in (0, min(alpha)]")
        elif alpha.min() > 0:
            alpha_o = float(alpha.min())
        else:
            alpha_o = float(np.linalg.eigvalsh(gamma + np.diag(alpha))[0])
            if not alpha_o > 0:
                raise ConfigurationError("gamma + diag(alpha) is not positive definite; "
                                         "use positive alpha with a singular covariance")
        for name, value in (("gamma", gamma), ("mu", mu), ("alpha", alpha), ("beta", beta)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "alpha_o", alpha_o)

    @property
    def n(self) -> int:
        return self.mu.size

    @cached_property
    def R(self) -> np.ndarray:
        r = self.gamma + np.diag(self.alpha)
        r.setflags(write=False)
        return r

    def restrict(self, index) -> "Problem":
        """Sub-problem on the coordinates ``index`` (others pinned at zero)."""
        index = np.asarray(index, dtype=int)
        return Problem(self.gamma[np.ix_(index, index)], self.mu[index], self.alpha[index],
                       self.beta[index], alpha_o=self.alpha_o)


@dataclass(frozen=True, eq=False)
class Portfolio:
    """Portfolio weights with explicit support and an optional certified gap.

    ``certified_gap`` is an ``eps`` for which ``psi(w) <= psi(w*) + eps`` has
    been certified, or ``None``.
    """

    w: np.ndarray
    certified_gap: float | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict)
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        w.setflags(write=False)
        support = np.flatnonzero(w)
        support.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "support", support)

    @property
    def support_size(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True)
class OptimalityReport:
    """Result of :func:`check_exact_optimality`; truthy when optimal."""

    optimal: bool
    violations: tuple
    residuals: np.ndarray

    def __bool__(self):
        return self.optimal


def _vector(problem: Problem, w) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if w.size != problem.n:
        raise ConfigurationError(f"weight vector has length {w.size}, problem has {problem.n} assets")
    return w


def objective(problem: Problem, w) -> float:
    """Penalized objective psi(w)."""
    w = _vector(problem, w)
    return float(w @ problem.gamma @ w - w @ problem.mu + problem.beta @ np.abs(w) + problem.alpha @ (w * w))


def smooth_gradient(problem: Problem, w) -> np.ndarray:
    """Gradient ``2 R w - mu`` of the smooth part ``w' R w - w' mu``."""
    w = _vector(problem, w)
    return 2.0 * (problem.R @ w) - problem.mu


def validate_uncertainty(delta: np.ndarray) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
        raise ConfigurationError(f"uncertainty matrix must be square, got shape {delta.shape}")
    scale = max(1.0, float(np.max(np.abs(delta), initial=0.0)))
    if not np.allclose(delta, delta.T, rtol=0.0, atol=1e-12 * scale):
        raise ConfigurationError("uncertainty matrix must be symmetric")
    if np.any(delta < 0):
        raise ConfigurationError("uncertainty matrix entries must be non-negative")
    off = delta.sum(axis=1) - np.diag(delta)
    if np.any(np.diag(delta) < off - 1e-12 * scale):
        raise ConfigurationError("uncertainty matrix must be diagonally dominant")
    return delta


def robust_objective(gamma, mu, beta, delta, w) -> float:
    """Worst case of ``w' R w - v' w`` over the entrywise uncertainty sets.

    The inner maximum has the closed form
    ``w' G w - w' mu + |w|' delta |w| + sum_i beta_i |w_i|``.
    """
    gamma = np.asarray(gamma, dtype=float)
    mu = np.asarray(mu, dtype=float).ravel()
    beta = np.broadcast_to(np.asarray(beta, dtype=float), mu.shape)
    delta = validate_uncertainty(delta)
    w = np.asarray(w, dtype=float).ravel()
    if not (gamma.shape == delta.shape == (w.size, w.size) and mu.size == w.size):
        raise ConfigurationError("dimension mismatch in robust objective")
    a = np.abs(w)
    return float(w @ gamma @ w - w @ mu + a @ delta @ a + beta @ a)


def scad_penalty(x, lam: float, a_scad: float = 3.7):
    """SCAD penalty, elementwise for array input."""
    if a_scad <= 2:
        raise ConfigurationError(f"a_scad must exceed 2, got {a_scad}")
    if lam <= 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    ax = np.abs(np.asarray(x, dtype=float))
    inner = lam * ax
    middle = -(ax**2 - 2.0 * a_scad * lam * ax + lam**2) / (2.0 * (a_scad - 1.0))
    outer = np.full_like(ax, (a_scad + 1.0) * lam**2 / 2.0)
    out = np.where(ax <= lam, inner, np.where(ax <= a_scad * lam, middle, outer))
    return float(out) if out.ndim == 0 else out


def default_slack(problem: Problem) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(problem.mu))))


def check_exact_optimality(problem: Problem, w, slack: float | None = None) -> OptimalityReport:
    """Subgradient optimality test with an explicit floating-point slack.

    Off the support ``|g_i| <= beta_i + slack``; on it
    ``|g_i + beta_i sgn(w_i)| <= slack`` where ``g = 2 R w - mu``.
    """
    w = _vector(problem, w)
    if slack is None:
        slack = default_slack(problem)
    if slack < 0:
        raise ConfigurationError("slack must be non-negative")
    g = smooth_gradient(problem, w)
    on = w != 0
    residual = np.where(on, np.abs(g + problem.beta * np.sign(w)), np.abs(g) - problem.beta)
    violations = tuple(int(i) for i in np.flatnonzero(residual > slack))
    return OptimalityReport(not violations, violations, residual)


def _gradient_certificate(beta, alpha_o, w, g, epsilon) -> bool:
    on = w != 0
    r = g[on] + beta[on] * np.sign(w[on])
    if float(r @ r) > 2.0 * epsilon * alpha_o:
        return False
    off = ~on
    return bool(np.all(np.abs(g[off]) <= beta[off]))


def check_theorem2(problem: Problem, w, epsilon: float) -> bool:
    """Certify ``psi(w) <= psi(w*) + epsilon`` from gradient information.

    True when the squared on-support residuals sum to at most
    ``2 epsilon alpha_o`` and every off-support gradient lies in
    ``[-beta_i, beta_i]``.
    """
    if epsilon <= 0:
        raise ConfigurationError("epsilon must be positive")
    w = _vector(problem, w)
    return _gradient_certificate(problem.beta, problem.alpha_o, w, smooth_gradient(problem, w), epsilon)


def spectral_norm_bound(matrix: np.ndarray, exact_below: int = 300) -> float:
    """Upper bound on ``||A||_2`` for a symmetric positive semi-definite ``A``.

    The largest eigenvalue is computed exactly for small matrices and by
    Lanczos iteration otherwise, then inflated by 1%.  Ritz values never
    exceed the true eigenvalue, so the inflation has to absorb only the
    Lanczos tolerance.  Plain power iteration is not used because with
    clustered top eigenvalues it stalls well below the norm.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    top = None
    if n > exact_below:
        try:
            v0 = 1.0 + np.arange(n) / n
            top = float(sparse_linalg.eigsh(a, k=1, which="LA", v0=v0, tol=1e-6,
                                            return_eigenvectors=False)[0])
        except sparse_linalg.ArpackNoConvergence:
            top = None
    if top is None:
        top = float(linalg.eigh(a, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])
    return 1.01 * max(top, float(np.max(np.abs(np.diag(a)))))


def truncation_threshold(n: int, alpha_o: float, epsilon: float, m_bound: float) -> float:
    """Largest admissible entry magnitude to drop, just below the strict bound."""
    return 0.999 * min(epsilon, math.sqrt(epsilon * alpha_o)) / (math.sqrt(n) * m_bound)


def _truncate(beta, alpha_o, w, g, epsilon, m_bound):
    """Core of :func:`truncate_and_certify` on precomputed gradient ``g``."""
    n = w.size
    eta = truncation_threshold(n, alpha_o, epsilon, m_bound)
    on = w != 0
    small = on & (np.abs(w) < eta)
    large = on & ~small
    r = g[large] + beta[large] * np.sign(w[large])
    if float(r @ r) > 2.0 * epsilon * alpha_o:
        return w, False
    band = ~large
    if np.any(np.abs(g[band]) > beta[band] - epsilon):
        return w, False
    zeta = np.where(small, 0.0, w)
    return zeta, True


def truncate_and_certify(problem: Problem, w, epsilon: float, m_bound: float | None = None):
    """Drop tiny weights and certify the result within ``(sqrt2+1)^2/2 * epsilon``.

    ``m_bound`` must be at least ``2 ||R||_2``; by default it is twice
    :func:`spectral_norm_bound` of ``R``.  Returns ``(portfolio, certified)``;
    an uncertified result carries ``w`` unchanged and no gap.
    """
    if epsilon <= 0:
        raise ConfigurationError("epsilon must be positive")
    w = _vector(problem, w)
    if m_bound is None:
        m_bound = 2.0 * spectral_norm_bound(problem.R)
    # ||R||_2 >= max_i R_ii, so anything below twice that is certainly too small
    if m_bound < 2.0 * float(np.max(np.diag(problem.R))):
        raise ConfigurationError(f"m_bound={m_bound} is below 2 * ||R||_2")
    g = smooth_gradient(problem, w)
    zeta, ok = _truncate(problem.beta, problem.alpha_o, w, g, epsilon, m_bound)
    if not ok:
        return Portfolio(w), False
    return Portfolio(zeta, certified_gap=TRUNCATION_GAP_FACTOR * epsilon), True
