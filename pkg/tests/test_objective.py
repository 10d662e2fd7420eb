import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparsemv.exceptions import ConfigurationError
from sparsemv.objective import (
    TRUNCATION_GAP_FACTOR,
    Portfolio,
    Problem,
    check_exact_optimality,
    check_theorem2,
    objective,
    robust_objective,
    scad_penalty,
    smooth_gradient,
    spectral_norm_bound,
    truncate_and_certify,
    truncation_threshold,
    validate_uncertainty,
)
from sparsemv.solvers import sign_enumeration_oracle

from conftest import random_problem


def corner_max(gamma, mu, beta, delta, w):
    """Brute-force worst case over the corners of both uncertainty sets."""
    n = len(w)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    best = -np.inf
    for signs in itertools.product((-1.0, 1.0), repeat=len(pairs)):
        e = np.zeros((n, n))
        for (i, j), s in zip(pairs, signs):
            e[i, j] = e[j, i] = s * delta[i, j]
        quad = w @ (gamma + e) @ w
        for csigns in itertools.product((-1.0, 1.0), repeat=n):
            c = np.array(csigns) * beta
            best = max(best, quad - (mu + c) @ w)
    return best


class TestProblem:
    def test_R_and_alpha_o(self):
        p = Problem(np.eye(2), [1.0, 2.0], [0.1, 0.3], [0.0, 1.0])
        np.testing.assert_array_equal(p.R, np.diag([1.1, 1.3]))
        assert p.alpha_o == 0.1 and p.n == 2

    def test_zero_alpha_uses_spectrum(self):
        p = Problem(np.array([[2.0, 1.0], [1.0, 2.0]]), [0.0, 0.0], [0.0, 0.5], [1.0, 1.0])
        assert p.alpha_o == pytest.approx(np.linalg.eigvalsh(p.R)[0])

    @pytest.mark.parametrize("kwargs", [
        dict(gamma=np.ones((2, 2)), mu=[1, 1], alpha=[0, 0], beta=[1, 1]),   # singular R
        dict(gamma=np.eye(2), mu=[1, 1], alpha=[-1, 1], beta=[1, 1]),
        dict(gamma=np.eye(2), mu=[1, 1], alpha=[1, 1], beta=[-1, 1]),
        dict(gamma=[[1, 2], [0, 1]], mu=[1, 1], alpha=[1, 1], beta=[1, 1]),
        dict(gamma=np.eye(3), mu=[1, 1], alpha=[1, 1], beta=[1, 1]),
        dict(gamma=np.eye(2), mu=[np.nan, 1], alpha=[1, 1], beta=[1, 1]),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            Problem(**kwargs)

    def test_restrict_keeps_alpha_o(self):
        p = Problem(np.eye(3), [1, 2, 3], [0.1, 0.5, 0.9], [1, 1, 1])
        sub = p.restrict([1, 2])
        assert sub.alpha_o == 0.1
        np.testing.assert_array_equal(sub.mu, [2, 3])

    def test_portfolio_support(self):
        pf = Portfolio([0.0, -1e-300, 0.0, 2.0])
        np.testing.assert_array_equal(pf.support, [1, 3])
        assert pf.support_size == 2


class TestObjective:
    def test_zero(self, rng):
        p = random_problem(rng, 5)
        assert objective(p, np.zeros(5)) == 0.0

    def test_scalar(self):
        p = Problem([[1.0]], [1.0], [0.5], [0.5])
        assert objective(p, [1.0]) == pytest.approx(1.0, abs=1e-15)

    def test_two_forms_agree(self, rng):
        for _ in range(20):
            p = random_problem(rng, 6)
            w = rng.standard_normal(6)
            other = w @ p.R @ w - w @ p.mu + p.beta @ np.abs(w)
            assert objective(p, w) == pytest.approx(other, rel=1e-12, abs=1e-12)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ConfigurationError):
            objective(random_problem(rng, 3), np.zeros(4))


class TestGradient:
    def test_zero(self, rng):
        p = random_problem(rng, 4)
        np.testing.assert_array_equal(smooth_gradient(p, np.zeros(4)), -p.mu)

    def test_scalar(self):
        p = Problem([[1.5]], [1.0], [0.5], [0.0])
        assert smooth_gradient(p, [3.0])[0] == pytest.approx(11.0)

    def test_finite_differences(self, rng):
        p = random_problem(rng, 8)
        w = rng.standard_normal(8)
        f = lambda v: v @ p.R @ v - v @ p.mu
        h = 1e-5
        fd = np.array([(f(w + h * e) - f(w - h * e)) / (2 * h) for e in np.eye(8)])
        assert np.max(np.abs(smooth_gradient(p, w) - fd)) <= 1e-6


class TestRobustObjective:
    def test_diagonal_delta_is_elastic_net(self, rng):
        for _ in range(50):
            p = random_problem(rng, 5)
            w = rng.standard_normal(5)
            val = robust_objective(p.gamma, p.mu, p.beta, np.diag(p.alpha), w)
            assert val == pytest.approx(objective(p, w), rel=1e-12, abs=1e-14)

    def test_no_uncertainty(self, rng):
        p = random_problem(rng, 4)
        w = rng.standard_normal(4)
        val = robust_objective(p.gamma, p.mu, np.zeros(4), np.zeros((4, 4)), w)
        assert val == pytest.approx(w @ p.gamma @ w - w @ p.mu, rel=1e-13)

    def test_pairwise_example(self):
        delta = np.array([[2.0, 1.0], [1.0, 2.0]])
        w = np.array([1.0, -1.0])
        val = robust_objective(np.eye(2), np.zeros(2), np.zeros(2), delta, w)
        assert val == pytest.approx(8.0, abs=1e-14)
        assert corner_max(np.eye(2), np.zeros(2), np.zeros(2), delta, w) == pytest.approx(8.0)

    def test_corner_enumeration(self, rng):
        for n in (1, 2, 3):
            for _ in range(10):
                a = rng.standard_normal((n, n))
                gamma = a @ a.T
                off = np.triu(rng.uniform(0, 0.5, (n, n)), 1)
                off = off + off.T
                delta = off + np.diag(off.sum(axis=1) + rng.uniform(0, 1, n))
                mu, beta, w = rng.standard_normal(n), rng.uniform(0, 1, n), rng.standard_normal(n)
                closed = robust_objective(gamma, mu, beta, delta, w)
                assert closed == pytest.approx(corner_max(gamma, mu, beta, delta, w), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("delta", [
        [[1.0, 0.5], [0.4, 1.0]],      # not symmetric
        [[1.0, -0.1], [-0.1, 1.0]],    # negative entry
        [[0.5, 1.0], [1.0, 2.0]],      # not diagonally dominant
    ])
    def test_invalid_delta(self, delta):
        with pytest.raises(ConfigurationError):
            validate_uncertainty(np.array(delta))


class TestScad:
    def test_tabulated(self):
        assert scad_penalty(0.5, 1.0, 3.7) == pytest.approx(0.5, abs=1e-12)
        assert scad_penalty(10.0, 1.0, 3.7) == pytest.approx(2.35, abs=1e-12)
        assert scad_penalty(2.0, 1.0, 3.7) == pytest.approx(-(4 - 14.8 + 1) / (2 * 2.7), abs=1e-12)

    def test_even_and_vectorized(self):
        x = np.array([-3.0, -0.2, 0.0, 0.2, 3.0])
        np.testing.assert_allclose(scad_penalty(x, 1.0), scad_penalty(-x, 1.0))

    @pytest.mark.parametrize("lam,a", [(1.0, 3.7), (0.3, 2.5), (2.0, 10.0)])
    def test_continuity(self, lam, a):
        for knot in (lam, a * lam):
            lo = scad_penalty(np.nextafter(knot, 0), lam, a)
            hi = scad_penalty(np.nextafter(knot, np.inf), lam, a)
            assert abs(lo - hi) <= 1e-12

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            scad_penalty(1.0, 1.0, 2.0)
        with pytest.raises(ConfigurationError):
            scad_penalty(1.0, 0.0, 3.7)


class TestExactOptimality:
    def test_scalar_soft_threshold(self):
        p = Problem([[1.0]], [2.0], [0.0], [1.0])
        assert check_exact_optimality(p, [0.5], slack=1e-12)

    def test_zero_inside_band(self):
        p = Problem(np.eye(3), [0.5, -0.2, 0.0], [0.1] * 3, [0.5, 0.3, 0.1])
        assert check_exact_optimality(p, np.zeros(3))

    def test_zero_outside_band_reports_index(self):
        p = Problem(np.eye(3), [0.5, -0.9, 0.0], [0.1] * 3, [0.5, 0.3, 0.1])
        report = check_exact_optimality(p, np.zeros(3))
        assert not report and report.violations == (1,)


class TestGradientCertificate:
    def test_exact_optimum(self, rng):
        for _ in range(10):
            p = random_problem(rng, 6)
            w = sign_enumeration_oracle(p).w
            assert all(check_theorem2(p, w, eps) for eps in (1e-14, 1e-8, 1.0))

    def test_boundary(self):
        p = Problem([[1.0]], [2.0], [0.5], [1.0])     # w* = 1/3, residual 3 * delta
        eps = 1e-4
        delta = np.sqrt(2 * eps * p.alpha_o) / 3
        assert check_theorem2(p, [1 / 3 + delta * (1 - 1e-9)], eps)
        assert not check_theorem2(p, [1 / 3 + delta * (1 + 1e-6)], eps)

    def test_off_support_violation(self):
        p = Problem(np.eye(2), [2.0, 3.0], [0.1, 0.1], [1.0, 1.0])
        w = np.array([(2.0 - 1.0) / 2.2, 0.0])
        assert not check_theorem2(p, w, 1e6)

    def test_soundness(self, rng):
        for _ in range(100):
            p = random_problem(rng, int(rng.integers(1, 7)))
            star = sign_enumeration_oracle(p).w
            eps = 10 ** rng.uniform(-8, -2)
            w = star + (star != 0) * rng.standard_normal(p.n) * 10 ** rng.uniform(-7, -2)
            if check_theorem2(p, w, eps):
                assert objective(p, w) - objective(p, star) <= eps + 1e-12


class TestTruncation:
    def setup_method(self):
        self.p = Problem(np.array([[1.0, 0.2, 0.0], [0.2, 1.0, 0.1], [0.0, 0.1, 1.0]]),
                         [3.0, -2.5, 0.1], [0.1, 0.2, 0.3], [1.0, 1.0, 1.0])
        self.star = sign_enumeration_oracle(self.p).w
        self.eps = 1e-6

    def test_exact_optimum(self):
        pf, ok = truncate_and_certify(self.p, self.star, self.eps)
        assert ok
        np.testing.assert_array_equal(pf.w, self.star)
        assert pf.certified_gap == pytest.approx(TRUNCATION_GAP_FACTOR * self.eps)

    def test_spurious_entry_dropped(self):
        assert self.star[2] == 0.0
        g = smooth_gradient(self.p, self.star)
        assert abs(g[2]) <= self.p.beta[2] - self.eps
        m = 2 * spectral_norm_bound(self.p.R)
        eta = truncation_threshold(3, self.p.alpha_o, self.eps, m)
        w = self.star.copy()
        w[2] = eta / 2
        pf, ok = truncate_and_certify(self.p, w, self.eps, m)
        assert ok and pf.w[2] == 0.0
        np.testing.assert_array_equal(pf.w, self.star)

    def test_no_margin_fails(self):
        # beta_3 placed exactly at |g_3| so the band has no epsilon margin
        g3 = smooth_gradient(self.p, self.star)[2]
        p = Problem(self.p.gamma, self.p.mu, self.p.alpha, [1.0, 1.0, abs(g3)])
        w = self.star.copy()
        w[2] = 1e-12
        pf, ok = truncate_and_certify(p, w, self.eps)
        assert not ok and pf.certified_gap is None
        np.testing.assert_array_equal(pf.w, w)

    def test_m_bound_too_small(self):
        with pytest.raises(ConfigurationError):
            truncate_and_certify(self.p, self.star, self.eps, m_bound=1.0)

    def test_soundness(self, rng):
        hits = 0
        for _ in range(150):
            p = random_problem(rng, int(rng.integers(1, 7)))
            star = sign_enumeration_oracle(p).w
            eps = 10 ** rng.uniform(-8, -3)
            m = 2 * spectral_norm_bound(p.R)
            eta = truncation_threshold(p.n, p.alpha_o, eps, m)
            w = star + (star != 0) * rng.standard_normal(p.n) * 10 ** rng.uniform(-9, -3)
            w = w + (star == 0) * (rng.uniform(size=p.n) < 0.5) * eta * rng.uniform(-1, 1, p.n)
            zeta, ok = truncate_and_certify(p, w, eps, m)
            if ok:
                hits += 1
                assert objective(p, zeta.w) - objective(p, star) <= TRUNCATION_GAP_FACTOR * eps + 1e-12
        assert hits >= 20


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_robust_identity_property(seed, n):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, n)
    w = rng.standard_normal(n) * 10 ** rng.uniform(-3, 3)
    val = robust_objective(p.gamma, p.mu, p.beta, np.diag(p.alpha), w)
    ref = objective(p, w)
    assert abs(val - ref) <= 1e-12 * max(1.0, abs(ref), abs(w @ p.R @ w))


def test_spectral_bound_is_upper_bound(rng):
    for n in (1, 2, 5, 30, 100):
        p = random_problem(rng, n)
        assert spectral_norm_bound(p.R) >= np.linalg.eigvalsh(p.R)[-1]


@pytest.mark.parametrize("n", [2, 50, 400])
def test_spectral_bound_with_clustered_top(n):
    # nearly equal leading eigenvalues defeat plain power iteration
    rng = np.random.default_rng(n)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = np.linspace(0.1, 1.0, n)
    vals[-2] = 0.9999
    a = (q * vals) @ q.T
    bound = spectral_norm_bound((a + a.T) / 2)
    assert 1.0 <= bound <= 1.02
