import numpy as np
import pytest

from sparsemv.backtest import (
    BacktestConfig,
    build_problem,
    penalty_weights,
    rolling_windows,
    run_backtest,
    sharpe_ratio,
    window_portfolio,
    window_seed,
)
from sparsemv.calibration import calibrate
from sparsemv.estimation import ReturnMatrix
from sparsemv.exceptions import (
    ConfigurationError,
    DegenerateSeriesError,
    InsufficientHistoryError,
    NonConvergenceError,
)
from sparsemv.solvers import SolverConfig
from sparsemv.synthetic import sparse_mean_market

FAST = dict(n_bootstrap=40)


@pytest.fixture(scope="module")
def market():
    returns, _, _ = sparse_mean_market(n_assets=12, n_periods=378, seed=3, n_signal=3)
    return returns


class TestWindows:
    def test_two_windows(self):
        w = rolling_windows(378, 252, 63)
        assert [(h.start, h.stop) for _, h in w] == [(252, 315), (315, 378)]
        assert [(t.start, t.stop) for t, _ in w] == [(0, 252), (63, 315)]

    def test_one_window(self):
        assert [(h.start, h.stop) for _, h in rolling_windows(315, 252, 63)] == [(252, 315)]

    def test_truncated_final_hold(self):
        last_train, last_hold = rolling_windows(400, 252, 63)[-1]
        assert (last_hold.start, last_hold.stop) == (378, 400)
        assert (last_train.start, last_train.stop) == (126, 378)

    def test_insufficient(self):
        with pytest.raises(InsufficientHistoryError):
            rolling_windows(252, 252, 63)

    def test_holds_cover_out_of_sample(self):
        for t in range(253, 700, 37):
            holds = [h for _, h in rolling_windows(t, 252, 63)]
            assert sum(len(h) for h in holds) == t - 252
            assert all(a.stop == b.start for a, b in zip(holds, holds[1:]))


class TestSharpe:
    def test_example(self):
        assert sharpe_ratio([0.02, 0.0]) == pytest.approx(1.0, abs=1e-14)

    def test_constant_series(self):
        with pytest.raises(DegenerateSeriesError):
            sharpe_ratio([0.01] * 10)

    def test_too_short(self):
        with pytest.raises(DegenerateSeriesError):
            sharpe_ratio([0.01])

    def test_scale_invariance(self, rng):
        r = rng.normal(0.001, 0.01, 100)
        for c in (1e-3, 0.5, 7.0, 1e4):
            assert sharpe_ratio(c * r) == pytest.approx(sharpe_ratio(r), rel=1e-12)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(train_len=1), dict(hold_len=0), dict(criterion="ridge"), dict(p1=1.3),
        dict(p2=-0.1), dict(n_bootstrap=0), dict(solver="newton"), dict(mean_method="x"),
        dict(cov_method="x"), dict(alpha_floor=0.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            BacktestConfig(**kwargs)


class TestPenaltyWeights:
    def setup_method(self):
        self.train = np.random.default_rng(0).normal(0, 0.01, (100, 5))

    def test_unpenalized(self):
        w = penalty_weights(self.train, BacktestConfig(criterion="unpenalized"), 0)
        np.testing.assert_array_equal(w.beta, 0.0)
        np.testing.assert_allclose(w.alpha, 1e-10 * self.train.var(axis=0).mean())

    def test_uniform_is_mean_of_weighted(self):
        cfg = BacktestConfig(criterion="weighted_elastic_net", **FAST)
        weighted = penalty_weights(self.train, cfg, 4)
        uniform = penalty_weights(self.train, BacktestConfig(criterion="uniform_elastic_net", **FAST), 4)
        np.testing.assert_allclose(uniform.alpha, weighted.alpha.mean())
        np.testing.assert_allclose(uniform.beta, weighted.beta.mean())

    def test_weighted_lasso(self):
        cfg = BacktestConfig(criterion="weighted_lasso", **FAST)
        lasso = penalty_weights(self.train, cfg, 1)
        en = penalty_weights(self.train, BacktestConfig(**FAST), 1)
        np.testing.assert_allclose(lasso.alpha, 1e-10 * self.train.var(axis=0).mean())
        np.testing.assert_array_equal(lasso.beta, en.beta)

    def test_window_seed_stream(self):
        cfg = BacktestConfig(seed=5, **FAST)
        w = penalty_weights(self.train, cfg, window_seed(5, 2))
        ref = calibrate(self.train, 0.7, 0.7, 40, np.random.SeedSequence([5, 2]))
        np.testing.assert_array_equal(w.beta, ref.beta)


class TestRunBacktest:
    def test_report_shape(self, market):
        rep = run_backtest(market, BacktestConfig(**FAST))
        assert rep.returns.size == 126 == len(rep.periods)
        assert rep.rebalance_dates == [market.period_index[252], market.period_index[315]]
        assert len(rep.weights) == len(rep.support_sizes) == len(rep.turnover) == 2
        assert rep.support_sizes == [int(np.count_nonzero(w)) for w in rep.weights]
        assert rep.turnover[0] == pytest.approx(np.abs(rep.weights[0]).sum())
        assert rep.turnover[1] == pytest.approx(np.abs(rep.weights[1] - rep.weights[0]).sum())

    def test_weights_constant_within_hold(self, market):
        rep = run_backtest(market, BacktestConfig(**FAST))
        for (train, hold), w in zip(rolling_windows(378, 252, 63), rep.weights):
            expected = market.data[hold.start:hold.stop] @ w
            got = rep.returns[hold.start - 252:hold.stop - 252]
            np.testing.assert_array_equal(got, expected)

    def test_sharpe_recomputed(self, market):
        rep = run_backtest(market, BacktestConfig(**FAST))
        r = rep.returns
        assert rep.sharpe == pytest.approx(r.mean() / np.sqrt(np.mean((r - r.mean()) ** 2)), rel=1e-12)

    def test_deterministic(self, market):
        a = run_backtest(market, BacktestConfig(seed=11, **FAST))
        b = run_backtest(market, BacktestConfig(seed=11, **FAST))
        np.testing.assert_array_equal(a.returns, b.returns)
        assert a.sharpe == b.sharpe

    def test_no_look_ahead(self, market):
        cfg = BacktestConfig(**FAST)
        base = window_portfolio(market.data[63:315], cfg, 1)
        altered = np.array(market.data)
        altered[315:] += np.random.default_rng(0).normal(0, 0.05, altered[315:].shape)
        rep = run_backtest(ReturnMatrix(altered, market.asset_ids, market.period_index), cfg)
        np.testing.assert_array_equal(rep.weights[1], base)
        rep0 = run_backtest(market, cfg)
        np.testing.assert_array_equal(rep.weights[0], rep0.weights[0])

    def test_all_zero_portfolios_degenerate(self):
        x = np.random.default_rng(1).normal(0.0, 0.01, (320, 6))
        with pytest.raises(DegenerateSeriesError) as info:
            run_backtest(x, BacktestConfig(p1=0.7, p2=1.0, **FAST))
        assert all(s == 0 for s in info.value.report.support_sizes)

    def test_nonconvergence_names_window(self, market):
        cfg = BacktestConfig(solver="split_bregman", solver_config=SolverConfig(tol=1e-14, max_inner=1),
                             **FAST)
        with pytest.raises(NonConvergenceError) as info:
            run_backtest(market, cfg)
        assert info.value.window == 0 and "window 0" in str(info.value)

    def test_every_criterion_runs(self, market):
        for criterion in ("unpenalized", "weighted_elastic_net", "uniform_elastic_net", "weighted_lasso"):
            rep = run_backtest(market, BacktestConfig(criterion=criterion, **FAST))
            assert np.isfinite(rep.sharpe)

    def test_unpenalized_is_dense(self, market):
        rep = run_backtest(market, BacktestConfig(criterion="unpenalized"))
        assert all(s == market.n_assets for s in rep.support_sizes)

    def test_build_problem(self, market):
        p = build_problem(market.data[:252], BacktestConfig(**FAST), 0)
        assert p.n == 12 and np.all(p.alpha > 0)
