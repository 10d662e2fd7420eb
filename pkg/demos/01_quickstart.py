"""Estimate, calibrate and solve one sparse portfolio from the bundled prices.

Run with ``python3 demos/01_quickstart.py``.
"""
import numpy as np

from sparsemv import Problem, calibrate, estimate, objective, solve
from sparsemv.cli import sample_data_path
from sparsemv.io import compute_excess_returns, read_prices
from sparsemv.solvers import SolverConfig

returns = compute_excess_returns(read_prices(sample_data_path()))
print(f"{returns.data.shape[0]} daily excess returns for {returns.data.shape[1]} assets")

# Shrunk mean and covariance for the mean-variance criterion.
est = estimate(returns.data)
print("shrinkage intensities:", {k: round(v, 4) for k, v in est.intensities.items()})

# Per-asset penalties from the bootstrap error of each estimate.
# Larger p1, p2 means more aversion to estimation risk.
weights = calibrate(returns.data, p1=0.7, p2=0.7, K=200, seed=0)

problem = Problem(est.gamma, est.mu, weights.alpha, weights.beta)
pf = solve(problem, SolverConfig(tol=1e-8))

print(f"objective {objective(problem, pf.w):.6e}, certified within {pf.certified_gap:g}")
print(f"{pf.support_size} of {problem.n} assets held:")
for i in pf.support[np.argsort(-np.abs(pf.w[pf.support]))]:
    print(f"  {returns.asset_ids[i]}  {pf.w[i]:+.4f}")
