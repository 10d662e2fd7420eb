"""Compare the three solvers on planted-support problems of growing size.

Every solver stops on the same certificate, so the objectives agree to the
tolerance and only the wall time differs.  The adaptive solver works on a
growing subset of assets and pays off when the optimal support is small
relative to the dimension.
"""
import time

from sparsemv import objective
from sparsemv.solvers import SolverConfig, adaptive_support_split_bregman, fista, split_bregman
from sparsemv.synthetic import planted_problem

cfg = SolverConfig(tol=1e-6)
solvers = {
    "adaptive": adaptive_support_split_bregman,
    "split_bregman": lambda p, c: split_bregman(p, c)[0],
    "fista": fista,
}

print(f"{'N':>5} {'planted':>7} {'solver':>14} {'support':>7} {'seconds':>8} {'objective':>14}")
for n, k in [(200, 20), (500, 300), (1000, 45), (2000, 90)]:
    p = planted_problem(n, k, seed=0)
    for name, f in solvers.items():
        t0 = time.perf_counter()
        pf = f(p, cfg)
        dt = time.perf_counter() - t0
        print(f"{n:>5} {k:>7} {name:>14} {pf.support_size:>7} {dt:>8.3f} {objective(p, pf.w):>14.6f}")
