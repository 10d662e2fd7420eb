"""How a solver knows it is done.

The optimum is characterised by the gradient g = 2 R w - mu: on the support
g_i = -beta_i sign(w_i), off it |g_i| <= beta_i.  An approximate point is
accepted once those conditions hold up to a slack that bounds the objective
gap.  This script checks a few points against the exact answer.
"""
import numpy as np

from sparsemv import Problem, objective, sign_enumeration_oracle
from sparsemv.objective import check_exact_optimality, check_theorem2, truncate_and_certify

gamma = np.array([[1.0, 0.2, 0.0], [0.2, 1.0, 0.1], [0.0, 0.1, 1.0]])
p = Problem(gamma, [3.0, -2.5, 0.1], [0.1, 0.2, 0.3], [1.0, 1.0, 1.0])

star = sign_enumeration_oracle(p).w
print("exact optimum (all 2^3 supports enumerated):", star)
print("exact optimality conditions hold:", bool(check_exact_optimality(p, star)))

eps = 1e-6
nudged = star + np.array([1e-3, -1e-3, 0.0])
print(f"\nnudged point, gap {objective(p, nudged) - objective(p, star):.2e}")
print(f"  gradient certificate at eps={eps:g}:", check_theorem2(p, nudged, eps))
print(f"  gradient certificate at eps=1e-3:", check_theorem2(p, nudged, 1e-3))

spurious = star + np.array([0.0, 0.0, 1e-9])
pf, ok = truncate_and_certify(p, spurious, eps)
print(f"\npoint with a spurious 1e-9 weight: truncation certifies={ok}, result {pf.w}, "
      f"gap bound {pf.certified_gap:.2e}")
