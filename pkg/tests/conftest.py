import numpy as np
import pytest

from sparsemv import Problem


def random_problem(rng, n, alpha_range=(1e-3, 1.0), beta_range=(0.0, 1.0)):
    a = rng.standard_normal((n, n))
    gamma = a @ a.T / n
    return Problem(gamma, rng.standard_normal(n), rng.uniform(*alpha_range, n), rng.uniform(*beta_range, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
