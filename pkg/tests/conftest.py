import numpy as np
import pytest

from smipcut.model import Scenario, SmipInstance


def random_small_instance(rng: np.random.Generator, n_max: int = 3,
                          b_max: int = 4, nscen_max: int = 4,
                          binary: bool | None = None) -> SmipInstance:
    """Random pure-integer instance with relatively complete recourse: a
    dedicated penalty column enters every scenario row positively, so any
    first-stage point stays feasible (as in the benchmark families)."""
    n = int(rng.integers(1, n_max + 1))
    if binary is None:
        binary = bool(rng.integers(0, 2))
    upper = np.ones(n) if binary else rng.integers(1, b_max + 1, n).astype(float)
    nscen = int(rng.integers(1, nscen_max + 1))
    scenarios = []
    for _ in range(nscen):
        m = int(rng.integers(1, 3))
        k = int(rng.integers(1, 3))
        W = np.hstack([rng.integers(-2, 3, (k, m)).astype(float), np.ones((k, 1))])
        T = rng.integers(-2, 3, (k, n)).astype(float)
        h = rng.integers(-3, 4, k).astype(float)
        q = np.append(rng.integers(0, 4, m).astype(float),
                      float(rng.integers(1, 4)))
        ub = float(3 * k * (1 + np.abs(W).max())
                   * (1 + np.abs(T).sum() * upper.max() + np.abs(h).max()))
        scenarios.append(Scenario(q=q, W=W, T=T, h=h,
                                  y_kinds=np.ones(m + 1, dtype=bool),
                                  y_bounds=np.tile([0.0, ub], (m + 1, 1))))
    probs = rng.random(nscen) + 0.1
    probs /= probs.sum()
    return SmipInstance(c=rng.integers(-3, 4, n).astype(float),
                        A=np.zeros((0, n)), b=[],
                        var_kinds=np.ones(n, dtype=bool),
                        bounds=np.column_stack([np.zeros(n), upper]),
                        scenarios=tuple(scenarios), probabilities=probs)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(20240817))
