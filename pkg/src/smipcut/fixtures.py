"""Named worked-example fixtures shared by the tests and the verify command.

FIX1/FIX4/FIX6/FIXMI are full instances; FIX2/FIX3 are recourse tables.
"""

from __future__ import annotations

import numpy as np

from .model import ReluCut, Scenario, SmipInstance
from .oracle import RecourseTable


def _scen(q, W, T, h, y_int, y_bounds) -> Scenario:
    m = len(q)
    kinds = np.array(y_int, dtype=bool) if not np.isscalar(y_int) else np.full(m, bool(y_int))
    return Scenario(q=np.array(q, dtype=float), W=np.array(W, dtype=float),
                    T=np.array(T, dtype=float), h=np.array(h, dtype=float),
                    y_kinds=kinds, y_bounds=np.array(y_bounds, dtype=float))


def fix1() -> SmipInstance:
    """Two-scenario problem min{-x + Q(x): x in {0,1,2}} with
    Q1(x) = min{y: y >= x/2 + 1, y in Z+} and Q2(x) = min{y: y >= 2x - 1, y in Z+}."""
    s1 = _scen([1.0], [[1.0]], [[-0.5]], [1.0], True, [[0, 8]])
    s2 = _scen([1.0], [[1.0]], [[-2.0]], [-1.0], True, [[0, 8]])
    return SmipInstance(c=[-1.0], A=np.zeros((0, 1)), b=[], var_kinds=[True],
                        bounds=[[0, 2]], scenarios=(s1, s2), probabilities=[0.5, 0.5])


def fix2_table() -> RecourseTable:
    """Seven-point set whose reverse-norm and distance cuts miss the hull:
    the envelope at (1.5, 0.5) is exactly 0.5 (midpoint of (0,0) and (3,1))
    yet (1.5, 0.5, 0) survives every symmetric distance cut."""
    points = [(0, 0), (0, 1), (3, 1), (0, 3), (3, 3), (1, 4), (1, 2)]
    values = [0, 1, 1, 3, 3, 4, -10]
    return RecourseTable(scenario_id=0, points=points, values=values)


def fix3_table() -> RecourseTable:
    """Eleven-point table on {0,1,2} x {0..4} with anchor of interest (1, 2)."""
    data = {(0, 1): 3, (0, 2): 2, (0, 3): 1,
            (1, 0): 5, (1, 1): 7.5, (1, 2): 10, (1, 3): 5.5, (1, 4): 1,
            (2, 1): 5, (2, 2): 4, (2, 3): 3}
    return RecourseTable(scenario_id=0, points=list(data), values=list(data.values()))


def fix3_cut() -> ReluCut:
    """theta >= 10 - 6(x1-1)^+ - 8(x1-1)^- - 9/2(x2-2)^+ - 5/2(x2-2)^-."""
    return ReluCut(anchor=[1, 2], intercept=10.0, pi_plus=[-6.0, -4.5],
                   pi_minus=[-8.0, -2.5], scenario_id=0)


def fix3_augmented_cuts() -> tuple[ReluCut, ReluCut]:
    """The two tight augmented cuts at (1,2): pi = (1, 5/2) and (1, -9/2), rho = 7."""
    a = ReluCut(anchor=[1, 2], intercept=10.0, pi_plus=[1 - 7.0, 2.5 - 7.0],
                pi_minus=[-1 - 7.0, -2.5 - 7.0], scenario_id=0)
    b = ReluCut(anchor=[1, 2], intercept=10.0, pi_plus=[1 - 7.0, -4.5 - 7.0],
                pi_minus=[-1 - 7.0, 4.5 - 7.0], scenario_id=0)
    return a, b


def fix3_instance() -> SmipInstance:
    """MILP realization of the eleven-point table: four first-stage rows
    carve exactly those points out of the [0,2]x[0,4] grid, and a one-hot
    second stage pays the tabulated value of the selected point."""
    table = fix3_table()
    pts, vals = table.points, table.values
    K = len(pts)
    W = np.vstack([np.ones(K), -np.ones(K), pts[:, 0], -pts[:, 0],
                   pts[:, 1], -pts[:, 1]])
    T = np.array([[0.0, 0.0], [0.0, 0.0], [-1.0, 0.0], [1.0, 0.0],
                  [0.0, -1.0], [0.0, 1.0]])
    h = np.array([1.0, -1.0, 0.0, 0.0, 0.0, 0.0])
    s = _scen(q=vals, W=W, T=T, h=h, y_int=True, y_bounds=[[0, 1]] * K)
    A = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]])
    b = np.array([1.0, -1.0, -3.0, -5.0])
    return SmipInstance(c=[0.0, 0.0], A=A, b=b, var_kinds=[True, True],
                        bounds=[[0, 2], [0, 4]], scenarios=(s,), probabilities=[1.0])


def fix4() -> SmipInstance:
    """x in {0..3}; Q1 takes values (0,1,1,0) and Q2 (4,1,1,4) at x = 0..3.

    Q1 = min(x, 3-x, 1) needs big-M binaries (non-convex); Q2 = max(4-3x,
    3x-5, 1) is plain LP.
    """
    s1 = _scen(
        q=[0, 0, 0, 1.0],
        W=[[3, 0, 0, 1.0], [0, 3, 0, 1.0], [0, 0, 3, 1.0], [-1, -1, -1, 0.0]],
        T=[[-1.0], [1.0], [0.0], [0.0]],
        h=[0.0, 3.0, 1.0, -2.0],
        y_int=[True, True, True, False],
        y_bounds=[[0, 1], [0, 1], [0, 1], [0, 10]],
    )
    s2 = _scen(q=[1.0], W=[[1.0], [1.0], [1.0]], T=[[3.0], [-3.0], [0.0]],
               h=[4.0, -5.0, 1.0], y_int=False, y_bounds=[[0, 20]])
    return SmipInstance(c=[0.0], A=np.zeros((0, 1)), b=[], var_kinds=[True],
                        bounds=[[0, 3]], scenarios=(s1, s2), probabilities=[0.5, 0.5])


def fix6() -> SmipInstance:
    """Binary first stage, Q(x) = min{2y1 + 2y2: 0.2y1 + y2 + x1 + 0.5x2 >= 2.4,
    y in {0,1,2}^2}; values 8/4/4/2 on the four corners."""
    s = _scen([2.0, 2.0], [[0.2, 1.0]], [[1.0, 0.5]], [2.4], True, [[0, 2], [0, 2]])
    return SmipInstance(c=[0.0, 0.0], A=np.zeros((0, 2)), b=[], var_kinds=[True, True],
                        bounds=[[0, 1], [0, 1]], scenarios=(s,), probabilities=[1.0])


def fixmi() -> SmipInstance:
    """Mixed first stage on [0,2]^2 (x1 integer, x2 continuous) with
    Q(x) = min{y: y >= x1 + x2, y in Z}."""
    s = _scen([1.0], [[1.0]], [[-1.0, -1.0]], [0.0], True, [[0, 6]])
    return SmipInstance(c=[0.0, 0.0], A=np.zeros((0, 2)), b=[],
                        var_kinds=[True, False], bounds=[[0, 2], [0, 2]],
                        scenarios=(s,), probabilities=[1.0])


def fixmi_grid() -> np.ndarray:
    """Breakpoint grid for FIXMI oracle checks: the recourse is piecewise
    constant in x2 with breaks at half-integers of x1 + x2."""
    return np.array([(x1, x2) for x1 in (0, 1, 2)
                     for x2 in (0.0, 0.5, 1.0, 1.5, 2.0)])


def lambda_counterexample() -> SmipInstance:
    """Q(x) = min{y: y >= x, y integer} on x in {0,1,2}; the B = 2 regime
    where binarized cuts strictly beat distance cuts."""
    s = _scen([1.0], [[1.0]], [[-1.0]], [0.0], True, [[0, 4]])
    return SmipInstance(c=[0.0], A=np.zeros((0, 1)), b=[], var_kinds=[True],
                        bounds=[[0, 2]], scenarios=(s,), probabilities=[1.0])


INSTANCES = {"fix1": fix1, "fix4": fix4, "fix6": fix6, "fixmi": fixmi,
             "lambda2": lambda_counterexample}
TABLES = {"fix2": fix2_table, "fix3": fix3_table}


def get_instance(name: str) -> SmipInstance:
    try:
        return INSTANCES[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown fixture instance {name!r}; "
                       f"available: {sorted(INSTANCES)}") from None
