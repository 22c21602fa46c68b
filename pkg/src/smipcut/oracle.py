"""Brute-force ground truth for small instances.

Exhaustive recourse tables, convex envelopes, cut validity/tightness/facet
checks, and dual-optimality verification.  Everything here is deliberately
independent of the cut generators it is used to check: tables come from
enumeration plus high-accuracy MILP solves, and rank computations run in
exact rational arithmetic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import milp, subproblems
from .model import AGGREGATE, ReluCut, SmipInstance, SmipError, evaluate_relu_cut

VALID_TOL = 1e-9
TABLE_LIMIT = 10 ** 6


class UnsupportedByOracle(SmipError):
    pass


class OutsideHull(SmipError):
    pass


@dataclass(frozen=True)
class RecourseTable:
    """Exhaustive map from first-stage points to exact recourse values."""

    scenario_id: int | None
    points: np.ndarray  # (K, n)
    values: np.ndarray  # (K,)

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if len(self.points) != len(self.values):
            raise SmipError("one value per table point required")

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def index_of(self, x, tol: float = 1e-9) -> int:
        x = np.asarray(x, dtype=float)
        hits = np.flatnonzero(np.abs(self.points - x).max(axis=1) <= tol)
        if len(hits) == 0:
            raise SmipError(f"point {x} not in table")
        return int(hits[0])

    def value_at(self, x) -> float:
        return float(self.values[self.index_of(x)])

    def minimum(self) -> float:
        return float(self.values.min())


def enumerate_feasible_points(instance: SmipInstance) -> np.ndarray:
    """All integer points of the first-stage region (pure-integer only)."""
    if instance.n1 != instance.n:
        raise UnsupportedByOracle("oracle tables require a pure-integer first stage")
    upper = instance.bounds[:, 1].astype(int)
    count = np.prod(upper + 1.0)
    if count > TABLE_LIMIT:
        raise UnsupportedByOracle(f"grid of {count:.3g} points exceeds the oracle limit")
    grid = np.array(list(itertools.product(*[range(u + 1) for u in upper])), dtype=float)
    if instance.A.size:
        keep = (instance.A @ grid.T >= instance.b[:, None] - VALID_TOL).all(axis=0)
        grid = grid[keep]
    if len(grid) == 0:
        raise SmipError("first-stage region contains no integer point")
    return grid


def build_table(instance: SmipInstance, scenario_id: int | None) -> RecourseTable:
    """Exact table over all feasible integer points; scenario_id None gives
    the probability-weighted expected table."""
    grid = enumerate_feasible_points(instance)
    limits = milp.MilpLimits(rel_gap=1e-9)
    if scenario_id is AGGREGATE:
        values = np.zeros(len(grid))
        for sid, p in enumerate(instance.probabilities):
            values += p * np.array(
                [subproblems.recourse_value(instance, sid, x, limits=limits) for x in grid])
    else:
        values = np.array(
            [subproblems.recourse_value(instance, scenario_id, x, limits=limits) for x in grid])
    return RecourseTable(scenario_id=scenario_id, points=grid, values=values)


def sample_table(instance: SmipInstance, scenario_id: int | None, points) -> RecourseTable:
    """Table over caller-chosen points; the mixed-integer surrogate for grids
    that cannot be enumerated exhaustively."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    limits = milp.MilpLimits(rel_gap=1e-9)
    if scenario_id is AGGREGATE:
        values = np.zeros(len(points))
        for sid, p in enumerate(instance.probabilities):
            values += p * np.array(
                [subproblems.recourse_value(instance, sid, x, limits=limits) for x in points])
    else:
        values = np.array(
            [subproblems.recourse_value(instance, scenario_id, x, limits=limits) for x in points])
    return RecourseTable(scenario_id=scenario_id, points=points, values=values)


def convex_envelope_at(table: RecourseTable, x) -> float:
    """min sum lam_k Q(x^k) s.t. sum lam_k x^k = x, sum lam_k = 1, lam >= 0."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    K = len(table.points)
    A = np.vstack([table.points.T, np.ones(K)])
    rhs = np.append(x, 1.0)
    lp = milp.LpModel(c=table.values, A=A, senses=["=="] * len(rhs), rhs=rhs,
                      bounds=np.column_stack([np.zeros(K), np.full(K, np.inf)]),
                      integrality=np.zeros(K, dtype=bool))
    sol = milp.solve_lp(lp)
    if sol.status == milp.Status.INFEASIBLE:
        raise OutsideHull(f"{x} is outside the convex hull of the table points")
    if sol.status != milp.Status.OPTIMAL:
        raise SmipError(f"envelope LP {sol.status.value}")
    return sol.objective


def is_cut_valid(cut: ReluCut, table: RecourseTable, tol: float = VALID_TOL):
    """(valid, max violation) with violation = max_x cut(x) - Q(x)."""
    viol = max(evaluate_relu_cut(cut, x) - q
               for x, q in zip(table.points, table.values))
    return viol <= tol, float(viol)


def is_relu_dual_optimal(pi_plus, pi_minus, anchor, table: RecourseTable,
                         tol: float = VALID_TOL) -> bool:
    """Optimality of (pi+, pi-) for the hinge dual at the anchor, restated
    over the finite table: Q(a) <= Q(x) - pi+'(x-a)^+ - pi-'(x-a)^- for all x."""
    a = np.asarray(anchor, dtype=float)
    pp = np.asarray(pi_plus, dtype=float)
    pm = np.asarray(pi_minus, dtype=float)
    qa = table.value_at(a)
    d = table.points - a
    rhs = table.values - np.maximum(d, 0.0) @ pp - np.maximum(-d, 0.0) @ pm
    return bool((qa <= rhs + tol).all())


def lagrangian_dual_value(table: RecourseTable, anchor, pi) -> float:
    """min over the table of Q(x) + pi'(anchor - x)."""
    a = np.asarray(anchor, dtype=float)
    pi = np.asarray(pi, dtype=float)
    return float(np.min(table.values + (a - table.points) @ pi))


def lagrangian_optimal_multiplier(table: RecourseTable, anchor,
                                  direction=None, box: float = 1e6):
    """(pi, value) maximizing the ordinary Lagrangian dual over the table;
    the optimal value equals the convex envelope at the anchor.

    The dual-optimal set is generally unbounded, so a second stage picks a
    particular optimal pi: the one minimizing ``direction`` (a linear
    functional) or, by default, the L1 norm of pi.
    """
    a = np.asarray(anchor, dtype=float)
    n = table.n
    K = len(table.points)
    # columns: pi (kept in a wide box for solvability), v
    A = np.zeros((K, n + 1))
    A[:, :n] = a - table.points
    A[:, n] = -1.0
    c = np.zeros(n + 1); c[n] = -1.0
    bounds = np.vstack([np.tile([-box, box], (n, 1)), [[-np.inf, np.inf]]])
    lp = milp.LpModel(c=c, A=A, senses=[">="] * K, rhs=-table.values,
                      bounds=bounds, integrality=np.zeros(n + 1, dtype=bool))
    sol = milp.solve_lp(lp)
    if sol.status != milp.Status.OPTIMAL:
        raise SmipError(f"Lagrangian dual LP {sol.status.value}")
    value = float(sol.x[n])

    # second stage over the optimal face
    if direction is not None:
        c2 = np.append(np.asarray(direction, dtype=float), 0.0)
        A2 = np.vstack([A, -c])  # v >= value
        lp2 = milp.LpModel(c=c2, A=A2, senses=[">="] * (K + 1),
                           rhs=np.append(-table.values, value - 1e-9),
                           bounds=bounds, integrality=np.zeros(n + 1, dtype=bool))
    else:  # minimal L1-norm pi: t_j >= |pi_j|
        c2 = np.concatenate([np.zeros(n + 1), np.ones(n)])
        A2 = np.zeros((K + 1 + 2 * n, 2 * n + 1))
        A2[:K, :n + 1] = A
        A2[K, :n + 1] = -c
        rhs2 = np.concatenate([-table.values, [value - 1e-9], np.zeros(2 * n)])
        for j in range(n):
            A2[K + 1 + 2 * j, j] = -1.0
            A2[K + 1 + 2 * j, n + 1 + j] = 1.0
            A2[K + 2 + 2 * j, j] = 1.0
            A2[K + 2 + 2 * j, n + 1 + j] = 1.0
        bounds2 = np.vstack([bounds, np.tile([0.0, np.inf], (n, 1))])
        lp2 = milp.LpModel(c=c2, A=A2, senses=[">="] * (K + 1 + 2 * n), rhs=rhs2,
                           bounds=bounds2,
                           integrality=np.zeros(2 * n + 1, dtype=bool))
    sol2 = milp.solve_lp(lp2)
    if sol2.status != milp.Status.OPTIMAL:
        return sol.x[:n].copy(), value
    return sol2.x[:n].copy(), value


# ---------------------------------------------------------------------------
# Lifted-space geometry
# ---------------------------------------------------------------------------

def lifted_points(table: RecourseTable, anchor) -> np.ndarray:
    """Hinge coordinates ((x-a)^+, (x-a)^-) of every table point."""
    d = table.points - np.asarray(anchor, dtype=float)
    return np.hstack([np.maximum(d, 0.0), np.maximum(-d, 0.0)])


def _affine_rank(rows: np.ndarray) -> int:
    """Rank over the rationals of the difference vectors (row 0 as base)."""
    if len(rows) <= 1:
        return 0
    mat = [[Fraction(v) - Fraction(b) for v, b in zip(row, rows[0])] for row in rows[1:]]
    rank, ncols = 0, len(rows[0])
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / mat[rank][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


def count_tight_affinely_independent(cut: ReluCut, table: RecourseTable,
                                     tol: float = VALID_TOL) -> int:
    """Number of affinely independent lifted points (w+, w-, Q) at which the
    cut holds with equality."""
    tight = [i for i, (x, q) in enumerate(zip(table.points, table.values))
             if abs(evaluate_relu_cut(cut, x) - q) <= tol]
    if not tight:
        return 0
    lifted = lifted_points(table, cut.anchor)
    rows = np.column_stack([lifted[tight], table.values[tight]])
    return _affine_rank(rows) + 1


def lifted_epigraph_dimension(table: RecourseTable, anchor) -> int:
    """Affine dimension of the lifted epigraph: rank of the hinge-coordinate
    point set plus one for the vertical ray."""
    return _affine_rank(lifted_points(table, anchor)) + 1


def is_facet_defining(cut: ReluCut, table: RecourseTable) -> bool:
    """Facet in the lifted space: tight at dim(epi) affinely independent points."""
    valid, _ = is_cut_valid(cut, table)
    if not valid:
        return False
    return count_tight_affinely_independent(cut, table) == \
        lifted_epigraph_dimension(table, cut.anchor)


# ---------------------------------------------------------------------------
# Hull equality of the embedded representation (small dimension)
# ---------------------------------------------------------------------------

def _coordinate_block_vertices(b_i: float, a_i: float) -> np.ndarray:
    """Vertices of {(w+, w-, z): 0<=w+<=(B-a)z, 0<=w-<=a(1-z), 0<=z<=1}."""
    rows = np.array([
        [-1.0, 0.0, 0.0], [1.0, 0.0, -(b_i - a_i)],
        [0.0, -1.0, 0.0], [0.0, 1.0, a_i],
        [0.0, 0.0, -1.0], [0.0, 0.0, 1.0],
    ])
    rhs = np.array([0.0, 0.0, 0.0, a_i, 0.0, 1.0])
    verts = []
    for idx in itertools.combinations(range(6), 3):
        M, r = rows[list(idx)], rhs[list(idx)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, r)
        if (rows @ v <= rhs + 1e-9).all():
            verts.append(v)
    uniq = []
    for v in verts:
        if not any(np.allclose(v, u, atol=1e-9) for u in uniq):
            uniq.append(v)
    return np.array(uniq)


def _in_epigraph_hull(grid: np.ndarray, grid_vals: np.ndarray, x, theta,
                      tol: float = 1e-7) -> bool:
    """Membership of (x, theta) in conv{(g, val(g))} + the vertical ray."""
    K = len(grid)
    A = np.vstack([grid.T, np.ones(K), grid_vals])
    senses = ["=="] * (grid.shape[1] + 1) + ["<="]
    rhs = np.append(np.append(np.asarray(x, dtype=float), 1.0), theta + tol)
    lp = milp.LpModel(c=np.zeros(K), A=A, senses=senses, rhs=rhs,
                      bounds=np.column_stack([np.zeros(K), np.full(K, np.inf)]),
                      integrality=np.zeros(K, dtype=bool))
    return milp.solve_lp(lp).status == milp.Status.OPTIMAL


def verify_hull_equality(cut: ReluCut, bounds) -> bool:
    """Check that the continuous relaxation of the embedded cut block equals
    the convex hull of {(x, theta) integer in the box: theta >= cut(x)}.

    Vertices of the relaxed lifting are enumerated coordinatewise (the block
    is a Cartesian product) and certified against the hull by membership LP;
    conversely every integer point satisfies the relaxation.
    """
    upper = np.asarray(bounds, dtype=float)
    n = len(upper)
    if n > 3 or (upper > 4).any():
        raise UnsupportedByOracle("hull check limited to n <= 3, bounds <= 4")
    a = cut.anchor
    grid = np.array(list(itertools.product(*[range(int(u) + 1) for u in upper])), dtype=float)
    grid_vals = np.array([evaluate_relu_cut(cut, g) for g in grid])

    per_coord = [_coordinate_block_vertices(upper[i], a[i]) for i in range(n)]
    for combo in itertools.product(*per_coord):
        wp = np.array([v[0] for v in combo])
        wm = np.array([v[1] for v in combo])
        x = a + wp - wm
        theta = cut.intercept + cut.pi_plus @ wp + cut.pi_minus @ wm
        if not _in_epigraph_hull(grid, grid_vals, x, theta):
            return False
    # converse direction: the natural lifting of each integer point
    for g in grid:
        wp, wm = np.maximum(g - a, 0.0), np.maximum(a - g, 0.0)
        z = (g > a).astype(float)
        ok = (wp <= (upper - a) * z + 1e-9).all() and (wm <= a * (1 - z) + 1e-9).all()
        if not ok:
            return False
    return True


# ---------------------------------------------------------------------------
# Table diagnostics used by the fixtures and acceptance checks
# ---------------------------------------------------------------------------

def lipschitz_constant(table: RecourseTable) -> float:
    """Smallest L1 Lipschitz constant consistent with the table."""
    best = 0.0
    for i in range(len(table.points)):
        d = np.abs(table.points - table.points[i]).sum(axis=1)
        dq = np.abs(table.values - table.values[i])
        mask = d > 0
        if mask.any():
            best = max(best, float((dq[mask] / d[mask]).max()))
    return best


def axis_dual_bounds(table: RecourseTable, anchor):
    """Coordinatewise upper bounds on (pi+, pi-) from single-axis deviations.

    These equal the exact bounds whenever the dual-optimal set is a box.
    """
    a = np.asarray(anchor, dtype=float)
    qa = table.value_at(a)
    n = table.n
    up = np.full(n, np.inf)
    dn = np.full(n, np.inf)
    for x, q in zip(table.points, table.values):
        d = x - a
        axes = np.flatnonzero(np.abs(d) > 1e-12)
        if len(axes) != 1:
            continue
        i = axes[0]
        if d[i] > 0:
            up[i] = min(up[i], (q - qa) / d[i])
        else:
            dn[i] = min(dn[i], (q - qa) / (-d[i]))
    return up, dn
