"""Master-problem embedding of cuts and binarization of integer first stages.

A hinge cut on a binary anchor over a binary box becomes a single linear
row.  Anything else gets the (w+, w-, z) lifting, with the block shared by
every cut anchored at the same point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import milp
from .model import LinearCut, ReluCut, SmipInstance, SmipError
from .oracle import RecourseTable

ANCHOR_DECIMALS = 9  # block reuse keys anchors rounded at 1e-9


@dataclass
class EmbeddedCutBlock:
    cut: ReluCut
    theta_row: int
    omega_plus: dict = field(default_factory=dict)  # coord -> column
    omega_minus: dict = field(default_factory=dict)
    z_cols: dict = field(default_factory=dict)
    new_columns: int = 0
    new_rows: int = 0


class MasterModel:
    """First-stage master with x and theta columns plus embedded cut blocks.

    Mutation is single-owner: the driver serializes embedding calls.
    """

    def __init__(self, instance: SmipInstance, theta_count: int = 1,
                 theta_lb: float = 0.0, theta_weights=None):
        self.instance = instance
        self.builder = milp.ModelBuilder()
        n = instance.n
        self.x_cols = [self.builder.add_column(
            cost=float(instance.c[j]), lo=0.0, hi=float(instance.bounds[j, 1]),
            integer=bool(instance.var_kinds[j])) for j in range(n)]
        weights = np.ones(theta_count) if theta_weights is None else \
            np.asarray(theta_weights, dtype=float)
        self.theta_cols = [self.builder.add_column(cost=float(weights[t]),
                                                   lo=theta_lb, hi=np.inf)
                           for t in range(theta_count)]
        for row, rhs in zip(instance.A, instance.b):
            coeffs = {self.x_cols[j]: row[j] for j in range(n) if row[j]}
            self.builder.add_row(coeffs, ">=", rhs)
        self._blocks: dict[tuple, dict] = {}

    def _anchor_key(self, anchor: np.ndarray) -> tuple:
        return tuple(np.round(anchor, ANCHOR_DECIMALS))

    def add_linear_cut(self, cut: LinearCut, theta_index: int = 0) -> int:
        coeffs = {self.theta_cols[theta_index]: 1.0}
        for j, v in enumerate(cut.coeffs):
            if v:
                coeffs[self.x_cols[j]] = coeffs.get(self.x_cols[j], 0.0) - v
        return self.builder.add_row(coeffs, ">=", cut.rhs)

    def _get_block(self, anchor: np.ndarray):
        key = self._anchor_key(anchor)
        if key in self._blocks:
            return self._blocks[key], 0, 0
        n = self.instance.n
        upper = self.instance.bounds[:, 1]
        wp, wm, z = {}, {}, {}
        cols = rows = 0
        for i in range(n):
            room_up = upper[i] - anchor[i] > 1e-9
            room_dn = anchor[i] > 1e-9
            if room_up:
                wp[i] = self.builder.add_column(lo=0.0, hi=float(upper[i] - anchor[i]))
                cols += 1
            if room_dn:
                wm[i] = self.builder.add_column(lo=0.0, hi=float(anchor[i]))
                cols += 1
            link = {self.x_cols[i]: -1.0}
            if i in wp:
                link[wp[i]] = 1.0
            if i in wm:
                link[wm[i]] = -1.0
            self.builder.add_row(link, "==", -float(anchor[i]))
            rows += 1
            if room_up and room_dn:
                z[i] = self.builder.add_column(lo=0.0, hi=1.0, integer=True)
                cols += 1
                self.builder.add_row({wp[i]: 1.0, z[i]: -(upper[i] - anchor[i])}, "<=", 0.0)
                self.builder.add_row({wm[i]: 1.0, z[i]: anchor[i]}, "<=", float(anchor[i]))
                rows += 2
        block = {"wp": wp, "wm": wm, "z": z}
        self._blocks[key] = block
        return block, cols, rows

    def embed_cut(self, cut: ReluCut, theta_index: int = 0) -> EmbeddedCutBlock:
        """Add one hinge cut; binary anchors on a binary box need no new
        variables, other anchors share their (w+, w-, z) block."""
        upper = self.instance.bounds[:, 1]
        if (np.asarray(cut.anchor) > upper + 1e-9).any() or (np.asarray(cut.anchor) < -1e-9).any():
            raise SmipError("cut anchor falls outside the first-stage box")
        if self.instance.is_binary and np.all((cut.anchor == 0) | (cut.anchor == 1)):
            row = self.add_linear_cut(cut.linear_form(), theta_index)
            return EmbeddedCutBlock(cut=cut, theta_row=row, new_rows=1)
        block, cols, rows = self._get_block(np.asarray(cut.anchor, dtype=float))
        coeffs = {self.theta_cols[theta_index]: 1.0}
        for i, col in block["wp"].items():
            if cut.pi_plus[i]:
                coeffs[col] = -cut.pi_plus[i]
        for i, col in block["wm"].items():
            if cut.pi_minus[i]:
                coeffs[col] = -cut.pi_minus[i]
        row = self.builder.add_row(coeffs, ">=", cut.intercept)
        return EmbeddedCutBlock(cut=cut, theta_row=row,
                                omega_plus=dict(block["wp"]), omega_minus=dict(block["wm"]),
                                z_cols=dict(block["z"]), new_columns=cols, new_rows=rows + 1)

    def solve(self, relaxed: bool = False,
              limits: milp.MilpLimits | None = None) -> milp.MilpSolution:
        model = self.builder.build()
        if relaxed:
            sol = milp.solve_lp(model.relaxed())
            return milp.MilpSolution(status=sol.status, x=sol.x,
                                     objective=sol.objective, bound=sol.objective)
        return milp.solve_milp(model, limits)

    def split(self, x: np.ndarray):
        """(first-stage part, theta part) of a master solution vector."""
        xs = np.array([x[c] for c in self.x_cols])
        thetas = np.array([x[c] for c in self.theta_cols])
        return xs, thetas


# ---------------------------------------------------------------------------
# Binarization of integer first stages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Binarization:
    """x_i = sum_j 2^j delta_ij with the knapsack and hull rows of the
    bounded binary expansion."""

    expand: np.ndarray  # (n_original, n_delta)
    upper: np.ndarray  # original B_i

    @property
    def n_delta(self) -> int:
        return self.expand.shape[1]

    def to_original(self, delta) -> np.ndarray:
        return self.expand @ np.asarray(delta, dtype=float)

    def encode(self, x) -> np.ndarray:
        """Standard binary encoding of an integer point (exact round trip)."""
        x = np.asarray(x)
        delta = np.zeros(self.n_delta)
        col = 0
        for i, b in enumerate(self.upper):
            nbits = int(math.floor(math.log2(max(b, 1)))) + 1
            v = int(round(x[i]))
            for j in range(nbits):
                delta[col + j] = (v >> j) & 1
            col += nbits
        return delta


def _hull_row_supports(b: int):
    """Hull-description support sets: the bit positions of b, and for each
    position r outside them the set bits above r."""
    nbits = int(math.floor(math.log2(max(b, 1)))) + 1
    j_set = [j for j in range(nbits) if (b >> j) & 1]
    out = []
    for r in range(nbits):
        if r not in j_set:
            out.append((r, [t for t in j_set if t > r]))
    return nbits, j_set, out


def binarize_instance(instance: SmipInstance) -> tuple[SmipInstance, Binarization]:
    """Replace every integer x_i by its weighted binary digits; T and A
    columns expand by the weights, and the digit polytope carries both the
    knapsack row and the hull rows of its convex-hull description."""
    if instance.n1 != instance.n:
        raise SmipError("binarization requires a pure-integer first stage")
    upper = instance.bounds[:, 1]
    if np.any(upper != np.round(upper)):
        raise SmipError("integer bounds required")
    n = instance.n
    blocks, extra_rows = [], []  # extra rows in (coeffs-over-delta, sense, rhs)
    col = 0
    for i in range(n):
        b = int(upper[i])
        nbits, j_set, hull = _hull_row_supports(b)
        weights = np.array([2.0 ** j for j in range(nbits)])
        blocks.append((col, weights))
        if weights.sum() > b:
            extra_rows.append(({col + j: -weights[j] for j in range(nbits)}, ">=", -b))
        for r, jr in hull:
            coeffs = {col + r: -1.0}
            for t in jr:
                coeffs[col + t] = -1.0
            extra_rows.append((coeffs, ">=", -float(len(jr))))
        col += nbits
    total = col
    expand = np.zeros((n, total))
    for i, (start, weights) in enumerate(blocks):
        expand[i, start:start + len(weights)] = weights

    A_rows = [instance.A @ expand] if instance.A.size else []
    b_rows = [instance.b] if instance.A.size else []
    for coeffs, sense, rhs in extra_rows:
        row = np.zeros(total)
        for j, v in coeffs.items():
            row[j] = v
        A_rows.append(row.reshape(1, -1))
        b_rows.append([rhs])
    A = np.vstack(A_rows) if A_rows else np.zeros((0, total))
    b = np.concatenate([np.atleast_1d(x) for x in b_rows]) if b_rows else np.zeros(0)

    scenarios = tuple(
        type(s)(q=s.q, W=s.W, T=s.T @ expand, h=s.h, y_kinds=s.y_kinds, y_bounds=s.y_bounds)
        for s in instance.scenarios)
    mapped = SmipInstance(
        c=expand.T @ instance.c, A=A, b=b,
        var_kinds=np.ones(total, dtype=bool), bounds=np.tile([0.0, 1.0], (total, 1)),
        scenarios=scenarios, probabilities=instance.probabilities,
        obj_offset=instance.obj_offset)
    return mapped, Binarization(expand=expand, upper=upper.astype(int))


# ---------------------------------------------------------------------------
# Distance-cut vs binarized-cut hull comparison
# ---------------------------------------------------------------------------

def _enumerate_vertices(A: np.ndarray, senses, rhs: np.ndarray,
                        bounds: np.ndarray) -> np.ndarray:
    """Brute-force vertex enumeration of a small H-polytope (dim <= 8)."""
    n = A.shape[1] if A.size else len(bounds)
    rows, rvals = [], []
    for row, sense, r in zip(A, senses, rhs):
        if sense in (">=", "=="):
            rows.append(-row); rvals.append(-r)
        if sense in ("<=", "=="):
            rows.append(row); rvals.append(r)
    for j in range(n):
        if np.isfinite(bounds[j, 0]):
            e = np.zeros(n); e[j] = -1.0
            rows.append(e); rvals.append(-bounds[j, 0])
        if np.isfinite(bounds[j, 1]):
            e = np.zeros(n); e[j] = 1.0
            rows.append(e); rvals.append(bounds[j, 1])
    rows = np.array(rows); rvals = np.array(rvals)
    verts = []
    for idx in itertools.combinations(range(len(rows)), n):
        M = rows[list(idx)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        v = np.linalg.solve(M, rvals[list(idx)])
        if (rows @ v <= rvals + 1e-8).all() and \
                not any(np.allclose(v, u, atol=1e-8) for u in verts):
            verts.append(v)
    return np.array(verts)


@dataclass(frozen=True)
class DominanceResult:
    holds: bool
    witness: tuple | None  # (x, theta) in the binarized hull but not the other
    regime_ok: bool  # all B_i >= 3, the regime of the inclusion result


def verify_binarization_dominance(table: RecourseTable, anchor, lower_bound: float) -> DominanceResult:
    """Check conv(distance-cut system) >= conv(binarized-cut system) by
    certifying every vertex of the binarized hull against the relaxed
    (w+, w-, z) system via a membership LP.

    Sound in both directions on its small domain: for B_i >= 3 the inclusion
    is expected to hold, for smaller boxes the known counterexample should be
    found and reported as the witness.
    """
    a = np.asarray(anchor, dtype=float)
    upper = table.points.max(axis=0)
    n = table.n
    if n > 2 or (upper > 4).any():
        raise SmipError("dominance check limited to n <= 2, bounds <= 4")
    q = table.value_at(a)
    slope = q - lower_bound

    # binarized digit polytope with knapsack and hull rows
    blocks, col = [], 0
    rows, senses, rhs = [], [], []

    def add_row(coeffs, sense, r, width):
        row = np.zeros(width)
        for j, v in coeffs.items():
            row[j] = v
        rows.append(row); senses.append(sense); rhs.append(r)

    specs = []
    for i in range(n):
        b = int(upper[i])
        nbits, _, hull = _hull_row_supports(b)
        specs.append((col, nbits, b, hull))
        col += nbits
    total = col
    for start, nbits, b, hull in specs:
        weights = [2.0 ** j for j in range(nbits)]
        if sum(weights) > b:
            add_row({start + j: weights[j] for j in range(nbits)}, "<=", b, total)
        for r, jr in hull:
            coeffs = {start + r: 1.0}
            for t in jr:
                coeffs[start + t] = 1.0
            add_row(coeffs, "<=", float(len(jr)), total)
    verts = _enumerate_vertices(np.array(rows) if rows else np.zeros((0, total)),
                                senses, np.array(rhs), np.tile([0.0, 1.0], (total, 1)))

    expand = np.zeros((n, total))
    for i, (start, nbits, _, _) in enumerate(specs):
        expand[i, start:start + nbits] = [2.0 ** j for j in range(nbits)]
    mapping = Binarization(expand=expand, upper=upper.astype(int))
    dhat = mapping.encode(a)

    regime_ok = bool((upper >= 3).all())
    for delta in verts:
        x = mapping.to_original(delta)
        theta = q - slope * float(np.abs(delta - dhat).sum())
        if not _in_distance_hull(x, theta, a, upper, q, slope):
            return DominanceResult(holds=False,
                                   witness=(tuple(np.round(x, 9)), theta),
                                   regime_ok=regime_ok)
    return DominanceResult(holds=True, witness=None, regime_ok=regime_ok)


def _in_distance_hull(x, theta, anchor, upper, q, slope) -> bool:
    """Membership of (x, theta) in the relaxed lifting of the distance cut."""
    n = len(anchor)
    builder = milp.ModelBuilder()
    wp = [builder.add_column(lo=0.0, hi=np.inf) for _ in range(n)]
    wm = [builder.add_column(lo=0.0, hi=np.inf) for _ in range(n)]
    z = [builder.add_column(lo=0.0, hi=1.0) for _ in range(n)]
    for i in range(n):
        builder.add_row({wp[i]: 1.0, wm[i]: -1.0}, "==", float(x[i] - anchor[i]))
        builder.add_row({wp[i]: 1.0, z[i]: -(upper[i] - anchor[i])}, "<=", 0.0)
        builder.add_row({wm[i]: 1.0, z[i]: anchor[i]}, "<=", float(anchor[i]))
    builder.add_row({c: slope for c in wp} | {c: slope for c in wm}, ">=",
                    float(q - theta))
    return milp.solve_lp(builder.build()).status == milp.Status.OPTIMAL
