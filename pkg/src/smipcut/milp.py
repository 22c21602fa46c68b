"""LP and MILP solving layer.

LPs are solved through scipy's HiGHS interface behind the LpModel/LpSolution
contract.  MILPs default to a built-in best-bound branch-and-bound on top of
the LP layer; setting SMIPCUT_SOLVER=external:scipy delegates whole MILP
solves to scipy.optimize.milp instead.  Every solver call owns private state,
so concurrent workers never share a solver.
"""

from __future__ import annotations

import heapq
import os
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize
from scipy import sparse

from .model import SmipError

INT_TOL = 1e-6
MILP_REL_GAP = 1e-9
FEAS_CHECK = 1e-7
CS_CHECK = 1e-6


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"
    NUMERICAL = "numerical"


class NumericalError(SmipError):
    pass


@dataclass
class LpModel:
    """min c'x subject to rows (A, senses, rhs), column bounds, integrality.

    Integrality flags are ignored by solve_lp.  Senses are "<=", ">=", "==".
    """

    c: np.ndarray
    A: np.ndarray
    senses: list
    rhs: np.ndarray
    bounds: np.ndarray  # (n, 2), +-inf allowed on continuous columns
    integrality: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.c)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.senses = list(self.senses)
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(n, 2)
        self.integrality = np.asarray(self.integrality, dtype=bool)
        if len(self.senses) != len(self.rhs) or self.A.shape[0] != len(self.rhs):
            raise SmipError("row data inconsistent")
        if self.integrality.any():
            if not np.isfinite(self.bounds[self.integrality]).all():
                raise SmipError("integer columns must be bounded")

    @property
    def n(self) -> int:
        return len(self.c)

    def relaxed(self) -> "LpModel":
        return LpModel(self.c, self.A, self.senses, self.rhs, self.bounds,
                       np.zeros(self.n, dtype=bool))

    def with_bounds(self, bounds: np.ndarray) -> "LpModel":
        return LpModel(self.c, self.A, self.senses, self.rhs, bounds, self.integrality)


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None = None
    objective: float = np.nan
    duals: np.ndarray | None = None  # d(obj)/d(rhs); >= rows nonnegative under min
    lower_duals: np.ndarray | None = None  # column lower-bound multipliers (>= 0)
    upper_duals: np.ndarray | None = None  # column upper-bound multipliers (<= 0)


def dual_objective(model: LpModel, sol: LpSolution) -> float:
    """rhs'duals plus the bound terms; equals the primal objective at an
    optimum by strong duality."""
    total = float(model.rhs @ sol.duals) if len(model.rhs) else 0.0
    for j in range(model.n):
        lo, hi = model.bounds[j]
        if np.isfinite(lo) and sol.lower_duals[j]:
            total += lo * sol.lower_duals[j]
        if np.isfinite(hi) and sol.upper_duals[j]:
            total += hi * sol.upper_duals[j]
    return total


@dataclass
class MilpSolution:
    status: Status
    x: np.ndarray | None = None
    objective: float = np.nan
    bound: float = np.nan
    node_count: int = 0


@dataclass
class MilpLimits:
    node_limit: int = 200_000
    time_limit: float = np.inf
    rel_gap: float = MILP_REL_GAP


_SCIPY_STATUS = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}


def solve_lp(model: LpModel) -> LpSolution:
    """Solve the LP relaxation; duals use the d(obj)/d(rhs) sign convention,
    so >= rows carry nonnegative duals under minimization."""
    n = model.n
    ub_rows, ub_rhs, ub_idx = [], [], []
    eq_rows, eq_rhs, eq_idx = [], [], []
    for i, (row, sense, r) in enumerate(zip(model.A, model.senses, model.rhs)):
        if sense == "<=":
            ub_rows.append(row); ub_rhs.append(r); ub_idx.append((i, 1.0))
        elif sense == ">=":
            ub_rows.append(-row); ub_rhs.append(-r); ub_idx.append((i, -1.0))
        elif sense == "==":
            eq_rows.append(row); eq_rhs.append(r); eq_idx.append(i)
        else:
            raise SmipError(f"unknown row sense {sense!r}")
    A_ub = sparse.csr_matrix(np.array(ub_rows)) if ub_rows else None
    A_eq = sparse.csr_matrix(np.array(eq_rows)) if eq_rows else None
    res = optimize.linprog(
        model.c, A_ub=A_ub, b_ub=np.array(ub_rhs) if ub_rows else None,
        A_eq=A_eq, b_eq=np.array(eq_rhs) if eq_rows else None,
        bounds=model.bounds, method="highs",
    )
    status = _SCIPY_STATUS.get(res.status, Status.NUMERICAL)
    if status != Status.OPTIMAL:
        return LpSolution(status=status)
    x = np.asarray(res.x)
    duals = np.zeros(len(model.rhs))
    if ub_rows:
        for (i, flip), m in zip(ub_idx, res.ineqlin.marginals):
            duals[i] = flip * m  # back to d(obj)/d(original rhs)
    if eq_rows:
        for i, m in zip(eq_idx, res.eqlin.marginals):
            duals[i] = m
    sol = LpSolution(Status.OPTIMAL, x=x, objective=float(res.fun), duals=duals,
                     lower_duals=np.asarray(res.lower.marginals),
                     upper_duals=np.asarray(res.upper.marginals))
    _check_kkt(model, sol)
    return sol


def _check_kkt(model: LpModel, sol: LpSolution) -> None:
    """Feasibility residual <= 1e-7 and complementary slackness <= 1e-6,
    both scaled; downgrade to NUMERICAL instead of returning a wrong answer."""
    x = sol.x
    scale = 1.0 + float(np.abs(model.rhs).max(initial=0.0))
    for row, sense, r, d in zip(model.A, model.senses, model.rhs, sol.duals):
        ax = row @ x
        if sense == ">=":
            resid, slack = r - ax, ax - r
        elif sense == "<=":
            resid, slack = ax - r, r - ax
        else:
            resid, slack = abs(ax - r), 0.0
        if resid > FEAS_CHECK * scale or abs(d * slack) > CS_CHECK * scale * (1 + abs(d)):
            sol.status = Status.NUMERICAL
            return


def _external_scipy(model: LpModel, limits: MilpLimits) -> MilpSolution:
    cons = []
    for row, sense, r in zip(model.A, model.senses, model.rhs):
        lo = r if sense in (">=", "==") else -np.inf
        hi = r if sense in ("<=", "==") else np.inf
        cons.append(optimize.LinearConstraint(row.reshape(1, -1), lo, hi))
    res = optimize.milp(
        model.c, constraints=cons,
        integrality=model.integrality.astype(int),
        bounds=optimize.Bounds(model.bounds[:, 0], model.bounds[:, 1]),
        options={"mip_rel_gap": limits.rel_gap, "node_limit": limits.node_limit},
    )
    status = {0: Status.OPTIMAL, 1: Status.LIMIT, 2: Status.INFEASIBLE,
              3: Status.UNBOUNDED}.get(res.status, Status.NUMERICAL)
    if res.x is None:
        return MilpSolution(status=status)
    return MilpSolution(status, x=np.asarray(res.x), objective=float(res.fun),
                        bound=float(res.mip_dual_bound), node_count=int(res.mip_node_count))


def solve_milp(model: LpModel, limits: MilpLimits | None = None) -> MilpSolution:
    """Branch and bound with best-bound node selection and most-fractional
    branching (ties broken by lowest column index)."""
    limits = limits or MilpLimits()
    backend = os.environ.get("SMIPCUT_SOLVER", "builtin")
    if backend == "external:scipy":
        return _external_scipy(model, limits)
    if backend != "builtin" and not backend.startswith("external:"):
        raise SmipError(f"unknown SMIPCUT_SOLVER backend {backend!r}")
    if backend.startswith("external:"):
        raise SmipError(f"external backend {backend!r} is not available; "
                        "supported: external:scipy")

    start = time.monotonic()
    int_cols = np.flatnonzero(model.integrality)
    root = solve_lp(model.relaxed())
    if root.status in (Status.INFEASIBLE, Status.UNBOUNDED):
        return MilpSolution(status=root.status)
    if root.status != Status.OPTIMAL:
        return MilpSolution(status=Status.NUMERICAL)
    root_obj = root.objective

    best_x, best_obj = None, np.inf
    heap = []  # (bound, seq, bounds-array, lp solution)
    seq = 0
    heapq.heappush(heap, (root.objective, seq, model.bounds.copy(), root))
    nodes = 0

    def cutoff():
        if not np.isfinite(best_obj):
            return np.inf
        return best_obj - limits.rel_gap * max(1.0, abs(best_obj))

    def fractional(x):
        if len(int_cols) == 0:
            return None
        frac = x[int_cols] - np.round(x[int_cols])
        mask = np.abs(frac) > INT_TOL
        if not mask.any():
            return None
        # distance of the fractional part from 1/2; smaller = more fractional
        score = np.abs(np.abs(frac) - 0.5)
        score[~mask] = np.inf
        return int(int_cols[int(np.argmin(score))])

    limit_hit = False
    while heap:
        bound, _, nbounds, lp = heapq.heappop(heap)
        if bound >= cutoff():
            break  # best-first: every remaining node is at least as bad
        nodes += 1
        if nodes > limits.node_limit or time.monotonic() - start > limits.time_limit:
            limit_hit = True
            heapq.heappush(heap, (bound, -1, nbounds, lp))
            break
        col = fractional(lp.x)
        if col is None:
            if lp.objective < best_obj:
                best_obj, best_x = lp.objective, lp.x.copy()
            continue
        v = lp.x[col]
        for lo, hi in ((nbounds[col, 0], np.floor(v)), (np.ceil(v), nbounds[col, 1])):
            if lo > hi + 1e-12:
                continue
            child = nbounds.copy()
            child[col] = (lo, hi)
            csol = solve_lp(model.relaxed().with_bounds(child))
            if csol.status != Status.OPTIMAL:
                continue
            if csol.objective < cutoff():
                seq += 1
                heapq.heappush(heap, (csol.objective, seq, child, csol))

    proven = min([bound for bound, *_ in heap], default=best_obj)
    proven = min(proven, best_obj)
    if limit_hit:
        return MilpSolution(Status.LIMIT, x=best_x, objective=best_obj,
                            bound=proven, node_count=nodes)
    if best_x is None:
        return MilpSolution(Status.INFEASIBLE, node_count=nodes)
    assert best_obj >= root_obj - 1e-6 * max(1.0, abs(root_obj)), \
        "MILP objective fell below its LP relaxation"
    return MilpSolution(Status.OPTIMAL, x=best_x, objective=best_obj,
                        bound=best_obj, node_count=nodes)


@dataclass
class ModelBuilder:
    """Incremental row/column builder used for master problems."""

    c: list = field(default_factory=list)
    lo: list = field(default_factory=list)
    hi: list = field(default_factory=list)
    integer: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # (coeff dict, sense, rhs)

    def add_column(self, cost=0.0, lo=0.0, hi=np.inf, integer=False) -> int:
        self.c.append(cost); self.lo.append(lo); self.hi.append(hi)
        self.integer.append(integer)
        return len(self.c) - 1

    def add_row(self, coeffs: dict, sense: str, rhs: float) -> int:
        self.rows.append((dict(coeffs), sense, float(rhs)))
        return len(self.rows) - 1

    @property
    def ncols(self) -> int:
        return len(self.c)

    def build(self) -> LpModel:
        n = self.ncols
        A = np.zeros((len(self.rows), n))
        senses, rhs = [], []
        for i, (coeffs, sense, r) in enumerate(self.rows):
            for j, v in coeffs.items():
                A[i, j] = v
            senses.append(sense); rhs.append(r)
        return LpModel(np.array(self.c, dtype=float), A, senses, np.array(rhs),
                       np.column_stack([self.lo, self.hi]),
                       np.array(self.integer, dtype=bool))
