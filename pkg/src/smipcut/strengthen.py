"""LP-based cut strengthening.

Both strengthening problems have the shape

    optimize a'eta  s.t.  [ inner LP value with eta-dependent objective ] >= target,

and the inner minimization is replaced by LP-dual feasibility, so the whole
thing is one LP in (eta, dual blocks).  The dual block is generated
mechanically from the explicit inner model rather than transcribed, which
keeps the sign conventions honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import milp, oracle, subproblems
from .model import LinearCut, ReluCut, SmipInstance, SmipError, linear_to_relu

STRATEGIES = ("auto", "obj", "box", "cone")


@dataclass
class StrengthenProblem:
    """Assembled strengthening LP plus the metadata to interpret its solution."""

    mode: str  # "binary-no-good" | "mixed-lifted"
    anchor: np.ndarray
    target: float
    strategy: str
    objective: np.ndarray
    builder: milp.ModelBuilder
    eta_cols: list

    def solve(self) -> milp.LpSolution:
        return milp.solve_lp(self.builder.build())


@dataclass
class StrengthenOutcome:
    status: str  # improved | unbounded | infeasible | degraded
    cut: ReluCut
    eta: np.ndarray | None = None
    eta_plus: np.ndarray | None = None
    eta_minus: np.ndarray | None = None
    objective_value: float | None = None


def add_dual_feasibility_block(builder: milp.ModelBuilder, inner: milp.LpModel,
                               eta_cols: list, c_eta: np.ndarray,
                               t0: float, t_eta: np.ndarray) -> None:
    """Append dual variables and rows enforcing

        min_v { (inner.c + c_eta @ eta)' v : inner rows, inner bounds }
            >= t0 + t_eta' eta.

    Row duals are signed by sense; bound duals exist only for finite bounds.
    Stationarity rows are equalities, one per inner column; the dual
    objective bound is a single >= row.
    """
    nv = inner.n
    k = len(eta_cols)
    c_eta = np.asarray(c_eta, dtype=float).reshape(nv, k)
    t_eta = np.asarray(t_eta, dtype=float).reshape(k)

    mu = []
    for sense in inner.senses:
        if sense == ">=":
            mu.append(builder.add_column(lo=0.0, hi=np.inf))
        elif sense == "<=":
            mu.append(builder.add_column(lo=-np.inf, hi=0.0))
        else:
            mu.append(builder.add_column(lo=-np.inf, hi=np.inf))
    alpha = {j: builder.add_column(lo=0.0, hi=np.inf)
             for j in range(nv) if np.isfinite(inner.bounds[j, 0])}
    beta = {j: builder.add_column(lo=0.0, hi=np.inf)
            for j in range(nv) if np.isfinite(inner.bounds[j, 1])}

    for j in range(nv):
        coeffs = {}
        for i in range(len(inner.rhs)):
            if inner.A[i, j]:
                coeffs[mu[i]] = inner.A[i, j]
        if j in alpha:
            coeffs[alpha[j]] = 1.0
        if j in beta:
            coeffs[beta[j]] = -1.0
        for e in range(k):
            if c_eta[j, e]:
                coeffs[eta_cols[e]] = coeffs.get(eta_cols[e], 0.0) - c_eta[j, e]
        builder.add_row(coeffs, "==", inner.c[j])

    coeffs = {}
    for i, r in enumerate(inner.rhs):
        if r:
            coeffs[mu[i]] = r
    for j, col in alpha.items():
        if inner.bounds[j, 0]:
            coeffs[col] = coeffs.get(col, 0.0) + inner.bounds[j, 0]
    for j, col in beta.items():
        if inner.bounds[j, 1]:
            coeffs[col] = coeffs.get(col, 0.0) - inner.bounds[j, 1]
    for e in range(k):
        if t_eta[e]:
            coeffs[eta_cols[e]] = coeffs.get(eta_cols[e], 0.0) - t_eta[e]
    builder.add_row(coeffs, ">=", t0)


# ---------------------------------------------------------------------------
# Binary first stage
# ---------------------------------------------------------------------------

def _binary_inner_lp(instance: SmipInstance, scenario_id: int, anchor,
                     seed_pi, no_good: bool, objective_cut: float | None) -> milp.LpModel:
    """LP relaxation of min q'y + (seed_pi + eta)'(anchor - x) over the
    restricted region; only the eta-independent part of the objective is set
    here (the x coefficients carry -seed_pi, eta is wired in by the caller)."""
    s = instance.scenarios[scenario_id]
    n, m = instance.n, s.m
    a = np.asarray(anchor, dtype=float)
    chi = 2.0 * a - 1.0
    extra = []
    if no_good:
        extra.append((-chi, ">=", 1.0 - float(chi @ a)))
    joint = subproblems.build_joint(instance, scenario_id,
                                    x_cost=-np.asarray(seed_pi, dtype=float),
                                    relax_x=True, relax_y=True,
                                    x_box=np.tile([0.0, 1.0], (n, 1)),
                                    extra_rows=extra)
    model = joint.model
    if objective_cut is not None:
        row = np.zeros(model.n)
        row[n:n + m] = s.q
        A = np.vstack([model.A, row])
        model = milp.LpModel(model.c, A, model.senses + [">="],
                             np.append(model.rhs, objective_cut),
                             model.bounds, model.integrality)
    return model


def build_binary_strengthen_lp(instance: SmipInstance, scenario_id: int, anchor,
                               q_val: float, seed_pi, objective,
                               strategy: str, no_good: bool = True,
                               scenario_lb: float | None = None,
                               box_width: float | None = None,
                               dominance: bool = False) -> StrengthenProblem:
    """Assemble the no-good strengthening LP for a binary anchor.

    ``strategy`` adds the boundedness device: "cone" appends the dual block of
    min{x'eta: x in the restricted region} >= anchor'eta, "box" (and the auto
    escalation) clamps diag(chi) eta into [-box_width, 0].  ``dominance``
    adds only the upper side diag(chi) eta <= 0, which makes the solved cut
    dominate its seed.
    """
    a = np.asarray(anchor, dtype=float)
    n = instance.n
    chi = 2.0 * a - 1.0
    seed_pi = np.asarray(seed_pi, dtype=float)
    objective = np.asarray(objective, dtype=float)

    builder = milp.ModelBuilder()
    eta_cols = [builder.add_column(cost=objective[j], lo=-np.inf, hi=np.inf)
                for j in range(n)]

    inner = _binary_inner_lp(instance, scenario_id, a, seed_pi, no_good, scenario_lb)
    c_eta = np.zeros((inner.n, n))
    c_eta[:n, :n] = -np.eye(n)  # eta enters the inner objective on x as -eta
    t0 = q_val - float(seed_pi @ a)
    add_dual_feasibility_block(builder, inner, eta_cols, c_eta, t0, t_eta=-a)

    if dominance or strategy == "box":
        for j in range(n):
            builder.add_row({eta_cols[j]: chi[j]}, "<=", 0.0)
    if strategy == "box":
        if box_width is None:
            box_width = float(np.abs(seed_pi).max())
        for j in range(n):
            builder.add_row({eta_cols[j]: chi[j]}, ">=", -box_width)
    if strategy == "cone":
        cone_inner = _region_lp(instance, a, no_good)
        add_dual_feasibility_block(builder, cone_inner, eta_cols,
                                   c_eta=np.eye(n), t0=0.0, t_eta=a)
    return StrengthenProblem(mode="binary-no-good", anchor=a, target=q_val,
                             strategy=strategy, objective=objective,
                             builder=builder, eta_cols=eta_cols)


def _region_lp(instance: SmipInstance, anchor, no_good: bool) -> milp.LpModel:
    """First-stage restricted region {x in [0,1]^n: Ax >= b, no-good} with a
    zero base objective (eta becomes the objective through the dual block)."""
    n = instance.n
    chi = 2.0 * np.asarray(anchor, dtype=float) - 1.0
    rows = [instance.A[i] for i in range(len(instance.b))]
    senses = [">="] * len(instance.b)
    rhs = list(instance.b)
    if no_good:
        rows.append(-chi); senses.append(">=")
        rhs.append(1.0 - float(chi @ np.asarray(anchor, dtype=float)))
    A = np.array(rows) if rows else np.zeros((0, n))
    return milp.LpModel(c=np.zeros(n), A=A, senses=senses, rhs=np.array(rhs),
                        bounds=np.tile([0.0, 1.0], (n, 1)),
                        integrality=np.zeros(n, dtype=bool))


def _seed_cut(anchor, q_val, seed_pi, scenario_id) -> ReluCut:
    lc = LinearCut(coeffs=np.asarray(seed_pi, dtype=float),
                   rhs=q_val - float(np.asarray(seed_pi) @ np.asarray(anchor, dtype=float)),
                   scenario_id=scenario_id)
    cut = linear_to_relu(lc, anchor)
    return ReluCut(anchor=cut.anchor, intercept=cut.intercept, pi_plus=cut.pi_plus,
                   pi_minus=cut.pi_minus, scenario_id=scenario_id, degraded=True)


def strengthen_binary_cut(instance: SmipInstance, scenario_id: int, anchor,
                          q_val: float, seed_pi, strategy: str = "auto",
                          objective=None, no_good: bool = True,
                          scenario_lb: float | None = None) -> StrengthenOutcome:
    """Strengthen a tight seed cut theta >= q_val + seed_pi'(x - anchor).

    Auto follows the two-step recipe: objective chi with the dominance
    constraints first, then the box clamp if that is unbounded; anything
    still unbounded or infeasible degrades to the seed cut.
    """
    if strategy not in STRATEGIES:
        raise SmipError(f"unknown strategy {strategy!r}")
    a = np.asarray(anchor, dtype=float)
    if not np.all((a == 0) | (a == 1)):
        raise SmipError("binary strengthening needs a binary anchor")
    chi = 2.0 * a - 1.0
    obj = chi if objective is None else np.asarray(objective, dtype=float)
    seed_pi = np.asarray(seed_pi, dtype=float)

    if not obj.any():
        # no strengthening pressure: keep the seed when it is itself feasible
        prob = build_binary_strengthen_lp(instance, scenario_id, a, q_val,
                                          seed_pi, obj, "box", no_good=no_good,
                                          scenario_lb=scenario_lb,
                                          box_width=0.0)
        if prob.solve().status == milp.Status.OPTIMAL:
            lc = LinearCut(coeffs=seed_pi, rhs=q_val - float(seed_pi @ a),
                           scenario_id=scenario_id)
            return StrengthenOutcome(status="improved", cut=linear_to_relu(lc, a),
                                     eta=np.zeros(instance.n), objective_value=0.0)

    attempts = ([("obj", True), ("box", True)] if strategy == "auto"
                else [(strategy, False)])
    last = "unbounded"
    for strat, dominance in attempts:
        prob = build_binary_strengthen_lp(
            instance, scenario_id, a, q_val, seed_pi, obj, strat,
            no_good=no_good, scenario_lb=scenario_lb, dominance=dominance)
        sol = prob.solve()
        if sol.status == milp.Status.OPTIMAL:
            eta = sol.x[:instance.n].copy()
            pi = seed_pi + eta
            lc = LinearCut(coeffs=pi, rhs=q_val - float(pi @ a), scenario_id=scenario_id)
            return StrengthenOutcome(status="improved", cut=linear_to_relu(lc, a),
                                     eta=eta, objective_value=float(obj @ eta))
        last = {milp.Status.UNBOUNDED: "unbounded",
                milp.Status.INFEASIBLE: "infeasible"}.get(sol.status, "degraded")
        if last == "infeasible" and strategy == "auto":
            break  # tightening the region further cannot help
    if strategy == "auto":
        last = "degraded"
    return StrengthenOutcome(status=last, cut=_seed_cut(a, q_val, seed_pi, scenario_id))


def exact_strengthen(table: oracle.RecourseTable, anchor, q_val: float, seed_pi,
                     objective, reverse_cone: bool = False) -> StrengthenOutcome:
    """Solve the exact (non-relaxed) strengthening problem over an oracle
    table: min a'eta s.t. (anchor - x)'eta >= q_val + seed_pi'(anchor - x) - Q(x)
    for every table point x.

    This is the finite region the LP-relaxed problem inner-approximates; it
    is used by the worked-example checks, not by the solver loop.  With
    reverse_cone=True the reverse-cone constraints (anchor - x)'eta <= 0 are
    appended.
    """
    a = np.asarray(anchor, dtype=float)
    seed_pi = np.asarray(seed_pi, dtype=float)
    obj = np.asarray(objective, dtype=float)
    n = table.n
    diffs = a - table.points
    rhs = q_val - diffs @ seed_pi - table.values
    rows, senses, rvals = [diffs], [">="] * len(rhs), [rhs]
    if reverse_cone:
        rows.append(diffs)
        senses += ["<="] * len(rhs)
        rvals.append(np.zeros(len(rhs)))
    A = np.vstack(rows)
    lp = milp.LpModel(c=obj, A=A, senses=senses, rhs=np.concatenate(rvals),
                      bounds=np.tile([-np.inf, np.inf], (n, 1)),
                      integrality=np.zeros(n, dtype=bool))
    sol = milp.solve_lp(lp)
    if sol.status != milp.Status.OPTIMAL:
        status = {milp.Status.UNBOUNDED: "unbounded",
                  milp.Status.INFEASIBLE: "infeasible"}.get(sol.status, "degraded")
        return StrengthenOutcome(status=status,
                                 cut=_seed_cut(a, q_val, seed_pi, table.scenario_id))
    eta = sol.x.copy()
    pi = seed_pi + eta
    lc = LinearCut(coeffs=pi, rhs=q_val - float(pi @ a), scenario_id=table.scenario_id)
    return StrengthenOutcome(status="improved", cut=linear_to_relu(lc, a), eta=eta,
                             objective_value=float(obj @ eta))


def feasible_region_membership(eta, instance: SmipInstance, scenario_id: int,
                               anchor, q_val: float, seed_pi,
                               reverse_cone: bool = False) -> bool | None:
    """Exact (non-relaxed) strengthening feasibility of eta, checked against
    the oracle table; None when the oracle cannot enumerate the instance.

    With reverse_cone=True the reverse-cone constraints
    (anchor - x)'eta <= 0 are required as well.
    """
    try:
        table = oracle.build_table(instance, scenario_id)
    except oracle.UnsupportedByOracle:
        return None
    a = np.asarray(anchor, dtype=float)
    pi = np.asarray(seed_pi, dtype=float) + np.asarray(eta, dtype=float)
    if oracle.lagrangian_dual_value(table, a, pi) < q_val - 1e-9:
        return False
    if reverse_cone:
        eta = np.asarray(eta, dtype=float)
        if ((table.points @ eta) < float(a @ eta) - 1e-9).any():
            return False
    return True


# ---------------------------------------------------------------------------
# Mixed-integer first stage
# ---------------------------------------------------------------------------

def _mixed_inner_lp(instance: SmipInstance, scenario_id: int, anchor,
                    rho: float) -> milp.LpModel:
    """Relaxed lifted model over (x, y, w+, w-, z); eta is wired onto the
    w columns by the caller."""
    s = instance.scenarios[scenario_id]
    n, m = instance.n, s.m
    a = np.asarray(anchor, dtype=float)
    upper = instance.bounds[:, 1]
    ncols = n + m + 3 * n  # x, y, w+, w-, z
    wp, wm, zc = n + m, n + m + n, n + m + 2 * n

    c = np.zeros(ncols)
    c[n:n + m] = s.q
    c[wp:wp + n] = rho
    c[wm:wm + n] = rho

    bounds = np.zeros((ncols, 2))
    bounds[:n] = instance.bounds
    bounds[n:n + m] = s.y_bounds
    bounds[wp:wp + 2 * n] = [0.0, np.inf]
    bounds[zc:] = [0.0, 1.0]

    rows, senses, rhs = [], [], []
    for row, r in zip(instance.A, instance.b):
        full = np.zeros(ncols); full[:n] = row
        rows.append(full); senses.append(">="); rhs.append(r)
    for trow, wrow, r in zip(s.T, s.W, s.h):
        full = np.zeros(ncols); full[:n] = trow; full[n:n + m] = wrow
        rows.append(full); senses.append(">="); rhs.append(r)
    for i in range(n):
        link = np.zeros(ncols)
        link[wp + i], link[wm + i], link[i] = 1.0, -1.0, -1.0
        rows.append(link); senses.append("=="); rhs.append(-a[i])
        up = np.zeros(ncols)
        up[wp + i], up[zc + i] = 1.0, -(upper[i] - a[i])
        rows.append(up); senses.append("<="); rhs.append(0.0)
        dn = np.zeros(ncols)
        dn[wm + i], dn[zc + i] = 1.0, a[i]
        rows.append(dn); senses.append("<="); rhs.append(a[i])
    return milp.LpModel(c=c, A=np.array(rows), senses=senses, rhs=np.array(rhs),
                        bounds=bounds, integrality=np.zeros(ncols, dtype=bool))


def strengthen_mixed_cut(instance: SmipInstance, scenario_id: int, anchor,
                         q_val: float, rho: float, objective_plus=None,
                         objective_minus=None) -> StrengthenOutcome:
    """Strengthen the initial cut theta >= q_val - rho ||x - anchor||_1 by
    maximizing (a+)'eta+ + (a-)'eta- subject to the relaxed lifted dual
    feasibility; the solved cut has coefficients eta - rho on each hinge.

    Unbounded problems are retried with the box 0 <= eta <= 2 rho; anything
    else degrades to the initial cut.
    """
    a = np.asarray(anchor, dtype=float)
    n = instance.n
    ap = np.ones(n) if objective_plus is None else np.asarray(objective_plus, dtype=float)
    am = np.ones(n) if objective_minus is None else np.asarray(objective_minus, dtype=float)

    inner = _mixed_inner_lp(instance, scenario_id, a, rho)
    wp = n + instance.scenarios[scenario_id].m

    zero_objective = not (ap.any() or am.any())
    for boxed in (True,) if zero_objective else (False, True):
        builder = milp.ModelBuilder()
        if zero_objective:
            lo = hi = 0.0  # no pressure: accept eta = 0 when feasible
        else:
            # eta >= 0 keeps the solved cut pointwise above the initial one;
            # the 2 rho cap is the escalation for unbounded problems
            lo, hi = (0.0, 2.0 * rho) if boxed else (0.0, np.inf)
        eta_cols = [builder.add_column(cost=-c, lo=lo, hi=hi)  # maximize
                    for c in np.concatenate([ap, am])]
        c_eta = np.zeros((inner.n, 2 * n))
        for i in range(n):
            c_eta[wp + i, i] = -1.0
            c_eta[wp + n + i, n + i] = -1.0
        add_dual_feasibility_block(builder, inner, eta_cols, c_eta,
                                   t0=q_val, t_eta=np.zeros(2 * n))
        sol = milp.solve_lp(builder.build())
        if sol.status == milp.Status.OPTIMAL:
            eta = sol.x[:2 * n]
            eta_plus, eta_minus = eta[:n].copy(), eta[n:].copy()
            cut = ReluCut(anchor=a, intercept=q_val, pi_plus=eta_plus - rho,
                          pi_minus=eta_minus - rho, scenario_id=scenario_id)
            return StrengthenOutcome(status="improved", cut=cut,
                                     eta_plus=eta_plus, eta_minus=eta_minus,
                                     objective_value=float(ap @ eta_plus + am @ eta_minus))
        if sol.status != milp.Status.UNBOUNDED:
            break
    fallback = ReluCut(anchor=a, intercept=q_val, pi_plus=np.full(n, -rho),
                       pi_minus=np.full(n, -rho), scenario_id=scenario_id, degraded=True)
    return StrengthenOutcome(status="degraded", cut=fallback)
