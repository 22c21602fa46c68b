"""Classical cut generators, all emitted in ReluCut or LinearCut form.

Benders and strengthened Benders come from LP duals / Lagrangian MILPs;
integer L-shaped, distance (Lambda-shaped), reverse-norm and augmented
Lagrangian cuts are closed-form in the anchor value and a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import milp, subproblems
from .model import LinearCut, ReluCut, SmipInstance, SmipError
from .oracle import RecourseTable, lagrangian_optimal_multiplier


class CutError(SmipError):
    pass


@dataclass(frozen=True)
class CutRequest:
    """Inputs for the closed-form cut families at one (scenario, anchor)."""

    scenario_id: int | None
    anchor: np.ndarray
    q_val: float  # recourse value at the anchor
    lower_bound: float  # universal L
    scenario_lower_bound: float | None = None
    rho_lip: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))
        if self.lower_bound > self.q_val + 1e-7:
            raise CutError("lower bound exceeds the recourse value at the anchor")
        if self.scenario_lower_bound is not None and \
                self.scenario_lower_bound < self.lower_bound - 1e-9:
            raise CutError("scenario lower bound below the universal lower bound")


def benders_cut(instance: SmipInstance, scenario_id: int, anchor) -> LinearCut:
    """LP-relaxation dual cut anchored at x-hat:
    theta >= Q_LP(x-hat) + (-T' sigma)'(x - x-hat)."""
    anchor = np.asarray(anchor, dtype=float)
    s = instance.scenarios[scenario_id]
    sol = milp.solve_lp(subproblems.recourse_model(s, anchor, relax=True))
    if sol.status != milp.Status.OPTIMAL:
        raise CutError(
            f"scenario {scenario_id} LP relaxation is {sol.status.value} at the anchor; "
            "relatively complete recourse is violated")
    slope = -s.T.T @ sol.duals
    return LinearCut(coeffs=slope, rhs=sol.objective - float(slope @ anchor),
                     scenario_id=scenario_id)


def strengthened_benders_cut(instance: SmipInstance, scenario_id: int, anchor,
                             limits: milp.MilpLimits | None = None) -> LinearCut:
    """Benders slope with the MILP Lagrangian intercept: parallel to the
    Benders cut, shifted up to L_s(pi; x-hat) by keeping integrality in the
    inner minimization.  Falls back to the Benders cut (degraded) on a limit."""
    anchor = np.asarray(anchor, dtype=float)
    base = benders_cut(instance, scenario_id, anchor)
    pi = base.coeffs
    joint = subproblems.build_joint(instance, scenario_id, x_cost=-pi)
    res = milp.solve_milp(joint.model, limits)
    if res.status != milp.Status.OPTIMAL:
        return LinearCut(coeffs=pi, rhs=base.rhs, scenario_id=scenario_id, degraded=True)
    lag_value = res.objective + float(pi @ anchor)  # min q'y + pi'(anchor - x)
    rhs = lag_value - float(pi @ anchor)
    if rhs < base.rhs - 1e-9:
        # numerically the MILP intercept can never be below the LP one
        rhs = base.rhs
    return LinearCut(coeffs=pi, rhs=rhs, scenario_id=scenario_id)


def _distance_cut(req: CutRequest) -> ReluCut:
    slope = req.lower_bound - req.q_val  # <= 0; zero gives the constant cut
    n = len(req.anchor)
    return ReluCut(anchor=req.anchor, intercept=req.q_val,
                   pi_plus=np.full(n, slope), pi_minus=np.full(n, slope),
                   scenario_id=req.scenario_id)


def integer_l_shaped_cut(req: CutRequest) -> ReluCut:
    """theta >= Q(x-hat) - (Q(x-hat) - L) ||x - x-hat||_1, binary anchors."""
    if not np.all((req.anchor == 0) | (req.anchor == 1)):
        raise CutError("integer L-shaped cuts need a binary anchor; "
                       "use lambda_shaped_cut for general integer anchors")
    return _distance_cut(req)


def lambda_shaped_cut(req: CutRequest) -> ReluCut:
    """The same distance cut on a general integer anchor."""
    if np.any(req.anchor != np.round(req.anchor)):
        raise CutError("anchor has continuous coordinates; distance cuts "
                       "require a pure-integer first stage")
    return _distance_cut(req)


def reverse_norm_cut(req: CutRequest) -> ReluCut:
    """theta >= Q(x-hat) - rho ||x - x-hat||_1 from a Lipschitz constant."""
    if req.rho_lip is None:
        raise CutError("reverse-norm cuts need a Lipschitz constant rho_lip")
    n = len(req.anchor)
    return ReluCut(anchor=req.anchor, intercept=req.q_val,
                   pi_plus=np.full(n, -req.rho_lip), pi_minus=np.full(n, -req.rho_lip),
                   scenario_id=req.scenario_id)


def augmented_lagrangian_cut(instance: SmipInstance, scenario_id: int, anchor,
                             pi, rho: float,
                             limits: milp.MilpLimits | None = None) -> ReluCut:
    """theta >= L_A + pi'(x - x-hat) - rho ||x - x-hat||_1 rewritten with
    hinge coefficients pi+_i = pi_i - rho, pi-_i = -pi_i - rho."""
    if rho < 0:
        raise CutError("augmented Lagrangian cuts need rho >= 0")
    anchor = np.asarray(anchor, dtype=float)
    pi = np.asarray(pi, dtype=float)
    n = instance.n
    joint = subproblems.build_joint(instance, scenario_id, x_cost=-pi,
                                    omega_cost=np.full(n, rho), anchor=anchor)
    res = milp.solve_milp(joint.model, limits)
    degraded = res.status != milp.Status.OPTIMAL
    if res.x is None:
        raise CutError(f"augmented Lagrangian inner MILP {res.status.value}")
    l_a = res.objective + float(pi @ anchor)
    return ReluCut(anchor=anchor, intercept=l_a, pi_plus=pi - rho,
                   pi_minus=-pi - rho, scenario_id=scenario_id, degraded=degraded)


def lagrangian_cut(table: RecourseTable, anchor) -> LinearCut:
    """Ordinary Lagrangian cut with exact optimal multipliers from the table:
    theta >= co(Q)(x-hat) + pi'(x - x-hat)."""
    anchor = np.asarray(anchor, dtype=float)
    pi, value = lagrangian_optimal_multiplier(table, anchor)
    return LinearCut(coeffs=pi, rhs=value - float(pi @ anchor),
                     scenario_id=table.scenario_id)


def global_lower_bound(instance: SmipInstance) -> float:
    """Universal L: floor of the smallest scenario LP bound of min q'y over
    the fully relaxed joint region."""
    worst = np.inf
    for sid in range(len(instance.scenarios)):
        joint = subproblems.build_joint(instance, sid, relax_x=True, relax_y=True)
        sol = milp.solve_lp(joint.model.relaxed())
        if sol.status == milp.Status.UNBOUNDED:
            raise CutError("scenario LP bound is unbounded below; supply an "
                           "explicit lower bound L")
        if sol.status != milp.Status.OPTIMAL:
            raise CutError(f"lower-bound LP {sol.status.value}")
        worst = min(worst, sol.objective)
    return math.floor(worst)


def scenario_lower_bound(instance: SmipInstance, scenario_id: int,
                         limits: milp.MilpLimits | None = None) -> float:
    """L_s = min over feasible x of Q_s(x), one joint MILP solve."""
    joint = subproblems.build_joint(instance, scenario_id)
    res = milp.solve_milp(joint.model, limits)
    if res.x is None:
        raise CutError(f"scenario bound MILP {res.status.value}")
    return res.bound if res.status == milp.Status.LIMIT else res.objective
