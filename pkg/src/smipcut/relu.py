"""Hinge-cut construction: closed-form rho, binary-search rho, and the
initial symmetric cut for mixed-integer anchors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import milp, subproblems
from .cuts import CutRequest
from .model import ReluCut, SmipInstance, SmipError
from .oracle import RecourseTable


class NoFiniteRho(SmipError):
    pass


@dataclass(frozen=True)
class RhoEstimate:
    rho: float
    method: str  # "closed-form" | "binary-search" | "lipschitz"
    d: float | None = None  # minimal L1 distance used by the closed form
    all_at_anchor: bool = False

    def __post_init__(self):
        if self.rho <= 0:
            raise SmipError("rho must be positive")


def ball_box_candidates(anchor, upper_bounds, radius: float | None = None) -> np.ndarray:
    """Corner candidates of the default relaxed set: the L1 ball of the given
    radius (default sum of the bounds) around the anchor, and the box corners.

    These under-approximate the true extreme-point set; a too-small minimal
    distance only enlarges rho, which keeps the closed form dual-optimal.
    """
    a = np.asarray(anchor, dtype=float)
    upper = np.asarray(upper_bounds, dtype=float)
    n = len(a)
    if radius is None:
        radius = float(upper.sum())
    pts = [a + sign * radius * np.eye(n)[i] for i in range(n) for sign in (1.0, -1.0)]
    pts += [np.array(corner, dtype=float)
            for corner in itertools.product(*[(0.0, u) for u in upper])]
    return np.array(pts)


def closed_form_rho(source, anchor, lower_bound: float,
                    q_val: float | None = None) -> RhoEstimate:
    """rho = (Q(x-hat) - L) / d with d the minimal nonzero L1 distance from
    the anchor to the candidate points.

    ``source`` is either an oracle table (pure-integer case, d >= 1 so the
    L-shaped slope is recovered) or an array of extreme-point candidates of a
    user-supplied relaxed set; the latter needs an explicit ``q_val``.
    """
    a = np.asarray(anchor, dtype=float)
    if isinstance(source, RecourseTable):
        points = source.points
        if q_val is None:
            q_val = source.value_at(a)
    else:
        points = np.atleast_2d(np.asarray(source, dtype=float))
        if q_val is None:
            raise SmipError("q_val is required with explicit candidate points")
    dist = np.abs(points - a).sum(axis=1)
    dist = dist[dist > 1e-12]
    if len(dist) == 0:
        return RhoEstimate(rho=1.0, method="closed-form", d=None, all_at_anchor=True)
    d = float(dist.min())
    gap = q_val - lower_bound
    rho = gap / d if gap > 0 else 1.0 / d
    return RhoEstimate(rho=rho, method="closed-form", d=d)


def reverse_norm_dual_value(instance: SmipInstance, scenario_id: int, anchor,
                            rho: float) -> float:
    """min q'y + rho ||x - x-hat||_1 over the joint scenario region; one MILP."""
    joint = subproblems.build_joint(instance, scenario_id,
                                    omega_cost=np.full(instance.n, rho), anchor=anchor)
    res = milp.solve_milp(joint.model)
    if res.x is None:
        raise SmipError(f"dual-value MILP {res.status.value}")
    return res.objective


def binary_search_rho(instance: SmipInstance, scenario_id: int, anchor,
                      lower_bound: float, rho_hi: float = 1.0,
                      q_val: float | None = None, rel_tol: float = 1e-3) -> RhoEstimate:
    """Smallest rho (within a relative bracket) whose symmetric dual value
    saturates at Q(x-hat); the returned value is the upper bracket endpoint,
    the side guaranteed to stay dual-optimal."""
    a = np.asarray(anchor, dtype=float)
    if q_val is None:
        q_val = subproblems.recourse_value(instance, scenario_id, a)
    sat_tol = 1e-9 * max(1.0, abs(q_val))
    cap = 2.0 ** 20 * max(q_val - lower_bound, 1.0)

    def saturated(rho: float) -> bool:
        return reverse_norm_dual_value(instance, scenario_id, a, rho) >= q_val - sat_tol

    while not saturated(rho_hi):
        rho_hi *= 2.0
        if rho_hi > cap:
            raise NoFiniteRho("no finite rho saturates the dual value; the "
                              "standing assumptions rule this out")
    lo = 0.0
    while rho_hi - lo > rel_tol * max(rho_hi, 1.0):
        mid = 0.5 * (lo + rho_hi)
        if mid <= 0:
            break
        if saturated(mid):
            rho_hi = mid
        else:
            lo = mid
    return RhoEstimate(rho=rho_hi, method="binary-search")


def initial_mixed_cut(req: CutRequest, rho: RhoEstimate) -> ReluCut:
    """theta >= Q(x-hat) - rho ||x - x-hat||_1 in hinge form."""
    n = len(req.anchor)
    return ReluCut(anchor=req.anchor, intercept=req.q_val,
                   pi_plus=np.full(n, -rho.rho), pi_minus=np.full(n, -rho.rho),
                   scenario_id=req.scenario_id)
