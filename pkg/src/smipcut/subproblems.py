"""Second-stage model builders shared by the cut generators and the oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import milp
from .model import Scenario, SmipInstance, SmipError


def recourse_model(scenario: Scenario, x, relax: bool = False) -> milp.LpModel:
    """Scenario subproblem at fixed first-stage x: min q'y, W y >= h - T x."""
    x = np.asarray(x, dtype=float)
    rhs = scenario.h - scenario.T @ x
    integrality = np.zeros(scenario.m, dtype=bool) if relax else scenario.y_kinds
    return milp.LpModel(c=scenario.q, A=scenario.W, senses=[">="] * len(rhs),
                        rhs=rhs, bounds=scenario.y_bounds, integrality=integrality)


def recourse_value(instance: SmipInstance, scenario_id: int, x,
                   relax: bool = False, limits: milp.MilpLimits | None = None) -> float:
    """Q_s(x), or its LP relaxation value when relax=True."""
    model = recourse_model(instance.scenarios[scenario_id], x, relax=relax)
    if relax:
        sol = milp.solve_lp(model)
        if sol.status != milp.Status.OPTIMAL:
            raise SmipError(f"scenario {scenario_id} LP relaxation {sol.status.value} "
                            "(relatively complete recourse violated?)")
        return sol.objective
    res = milp.solve_milp(model, limits)
    if res.status not in (milp.Status.OPTIMAL, milp.Status.LIMIT) or res.x is None:
        raise SmipError(f"scenario {scenario_id} subproblem {res.status.value}")
    return res.objective


def extensive_form(instance: SmipInstance,
                   limits: milp.MilpLimits | None = None) -> milp.MilpSolution:
    """Deterministic-equivalent MILP over (x, y_1, ..., y_N); the independent
    optimum oracle for instances too large to enumerate by first stage."""
    n = instance.n
    offsets, ncols = [], n
    for s in instance.scenarios:
        offsets.append(ncols)
        ncols += s.m
    c = np.zeros(ncols)
    c[:n] = instance.c
    bounds = np.zeros((ncols, 2))
    bounds[:n] = instance.bounds
    integrality = np.zeros(ncols, dtype=bool)
    integrality[:n] = instance.var_kinds
    rows, senses, rhs = [], [], []
    for row, r in zip(instance.A, instance.b):
        full = np.zeros(ncols); full[:n] = row
        rows.append(full); senses.append(">="); rhs.append(r)
    for s, off, p in zip(instance.scenarios, offsets, instance.probabilities):
        c[off:off + s.m] = p * s.q
        bounds[off:off + s.m] = s.y_bounds
        integrality[off:off + s.m] = s.y_kinds
        for trow, wrow, r in zip(s.T, s.W, s.h):
            full = np.zeros(ncols)
            full[:n] = trow
            full[off:off + s.m] = wrow
            rows.append(full); senses.append(">="); rhs.append(r)
    model = milp.LpModel(c=c, A=np.array(rows) if rows else np.zeros((0, ncols)),
                         senses=senses, rhs=np.array(rhs), bounds=bounds,
                         integrality=integrality)
    return milp.solve_milp(model, limits)


@dataclass
class JointModel:
    """Joint (x, y[, omega]) model for one scenario with slices into columns."""

    model: milp.LpModel
    x_slice: slice
    y_slice: slice
    omega_slice: slice | None = None


def build_joint(instance: SmipInstance, scenario_id: int, x_cost=None,
                omega_cost=None, anchor=None, relax_x: bool = False,
                relax_y: bool = False, x_box=None, extra_rows=None) -> JointModel:
    """min x_cost'x + q'y (+ omega_cost'omega) over the joint scenario region.

    With omega_cost set, one omega_i >= |x_i - anchor_i| column is added per
    coordinate (two >= rows each); nonnegative omega costs make the columns
    settle at the absolute deviations.  ``extra_rows`` are (x_coeffs, sense,
    rhs) triples over the first-stage columns only.
    """
    s = instance.scenarios[scenario_id]
    n, m = instance.n, s.m
    with_omega = omega_cost is not None
    ncols = n + m + (n if with_omega else 0)

    c = np.zeros(ncols)
    c[:n] = 0.0 if x_cost is None else np.asarray(x_cost, dtype=float)
    c[n:n + m] = s.q
    if with_omega:
        c[n + m:] = omega_cost

    bounds = np.zeros((ncols, 2))
    bounds[:n] = instance.bounds if x_box is None else x_box
    bounds[n:n + m] = s.y_bounds
    if with_omega:
        bounds[n + m:] = [0.0, np.inf]

    integrality = np.zeros(ncols, dtype=bool)
    if not relax_x:
        integrality[:n] = instance.var_kinds
    if not relax_y:
        integrality[n:n + m] = s.y_kinds

    rows, senses, rhs = [], [], []
    for row, r in zip(instance.A, instance.b):
        full = np.zeros(ncols); full[:n] = row
        rows.append(full); senses.append(">="); rhs.append(r)
    for trow, wrow, r in zip(s.T, s.W, s.h):
        full = np.zeros(ncols); full[:n] = trow; full[n:n + m] = wrow
        rows.append(full); senses.append(">="); rhs.append(r)
    if with_omega:
        a = np.asarray(anchor, dtype=float)
        for i in range(n):
            for sign in (1.0, -1.0):
                full = np.zeros(ncols)
                full[n + m + i] = 1.0; full[i] = -sign
                rows.append(full); senses.append(">="); rhs.append(-sign * a[i])
    for coeffs, sense, r in (extra_rows or []):
        full = np.zeros(ncols); full[:n] = coeffs
        rows.append(full); senses.append(sense); rhs.append(r)

    model = milp.LpModel(c=c, A=np.array(rows) if rows else np.zeros((0, ncols)),
                         senses=senses, rhs=np.array(rhs), bounds=bounds,
                         integrality=integrality)
    return JointModel(model=model, x_slice=slice(0, n), y_slice=slice(n, n + m),
                      omega_slice=slice(n + m, ncols) if with_omega else None)
