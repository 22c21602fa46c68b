"""Named verification suites over the worked-example fixtures.

Each check returns a verdict dict {"check", "pass", "detail"}; the verify
subcommand emits them as JSON and exits nonzero when any fails.
"""

from __future__ import annotations

import numpy as np

from . import driver, embed, fixtures, oracle, relu, strengthen
from .cuts import CutRequest
from .model import evaluate_relu_cut


def _verdict(name: str, ok, detail="") -> dict:
    return {"check": name, "pass": bool(ok), "detail": str(detail)}


def check_fix1() -> list[dict]:
    inst = fixtures.fix1()
    t1 = oracle.build_table(inst, 0)
    t2 = oracle.build_table(inst, 1)
    texp = oracle.build_table(inst, None)
    out = []
    co1 = oracle.convex_envelope_at(t1, [1.0])
    co2 = oracle.convex_envelope_at(t2, [1.0])
    coexp = oracle.convex_envelope_at(texp, [1.0])
    out.append(_verdict("fix1.envelope_s1", abs(co1 - 1.5) < 1e-9, co1))
    out.append(_verdict("fix1.envelope_s2", abs(co2 - 1.0) < 1e-9, co2))
    out.append(_verdict("fix1.weighted_envelope",
                        abs(0.5 * co1 + 0.5 * co2 - 1.25) < 1e-9, 0.5 * co1 + 0.5 * co2))
    out.append(_verdict("fix1.expected_envelope", abs(coexp - 1.5) < 1e-9, coexp))
    rep = driver.solve_general(inst, driver.DriverConfig.with_cuts("r"))
    out.append(_verdict("fix1.relu_optimum",
                        rep.status == "optimal" and abs(rep.upper_bound - 0.5) < 1e-6,
                        f"{rep.status} {rep.upper_bound}"))
    lag = driver.solve_general(inst, driver.DriverConfig.with_cuts("lag"))
    out.append(_verdict("fix1.lagrangian_stall",
                        abs(lag.lower_bound - 0.25) < 1e-6, lag.lower_bound))
    return out


def check_fix2() -> list[dict]:
    table = fixtures.fix2_table()
    out = []
    rho = oracle.lipschitz_constant(table)
    out.append(_verdict("fix2.lipschitz", abs(rho - 7.0) < 1e-9, rho))
    co = oracle.convex_envelope_at(table, [1.5, 0.5])
    out.append(_verdict("fix2.envelope_at_gap_point", abs(co - 0.5) < 1e-9, co))
    lower = -10.0
    survives = True
    ok_valid = True
    from .cuts import lambda_shaped_cut, reverse_norm_cut
    for anchor, q in zip(table.points, table.values):
        req = CutRequest(scenario_id=0, anchor=anchor, q_val=q,
                         lower_bound=lower, rho_lip=rho)
        for cut in (reverse_norm_cut(req), lambda_shaped_cut(req)):
            valid, _ = oracle.is_cut_valid(cut, table)
            ok_valid &= valid
            survives &= evaluate_relu_cut(cut, [1.5, 0.5]) <= 0.0 + 1e-9
    out.append(_verdict("fix2.distance_cuts_valid", ok_valid))
    out.append(_verdict("fix2.gap_point_survives_cuts", survives))
    return out


def check_fix3() -> list[dict]:
    table = fixtures.fix3_table()
    cut = fixtures.fix3_cut()
    out = []
    valid, viol = oracle.is_cut_valid(cut, table)
    out.append(_verdict("fix3.anchor_cut_valid", valid, viol))
    tight_pts = [(0, 2), (1, 0), (1, 1), (1, 2), (1, 3), (1, 4), (2, 2)]
    all_tight = all(abs(evaluate_relu_cut(cut, p) - table.value_at(p)) < 1e-9
                    for p in tight_pts)
    out.append(_verdict("fix3.anchor_cut_tight_at_7_points", all_tight))
    count = oracle.count_tight_affinely_independent(cut, table)
    out.append(_verdict("fix3.anchor_cut_facet_count", count == 5, count))
    out.append(_verdict("fix3.anchor_cut_facet_defining",
                        oracle.is_facet_defining(cut, table)))
    bounds_ok = True
    box = np.array([-6.0, -4.5, -8.0, -2.5])  # (pi1+, pi2+, pi1-, pi2-)
    for j in range(4):
        for sign, expect in ((-1.0, True), (1.0, False)):
            probe = np.concatenate([cut.pi_plus, cut.pi_minus]).astype(float)
            probe[j] = box[j] + sign * 1e-3
            got = oracle.is_relu_dual_optimal(probe[:2], probe[2:], cut.anchor, table)
            bounds_ok &= got == expect
    out.append(_verdict("fix3.dual_box_bounds", bounds_ok, list(box)))
    for name, aug in zip(("a", "b"), fixtures.fix3_augmented_cuts()):
        v, _ = oracle.is_cut_valid(aug, table)
        c = oracle.count_tight_affinely_independent(aug, table)
        out.append(_verdict(f"fix3.augmented_{name}_tight_count", v and c == 4, c))
    return out


def check_fix4() -> list[dict]:
    inst = fixtures.fix4()
    out = []
    t1 = oracle.build_table(inst, 0)
    t2 = oracle.build_table(inst, 1)
    texp = oracle.build_table(inst, None)
    out.append(_verdict("fix4.tables",
                        list(t1.values) == [0, 1, 1, 0] and list(t2.values) == [4, 1, 1, 4],
                        f"{t1.values} {t2.values}"))
    # strongest per-scenario hinge coefficients, combined with weights 1/2
    survives = True
    for anchor in texp.points:
        up = np.zeros(1); dn = np.zeros(1)
        for tt, p in ((t1, 0.5), (t2, 0.5)):
            u1, d1 = oracle.axis_dual_bounds(tt, anchor)
            up += p * u1; dn += p * d1
        up = np.where(np.isfinite(up), up, 0.0)
        dn = np.where(np.isfinite(dn), dn, 0.0)
        value = texp.value_at(anchor) \
            + up[0] * max(1.5 - anchor[0], 0.0) + dn[0] * max(anchor[0] - 1.5, 0.0)
        survives &= value <= 7.0 / 8.0 + 1e-9
    out.append(_verdict("fix4.gap_point_survives_relu", survives))
    co = oracle.convex_envelope_at(texp, [1.5])
    out.append(_verdict("fix4.hull_rejects_gap_point",
                        co > 7.0 / 8.0 + 1e-9, co))
    return out


def check_fix6() -> list[dict]:
    inst = fixtures.fix6()
    table = oracle.build_table(inst, 0)
    out = []
    want = {(0, 0): 8.0, (0, 1): 4.0, (1, 0): 4.0, (1, 1): 2.0}
    got = {tuple(map(int, p)): v for p, v in zip(table.points, table.values)}
    table_ok = all(abs(got[k] - v) < 1e-9 for k, v in want.items())
    out.append(_verdict("fix6.table", table_ok, got))
    anchor = np.array([1.0, 0.0])
    chi = 2 * anchor - 1
    ex = strengthen.exact_strengthen(table, anchor, 4.0, 4.0 * chi, objective=chi)
    out.append(_verdict("fix6.obj_strategy_value",
                        ex.status == "improved" and abs(ex.objective_value + 8.0) < 1e-9,
                        ex.objective_value))
    valid, _ = oracle.is_cut_valid(ex.cut, table)
    tight = all(abs(evaluate_relu_cut(ex.cut, p) - table.value_at(p)) < 1e-9
                for p in [(1, 0), (0, 1)])
    out.append(_verdict("fix6.obj_strategy_cut_geometry", valid and tight))
    m_plain = strengthen.feasible_region_membership(
        (-6, -2), inst, 0, anchor, 4.0, 2.0 * chi)
    m_cone = strengthen.feasible_region_membership(
        (-6, -2), inst, 0, anchor, 4.0, 2.0 * chi, reverse_cone=True)
    out.append(_verdict("fix6.cone_excludes_extreme_point",
                        m_plain is True and m_cone is False, (m_plain, m_cone)))
    anchor7 = np.array([1.0, 1.0])
    seed7 = 2.0 * (2 * anchor7 - 1)
    no_ng = strengthen.strengthen_binary_cut(inst, 0, anchor7, 2.0, seed7,
                                             strategy="obj", no_good=False)
    out.append(_verdict("fix6.no_good_required", no_ng.status == "infeasible",
                        no_ng.status))
    with_ng = strengthen.strengthen_binary_cut(inst, 0, anchor7, 2.0, seed7,
                                               strategy="auto")
    ok7 = with_ng.status == "improved" and abs(with_ng.objective_value + 6.6) < 1e-6
    v7, _ = oracle.is_cut_valid(with_ng.cut, table)
    t7 = abs(evaluate_relu_cut(with_ng.cut, anchor7) - 2.0) < 1e-9
    out.append(_verdict("fix6.no_good_strengthening", ok7 and v7 and t7,
                        f"{with_ng.status} {with_ng.objective_value} eta={with_ng.eta}"))
    return out


def check_fixmi() -> list[dict]:
    inst = fixtures.fixmi()
    grid = fixtures.fixmi_grid()
    table = oracle.sample_table(inst, 0, grid)
    anchor = np.array([1.0, 1.0])
    out = []
    ball = relu.ball_box_candidates(anchor, inst.bounds[:, 1], radius=2.0)
    est = relu.closed_form_rho(ball, anchor, 0.0, q_val=2.0)
    out.append(_verdict("fixmi.closed_form_d", est.d == 2.0, est.d))
    req = CutRequest(scenario_id=0, anchor=anchor, q_val=2.0, lower_bound=0.0)
    rho2_cut = relu.initial_mixed_cut(
        req, relu.RhoEstimate(rho=2.0, method="closed-form", d=2.0))
    out.append(_verdict("fixmi.rho2_dual_optimal",
                        oracle.is_relu_dual_optimal(rho2_cut.pi_plus, rho2_cut.pi_minus,
                                                    anchor, table)))
    res = strengthen.strengthen_mixed_cut(inst, 0, anchor, 2.0, rho=2.0)
    target = res.status == "improved" and res.objective_value is not None \
        and abs(res.objective_value - 8.0) < 1e-6
    out.append(_verdict("fixmi.strengthened_objective", target,
                        f"{res.eta_plus} {res.eta_minus}"))
    int_grid = [(x1, x2) for x1 in (0, 1, 2) for x2 in (0, 1, 2)]
    facet = oracle.is_facet_defining(res.cut, oracle.sample_table(inst, 0, int_grid))
    valid, _ = oracle.is_cut_valid(res.cut, table)
    out.append(_verdict("fixmi.final_cut_facet", facet and valid))
    return out


def check_lambda2() -> list[dict]:
    inst = fixtures.lambda_counterexample()
    table = oracle.build_table(inst, 0)
    res = embed.verify_binarization_dominance(table, [1.0], 0.0)
    witness_ok = (not res.holds) and res.witness is not None \
        and res.witness[0] == (2.0,) and abs(res.witness[1] + 1.0) < 1e-9
    return [_verdict("lambda2.b2_counterexample", witness_ok, res.witness)]


SUITES = {
    "fix1": check_fix1, "fix2": check_fix2, "fix3": check_fix3,
    "fix4": check_fix4, "fix6": check_fix6, "fixmi": check_fixmi,
    "lambda2": check_lambda2,
}


def run_suite(name: str) -> list[dict]:
    name = name.lower()
    if name == "all":
        verdicts = []
        for fn in SUITES.values():
            verdicts.extend(fn())
        return verdicts
    if name not in SUITES:
        raise KeyError(f"unknown fixture suite {name!r}; "
                       f"available: {sorted(SUITES)} or 'all'")
    return SUITES[name]()
