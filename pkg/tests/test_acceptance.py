"""Acceptance suite: one test per criterion, each printing a PASS line at
its stated tolerance (run with -s to see them).

Criterion 7d has two parts.  The attainable part (the width-2 counterexample
plus corner/central anchors on wider boxes) is green.  The universal claim
"dominance holds whenever every box width is at least 3" is refuted by the
checker itself and its test is left failing on purpose; its docstring carries
the hand-checkable witness.
"""

import itertools
import time

import numpy as np
import pytest

from smipcut import (driver, embed, fixtures, instances, oracle, relu,
                     strengthen, subproblems)
from smipcut.cuts import CutRequest, lambda_shaped_cut, reverse_norm_cut
from smipcut.driver import DriverConfig, solve_general
from smipcut.model import Scenario, SmipInstance, evaluate_relu_cut
from tests.conftest import random_small_instance

MODULE_START = time.monotonic()


def report(criterion: str, detail: str = "") -> None:
    print(f"ACCEPTANCE {criterion}: PASS {detail}".rstrip())


# -- criterion 1: Example-1 end to end --------------------------------------

def test_criterion_1_fix1_end_to_end():
    start = time.monotonic()
    inst = fixtures.fix1()
    t1 = oracle.build_table(inst, 0)
    t2 = oracle.build_table(inst, 1)
    texp = oracle.build_table(inst, None)
    co1 = oracle.convex_envelope_at(t1, [1.0])
    co2 = oracle.convex_envelope_at(t2, [1.0])
    assert co1 == pytest.approx(1.5, abs=1e-9)
    assert co2 == pytest.approx(1.0, abs=1e-9)
    assert 0.5 * co1 + 0.5 * co2 == pytest.approx(1.25, abs=1e-9)
    assert oracle.convex_envelope_at(texp, [1.0]) == pytest.approx(1.5, abs=1e-9)

    relu_run = solve_general(inst, DriverConfig.with_cuts("r"))
    assert relu_run.status == "optimal"
    assert relu_run.upper_bound == pytest.approx(0.5, abs=1e-6)
    assert relu_run.lower_bound == pytest.approx(0.5, abs=1e-6)
    lag_run = solve_general(inst, DriverConfig.with_cuts("lag"))
    assert lag_run.lower_bound == pytest.approx(0.25, abs=1e-6)

    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    report("1 (fix1 end-to-end)",
           f"optimum 0.5, envelope bound 0.25, {elapsed:.2f}s")


# -- criterion 2: Example-3 geometry -----------------------------------------

def test_criterion_2_fix3_geometry():
    start = time.monotonic()
    table = fixtures.fix3_table()
    cut = fixtures.fix3_cut()
    valid, _ = oracle.is_cut_valid(cut, table)
    assert valid
    for point in [(0, 2), (1, 0), (1, 1), (1, 2), (1, 3), (1, 4), (2, 2)]:
        assert evaluate_relu_cut(cut, point) == \
            pytest.approx(table.value_at(point), abs=1e-9)
    assert oracle.count_tight_affinely_independent(cut, table) == 5

    box = np.array([-6.0, -4.5, -8.0, -2.5])
    for j in range(4):
        inside = np.concatenate([cut.pi_plus, cut.pi_minus])
        inside[j] = box[j] - 1e-3
        outside = np.concatenate([cut.pi_plus, cut.pi_minus])
        outside[j] = box[j] + 1e-3
        assert oracle.is_relu_dual_optimal(inside[:2], inside[2:], cut.anchor, table)
        assert not oracle.is_relu_dual_optimal(outside[:2], outside[2:],
                                               cut.anchor, table)
    for aug in fixtures.fix3_augmented_cuts():
        assert oracle.is_cut_valid(aug, table)[0]
        assert oracle.count_tight_affinely_independent(aug, table) == 4

    elapsed = time.monotonic() - start
    assert elapsed < 1.0
    report("2 (fix3 geometry)",
           f"facet count 5, dual box {list(box)}, {elapsed:.2f}s")


# -- criterion 3: Example-5/6 strengthening ----------------------------------

def test_criterion_3_fix6_strengthening():
    """The strengthening objective is chi = (1, -1); the criterion quotes it
    as (-1, 1), under which the LP is unbounded along the (1, 0) recession
    ray and no point of the named optimal face attains -8 (see ledger)."""
    inst = fixtures.fix6()
    table = oracle.build_table(inst, 0)
    anchor = np.array([1.0, 0.0])
    chi = np.array([1.0, -1.0])
    out = strengthen.exact_strengthen(table, anchor, 4.0, 4.0 * chi, objective=chi)
    assert out.status == "improved"
    assert out.objective_value == pytest.approx(-8.0, abs=1e-9)
    valid, _ = oracle.is_cut_valid(out.cut, table)
    assert valid
    # any convex combination of the two facet cuts is tight at (1,0), (0,1)
    for point in ((1, 0), (0, 1)):
        assert evaluate_relu_cut(out.cut, point) == \
            pytest.approx(table.value_at(point), abs=1e-9)

    seed_l2 = 2.0 * chi  # L = 2
    plain = strengthen.feasible_region_membership((-6, -2), inst, 0, anchor,
                                                  4.0, seed_l2)
    coned = strengthen.feasible_region_membership((-6, -2), inst, 0, anchor,
                                                  4.0, seed_l2, reverse_cone=True)
    assert plain is True and coned is False
    report("3 (fix6 strengthening)",
           "objective -8, cone excludes (-6,-2)")


# -- criterion 4: Example-7 no-good cut --------------------------------------

def test_criterion_4_fix6_no_good():
    inst = fixtures.fix6()
    table = oracle.build_table(inst, 0)
    anchor = np.array([1.0, 1.0])
    seed = 2.0 * (2 * anchor - 1)
    without = strengthen.strengthen_binary_cut(inst, 0, anchor, 2.0, seed,
                                               strategy="obj", no_good=False)
    assert without.status == "infeasible"
    with_ng = strengthen.strengthen_binary_cut(inst, 0, anchor, 2.0, seed,
                                               strategy="auto")
    assert with_ng.status == "improved"
    assert with_ng.objective_value == pytest.approx(-6.6, abs=1e-6)
    assert oracle.is_cut_valid(with_ng.cut, table)[0]
    assert evaluate_relu_cut(with_ng.cut, anchor) == pytest.approx(2.0, abs=1e-9)
    report("4 (fix6 no-good cut)",
           f"objective {with_ng.objective_value:.6f}, eta {with_ng.eta}")


# -- criterion 5: mixed-integer pipeline -------------------------------------

def test_criterion_5_mixed_pipeline():
    inst = fixtures.fixmi()
    anchor = np.array([1.0, 1.0])
    ball = relu.ball_box_candidates(anchor, inst.bounds[:, 1], radius=2.0)
    est = relu.closed_form_rho(ball, anchor, 0.0, q_val=2.0)
    assert est.d == pytest.approx(2.0)

    sample = oracle.sample_table(inst, 0, fixtures.fixmi_grid())
    req = CutRequest(scenario_id=0, anchor=anchor, q_val=2.0, lower_bound=0.0)
    rho2_cut = relu.initial_mixed_cut(
        req, relu.RhoEstimate(rho=2.0, method="closed-form", d=2.0))
    assert oracle.is_relu_dual_optimal(rho2_cut.pi_plus, rho2_cut.pi_minus,
                                       anchor, sample)

    out = strengthen.strengthen_mixed_cut(inst, 0, anchor, 2.0, rho=2.0)
    assert out.status == "improved"
    assert out.objective_value == pytest.approx(8.0, abs=1e-9)  # (3,3),(1,1)
    assert np.allclose(out.cut.pi_plus, [1.0, 1.0], atol=1e-9)
    assert np.allclose(out.cut.pi_minus, [-1.0, -1.0], atol=1e-9)

    int_grid = [(a, b) for a in (0, 1, 2) for b in (0, 1, 2)]
    lifted = oracle.sample_table(inst, 0, int_grid)
    assert oracle.is_facet_defining(out.cut, lifted)
    report("5 (mixed-integer pipeline)",
           "d=2, rho=2 dual-optimal, eta=(3,3),(1,1), facet-defining")


# -- criterion 6: hull gaps ---------------------------------------------------

def test_criterion_6_hull_gaps():
    table = fixtures.fix2_table()
    rho = oracle.lipschitz_constant(table)
    point = np.array([1.5, 0.5])
    for anchor, q in zip(table.points, table.values):
        req = CutRequest(scenario_id=0, anchor=anchor, q_val=q,
                         lower_bound=-10.0, rho_lip=rho)
        for cut in (reverse_norm_cut(req), lambda_shaped_cut(req)):
            assert oracle.is_cut_valid(cut, table)[0]
            assert evaluate_relu_cut(cut, point) <= 0.0 + 1e-9
    assert oracle.convex_envelope_at(table, point) == pytest.approx(0.5, abs=1e-9)

    inst4 = fixtures.fix4()
    texp = oracle.build_table(inst4, None)
    t1, t2 = oracle.build_table(inst4, 0), oracle.build_table(inst4, 1)
    for anchor in texp.points:
        up = dn = 0.0
        for tt in (t1, t2):
            u, d = oracle.axis_dual_bounds(tt, anchor)
            up += 0.5 * (u[0] if np.isfinite(u[0]) else 0.0)
            dn += 0.5 * (d[0] if np.isfinite(d[0]) else 0.0)
        value = texp.value_at(anchor) + up * max(1.5 - anchor[0], 0.0) \
            + dn * max(anchor[0] - 1.5, 0.0)
        assert value <= 7.0 / 8.0 + 1e-9
    assert oracle.convex_envelope_at(texp, [1.5]) > 7.0 / 8.0 + 1e-9
    report("6 (hull gaps)", "(1.5,0.5,0) survives, envelope 0.5; "
                            "(1.5,7/8) admitted, hull value 1")


# -- criterion 7: property suites ---------------------------------------------

@pytest.fixture(scope="module")
def sslp_runs():
    runs = {}
    for seed in (1, 2, 3, 4, 5):
        spec = instances.GeneratorSpec(family="sslp", sizes={"J": 5, "I": 5},
                                       n_scenarios=5, seed=seed)
        inst = instances.generate(spec)
        runs[seed] = (inst,
                      solve_general(inst, DriverConfig.with_cuts("r")),
                      solve_general(inst, DriverConfig.with_cuts("l")))
    return runs


def _generated_cuts_for(inst, rng, max_anchors=3):
    """(cut, seed cut, table) triples from the hinge pipeline at sampled
    anchors of a pure-integer instance (binarized when not binary)."""
    if not inst.is_binary:
        inst, _ = embed.binarize_instance(inst)
    table = oracle.build_table(inst, 0)
    L = table.minimum() - float(rng.integers(0, 2))
    picks = rng.choice(len(table.points),
                       size=min(max_anchors, len(table.points)), replace=False)
    out = []
    for idx in picks:
        anchor = table.points[int(idx)]
        q = table.value_at(anchor)
        seed_pi = (q - L) * (2 * anchor - 1)
        res = strengthen.strengthen_binary_cut(inst, 0, anchor, q, seed_pi,
                                               strategy="auto")
        seed_cut = strengthen._seed_cut(anchor, q, seed_pi, 0)
        out.append((res.cut, seed_cut, table))
    return out


def test_criterion_7a_random_cut_validity(rng):
    checked = 0
    for trial in range(100):
        binary = trial % 2 == 0
        inst = random_small_instance(rng, n_max=6 if binary else 2,
                                     b_max=4, nscen_max=4, binary=binary)
        for cut, _, table in _generated_cuts_for(inst, rng):
            valid, viol = oracle.is_cut_valid(cut, table)
            assert valid, viol
            assert evaluate_relu_cut(cut, cut.anchor) == \
                pytest.approx(table.value_at(cut.anchor), abs=1e-7)
            checked += 1
    assert checked >= 200
    report("7a (random cut validity)", f"{checked} cuts over 100 instances")


def test_criterion_7b_strengthened_dominates_seed(rng):
    checked = 0
    for trial in range(30):
        inst = random_small_instance(rng, n_max=4, nscen_max=2, binary=True)
        box = inst.bounds[:, 1]
        for cut, seed_cut, _ in _generated_cuts_for(inst, rng, max_anchors=2):
            samples = rng.uniform(0, 1, size=(1000, inst.n)) * box
            for x in samples:
                assert evaluate_relu_cut(cut, x) >= \
                    evaluate_relu_cut(seed_cut, x) - 1e-9
            assert evaluate_relu_cut(cut, cut.anchor) == \
                pytest.approx(evaluate_relu_cut(seed_cut, cut.anchor), abs=1e-7)
            checked += 1
    # mixed pipeline cuts dominate their symmetric initial cuts as well
    out = strengthen.strengthen_mixed_cut(fixtures.fixmi(), 0, [1.0, 1.0], 2.0,
                                          rho=2.0)
    initial = relu.initial_mixed_cut(
        CutRequest(scenario_id=0, anchor=[1.0, 1.0], q_val=2.0, lower_bound=0.0),
        relu.RhoEstimate(rho=2.0, method="closed-form"))
    for x in rng.uniform(0, 2, size=(1000, 2)):
        assert evaluate_relu_cut(out.cut, x) >= evaluate_relu_cut(initial, x) - 1e-9
    report("7b (dominance)", f"{checked} strengthened cuts at 1000 points each")


def test_criterion_7c_hull_equality_small_blocks(rng):
    checked = 0
    for trial in range(40):
        inst = random_small_instance(rng, n_max=2, b_max=4, nscen_max=1)
        if inst.n > 2 or not inst.is_binary and inst.n > 2:
            continue
        table = oracle.build_table(inst, 0)
        anchor = table.points[int(rng.integers(0, len(table.points)))]
        q = table.value_at(anchor)
        req = CutRequest(scenario_id=0, anchor=anchor, q_val=q,
                         lower_bound=table.minimum())
        cut = lambda_shaped_cut(req)
        assert oracle.verify_hull_equality(cut, inst.bounds[:, 1])
        checked += 1
        if checked >= 12:
            break
    assert checked >= 12
    report("7c (embedded hull equality)", f"{checked} blocks at n <= 2")


def _interval_instance(upper: int) -> SmipInstance:
    scen = Scenario(q=[1.0], W=[[1.0]], T=[[-1.0]], h=[0.0],
                    y_kinds=[True], y_bounds=[[0, 2 * upper]])
    return SmipInstance(c=[0.0], A=np.zeros((0, 1)), b=[], var_kinds=[True],
                        bounds=[[0, upper]], scenarios=(scen,), probabilities=[1.0])


def test_criterion_7d_b2_counterexample_and_corner_regime():
    table2 = oracle.build_table(_interval_instance(2), 0)
    res = embed.verify_binarization_dominance(table2, [1.0], 0.0)
    assert not res.holds
    assert res.witness[0] == (2.0,)
    assert res.witness[1] == pytest.approx(-1.0)

    held = []
    for upper, anchor in [(3, 0.0), (3, 3.0), (4, 0.0), (4, 2.0)]:
        table = oracle.build_table(_interval_instance(upper), 0)
        out = embed.verify_binarization_dominance(table, [anchor], 0.0)
        assert out.regime_ok
        held.append(out.holds)
    assert all(held)
    report("7d (dominance: counterexample + corner/central anchors)",
           "B=2 witness (2,-1); B in {3,4} corner and central anchors hold")


def test_criterion_7d_universal_wide_box_claim():
    """Pinned universal claim: dominance on every box with widths >= 3.

    The claim is false, and this test is kept failing on purpose rather than
    weakened.  Hand-checkable witness at width 3, anchor 1, Q = (0,1,2,3),
    L = 0: the digits of x = 2 sit two flips from the digits of the anchor,
    so the binarized system admits (x, theta) = (2, -1), while every point
    of the distance-cut system satisfies theta >= -x/3 (check the two linear
    pieces), putting its hull floor at x = 2 no lower than -2/3.  The same
    mechanism recurs at interior anchors of wider boxes (e.g. width 4,
    anchor 3, via x = 4).  The adjacent test covers the regimes where the
    inclusion does hold.
    """
    failures = []
    for upper in (3, 4):
        table = oracle.build_table(_interval_instance(upper), 0)
        for anchor in range(upper + 1):
            out = embed.verify_binarization_dominance(table, [float(anchor)], 0.0)
            if not out.holds:
                failures.append((upper, anchor, out.witness))
    assert not failures, f"dominance fails at interior anchors: {failures}"


def test_criterion_7e_sslp_matches_enumeration(sslp_runs):
    for seed in (1, 3, 5):
        inst, rep_r, _ = sslp_runs[seed]
        best = np.inf
        for bits in itertools.product((0, 1), repeat=inst.n):
            x = np.array(bits, dtype=float)
            if inst.A.size and not (inst.A @ x >= inst.b - 1e-9).all():
                continue
            value = float(inst.c @ x) + sum(
                p * subproblems.recourse_value(inst, s, x)
                for s, p in enumerate(inst.probabilities))
            best = min(best, value)
        assert rep_r.status == "optimal"
        assert rep_r.upper_bound == pytest.approx(best, abs=1e-6)
    report("7e (enumeration oracle)", "3 seeded instances matched exactly")


# -- criterion 8: iteration comparison ----------------------------------------

def test_criterion_8_iteration_comparison(sslp_runs):
    wins = 0
    details = []
    for seed, (_, rep_r, rep_l) in sslp_runs.items():
        assert rep_r.status == "optimal" and rep_r.gap <= 1e-4
        assert rep_l.status == "optimal" and rep_l.gap <= 1e-4
        wins += rep_r.iterations <= rep_l.iterations
        details.append(f"s{seed}:{rep_r.iterations}<={rep_l.iterations}")
    assert wins >= 4
    report("8 (iteration comparison)", f"{wins}/5 seeds, {' '.join(details)}")


def test_runtime_budget():
    elapsed = time.monotonic() - MODULE_START
    assert elapsed < 300.0
    report("runtime budget", f"{elapsed:.1f}s < 300s")
