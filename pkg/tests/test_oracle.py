import numpy as np
import pytest

from smipcut import fixtures, oracle
from smipcut.model import ReluCut, Scenario, SmipInstance, evaluate_relu_cut
from smipcut.oracle import (OutsideHull, RecourseTable, UnsupportedByOracle,
                            build_table, convex_envelope_at,
                            count_tight_affinely_independent, is_cut_valid,
                            is_relu_dual_optimal, lagrangian_dual_value,
                            verify_hull_equality)


@pytest.fixture(scope="module")
def fix6_table():
    return build_table(fixtures.fix6(), 0)


@pytest.fixture(scope="module")
def fix1_tables():
    inst = fixtures.fix1()
    return build_table(inst, 0), build_table(inst, 1), build_table(inst, None)


class TestBuildTable:
    def test_fix6_values(self, fix6_table):
        want = {(0, 0): 8, (1, 0): 4, (0, 1): 4, (1, 1): 2}
        for point, value in want.items():
            assert fix6_table.value_at(point) == pytest.approx(value)

    def test_fix1_scenario1(self, fix1_tables):
        t1, _, _ = fix1_tables
        assert [t1.value_at([x]) for x in (0, 1, 2)] == [1.0, 2.0, 2.0]

    def test_single_point_region(self):
        scen = fixtures.fix6().scenarios[0]
        inst = SmipInstance(c=[0.0, 0.0], A=[[1.0, 0.0], [0.0, 1.0]], b=[1.0, 1.0],
                            var_kinds=[True, True], bounds=[[0, 1], [0, 1]],
                            scenarios=(scen,), probabilities=[1.0])
        table = build_table(inst, 0)
        assert len(table.points) == 1
        assert table.value_at([1, 1]) == pytest.approx(2.0)

    def test_mixed_first_stage_unsupported(self):
        with pytest.raises(UnsupportedByOracle):
            build_table(fixtures.fixmi(), 0)

    def test_oversized_grid_unsupported(self):
        scen = Scenario(q=[1.0], W=[[1.0]], T=[[0.0] * 4], h=[0.0],
                        y_kinds=[False], y_bounds=[[0, 1]])
        inst = SmipInstance(c=np.zeros(4), A=np.zeros((0, 4)), b=[],
                            var_kinds=[True] * 4,
                            bounds=[[0, 100]] * 4, scenarios=(scen,),
                            probabilities=[1.0])
        with pytest.raises(UnsupportedByOracle):
            build_table(inst, 0)


class TestConvexEnvelope:
    def test_fix1_midpoint(self, fix1_tables):
        t1, t2, texp = fix1_tables
        assert convex_envelope_at(t1, [1.0]) == pytest.approx(1.5)
        assert convex_envelope_at(t2, [1.0]) == pytest.approx(1.0)
        assert convex_envelope_at(texp, [1.0]) == pytest.approx(1.5)

    def test_vertex_evaluates_to_own_value(self, fix6_table):
        assert convex_envelope_at(fix6_table, [0, 0]) == pytest.approx(8.0)

    def test_fix2_value(self):
        assert convex_envelope_at(fixtures.fix2_table(), [1.5, 0.5]) == \
            pytest.approx(0.5)

    def test_outside_hull_raises(self, fix6_table):
        with pytest.raises(OutsideHull):
            convex_envelope_at(fix6_table, [2.0, 0.0])


class TestCutValidity:
    def test_fix3_cut_valid(self):
        ok, viol = is_cut_valid(fixtures.fix3_cut(), fixtures.fix3_table())
        assert ok and viol <= 0.0 + 1e-12

    def test_constant_cut(self, fix6_table):
        cut = ReluCut(anchor=[0.0, 0.0], intercept=fix6_table.minimum(),
                      pi_plus=[0.0, 0.0], pi_minus=[0.0, 0.0])
        assert is_cut_valid(cut, fix6_table)[0]

    def test_raised_intercept_invalid_by_one(self):
        base = fixtures.fix3_cut()
        raised = ReluCut(anchor=base.anchor, intercept=base.intercept + 1.0,
                         pi_plus=base.pi_plus, pi_minus=base.pi_minus)
        ok, viol = is_cut_valid(raised, fixtures.fix3_table())
        assert not ok
        assert viol == pytest.approx(1.0)


class TestDualOptimality:
    def test_fix3_cut_optimal(self):
        cut = fixtures.fix3_cut()
        assert is_relu_dual_optimal(cut.pi_plus, cut.pi_minus, cut.anchor,
                                    fixtures.fix3_table())

    def test_symmetric_rho_from_strong_duality(self, fix6_table, fix1_tables):
        # rho = (Q(a) - L) / d is optimal at every anchor of the fixtures
        for table in (fix6_table, fix1_tables[0], fixtures.fix3_table()):
            L = table.minimum()
            for anchor in table.points:
                d = np.abs(table.points - anchor).sum(axis=1)
                d = d[d > 0].min()
                rho = (table.value_at(anchor) - L) / d if d else 1.0
                pi = np.full(table.n, -rho)
                assert is_relu_dual_optimal(pi, pi, anchor, table)

    def test_zero_at_non_minimizer_not_optimal(self, fix6_table):
        zero = np.zeros(2)
        assert not is_relu_dual_optimal(zero, zero, [0, 0], fix6_table)


class TestTightCounts:
    def test_fix3_cut_count(self):
        assert count_tight_affinely_independent(
            fixtures.fix3_cut(), fixtures.fix3_table()) == 5

    def test_constant_cut_unique_minimizer(self, fix6_table):
        cut = ReluCut(anchor=[1.0, 1.0], intercept=2.0,
                      pi_plus=[0.0, 0.0], pi_minus=[0.0, 0.0])
        assert count_tight_affinely_independent(cut, fix6_table) == 1

    def test_augmented_cut_counts(self):
        table = fixtures.fix3_table()
        for cut in fixtures.fix3_augmented_cuts():
            assert count_tight_affinely_independent(cut, table) == 4

    def test_facet_flag(self):
        table = fixtures.fix3_table()
        assert oracle.is_facet_defining(fixtures.fix3_cut(), table)
        assert not oracle.is_facet_defining(fixtures.fix3_augmented_cuts()[0], table)


class TestHullEquality:
    def test_distance_cut_on_interval(self):
        cut = ReluCut(anchor=[1.0], intercept=1.0, pi_plus=[-1.0], pi_minus=[-1.0])
        assert verify_hull_equality(cut, [2.0])

    def test_binary_interval(self):
        cut = ReluCut(anchor=[1.0], intercept=2.0, pi_plus=[-1.0], pi_minus=[-2.0])
        assert verify_hull_equality(cut, [1.0])

    def test_fix3_cut_block(self):
        assert verify_hull_equality(fixtures.fix3_cut(), [2.0, 4.0])

    def test_dimension_guard(self):
        cut = ReluCut(anchor=np.zeros(4), intercept=0.0,
                      pi_plus=np.zeros(4), pi_minus=np.zeros(4))
        with pytest.raises(UnsupportedByOracle):
            verify_hull_equality(cut, [1.0] * 4)


class TestLagrangianDualValue:
    def test_fix1_scan(self, fix1_tables):
        _, t2, _ = fix1_tables
        assert lagrangian_dual_value(t2, [1.0], [2.0]) == pytest.approx(1.0)

    def test_zero_multiplier_gives_minimum(self, fix6_table):
        assert lagrangian_dual_value(fix6_table, [1, 1], [0.0, 0.0]) == \
            pytest.approx(2.0)

    def test_lshaped_multiplier_tight(self, fix6_table):
        # the distance-cut slope (Q-L) chi at anchor (1,0) is tight
        assert lagrangian_dual_value(fix6_table, [1, 0], [4.0, -4.0]) == \
            pytest.approx(4.0)


class TestEnvelopeCorollaries:
    def test_multiplier_optimal_iff_value_reaches_envelope(self, fix1_tables, rng):
        # pi is dual-optimal exactly when its Lagrangian value reaches co(Q)
        t1, t2, _ = fix1_tables
        for table in (t1, t2):
            for anchor in table.points:
                co = convex_envelope_at(table, anchor)
                # no multiplier beats the envelope (weak direction) ...
                for pi in rng.normal(scale=2.0, size=(25, 1)):
                    assert lagrangian_dual_value(table, anchor, pi) <= co + 1e-9
                # ... and an optimal multiplier attains it (strong direction)
                best, co_lp = oracle.lagrangian_optimal_multiplier(table, anchor)
                assert co_lp == pytest.approx(co, abs=1e-7)
                assert lagrangian_dual_value(table, anchor, best) == \
                    pytest.approx(co, abs=1e-7)

    def test_pointwise_max_of_vertex_cuts_equals_envelope(self, fix1_tables, rng):
        for table in fix1_tables[:2]:
            cuts = []
            for anchor in table.points:
                pi, value = oracle.lagrangian_optimal_multiplier(table, anchor)
                cuts.append((value, pi, anchor))
            lo, hi = table.points.min(), table.points.max()
            for x in rng.uniform(lo, hi, size=12):
                envelope = convex_envelope_at(table, [x])
                stack = max(v + p[0] * (x - a[0]) for v, p, a in cuts)
                assert stack == pytest.approx(envelope, abs=1e-7)

    def test_fix4_hull_gap(self):
        inst = fixtures.fix4()
        texp = build_table(inst, None)
        # the combined strongest hinge cuts admit (3/2, 7/8)
        t1, t2 = build_table(inst, 0), build_table(inst, 1)
        best = -np.inf
        for anchor in texp.points:
            up = dn = 0.0
            for tt in (t1, t2):
                u, d = oracle.axis_dual_bounds(tt, anchor)
                up += 0.5 * (u[0] if np.isfinite(u[0]) else 0.0)
                dn += 0.5 * (d[0] if np.isfinite(d[0]) else 0.0)
            value = texp.value_at(anchor) + up * max(1.5 - anchor[0], 0) \
                + dn * max(anchor[0] - 1.5, 0)
            best = max(best, value)
        assert best <= 7.0 / 8.0 + 1e-9
        assert convex_envelope_at(texp, [1.5]) == pytest.approx(1.0)
