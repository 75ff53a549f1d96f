import numpy as np
import pytest

from froc.geometry import l1_distance
from froc.oracle import OracleInfeasibleError, candidate_sets, dp_optimal, optimality_report
from froc.roc_core import RocCurve, auc

from instances import assumption_instance, dominating_concave_pair, separated_instance


def _area(points):
    v = np.vstack([[0, 0], points, [1, 1]])
    return float(np.sum(np.diff(v[:, 0]) * (v[1:, 1] + v[:-1, 1])) / 2)


class TestExamples:
    def test_budget_covers_the_gap(self):
        rng = np.random.default_rng(0)
        up, down = dominating_concave_pair(rng, 6)
        eps = float(np.max(l1_distance(up.points, down.points))) + 1e-6
        res = dp_optimal(up, down, eps, delta=0.01)
        assert res.best_auc == pytest.approx(auc(up), abs=1e-12)
        assert np.allclose(res.best_points, up.points)

    def test_single_index_matches_exhaustive_scan(self):
        up, down = RocCurve([0.3], [0.95]), RocCurve([0.5], [0.5])
        eps, delta = 0.15, 0.005
        cand = candidate_sets(up, down, eps, delta)[0]
        best = max(_area(c[None]) for c in cand)
        res = dp_optimal(up, down, eps, delta)
        assert res.best_auc == pytest.approx(best)
        assert abs(l1_distance(res.best_points[0], (0.5, 0.5)) - eps) <= 1e-12

    def test_infeasible_index(self):
        # the ball around (0.5, 0.95) sits entirely above ROC_up at index 1
        up = RocCurve([0.2, 0.5], [0.3, 0.5])
        down = RocCurve([0.2, 0.5], [0.3, 0.95])
        with pytest.raises(OracleInfeasibleError) as info:
            dp_optimal(up, down, 0.05, delta=0.01)
        assert info.value.index == 1

    def test_limits(self):
        c = RocCurve(np.linspace(0.01, 0.99, 30), np.linspace(0.01, 0.99, 30))
        with pytest.raises(ValueError, match="k <= 25"):
            dp_optimal(c, c, 0.1)
        with pytest.raises(ValueError, match="delta"):
            dp_optimal(RocCurve([0.5], [0.5]), RocCurve([0.5], [0.5]), 0.1, delta=1e-5)


class TestProperties:
    def test_boundary_optimum_with_interior_candidates(self):
        rng = np.random.default_rng(1)
        delta = 0.01
        for _ in range(10):
            up, down, eps = separated_instance(rng)
            res = dp_optimal(up, down, eps, delta=delta, boundary_only=False)
            d = np.asarray(l1_distance(res.best_points, down.points))
            assert np.all(np.abs(d - eps) <= delta)

    def test_monotone_in_eps(self):
        rng = np.random.default_rng(2)
        delta = 0.005
        for _ in range(10):
            up, down = dominating_concave_pair(rng, int(rng.integers(2, 8)))
            e1, e2 = np.sort(rng.uniform(0.02, 0.2, 2))
            a1 = dp_optimal(up, down, e1, delta).best_auc
            a2 = dp_optimal(up, down, e2, delta).best_auc
            # discretized spheres are not nested; allow the discretization slack
            assert a2 >= a1 - 2 * delta

    def test_halving_delta(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            up, down = dominating_concave_pair(rng, int(rng.integers(2, 8)))
            eps, delta = 0.08, 0.01
            a = dp_optimal(up, down, eps, delta).best_auc
            b = dp_optimal(up, down, eps, delta / 2).best_auc
            assert abs(a - b) <= len(up) * delta

    def test_chosen_points_are_admissible(self):
        rng = np.random.default_rng(4)
        up, down = dominating_concave_pair(rng, 8)
        res = dp_optimal(up, down, 0.07, 0.01)
        assert np.all(np.asarray(l1_distance(res.best_points, down.points)) <= 0.07 + 1e-12)
        assert np.all(np.diff(res.best_points[:, 0]) >= -1e-12)
        assert res.best_auc == pytest.approx(_area(res.best_points))


class TestReport:
    def test_identical_curves(self):
        c = RocCurve([0.2, 0.5], [0.6, 0.8])
        rep = optimality_report(c, c, 0.05, delta=0.01)
        assert rep.gap == pytest.approx(0.0, abs=1e-12)
        assert rep.assumption_42_holds

    def test_assumption_instance(self):
        rng = np.random.default_rng(5)
        up, down, eps, holds = assumption_instance(rng, k_max=6)
        rep = optimality_report(up, down, eps, delta=0.005)
        assert rep.assumption_42_holds == holds
        assert rep.oracle_auc >= rep.froc_auc - 2 * 0.005

    def test_violator_is_flagged(self):
        # up fpr 0.6 at index 0 lies beyond the next down fpr 0.5
        up = RocCurve([0.6, 0.7], [0.9, 0.95])
        down = RocCurve([0.1, 0.5], [0.1, 0.55])
        rep = optimality_report(up, down, 0.05, delta=0.01)
        assert not rep.assumption_42_holds
        assert rep.spacing_violations == (0,)
        assert set(rep.as_dict()) >= {"froc_auc", "oracle_auc", "gap", "assumption_42_holds"}
