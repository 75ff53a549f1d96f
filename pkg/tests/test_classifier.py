import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from froc.classifier import (
    RECOMPOSE_TOL,
    ContainmentError,
    DegenerateTriangleError,
    Mixture,
    RandomizedClassifier,
    VertexClassifier,
    VertexKind,
    construct_classifier,
    convex_mix,
    predict,
    predict_batch,
    uniform_draws,
)
from froc.roc_core import RocCurve
from froc.transport import ShiftDecision, ShiftKind, TransportPlan, fair_roc

from instances import dominating_pair


def _plan(targets, kinds, base_down, eps=0.1):
    decisions = [ShiftDecision(i, k, t, t) for i, (t, k) in enumerate(zip(targets, kinds))]
    return TransportPlan.from_decisions(eps, decisions, base_down)


# ---------------------------------------------------------------------------
# convex_mix
# ---------------------------------------------------------------------------


class TestConvexMix:
    A, B, C = (0.0, 0.0), (1.0, 1.0), (0.2, 0.8)

    def test_vertex(self):
        assert convex_mix(self.C, self.A, self.B, self.C) == pytest.approx((0, 0, 1))

    def test_edge_midpoint(self):
        assert convex_mix((0.5, 0.5), self.A, self.B, self.C) == pytest.approx((0.5, 0.5, 0))

    def test_hand_solved(self):
        # 0 * (0,0) + 0.5 * (1,1) + 0.5 * (0.2,0.8) = (0.6, 0.9)
        assert convex_mix((0.6, 0.9), self.A, self.B, self.C) == pytest.approx((0, 0.5, 0.5))

    def test_collinear(self):
        with pytest.raises(DegenerateTriangleError):
            convex_mix((0.5, 0.5), (0, 0), (1, 1), (0.3, 0.3))

    def test_outside(self):
        with pytest.raises(ContainmentError, match="p_c"):
            convex_mix((0.9, 0.1), self.A, self.B, self.C)

    def test_printed_p_b_has_the_wrong_sign(self):
        # The closed form p_b = (c1 a2 - c2 a1) / (a1 b2 - a2 b1), coordinates taken
        # relative to q_c with index 1 = tpr and 2 = fpr, is the negative of Cramer's
        # solution. Only the solved weights recompose the target.
        rng = np.random.default_rng(21)
        for _ in range(20):
            tri = rng.random((3, 2))
            w = rng.dirichlet(np.ones(3))
            target = w @ tri
            p = convex_mix(target, *tri)
            assert np.allclose(np.array(p) @ tri, target, atol=1e-12)
            a1, a2 = tri[0, 1] - tri[2, 1], tri[0, 0] - tri[2, 0]
            b1, b2 = tri[1, 1] - tri[2, 1], tri[1, 0] - tri[2, 0]
            c1, c2 = target[1] - tri[2, 1], target[0] - tri[2, 0]
            printed = (c1 * a2 - c2 * a1) / (a1 * b2 - a2 * b1)
            assert printed == pytest.approx(-p[1])
            wrong = np.array([p[0], printed, 1 - p[0] - printed]) @ tri
            assert not np.allclose(wrong, target, atol=1e-9)

    @settings(max_examples=300)
    @given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.lists(st.floats(0.01, 1), min_size=3, max_size=3))
    def test_recomposition(self, coords, weights):
        tri = np.array(coords).reshape(3, 2)
        a, b, c = tri
        det = (a[1] - c[1]) * (b[0] - c[0]) - (a[0] - c[0]) * (b[1] - c[1])
        if abs(det) < 1e-6:
            return
        w = np.array(weights) / sum(weights)
        p = convex_mix(w @ tri, a, b, c)
        assert min(p) >= 0.0
        assert sum(p) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(np.array(p) @ tri, w @ tri, atol=1e-9)


# ---------------------------------------------------------------------------
# construct_classifier
# ---------------------------------------------------------------------------


class TestConstruct:
    def test_all_no_shift_is_trivial(self):
        c = RocCurve([0.1, 0.4], [0.5, 0.8], [1.0, 0.5])
        rc = construct_classifier(fair_roc(c, c, 0.1), c, c, up_group=1)
        for group in (0, 1):
            for i, mix in enumerate(rc.mixtures[group]):
                assert mix.probs == (1.0, 0.0, 0.0)
                assert mix.vertices[0] == VertexClassifier.threshold(i, group, c)

    def test_tent_under_base_vertex(self):
        base = RocCurve([0.2], [0.8])
        plan = _plan([(0.6, 0.9)], [ShiftKind.UP_SHIFT], RocCurve([0.6], [0.85]))
        rc = construct_classifier(plan, base, plan.fair_down, up_group=0)
        mix = rc.mixtures[0][0]
        kinds = [v.kind for v in mix.vertices]
        assert kinds == [VertexKind.ALWAYS_REJECT, VertexKind.ALWAYS_ACCEPT, VertexKind.THRESHOLD]
        assert mix.probs == pytest.approx((0.0, 0.5, 0.5))

    def test_cut_target_on_edge_uses_two_vertices(self):
        base = RocCurve([0.3, 0.7], [0.6, 0.6])
        plan = _plan([(0.3, 0.6), (0.6, 0.6)], [ShiftKind.NO_SHIFT, ShiftKind.CUT_SHIFT_RIGHT], RocCurve([0.1, 0.5], [0.1, 0.5]))
        rc = construct_classifier(plan, base, plan.fair_down, up_group=1)
        mix = rc.mixtures[1][1]
        assert mix.probs[2] == 0.0
        assert mix.probs[:2] == pytest.approx((0.25, 0.75))
        assert mix.point == pytest.approx((0.6, 0.6))

    def test_down_group_keeps_base(self):
        rng = np.random.default_rng(0)
        up, down = dominating_pair(rng, 12, proper=True)
        rc = construct_classifier(fair_roc(up, down, 0.05), up, down, up_group=0)
        for i, mix in enumerate(rc.mixtures[1]):
            assert mix == Mixture.trivial(VertexClassifier.threshold(i, 1, down))

    def test_bad_up_group(self):
        c = RocCurve([0.5], [0.5])
        with pytest.raises(ValueError):
            construct_classifier(fair_roc(c, c, 0.1), c, c, up_group=2)

    def test_recomposes_on_random_plans(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            up, down = dominating_pair(rng, int(rng.integers(1, 60)), proper=True)
            plan = fair_roc(up, down, float(rng.uniform(0.01, 0.3)))
            rc = construct_classifier(plan, up, down, up_group=1)
            got = np.array([m.point for m in rc.mixtures[1]])
            assert np.max(np.abs(got - plan.fair_up.points)) <= RECOMPOSE_TOL
            assert all(min(m.probs) >= 0 and abs(sum(m.probs) - 1) <= 1e-12 for m in rc.mixtures[1])

    def test_target_below_the_lower_hull(self):
        # (0.6, 0.4) is under the PLA through (0.6, 0.55) but no mix of reject,
        # accept and thresholding reaches it
        base = RocCurve([0.6], [0.55])
        plan = _plan([(0.6, 0.4)], [ShiftKind.UP_SHIFT], RocCurve([0.6], [0.3]))
        with pytest.raises(ContainmentError):
            construct_classifier(plan, base, plan.fair_down, up_group=0)


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def _single(mix: Mixture, thresholds=(0.5,)) -> RandomizedClassifier:
    other = Mixture.trivial(VertexClassifier.reject())
    return RandomizedClassifier(tuple(thresholds), (0.0, 1.0), 0, ((mix,), (other,)))


class TestPredict:
    BASE = RocCurve([0.3], [0.7], [0.5])

    def test_trivial_threshold_matches_base(self):
        rc = _single(Mixture.trivial(VertexClassifier.threshold(0, 0, self.BASE)))
        scores = np.linspace(0, 1, 101)
        out = predict_batch(rc, scores, np.zeros(101, dtype=int), 0, seed=3)
        assert out.tolist() == (scores >= 0.5).astype(int).tolist()

    def test_always_accept(self):
        mix = Mixture((VertexClassifier.reject(), VertexClassifier.accept(), VertexClassifier.reject()), (0, 1, 0))
        rc = _single(mix)
        assert all(predict(rc, s, 0, 0, rng_seed=7, sample_id=j) == 1 for j, s in enumerate(np.linspace(0, 1, 50)))

    def test_half_half_frequencies(self):
        vertex = VertexClassifier.threshold(0, 0, self.BASE)
        mix = Mixture((VertexClassifier.reject(), VertexClassifier.accept(), vertex), (0.0, 0.5, 0.5))
        rc = _single(mix)
        n = 100_000
        # scores below the threshold: accept happens only through AlwaysAccept
        out = predict_batch(rc, np.full(n, 0.2), np.zeros(n, dtype=int), 0, seed=11)
        assert abs(out.mean() - 0.5) <= 0.01

    def test_deterministic(self):
        vertex = VertexClassifier.threshold(0, 0, self.BASE)
        rc = _single(Mixture((VertexClassifier.reject(), VertexClassifier.accept(), vertex), (0.3, 0.3, 0.4)))
        scores = np.random.default_rng(0).random(1000)
        g = np.zeros(1000, dtype=int)
        a = predict_batch(rc, scores, g, 0, seed=5)
        assert np.array_equal(a, predict_batch(rc, scores, g, 0, seed=5))
        assert not np.array_equal(a, predict_batch(rc, scores, g, 0, seed=6))
        assert predict(rc, scores[17], 0, 0, rng_seed=5, sample_id=17) == a[17]

    def test_raw_scores_are_normalized(self):
        mix = Mixture.trivial(VertexClassifier.threshold(0, 0, self.BASE))
        rc = RandomizedClassifier((0.5,), (-3.0, 7.0), 0, ((mix,), (mix,)))
        # 2.0 maps to 0.5, exactly on the threshold
        assert predict(rc, 2.0, 0, 0, rng_seed=0) == 1
        assert predict(rc, 1.9, 0, 0, rng_seed=0) == 0

    def test_index_range(self):
        rc = _single(Mixture.trivial(VertexClassifier.reject()))
        with pytest.raises(IndexError):
            predict(rc, 0.5, 0, 1, rng_seed=0)


def test_uniform_draws_are_uniform():
    u = uniform_draws(42, np.zeros(200_000, dtype=int), 3, np.arange(200_000))
    assert 0.0 <= u.min() and u.max() < 1.0
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    assert np.all(np.abs(hist / 20_000 - 1) < 0.03)
