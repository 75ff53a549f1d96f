"""Randomized classifiers that realize a transported ROC curve.

Each fair point is written as a convex combination of three ROC-space
vertices: the always-reject classifier ``(0, 0)``, the always-accept
classifier ``(1, 1)`` and the base thresholding classifiers ``Q_j``. A draw
picks one vertex with the mixture probabilities and applies it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from froc.roc_core import RocCurve, RocPoint, min_max_normalize
from froc.transport import ShiftKind, TransportPlan

RECOMPOSE_TOL = 1e-9
CONTAIN_TOL = 1e-9
DEGENERATE_TOL = 1e-12


class ClassifierError(ValueError):
    """A fair point could not be expressed as a mixture."""


class DegenerateTriangleError(ClassifierError):
    pass


class ContainmentError(ClassifierError):
    pass


class VertexKind(enum.Enum):
    ALWAYS_REJECT = "AlwaysReject"
    ALWAYS_ACCEPT = "AlwaysAccept"
    THRESHOLD = "Threshold"


@dataclass(frozen=True)
class VertexClassifier:
    """One of the three classifier types a mixture draws from.

    ``index`` and ``group`` are set only for ``THRESHOLD`` vertices; ``point``
    is the vertex's ``(fpr, tpr)`` on the base curve.
    """

    kind: VertexKind
    point: RocPoint
    index: int | None = None
    group: int | None = None

    @classmethod
    def reject(cls) -> VertexClassifier:
        return cls(VertexKind.ALWAYS_REJECT, RocPoint(0.0, 0.0))

    @classmethod
    def accept(cls) -> VertexClassifier:
        return cls(VertexKind.ALWAYS_ACCEPT, RocPoint(1.0, 1.0))

    @classmethod
    def threshold(cls, index: int, group: int, curve: RocCurve) -> VertexClassifier:
        return cls(VertexKind.THRESHOLD, curve[index], int(index), int(group))


@dataclass(frozen=True)
class Mixture:
    vertices: tuple[VertexClassifier, VertexClassifier, VertexClassifier]
    probs: tuple[float, float, float]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != 3 or len(self.vertices) != 3:
            raise ValueError("a mixture has exactly three vertices and probabilities")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ValueError(f"mixture probabilities must lie in [0, 1], got {probs}")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"mixture probabilities must sum to 1, got {sum(probs)!r}")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "vertices", tuple(self.vertices))

    @property
    def point(self) -> RocPoint:
        """The ROC point realized by the mixture."""
        x = sum(p * v.point.fpr for p, v in zip(self.probs, self.vertices))
        y = sum(p * v.point.tpr for p, v in zip(self.probs, self.vertices))
        return RocPoint(float(x), float(y))

    @classmethod
    def trivial(cls, vertex: VertexClassifier) -> Mixture:
        return cls((vertex, VertexClassifier.reject(), VertexClassifier.accept()), (1.0, 0.0, 0.0))


def convex_mix(target: ArrayLike, qa: ArrayLike, qb: ArrayLike, qc: ArrayLike) -> tuple[float, float, float]:
    """Barycentric weights of ``target`` in triangle ``(qa, qb, qc)``.

    Solves ``p_a (qa - qc) + p_b (qb - qc) = target - qc`` by Cramer's rule and
    sets ``p_c = 1 - p_a - p_b``. Weights within ``1e-9`` of ``[0, 1]`` are
    clamped and renormalized.

    Raises
    ------
    DegenerateTriangleError
        If the three vertices are collinear.
    ContainmentError
        If the target lies outside the triangle.
    """
    t, a, b, c = (np.asarray(x, dtype=np.float64) for x in (target, qa, qb, qc))
    a1, a2 = a[1] - c[1], a[0] - c[0]
    b1, b2 = b[1] - c[1], b[0] - c[0]
    c1, c2 = t[1] - c[1], t[0] - c[0]
    det = a1 * b2 - a2 * b1
    if abs(det) <= DEGENERATE_TOL:
        raise DegenerateTriangleError(f"vertices {tuple(a)}, {tuple(b)}, {tuple(c)} are collinear")
    p_a = (c1 * b2 - c2 * b1) / det
    p_b = (a1 * c2 - a2 * c1) / det
    p_c = 1.0 - p_a - p_b
    probs = [float(p_a), float(p_b), float(p_c)]
    for name, p in zip(("p_a", "p_b", "p_c"), probs):
        if p < -CONTAIN_TOL:
            raise ContainmentError(f"target {tuple(t)} lies outside the triangle ({name} = {p:.3g})")
    clipped = np.clip(probs, 0.0, 1.0)
    clipped /= clipped.sum()
    # absorb the last ulp of renormalization into the largest weight
    clipped[int(np.argmax(clipped))] += 1.0 - clipped.sum()
    return float(clipped[0]), float(clipped[1]), float(clipped[2])


@dataclass(frozen=True, eq=True)
class RandomizedClassifier:
    """Per-group, per-index mixtures plus what is needed to score raw inputs.

    ``thresholds[i]`` is the query threshold of curve index ``i``;
    ``normalization`` maps raw scores onto ``[0, 1]``.
    """

    thresholds: tuple[float, ...]
    normalization: tuple[float, float]
    up_group: int
    mixtures: tuple[tuple[Mixture, ...], tuple[Mixture, ...]]

    def __post_init__(self) -> None:
        k = len(self.thresholds)
        if any(len(m) != k for m in self.mixtures) or len(self.mixtures) != 2:
            raise ValueError("both groups need one mixture per threshold index")

    @property
    def k(self) -> int:
        return len(self.thresholds)

    def fair_point(self, group: int, index: int) -> RocPoint:
        return self.mixtures[group][index].point


def _thresholds_of(curve: RocCurve) -> tuple[float, ...]:
    if curve.thresholds is not None:
        return tuple(float(t) for t in curve.thresholds)
    # decreasing-threshold orientation of the query grid
    k = len(curve)
    return tuple(float(t) for t in np.arange(k, 0, -1) / k)


def _vertex_at(j: int, group: int, curve: RocCurve) -> VertexClassifier:
    """Vertex ``j`` of ``curve.vertices`` (0 and k+1 are the anchors)."""
    if j == 0:
        return VertexClassifier.reject()
    if j == len(curve) + 1:
        return VertexClassifier.accept()
    return VertexClassifier.threshold(j - 1, group, curve)


def _segment_mixture(target: NDArray[np.float64], base: RocCurve, group: int) -> Mixture | None:
    """Two-vertex mixture along the PLA segment that carries ``target``."""
    verts = base.vertices
    u = verts[:, 0] + verts[:, 1]
    guess = int(np.clip(np.searchsorted(u, target[0] + target[1], side="right") - 1, 0, len(verts) - 2))
    order = [guess, guess - 1, guess + 1] + list(range(len(verts) - 1))
    for j in order:
        if not 0 <= j < len(verts) - 1:
            continue
        a, b = verts[j], verts[j + 1]
        d = b - a
        dd = float(d @ d)
        if dd == 0.0:
            continue
        t = float(np.clip((target - a) @ d / dd, 0.0, 1.0))
        if np.max(np.abs(a + t * d - target)) > RECOMPOSE_TOL:
            continue
        return Mixture(
            (_vertex_at(j, group, base), _vertex_at(j + 1, group, base), VertexClassifier.reject()),
            (1.0 - t, t, 0.0),
        )
    return None


def _triangle_mixture(target: NDArray[np.float64], base: RocCurve, group: int) -> Mixture:
    """Mixture over the first containing triangle among the candidate families.

    Tents ``{(0,0), (1,1), Q_j}`` are tried in increasing ``j``; fans
    ``{(0,0), V_j, V_{j+1}}`` and ``{(1,1), V_j, V_{j+1}}`` over consecutive PLA
    vertices cover targets the tents miss.
    """
    pts = base.points
    tx, ty = float(target[0]), float(target[1])
    # tent barycentrics in closed form: target = p_b (1,1) + p_c Q_j
    dq = pts[:, 1] - pts[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        pc = (ty - tx) / dq
    pb = tx - pc * pts[:, 0]
    pa = 1.0 - pb - pc
    ok = (np.abs(dq) > DEGENERATE_TOL) & (pa >= -CONTAIN_TOL) & (pb >= -CONTAIN_TOL) & (pc >= -CONTAIN_TOL)
    reject, accept = VertexClassifier.reject(), VertexClassifier.accept()
    for j in np.flatnonzero(ok):
        vertex = VertexClassifier.threshold(int(j), group, base)
        try:
            probs = convex_mix(target, reject.point, accept.point, vertex.point)
        except ClassifierError:
            continue
        return Mixture((reject, accept, vertex), probs)

    verts = base.vertices
    for apex in (0, len(verts) - 1):
        for j in range(len(verts) - 1):
            if apex in (j, j + 1):
                continue
            tri = (_vertex_at(apex, group, base), _vertex_at(j, group, base), _vertex_at(j + 1, group, base))
            try:
                probs = convex_mix(target, *(v.point for v in tri))
            except ClassifierError:
                continue
            return Mixture(tri, probs)
    raise ContainmentError(f"no vertex triangle contains the target {(tx, ty)}")


def construct_classifier(
    plan: TransportPlan, base_up: RocCurve, base_down: RocCurve, up_group: int
) -> RandomizedClassifier:
    """Build mixtures realizing ``plan.fair_up`` for the up group.

    The down group keeps its base classifier at every index.

    Raises
    ------
    ContainmentError
        A fair point lies outside the convex hull of ``(0,0)``, ``(1,1)`` and
        the base points. This happens only when the base curve dips below the
        diagonal, since thresholding cannot realize points under its lower hull.
    """
    if up_group not in (0, 1):
        raise ValueError(f"up_group must be 0 or 1, got {up_group}")
    k = len(plan)
    if len(base_up) != k or len(base_down) != k:
        raise ValueError("base curves must have the plan's length")
    down_group = 1 - up_group
    down = tuple(Mixture.trivial(VertexClassifier.threshold(i, down_group, base_down)) for i in range(k))

    fair = plan.fair_up.points
    up: list[Mixture] = []
    for i, code in enumerate(plan.kind_codes):
        kind = plan.kind(i)
        target = fair[i]
        if kind is ShiftKind.NO_SHIFT and np.array_equal(target, base_up.points[i]):
            up.append(Mixture.trivial(VertexClassifier.threshold(i, up_group, base_up)))
            continue
        mix = _segment_mixture(target, base_up, up_group) if kind.is_cut else None
        if mix is None:
            mix = _triangle_mixture(target, base_up, up_group)
        if np.max(np.abs(np.subtract(mix.point, target))) > RECOMPOSE_TOL:
            raise ClassifierError(f"mixture at index {i} does not recompose to {tuple(target)}")
        up.append(mix)

    mixtures = (tuple(up), down) if up_group == 0 else (down, tuple(up))
    return RandomizedClassifier(_thresholds_of(base_up), (0.0, 1.0), up_group, mixtures)


def with_normalization(rc: RandomizedClassifier, normalization: tuple[float, float]) -> RandomizedClassifier:
    return RandomizedClassifier(rc.thresholds, (float(normalization[0]), float(normalization[1])), rc.up_group, rc.mixtures)


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _splitmix(x: NDArray[np.uint64]) -> NDArray[np.uint64]:
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def uniform_draws(seed: int, group: ArrayLike, index: int, sample_ids: ArrayLike) -> NDArray[np.float64]:
    """Counter-based uniforms in ``[0, 1)``, one per ``(seed, group, index, sample_id)``."""
    sid = np.asarray(sample_ids).astype(np.uint64)
    g = np.broadcast_to(np.asarray(group).astype(np.uint64), sid.shape)
    with np.errstate(over="ignore"):
        x = _splitmix(np.full(sid.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
        x = _splitmix(x ^ g)
        x = _splitmix(x ^ np.uint64(index))
        x = _splitmix(x ^ sid)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _apply_vertex(v: VertexClassifier, scores: NDArray[np.float64], thresholds: tuple[float, ...]) -> NDArray[np.int64]:
    if v.kind is VertexKind.ALWAYS_REJECT:
        return np.zeros(scores.shape, dtype=np.int64)
    if v.kind is VertexKind.ALWAYS_ACCEPT:
        return np.ones(scores.shape, dtype=np.int64)
    return (scores >= thresholds[v.index]).astype(np.int64)


def predict_batch(
    rc: RandomizedClassifier,
    scores: ArrayLike,
    groups: ArrayLike,
    index: int,
    seed: int,
    sample_ids: ArrayLike | None = None,
    *,
    normalized: bool = False,
) -> NDArray[np.int64]:
    """Decisions at threshold ``index`` for many samples.

    ``sample_ids`` default to positions ``0..n-1``; identical
    ``(seed, group, index, sample_id)`` always yield the same draw. Set
    ``normalized`` when ``scores`` are already on the ``[0, 1]`` scale.
    """
    if not 0 <= index < rc.k:
        raise IndexError(f"threshold index {index} outside 0..{rc.k - 1}")
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    g = np.asarray(groups).astype(np.int64).reshape(-1)
    if g.shape != s.shape:
        g = np.broadcast_to(g, s.shape)
    if not normalized:
        s = min_max_normalize(s, *rc.normalization)
    ids = np.arange(s.size) if sample_ids is None else np.asarray(sample_ids).reshape(-1)
    u = uniform_draws(seed, g, index, ids)
    out = np.zeros(s.shape, dtype=np.int64)
    for group in (0, 1):
        sel = g == group
        if not sel.any():
            continue
        mix = rc.mixtures[group][index]
        p0, p1, _ = mix.probs
        ug = u[sel]
        choice = np.where(ug < p0, 0, np.where(ug < p0 + p1, 1, 2))
        sg = s[sel]
        res = np.zeros(sg.shape, dtype=np.int64)
        for c, v in enumerate(mix.vertices):
            pick = choice == c
            if pick.any():
                res[pick] = _apply_vertex(v, sg[pick], rc.thresholds)
        out[sel] = res
    return out


def predict(
    rc: RandomizedClassifier, score: float, group: int, index: int, rng_seed: int, sample_id: int = 0
) -> int:
    """Single decision for a raw score; see :func:`predict_batch`."""
    return int(predict_batch(rc, [score], [group], index, rng_seed, [sample_id])[0])
