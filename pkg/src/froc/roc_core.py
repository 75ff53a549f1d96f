"""Group-conditional ROC curves under the k-threshold query model.

A :class:`RocCurve` holds the query outputs of one protected group ordered by
nondecreasing FPR (equivalently, by decreasing threshold). The anchors
``(0, 0)`` and ``(1, 1)`` are implicit; :attr:`RocCurve.vertices` returns the
full piecewise-linear approximation including them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from froc.tolerances import PREDICATE_TOL


class RocError(ValueError):
    """Raised for invalid ROC inputs (missing groups, non-monotone curves)."""


class RocPoint(NamedTuple):
    """An operating point ``(fpr, tpr)``.

    Bounds are not enforced here because norm-ball vertices are allowed to
    leave the unit square before clamping; use :func:`is_valid_point`.
    """

    fpr: float
    tpr: float


def is_valid_point(p: RocPoint) -> bool:
    return 0.0 <= p[0] <= 1.0 and 0.0 <= p[1] <= 1.0


def _frozen(a: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupedScores:
    """Scored dataset of ``(score, group, label)`` rows.

    ``normalization`` records the ``(min, max)`` of the raw scores that were
    mapped onto ``[0, 1]``; it is ``(0.0, 1.0)`` for data that was already
    normalized.
    """

    score: NDArray[np.float64]
    group: NDArray[np.int64]
    label: NDArray[np.int64]
    normalization: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        score = _frozen(self.score)
        group = np.array(self.group, dtype=np.int64)
        label = np.array(self.label, dtype=np.int64)
        if score.ndim != 1 or score.shape != group.shape or score.shape != label.shape:
            raise ValueError("score, group and label must be 1-D arrays of equal length")
        if score.size == 0:
            raise ValueError("GroupedScores must be nonempty")
        if not np.all(np.isfinite(score)):
            raise ValueError("scores must be finite")
        for name, arr in (("group", group), ("label", label)):
            bad = ~np.isin(arr, (0, 1))
            if bad.any():
                raise ValueError(f"{name} must be 0/1; first bad row {int(np.argmax(bad))}")
        group.setflags(write=False)
        label.setflags(write=False)
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "label", label)
        lo, hi = self.normalization
        object.__setattr__(self, "normalization", (float(lo), float(hi)))

    def __len__(self) -> int:
        return int(self.score.size)

    def cell(self, group: int, label: int) -> NDArray[np.float64]:
        """Scores of one ``(group, label)`` cell."""
        return self.score[(self.group == group) & (self.label == label)]


@dataclass(frozen=True)
class QueryGrid:
    """Equidistant thresholds ``t_i = i / k`` for ``i = 1..k``."""

    k: int

    def __post_init__(self) -> None:
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")

    @property
    def thresholds(self) -> NDArray[np.float64]:
        """Ascending thresholds ``1/k, 2/k, ..., 1``."""
        return np.arange(1, self.k + 1, dtype=np.float64) / self.k


@dataclass(frozen=True)
class SlopeBounds:
    """Upper bounds on ``|dTPR/dt|`` (``u_T``) and ``|dFPR/dt|`` (``u_F``)."""

    u_T: float
    u_F: float
    estimated: bool = False

    def __post_init__(self) -> None:
        if not (self.u_T >= 0.0 and self.u_F >= 0.0):
            raise ValueError(f"slope bounds must be nonnegative, got {self.u_T}, {self.u_F}")


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Query points of one group, ordered by nondecreasing FPR.

    ``thresholds`` (optional) are aligned with the points, so they are
    nonincreasing along the sequence.
    """

    fpr: NDArray[np.float64]
    tpr: NDArray[np.float64]
    thresholds: NDArray[np.float64] | None = field(default=None)

    def __post_init__(self) -> None:
        fpr = _frozen(self.fpr).reshape(-1)
        tpr = _frozen(self.tpr).reshape(-1)
        if fpr.shape != tpr.shape:
            raise RocError(f"fpr and tpr lengths differ: {fpr.size} vs {tpr.size}")
        if not (np.all(np.isfinite(fpr)) and np.all(np.isfinite(tpr))):
            raise RocError("ROC coordinates must be finite")
        lo = -PREDICATE_TOL
        hi = 1.0 + PREDICATE_TOL
        if fpr.size and (fpr.min() < lo or fpr.max() > hi or tpr.min() < lo or tpr.max() > hi):
            raise RocError("ROC coordinates must lie in [0, 1]")
        fpr = _frozen(np.clip(fpr, 0.0, 1.0))
        tpr = _frozen(np.clip(tpr, 0.0, 1.0))
        object.__setattr__(self, "fpr", fpr)
        object.__setattr__(self, "tpr", tpr)
        if self.thresholds is not None:
            th = _frozen(self.thresholds).reshape(-1)
            if th.shape != fpr.shape:
                raise RocError("thresholds must align with points")
            object.__setattr__(self, "thresholds", th)

    @classmethod
    def from_points(cls, points: ArrayLike, thresholds: ArrayLike | None = None) -> RocCurve:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], thresholds)

    def __len__(self) -> int:
        return int(self.fpr.size)

    def __getitem__(self, i: int) -> RocPoint:
        return RocPoint(float(self.fpr[i]), float(self.tpr[i]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RocCurve):
            return NotImplemented
        if not (np.array_equal(self.fpr, other.fpr) and np.array_equal(self.tpr, other.tpr)):
            return False
        if self.thresholds is None or other.thresholds is None:
            return self.thresholds is None and other.thresholds is None
        return bool(np.array_equal(self.thresholds, other.thresholds))

    __hash__ = None  # type: ignore[assignment]

    @property
    def points(self) -> NDArray[np.float64]:
        """``(k, 2)`` array of ``(fpr, tpr)`` rows."""
        return np.column_stack([self.fpr, self.tpr])

    @property
    def vertices(self) -> NDArray[np.float64]:
        """Points with the ``(0, 0)`` and ``(1, 1)`` anchors attached."""
        return np.vstack([[0.0, 0.0], self.points, [1.0, 1.0]])

    def monotonicity_violations(self) -> list[int]:
        """Indices ``i`` (into the points) where fpr or tpr drops below its predecessor.

        Anchors are included in the comparison, so index 0 is reported when the
        first point is compared against ``(0, 0)`` (never, for valid points).
        """
        v = self.vertices
        bad = (np.diff(v[:, 0]) < -PREDICATE_TOL) | (np.diff(v[:, 1]) < -PREDICATE_TOL)
        # diff index j compares vertex j+1 with vertex j; vertex j+1 is point j.
        return [int(j) for j in np.flatnonzero(bad) if j < len(self)]

    def is_monotone(self) -> bool:
        return not self.monotonicity_violations()


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def min_max_normalize(raw: ArrayLike, lo: float, hi: float) -> NDArray[np.float64]:
    """Map ``[lo, hi]`` onto ``[0, 1]``; a degenerate range maps everything to 0.5."""
    x = np.asarray(raw, dtype=np.float64)
    if hi == lo:
        return np.full_like(x, 0.5)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)



def empirical_roc(data: GroupedScores, group: int, grid: QueryGrid) -> RocCurve:
    """Query the ROC of ``group`` at every threshold of ``grid``.

    The point at threshold ``t`` is ``(fraction of negatives with score >= t,
    fraction of positives with score >= t)``. Points are returned in order of
    decreasing threshold, so FPR is nondecreasing along the curve.
    """
    in_group = data.group == group
    if not in_group.any():
        raise RocError(f"group {group} is absent from the data")
    pos = np.sort(data.score[in_group & (data.label == 1)])
    neg = np.sort(data.score[in_group & (data.label == 0)])
    if pos.size == 0:
        raise RocError(f"group {group} has no positive labels")
    if neg.size == 0:
        raise RocError(f"group {group} has no negative labels")

    thresholds = grid.thresholds[::-1]
    tpr = (pos.size - np.searchsorted(pos, thresholds, side="left")) / pos.size
    fpr = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    return RocCurve(fpr, tpr, thresholds)


def pla(curve: RocCurve) -> RocCurve:
    """Canonical piecewise-linear approximation of ``curve``.

    Drops consecutive duplicate points (and points sitting on an anchor) so
    that no zero-length segment survives. Thresholds of the first point of each
    duplicate run are kept.

    Raises
    ------
    RocError
        If the curve is not monotone; the message lists the offending indices.
    """
    bad = curve.monotonicity_violations()
    if bad:
        raise RocError(f"ROC curve is not monotone at point indices {bad}")
    v = curve.vertices
    keep = np.ones(len(curve), dtype=bool)
    pts = v[1:-1]
    prev = v[:-2]
    keep &= np.any(pts != prev, axis=1)
    # runs of equal points keep their first element only
    keep &= np.any(pts != 1.0, axis=1)
    th = None if curve.thresholds is None else curve.thresholds[keep]
    return RocCurve(curve.fpr[keep], curve.tpr[keep], th)


def _segment_form(curve: RocCurve) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    v = curve.vertices
    return v[:, 0], v[:, 1]


def interpolate(curve: RocCurve, fpr: ArrayLike) -> NDArray[np.float64] | float:
    """TPR of the piecewise-linear curve at ``fpr`` (clamped into ``[0, 1]``).

    On a vertical run of vertices sharing one FPR the largest TPR is returned.
    Vectorized over ``fpr``.
    """
    xs, ys = _segment_form(curve)
    x = np.clip(np.asarray(fpr, dtype=np.float64), 0.0, 1.0)
    j = np.searchsorted(xs, x, side="right") - 1
    j = np.clip(j, 0, xs.size - 1)
    jn = np.minimum(j + 1, xs.size - 1)
    x0, x1 = xs[j], xs[jn]
    y0, y1 = ys[j], ys[jn]
    width = x1 - x0
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(width > 0, (x - x0) / np.where(width > 0, width, 1.0), 0.0)
    out = np.where(x0 == x, y0, y0 + t * (y1 - y0))
    if np.ndim(out) == 0:
        return float(out)
    return out


def auc(curve: RocCurve) -> float:
    """Trapezoid-rule area under the piecewise-linear curve including anchors.

    Points are taken in sequence order, so a non-monotone curve yields the
    signed area of its path.
    """
    xs, ys = _segment_form(curve)
    return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1])) / 2.0)


def pla_loss_bound(bounds: SlopeBounds, k: int) -> float:
    """Upper bound ``u_T * u_F / (2k)`` on the area lost by the k-point PLA."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return bounds.u_T * bounds.u_F / (2.0 * k)


def estimate_slope_bounds(curves: list[RocCurve] | RocCurve, k: int | None = None) -> SlopeBounds:
    """Estimate ``(u_T, u_F)`` by the largest finite-difference slope over the grid.

    The curves must carry thresholds (as produced by :func:`empirical_roc`).
    The result is flagged ``estimated=True``.
    """
    if isinstance(curves, RocCurve):
        curves = [curves]
    u_t = 0.0
    u_f = 0.0
    for c in curves:
        if c.thresholds is None:
            raise RocError("slope estimation needs thresholds on the curve")
        dt = np.abs(np.diff(c.thresholds))
        ok = dt > 0
        if not ok.any():
            continue
        u_t = max(u_t, float(np.max(np.abs(np.diff(c.tpr))[ok] / dt[ok])))
        u_f = max(u_f, float(np.max(np.abs(np.diff(c.fpr))[ok] / dt[ok])))
    return SlopeBounds(u_t, u_f, estimated=True)


class DominanceKind(enum.Enum):
    CURVE0_UP = "Curve0Up"
    CURVE1_UP = "Curve1Up"
    INTERSECTING = "Intersecting"


@dataclass(frozen=True)
class Dominance:
    """Which curve lies above; for intersecting curves, where they cross."""

    kind: DominanceKind
    crossing_fprs: tuple[float, ...] = ()
    crossing_tprs: tuple[float, ...] = ()
    # Integral of (tpr1 - tpr0) over the grid; positive means curve1 is mostly above.
    signed_area: float = 0.0

    @property
    def predominantly_up(self) -> int:
        """Group index (0 or 1) of the curve that lies mostly above."""
        if self.kind is DominanceKind.CURVE0_UP:
            return 0
        if self.kind is DominanceKind.CURVE1_UP:
            return 1
        return 1 if self.signed_area > 0 else 0

    def crossings_outside_practical_region(self) -> bool:
        """True if some crossing lies where practitioners operate.

        Crossings confined to ``fpr <= 0.2`` or ``tpr >= 0.5`` are tolerated.
        """
        return any(f > 0.2 and t < 0.5 for f, t in zip(self.crossing_fprs, self.crossing_tprs))


def dominance(curve0: RocCurve, curve1: RocCurve, grid_resolution: int = 1001) -> Dominance:
    """Compare two curves on a uniform FPR grid.

    Ties (identical curves) resolve to ``Curve0Up``.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    x = np.linspace(0.0, 1.0, grid_resolution)
    y0 = np.asarray(interpolate(curve0, x))
    y1 = np.asarray(interpolate(curve1, x))
    diff = y1 - y0
    area = float(np.sum(np.diff(x) * (diff[1:] + diff[:-1])) / 2.0)
    tol = PREDICATE_TOL
    if np.all(diff <= tol):
        return Dominance(DominanceKind.CURVE0_UP, signed_area=area)
    if np.all(diff >= -tol):
        return Dominance(DominanceKind.CURVE1_UP, signed_area=area)

    sign = np.where(diff > tol, 1, np.where(diff < -tol, -1, 0))
    nz = np.flatnonzero(sign)
    fprs: list[float] = []
    tprs: list[float] = []
    for a, b in zip(nz[:-1], nz[1:]):
        if sign[a] == sign[b]:
            continue
        # root of the linearly interpolated difference between grid nodes a and b
        da, db = diff[a], diff[b]
        xc = x[a] + (x[b] - x[a]) * da / (da - db)
        fprs.append(float(xc))
        tprs.append(float(interpolate(curve0, xc)))
    return Dominance(DominanceKind.INTERSECTING, tuple(fprs), tuple(tprs), area)
