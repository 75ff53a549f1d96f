"""L1 norm-ball geometry in ROC space.

Two routes find where an ROC curve meets the boundary of an L1 ball:

* :func:`rhombus_intersections` scans every PLA segment against the four
  rhombus edges. It is the reference implementation and handles arbitrary
  curves.
* :class:`BoundaryLocator` answers many ball queries against one monotone
  curve at once. In coordinates ``u = fpr + tpr`` and ``v = tpr - fpr`` the
  curve is the graph of a piecewise-linear function ``v(u)`` (``u`` is
  strictly increasing along a deduplicated monotone curve) and the L1 ball is
  the axis-aligned square ``|u - u0| <= eps, |v - v0| <= eps``. The first and
  last boundary points are then found with range-min/max sparse tables in
  ``O(log k)`` per query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from froc.roc_core import RocCurve, RocPoint, interpolate, pla
from froc.tolerances import PREDICATE_TOL


class NoIntersectionError(ValueError):
    """The curve does not meet the norm boundary."""


def l1_distance(p: ArrayLike, q: ArrayLike) -> float | NDArray[np.float64]:
    """``|p.fpr - q.fpr| + |p.tpr - q.tpr|``; broadcasts over leading axes."""
    d = np.abs(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64))
    out = d[..., 0] + d[..., 1]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class NormRhombus:
    """Boundary of the L1 ball of radius ``eps`` around ``center``.

    Vertices are kept raw, so they may lie outside the unit square.
    """

    center: RocPoint
    eps: float

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        object.__setattr__(self, "center", RocPoint(float(self.center[0]), float(self.center[1])))

    @property
    def U(self) -> RocPoint:
        return RocPoint(self.center.fpr, self.center.tpr + self.eps)

    @property
    def R(self) -> RocPoint:
        return RocPoint(self.center.fpr + self.eps, self.center.tpr)

    @property
    def D(self) -> RocPoint:
        return RocPoint(self.center.fpr, self.center.tpr - self.eps)

    @property
    def L(self) -> RocPoint:
        return RocPoint(self.center.fpr - self.eps, self.center.tpr)

    @property
    def vertices(self) -> tuple[RocPoint, RocPoint, RocPoint, RocPoint]:
        return (self.U, self.R, self.D, self.L)

    def edges(self) -> list[tuple[RocPoint, RocPoint]]:
        U, R, D, L = self.vertices
        return [(U, R), (R, D), (D, L), (L, U)]


def norm_rhombus(center: ArrayLike, eps: float) -> NormRhombus:
    c = np.asarray(center, dtype=np.float64)
    return NormRhombus(RocPoint(float(c[0]), float(c[1])), float(eps))


def clamp_point(p: ArrayLike) -> RocPoint:
    c = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    return RocPoint(float(c[0]), float(c[1]))


@dataclass(frozen=True)
class Segment:
    a: RocPoint
    b: RocPoint


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _segment_edge_hits(
    p: NDArray[np.float64], r: NDArray[np.float64], q: NDArray[np.float64], e: NDArray[np.float64], tol: float
) -> list[NDArray[np.float64]]:
    """Intersections of segments ``p + t r`` (rows) with the single edge ``q + s e``."""
    hits: list[NDArray[np.float64]] = []
    qp = q - p
    denom = _cross(r[:, 0], r[:, 1], e[0], e[1])
    t_num = _cross(qp[:, 0], qp[:, 1], e[0], e[1])
    s_num = _cross(qp[:, 0], qp[:, 1], r[:, 0], r[:, 1])
    scale = np.hypot(r[:, 0], r[:, 1]) * math.hypot(e[0], e[1])
    proper = np.abs(denom) > tol * np.maximum(scale, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(proper, t_num / np.where(proper, denom, 1.0), np.nan)
        s = np.where(proper, s_num / np.where(proper, denom, 1.0), np.nan)
    ok = proper & (t >= -tol) & (t <= 1 + tol) & (s >= -tol) & (s <= 1 + tol)
    if ok.any():
        tt = np.clip(t[ok], 0.0, 1.0)
        hits.append(p[ok] + tt[:, None] * r[ok])

    # parallel and collinear: overlap endpoints
    rr = np.sum(r * r, axis=1)
    collinear = ~proper & (np.abs(t_num) <= tol * np.maximum(np.sqrt(rr), 1.0)) & (rr > 0)
    for idx in np.flatnonzero(collinear):
        t0 = float(np.dot(q - p[idx], r[idx]) / rr[idx])
        t1 = float(np.dot(q + e - p[idx], r[idx]) / rr[idx])
        lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
        if lo <= hi + tol:
            hits.append(np.array([p[idx] + lo * r[idx], p[idx] + min(hi, 1.0) * r[idx]]))
    return hits


def rhombus_intersections(roc: RocCurve, rhombus: NormRhombus, tol: float = PREDICATE_TOL) -> NDArray[np.float64]:
    """All points where the PLA of ``roc`` meets the rhombus boundary.

    Computed edge by edge as segment-segment intersections. Points closer than
    ``tol`` (max-norm) are merged; the result is sorted by FPR, then TPR.
    """
    v = roc.vertices
    p = v[:-1]
    r = v[1:] - v[:-1]
    nonzero = np.any(r != 0, axis=1)
    p, r = p[nonzero], r[nonzero]
    chunks: list[NDArray[np.float64]] = []
    for a, b in rhombus.edges():
        q = np.array(a, dtype=np.float64)
        e = np.array(b, dtype=np.float64) - q
        chunks.extend(_segment_edge_hits(p, r, q, e, tol))
    if not chunks:
        return np.empty((0, 2))
    pts = np.vstack(chunks)
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    keep = [0]
    for i in range(1, len(pts)):
        if np.max(np.abs(pts[i] - pts[keep[-1]])) > max(tol, 1e-12) * 10:
            keep.append(i)
    return pts[keep]


def boundary_cut(roc_up: RocCurve, rhombus: NormRhombus) -> bool:
    """True iff some PLA segment of ``roc_up`` touches the rhombus boundary."""
    return len(rhombus_intersections(roc_up, rhombus)) > 0


def cut_shift(roc_up: RocCurve, rhombus: NormRhombus) -> tuple[RocPoint, RocPoint]:
    """Extreme-FPR intersections ``(p_left, p_right)`` of ``roc_up`` with the rhombus.

    With a single (tangent) intersection both points coincide.

    Raises
    ------
    NoIntersectionError
        If the curve misses the boundary.
    """
    pts = rhombus_intersections(roc_up, rhombus)
    if len(pts) == 0:
        raise NoIntersectionError(
            f"curve does not meet the norm boundary around {tuple(rhombus.center)} (eps={rhombus.eps})"
        )
    left, right = pts[0], pts[-1]
    return RocPoint(float(left[0]), float(left[1])), RocPoint(float(right[0]), float(right[1]))


def hypograph_test(p: ArrayLike, curve: RocCurve) -> bool | NDArray[np.bool_]:
    """True iff ``p`` lies on or below the PLA of ``curve``. Vectorized over rows of ``p``."""
    pts = np.asarray(p, dtype=np.float64)
    res = pts[..., 1] <= np.asarray(interpolate(curve, pts[..., 0])) + PREDICATE_TOL
    return bool(res) if np.ndim(res) == 0 else res


def triangle_area_heron(a: ArrayLike, b: ArrayLike, c: ArrayLike) -> float | NDArray[np.float64]:
    """Triangle area from its side lengths (Heron), vectorized over leading axes.

    Uses the ordering-stable arrangement of the Heron product so that needle
    triangles do not cancel catastrophically; a negative radicand from
    rounding is clamped to zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    sides = np.stack(
        [
            np.hypot(*np.moveaxis(b - c, -1, 0)),
            np.hypot(*np.moveaxis(a - c, -1, 0)),
            np.hypot(*np.moveaxis(a - b, -1, 0)),
        ],
        axis=-1,
    )
    sides = -np.sort(-sides, axis=-1)
    x, y, z = sides[..., 0], sides[..., 1], sides[..., 2]
    rad = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z))
    out = 0.25 * np.sqrt(np.maximum(rad, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def quad_area(a: ArrayLike, b: ArrayLike, c: ArrayLike, d: ArrayLike) -> float | NDArray[np.float64]:
    """Area of quadrilateral ``abcd`` as ``area(abc) + area(acd)``."""
    out = np.asarray(triangle_area_heron(a, b, c)) + np.asarray(triangle_area_heron(a, c, d))
    return float(out) if np.ndim(out) == 0 else out


def point_segment_distance(p: ArrayLike, a: ArrayLike, b: ArrayLike) -> float:
    p, a, b = (np.asarray(x, dtype=np.float64) for x in (p, a, b))
    ab = b - a
    denom = float(np.dot(ab, ab))
    t = 0.0 if denom == 0 else float(np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0))
    return float(np.hypot(*(p - (a + t * ab))))


# ---------------------------------------------------------------------------
# Batched boundary queries
# ---------------------------------------------------------------------------


class _SparseTable:
    """Range-min and range-max tables supporting "first index at or after s" searches."""

    def __init__(self, values: NDArray[np.float64]):
        n = values.size
        self.n = n
        levels = max(1, int(n).bit_length())
        self.levels = levels
        mn = np.empty((levels, n))
        mx = np.empty((levels, n))
        mn[0] = values
        mx[0] = values
        for lvl in range(1, levels):
            h = 1 << (lvl - 1)
            mn[lvl] = mn[lvl - 1]
            mx[lvl] = mx[lvl - 1]
            if h < n:
                np.minimum(mn[lvl - 1, : n - h], mn[lvl - 1, h:], out=mn[lvl, : n - h])
                np.maximum(mx[lvl - 1, : n - h], mx[lvl - 1, h:], out=mx[lvl, : n - h])
        self.mn = mn
        self.mx = mx

    def first(self, start: NDArray[np.int64], threshold: NDArray[np.float64], pred: str) -> NDArray[np.int64]:
        """Smallest ``j >= start`` with ``values[j] <pred> threshold``; ``n`` if none.

        ``pred`` is one of ``"le"``, ``"ge"``, ``"lt"``, ``"gt"``.
        """
        pos = np.array(start, dtype=np.int64, copy=True)
        n = self.n
        for lvl in range(self.levels - 1, -1, -1):
            live = pos < n
            idx = np.minimum(pos, n - 1)
            if pred == "le":
                none = self.mn[lvl, idx] > threshold
            elif pred == "ge":
                none = self.mx[lvl, idx] < threshold
            elif pred == "lt":
                none = self.mn[lvl, idx] >= threshold
            elif pred == "gt":
                none = self.mx[lvl, idx] <= threshold
            else:
                raise ValueError(pred)
            pos = pos + np.where(live & none, 1 << lvl, 0)
        return np.minimum(pos, n)

    def range_min_max(self, lo: NDArray[np.int64], hi: NDArray[np.int64]) -> tuple[NDArray, NDArray]:
        """Min and max over ``values[lo..hi]`` (inclusive); requires ``lo <= hi``."""
        length = hi - lo + 1
        lvl = np.floor(np.log2(np.maximum(length, 1))).astype(np.int64)
        other = hi - (np.int64(1) << lvl) + 1
        return (
            np.minimum(self.mn[lvl, lo], self.mn[lvl, other]),
            np.maximum(self.mx[lvl, lo], self.mx[lvl, other]),
        )


@dataclass(frozen=True)
class BoundaryHits:
    """Result of a batched boundary query (one row per ball)."""

    cut: NDArray[np.bool_]
    left: NDArray[np.float64]
    right: NDArray[np.float64]
    # True where the curve leaves the closed ball between left and right; for
    # curves in general position that means more than two boundary points.
    extra: NDArray[np.bool_]


class BoundaryLocator:
    """First and last points where a monotone PLA meets many L1 spheres."""

    def __init__(self, roc: RocCurve, tol: float = PREDICATE_TOL):
        verts = pla(roc).vertices
        self.verts = verts
        # monotone with zero-length segments removed, so u is strictly increasing
        self.u = np.maximum.accumulate(verts[:, 0] + verts[:, 1])
        self.v = verts[:, 1] - verts[:, 0]
        self.tol = tol
        self._fwd = _SparseTable(self.v)
        self._rev = _SparseTable(self.v[::-1].copy())

    def _point(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        x = np.interp(u, self.u, self.verts[:, 0])
        y = np.interp(u, self.u, self.verts[:, 1])
        return np.column_stack([x, y])

    @staticmethod
    def _crossing(u_arr, v_arr, j, level):
        """``u`` where ``v`` reaches ``level`` on the segment ending at vertex ``j``."""
        n = u_arr.size
        jj = np.minimum(j, n - 1)
        jp = np.maximum(jj - 1, 0)
        dv = v_arr[jj] - v_arr[jp]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dv != 0, (level - v_arr[jp]) / np.where(dv != 0, dv, 1.0), 1.0)
        return u_arr[jp] + np.clip(t, 0.0, 1.0) * (u_arr[jj] - u_arr[jp])

    def _scan(self, u_arr, v_arr, table, a, b, lo, hi):
        """Smallest ``u`` at which the curve ``(u_arr, v_arr)`` lies on the boundary
        of the square ``[a, b] x [lo, hi]``."""
        n = u_arr.size
        tol = self.tol
        found = np.zeros(a.shape, dtype=bool)
        u_hit = np.full(a.shape, np.nan)

        start_u = np.maximum(a, u_arr[0])
        g0 = np.interp(start_u, u_arr, v_arr)
        in_band = (g0 >= lo - tol) & (g0 <= hi + tol)
        reachable = (start_u <= b + tol) & (start_u <= u_arr[-1])
        late = a < u_arr[0]
        s = np.searchsorted(u_arr, start_u, side="right")

        # the first point of the curve inside the closed square is already on its boundary
        on_boundary = reachable & in_band & (
            ~late | (g0 <= lo + tol) | (g0 >= hi - tol) | (u_arr[0] >= b - tol)
        )
        found |= on_boundary
        u_hit = np.where(on_boundary, start_u, u_hit)

        # outside the band where the window opens: first band entry
        outside = reachable & ~in_band
        if outside.any():
            above = g0 > hi
            j = np.where(above, table.first(s, hi + tol, "le"), table.first(s, lo - tol, "ge"))
            uc = np.maximum(self._crossing(u_arr, v_arr, j, np.where(above, hi, lo)), start_u)
            ok = outside & (j < n) & (uc <= b + tol)
            found |= ok
            u_hit = np.where(ok, np.minimum(uc, np.maximum(b, start_u)), u_hit)

        # curve starts strictly inside the ball: first exit
        inside = reachable & in_band & ~on_boundary
        if inside.any():
            j_hi = table.first(s, hi, "gt")
            j_lo = table.first(s, lo, "lt")
            u_exit = np.minimum(
                np.where(j_hi < n, self._crossing(u_arr, v_arr, j_hi, hi), np.inf),
                np.where(j_lo < n, self._crossing(u_arr, v_arr, j_lo, lo), np.inf),
            )
            u_exit = np.minimum(u_exit, np.where(b <= u_arr[-1], b, np.inf))
            ok = inside & np.isfinite(u_exit)
            found |= ok
            u_hit = np.where(ok, u_exit, u_hit)
        return found, u_hit

    def locate(self, centers: ArrayLike, eps: float) -> BoundaryHits:
        """Batched :func:`cut_shift`: extreme boundary points for each center."""
        c = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
        S = c[:, 0] + c[:, 1]
        V = c[:, 1] - c[:, 0]
        lo, hi = V - eps, V + eps

        found_l, u_l = self._scan(self.u, self.v, self._fwd, S - eps, S + eps, lo, hi)
        # mirror u -> -u so the same scan finds the last boundary point
        found_r, u_r_neg = self._scan(-self.u[::-1], self.v[::-1].copy(), self._rev, -(S + eps), -(S - eps), lo, hi)
        u_r = -u_r_neg

        cut = found_l & found_r
        u_l = np.where(cut, u_l, 0.0)
        u_r = np.where(cut, np.maximum(u_r, u_l), 0.0)
        left = self._point(u_l)
        right = self._point(u_r)

        extra = np.zeros(cut.shape, dtype=bool)
        lo_idx = np.searchsorted(self.u, u_l, side="right")
        hi_idx = np.searchsorted(self.u, u_r, side="left") - 1
        between = cut & (lo_idx <= hi_idx)
        if between.any():
            mn, mx = self._fwd.range_min_max(
                np.where(between, lo_idx, 0), np.where(between, hi_idx, 0)
            )
            extra = between & ((mx > hi + 1e3 * self.tol) | (mn < lo - 1e3 * self.tol))
        left[~cut] = np.nan
        right[~cut] = np.nan
        return BoundaryHits(cut=cut, left=left, right=right, extra=extra)
