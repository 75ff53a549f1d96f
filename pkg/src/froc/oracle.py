"""Brute-force reference for the maximum-AUC fair transport on small instances.

Every index gets a finite candidate set inside its L1 ball; a dynamic program
over indices picks one candidate per index so that the curve through
``(0,0), c_1, ..., c_k, (1,1)`` has maximal trapezoid area with nondecreasing
FPR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from froc.geometry import BoundaryLocator, l1_distance
from froc.roc_core import RocCurve, auc, interpolate
from froc.transport import check_spacing, fair_roc

MAX_K = 25
MIN_DELTA = 1e-4
CANDIDATE_TOL = 1e-12


class OracleInfeasibleError(ValueError):
    """Some index has no admissible candidate."""

    def __init__(self, index: int, eps: float):
        super().__init__(f"no admissible fair point at index {index} for eps={eps}")
        self.index = index


def _sphere_points(center: NDArray[np.float64], eps: float, delta: float) -> NDArray[np.float64]:
    n = max(1, math.ceil(2 * eps / delta))
    t = np.arange(n) / n
    cx, cy = center
    corners = np.array([[cx, cy + eps], [cx + eps, cy], [cx, cy - eps], [cx - eps, cy]])
    out = []
    for a, b in zip(corners, np.roll(corners, -1, axis=0)):
        out.append(a + t[:, None] * (b - a))
    return np.vstack(out)


def _interior_points(center: NDArray[np.float64], eps: float, delta: float) -> NDArray[np.float64]:
    m = math.floor(eps / delta)
    offs = np.arange(-m, m + 1) * delta
    dx, dy = np.meshgrid(offs, offs)
    keep = np.abs(dx) + np.abs(dy) < eps - CANDIDATE_TOL
    return np.column_stack([center[0] + dx[keep], center[1] + dy[keep]])


def candidate_sets(
    roc_up: RocCurve,
    roc_down: RocCurve,
    eps: float,
    delta: float,
    boundary_only: bool = True,
) -> list[NDArray[np.float64]]:
    """Admissible candidates per index.

    Each set holds the discretized sphere, the extreme cut points, the top and
    left vertices (clamped) and ``Q_i^up``, optionally plus an interior grid,
    filtered to points within ``eps`` of ``Q_i^down``, inside the unit square and
    on or below ``ROC_up``.
    """
    up = roc_up.points
    down = roc_down.points
    hits = BoundaryLocator(roc_up).locate(down, eps)
    sets = []
    for i, c in enumerate(down):
        parts = [_sphere_points(c, eps, delta), up[i : i + 1]]
        parts.append(np.clip([[c[0], c[1] + eps], [c[0] - eps, c[1]]], 0.0, 1.0))
        if hits.cut[i]:
            parts.append(np.vstack([hits.left[i], hits.right[i]]))
        if not boundary_only:
            parts.append(_interior_points(c, eps, delta))
        cand = np.vstack(parts)
        ok = np.asarray(l1_distance(cand, c)) <= eps + CANDIDATE_TOL
        ok &= np.all((cand >= 0.0) & (cand <= 1.0), axis=1)
        ok &= cand[:, 1] <= np.asarray(interpolate(roc_up, cand[:, 0])) + CANDIDATE_TOL
        cand = np.unique(cand[ok], axis=0)
        sets.append(cand)
    return sets


@dataclass(frozen=True)
class OracleResult:
    best_auc: float
    best_points: NDArray[np.float64]
    candidate_counts: tuple[int, ...]


def dp_optimal(
    roc_up: RocCurve,
    roc_down: RocCurve,
    eps: float,
    delta: float = 1e-3,
    boundary_only: bool = True,
) -> OracleResult:
    """Maximum-area fpr-monotone choice of one candidate per index.

    Raises
    ------
    ValueError
        ``k > 25`` or ``delta < 1e-4``.
    OracleInfeasibleError
        Some index has an empty candidate set.
    """
    k = len(roc_up)
    if k > MAX_K:
        raise ValueError(f"oracle is limited to k <= {MAX_K}, got {k}")
    if delta < MIN_DELTA:
        raise ValueError(f"delta must be >= {MIN_DELTA}, got {delta}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if len(roc_down) != k:
        raise ValueError("curves must have equal length")
    sets = candidate_sets(roc_up, roc_down, eps, delta, boundary_only)
    for i, s in enumerate(sets):
        if s.size == 0:
            raise OracleInfeasibleError(i, eps)

    prev = np.zeros((1, 2))
    value = np.zeros(1)
    back: list[NDArray[np.int64]] = []
    for cand in sets:
        dx = cand[None, :, 0] - prev[:, None, 0]
        trap = dx * (cand[None, :, 1] + prev[:, None, 1]) / 2.0
        total = np.where(dx >= -CANDIDATE_TOL, value[:, None] + trap, -np.inf)
        arg = np.argmax(total, axis=0)
        value = total[arg, np.arange(cand.shape[0])]
        back.append(arg)
        prev = cand
    closing = (1.0 - prev[:, 0]) * (1.0 + prev[:, 1]) / 2.0
    final = value + closing
    j = int(np.argmax(final))
    if not np.isfinite(final[j]):
        raise OracleInfeasibleError(k - 1, eps)
    best = float(final[j])
    chosen = np.empty((k, 2))
    for i in range(k - 1, -1, -1):
        chosen[i] = sets[i][j]
        j = int(back[i][j])
    return OracleResult(best, chosen, tuple(s.shape[0] for s in sets))


@dataclass(frozen=True)
class OptimalityReport:
    froc_auc: float
    oracle_auc: float
    gap: float
    assumption_42_holds: bool
    spacing_violations: tuple[int, ...]
    multi_intersection: tuple[int, ...]

    def as_dict(self) -> dict:
        return {
            "froc_auc": self.froc_auc,
            "oracle_auc": self.oracle_auc,
            "gap": self.gap,
            "assumption_42_holds": self.assumption_42_holds,
            "spacing_violations": list(self.spacing_violations),
            "multi_intersection": list(self.multi_intersection),
        }


def optimality_report(
    roc_up: RocCurve,
    roc_down: RocCurve,
    eps: float,
    delta: float = 1e-3,
    boundary_only: bool = True,
) -> OptimalityReport:
    """Compare the transport's AUC with the oracle optimum (``gap = oracle - froc``)."""
    plan = fair_roc(roc_up, roc_down, eps)
    froc_auc = auc(plan.fair_up)
    best = dp_optimal(roc_up, roc_down, eps, delta, boundary_only)
    a42 = check_spacing(roc_up, roc_down, eps)
    return OptimalityReport(
        froc_auc,
        best.best_auc,
        best.best_auc - froc_auc,
        a42.holds,
        a42.spacing_violations,
        a42.multi_intersection,
    )
