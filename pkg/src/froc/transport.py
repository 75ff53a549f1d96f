"""Transport of the advantaged group's ROC onto the L1 ball around the other group's.

For every query index ``i`` the fair point for the up group is chosen by the
following rule, evaluated on the original (unshifted) curves:

0. if ``Q_i^up`` is already within ``eps`` of ``Q_i^down`` it is kept;
1. if the PLA of ``ROC_up`` meets the sphere around ``Q_i^down``, take the
   extreme intersection whose FPR is closest to ``fpr(Q_i^up)``;
2. if ``Q_i^up`` sits on or below ``ROC_down`` it is kept;
3. otherwise take the top (``U_i``) or left (``L_i``) vertex of the sphere,
   whichever spans the smaller quadrilateral with ``Q_{i-1}^up, Q_i^up,
   Q_{i+1}^up`` (``U_i`` on ties).

Every index is independent, so the whole plan is computed with array
operations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from froc.geometry import BoundaryLocator, hypograph_test, l1_distance, quad_area
from froc.roc_core import (
    DominanceKind,
    RocCurve,
    RocError,
    RocPoint,
    auc,
    dominance,
    interpolate,
)
from froc.tolerances import ASSERT_TOL, PREDICATE_TOL


class ShiftKind(enum.Enum):
    CUT_SHIFT_LEFT = "CutShiftLeft"
    CUT_SHIFT_RIGHT = "CutShiftRight"
    UP_SHIFT = "UpShift"
    LEFT_SHIFT = "LeftShift"
    NO_SHIFT = "NoShift"

    @property
    def is_cut(self) -> bool:
        return self in (ShiftKind.CUT_SHIFT_LEFT, ShiftKind.CUT_SHIFT_RIGHT)


CUT_RULES = ("nearest", "sign")

_KINDS = tuple(ShiftKind)
_CODE = {kind: code for code, kind in enumerate(_KINDS)}


@dataclass(frozen=True)
class ShiftDecision:
    """Decision at one (0-based) query index.

    ``target`` is the fair point after clamping into the unit square,
    ``raw_target`` the point before clamping.
    """

    index: int
    kind: ShiftKind
    target: RocPoint
    raw_target: RocPoint


@dataclass(frozen=True)
class Diagnostic:
    """A non-fatal finding attached to a plan.

    ``code`` is one of ``clamped``, ``hypograph-gap``, ``non-monotone``,
    ``monotone-repair``, ``multi-intersection``, ``dominance``.
    """

    code: str
    message: str
    indices: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class TransportPlan:
    eps: float
    kind_codes: NDArray[np.int8]
    raw_targets: NDArray[np.float64]
    fair_up: RocCurve
    fair_down: RocCurve
    diagnostics: tuple[Diagnostic, ...] = field(default=())

    def __post_init__(self) -> None:
        codes = np.array(self.kind_codes, dtype=np.int8)
        raw = np.array(self.raw_targets, dtype=np.float64).reshape(-1, 2)
        codes.setflags(write=False)
        raw.setflags(write=False)
        object.__setattr__(self, "kind_codes", codes)
        object.__setattr__(self, "raw_targets", raw)
        if not (codes.size == raw.shape[0] == len(self.fair_up) == len(self.fair_down)):
            raise ValueError("plan arrays must all have length k")

    @classmethod
    def from_decisions(
        cls,
        eps: float,
        decisions: list[ShiftDecision],
        fair_down: RocCurve,
        fair_up: RocCurve | None = None,
        diagnostics: tuple[Diagnostic, ...] = (),
    ) -> TransportPlan:
        codes = np.array([_CODE[d.kind] for d in decisions], dtype=np.int8)
        raw = np.array([d.raw_target for d in decisions], dtype=np.float64).reshape(-1, 2)
        if fair_up is None:
            fair_up = RocCurve.from_points([d.target for d in decisions], fair_down.thresholds)
        return cls(eps, codes, raw, fair_up, fair_down, diagnostics)

    def __len__(self) -> int:
        return int(self.kind_codes.size)

    @property
    def kinds(self) -> list[ShiftKind]:
        return [_KINDS[c] for c in self.kind_codes]

    def kind(self, i: int) -> ShiftKind:
        return _KINDS[self.kind_codes[i]]

    @property
    def decisions(self) -> list[ShiftDecision]:
        fair = self.fair_up.points
        return [
            ShiftDecision(
                i,
                _KINDS[c],
                RocPoint(float(fair[i, 0]), float(fair[i, 1])),
                RocPoint(float(self.raw_targets[i, 0]), float(self.raw_targets[i, 1])),
            )
            for i, c in enumerate(self.kind_codes)
        ]

    def diagnostic(self, code: str) -> Diagnostic | None:
        for d in self.diagnostics:
            if d.code == code:
                return d
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransportPlan):
            return NotImplemented
        return (
            self.eps == other.eps
            and np.array_equal(self.kind_codes, other.kind_codes)
            and np.array_equal(self.raw_targets, other.raw_targets)
            and self.fair_up == other.fair_up
            and self.fair_down == other.fair_down
            and self.diagnostics == other.diagnostics
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class FairnessReport:
    eps: float
    max_index_gap: float
    # largest |tpr gap| between the two PLAs on a uniform fpr grid
    max_dense_gap: float
    passed: bool


@dataclass(frozen=True)
class SpacingReport:
    """Spacing and single-crossing checks used to qualify optimality claims."""

    spacing_violations: tuple[int, ...]
    multi_intersection: tuple[int, ...]

    @property
    def holds(self) -> bool:
        return not self.spacing_violations and not self.multi_intersection


def _check_inputs(roc_up: RocCurve, roc_down: RocCurve, eps: float) -> None:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if len(roc_up) != len(roc_down):
        raise RocError(f"curves have different lengths: {len(roc_up)} vs {len(roc_down)}")
    if len(roc_up) == 0:
        raise RocError("curves are empty")
    for name, c in (("roc_up", roc_up), ("roc_down", roc_down)):
        bad = c.monotonicity_violations()
        if bad:
            raise RocError(f"{name} is not monotone at point indices {bad}")


def _compress(idx: NDArray[np.int64], limit: int = 20) -> str:
    shown = ", ".join(str(int(i)) for i in idx[:limit])
    return shown + (f", ... ({idx.size} total)" if idx.size > limit else "")


def spacing_violations(roc_up: RocCurve, roc_down: RocCurve) -> NDArray[np.int64]:
    """Indices where ``fpr(Q_{i-1}^down) <= fpr(Q_i^up) <= fpr(Q_{i+1}^down)`` fails.

    Virtual neighbours are ``fpr = 0`` before the first index and ``fpr = 1``
    after the last.
    """
    d = np.concatenate([[0.0], roc_down.fpr, [1.0]])
    f = roc_up.fpr
    bad = (f < d[:-2] - PREDICATE_TOL) | (f > d[2:] + PREDICATE_TOL)
    return np.flatnonzero(bad)


def check_spacing(
    roc_up: RocCurve, roc_down: RocCurve, eps: float, locator: BoundaryLocator | None = None
) -> SpacingReport:
    locator = locator or BoundaryLocator(roc_up)
    hits = locator.locate(roc_down.points, eps)
    return SpacingReport(
        tuple(int(i) for i in spacing_violations(roc_up, roc_down)),
        tuple(int(i) for i in np.flatnonzero(hits.extra)),
    )


def repair_monotone(points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Right-to-left running minimum on both coordinates.

    Lowering coordinates keeps every point inside the hypograph of the curve it
    came from, so the repaired points remain realizable.
    """
    out = np.array(points, dtype=np.float64)
    out[:, 0] = np.minimum.accumulate(out[::-1, 0])[::-1]
    out[:, 1] = np.minimum.accumulate(out[::-1, 1])[::-1]
    return out


def fair_roc(
    roc_up: RocCurve,
    roc_down: RocCurve,
    eps: float,
    *,
    repair_monotone_output: bool = False,
    cut_rule: str = "nearest",
    locator: BoundaryLocator | None = None,
) -> TransportPlan:
    """Compute the fair transport plan for ``roc_up`` against ``roc_down``.

    Parameters
    ----------
    roc_up, roc_down
        Query points of the advantaged and disadvantaged groups, index-matched.
    eps
        L1 radius of the fairness ball.
    repair_monotone_output
        Apply :func:`repair_monotone` when the shifted curve is not monotone.
    cut_rule
        ``"nearest"`` picks the cut point whose FPR is closest to
        ``fpr(Q_i^up)`` (ties broken by the side rule); ``"sign"`` always uses the
        side rule: ``p_right`` iff ``fpr(Q_i^up) >= fpr(Q_i^down)``.
    locator
        Prebuilt :class:`BoundaryLocator` for ``roc_up`` (reused across sweeps).

    Raises
    ------
    RocError
        Length mismatch or non-monotone input.
    ValueError
        ``eps <= 0``.
    """
    _check_inputs(roc_up, roc_down, eps)
    if cut_rule not in CUT_RULES:
        raise ValueError(f"cut_rule must be one of {CUT_RULES}, got {cut_rule!r}")
    eps = float(eps)
    up = roc_up.points
    down = roc_down.points
    k = up.shape[0]
    diagnostics: list[Diagnostic] = []

    # ties resolve to curve0, so identical curves count as dominating
    dom = dominance(roc_up, roc_down)
    if dom.kind is not DominanceKind.CURVE0_UP:
        where = "" if not dom.crossing_fprs else f" (crossings at fpr {[round(x, 4) for x in dom.crossing_fprs]})"
        diagnostics.append(Diagnostic("dominance", f"roc_up does not lie above roc_down everywhere{where}"))

    codes = np.full(k, _CODE[ShiftKind.NO_SHIFT], dtype=np.int8)
    raw = up.copy()

    gap = np.asarray(l1_distance(up, down)).reshape(k)
    todo = gap > eps + PREDICATE_TOL

    locator = locator or BoundaryLocator(roc_up)
    hits = locator.locate(down, eps)
    multi = np.flatnonzero(hits.extra)
    if multi.size:
        diagnostics.append(
            Diagnostic(
                "multi-intersection",
                f"roc_up meets the sphere more than twice at indices {_compress(multi)}; extreme points used",
                tuple(int(i) for i in multi),
            )
        )

    cut = todo & hits.cut
    sign_right = up[:, 0] >= down[:, 0]
    if cut_rule == "sign":
        go_right = sign_right
    else:
        d_right = np.abs(hits.right[:, 0] - up[:, 0])
        d_left = np.abs(hits.left[:, 0] - up[:, 0])
        go_right = np.where(d_right == d_left, sign_right, d_right < d_left)
    right = cut & go_right
    left = cut & ~go_right
    codes[right] = _CODE[ShiftKind.CUT_SHIFT_RIGHT]
    codes[left] = _CODE[ShiftKind.CUT_SHIFT_LEFT]
    raw[right] = hits.right[right]
    raw[left] = hits.left[left]

    rest = todo & ~hits.cut
    below = rest & np.asarray(hypograph_test(up, roc_down)).reshape(k)
    if below.any():
        idx = np.flatnonzero(below)
        diagnostics.append(
            Diagnostic(
                "hypograph-gap",
                f"up point lies under roc_down but farther than eps at indices {_compress(idx)}",
                tuple(int(i) for i in idx),
            )
        )

    area = rest & ~below
    if area.any():
        verts = roc_up.vertices  # original neighbours, anchors included
        i = np.flatnonzero(area)
        prev, cur, nxt = verts[i], verts[i + 1], verts[i + 2]
        c = down[i]
        U = np.column_stack([c[:, 0], c[:, 1] + eps])
        L = np.column_stack([c[:, 0] - eps, c[:, 1]])
        area_l = np.asarray(quad_area(nxt, cur, prev, L))
        area_u = np.asarray(quad_area(nxt, cur, prev, U))
        pick_u = area_l >= area_u - PREDICATE_TOL
        codes[i] = np.where(pick_u, _CODE[ShiftKind.UP_SHIFT], _CODE[ShiftKind.LEFT_SHIFT])
        raw[i] = np.where(pick_u[:, None], U, L)

    fair = np.clip(raw, 0.0, 1.0)
    clamped = np.flatnonzero(np.any(fair != raw, axis=1))
    if clamped.size:
        diagnostics.append(
            Diagnostic(
                "clamped",
                f"targets outside the unit square were clamped at indices {_compress(clamped)}",
                tuple(int(i) for i in clamped),
            )
        )

    fair_up = RocCurve(fair[:, 0], fair[:, 1], roc_up.thresholds)
    bad = fair_up.monotonicity_violations()
    if bad:
        diagnostics.append(
            Diagnostic(
                "non-monotone",
                f"fair curve is not monotone at indices {_compress(np.asarray(bad))}",
                tuple(bad),
            )
        )
        if repair_monotone_output:
            fixed = repair_monotone(fair)
            changed = np.flatnonzero(np.any(fixed != fair, axis=1))
            fair_up = RocCurve(fixed[:, 0], fixed[:, 1], roc_up.thresholds)
            broke = np.flatnonzero(np.asarray(l1_distance(fixed, down)).reshape(k) > eps + ASSERT_TOL)
            msg = f"running-minimum repair moved indices {_compress(changed)}"
            if broke.size:
                msg += f"; repair left a gap above eps at {_compress(broke)}"
            diagnostics.append(Diagnostic("monotone-repair", msg, tuple(int(i) for i in changed)))

    return TransportPlan(eps, codes, raw, fair_up, roc_down, tuple(diagnostics))


def verify_fairness(
    fair_up: RocCurve, fair_down: RocCurve, eps: float, grid_resolution: int = 1001
) -> FairnessReport:
    if len(fair_up) != len(fair_down):
        raise RocError(f"curves have different lengths: {len(fair_up)} vs {len(fair_down)}")
    gaps = np.asarray(l1_distance(fair_up.points, fair_down.points)).reshape(-1)
    max_index = float(gaps.max()) if gaps.size else 0.0
    x = np.linspace(0.0, 1.0, grid_resolution)
    dense = float(np.max(np.abs(np.asarray(interpolate(fair_up, x)) - np.asarray(interpolate(fair_down, x)))))
    return FairnessReport(float(eps), max_index, dense, max_index <= eps + ASSERT_TOL)


def auc_loss(plan: TransportPlan, original_up: RocCurve) -> float:
    """AUC given up by the transport: ``auc(original_up) - auc(plan.fair_up)``."""
    return auc(original_up) - auc(plan.fair_up)
