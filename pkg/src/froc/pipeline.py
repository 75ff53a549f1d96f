"""End-to-end steps shared by the command line and the acceptance checks."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from froc.classifier import RandomizedClassifier, construct_classifier, with_normalization
from froc.geometry import BoundaryLocator
from froc.metrics import evaluate_classifier, score_stats
from froc.roc_core import Dominance, DominanceKind, GroupedScores, QueryGrid, RocCurve, dominance, empirical_roc
from froc.transport import TransportPlan, auc_loss, fair_roc, verify_fairness


class IntersectingRocError(ValueError):
    """Group ROCs cross where practitioners operate."""


class IntersectingRocWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Prepared:
    data: GroupedScores
    grid: QueryGrid
    curves: tuple[RocCurve, RocCurve]
    dominance: Dominance
    up_group: int

    @property
    def roc_up(self) -> RocCurve:
        return self.curves[self.up_group]

    @property
    def roc_down(self) -> RocCurve:
        return self.curves[1 - self.up_group]


def prepare(data: GroupedScores, k: int, allow_intersecting: bool = False) -> Prepared:
    """Build both group ROCs and decide which group is up.

    Curves that cross only at ``fpr <= 0.2`` or ``tpr >= 0.5`` produce an
    :class:`IntersectingRocWarning`; other crossings raise unless
    ``allow_intersecting`` is set.
    """
    grid = QueryGrid(k)
    c0 = empirical_roc(data, 0, grid)
    c1 = empirical_roc(data, 1, grid)
    dom = dominance(c0, c1)
    if dom.kind is DominanceKind.INTERSECTING:
        msg = f"group ROCs intersect at fpr {[round(x, 4) for x in dom.crossing_fprs]}"
        if dom.crossings_outside_practical_region() and not allow_intersecting:
            raise IntersectingRocError(msg + " (outside fpr <= 0.2 / tpr >= 0.5)")
        warnings.warn(msg, IntersectingRocWarning, stacklevel=2)
    return Prepared(data, grid, (c0, c1), dom, dom.predominantly_up)


def transport(prep: Prepared, eps: float, repair_monotone: bool = False, locator: BoundaryLocator | None = None) -> TransportPlan:
    return fair_roc(prep.roc_up, prep.roc_down, eps, repair_monotone_output=repair_monotone, locator=locator)


def build_classifier(prep: Prepared, plan: TransportPlan) -> RandomizedClassifier:
    rc = construct_classifier(plan, prep.roc_up, prep.roc_down, prep.up_group)
    return with_normalization(rc, prep.data.normalization)


def baseline_accuracy(prep: Prepared) -> tuple[float, int]:
    """Best pooled accuracy of plain thresholding and the index attaining it."""
    s0 = score_stats(prep.data, 0, prep.grid)
    s1 = score_stats(prep.data, 1, prep.grid)
    correct = s0.tp + s0.tn + s1.tp + s1.tn
    acc = correct / len(prep.data)
    i = int(np.argmax(acc))
    return float(acc[i]), i


@dataclass(frozen=True)
class SweepRow:
    eps: float
    auc_loss: float
    accuracy: float
    disparate_impact: float
    max_gap: float

    FIELDS = ("eps", "auc_loss", "accuracy", "disparate_impact", "max_gap")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.eps, self.auc_loss, self.accuracy, self.disparate_impact, self.max_gap)


def sweep_point(
    prep: Prepared,
    eps: float,
    seed: int,
    draws: int = 100_000,
    repair_monotone: bool = False,
    locator: BoundaryLocator | None = None,
) -> SweepRow:
    plan = transport(prep, eps, repair_monotone, locator)
    rc = build_classifier(prep, plan)
    ev = evaluate_classifier(rc, prep.data, seed, draws)
    report = verify_fairness(plan.fair_up, plan.fair_down, eps)
    best = ev.best_index
    return SweepRow(
        float(eps),
        auc_loss(plan, prep.roc_up),
        ev.best_accuracy,
        float(ev.disparate_impact[best]),
        report.max_index_gap,
    )


def sweep(
    prep: Prepared,
    eps_values: list[float],
    seed: int,
    draws: int = 100_000,
    repair_monotone: bool = False,
    workers: int = 4,
) -> list[SweepRow]:
    """One :class:`SweepRow` per ``eps``, in the order given.

    Every point uses the same seed, so differences between rows are not
    Monte Carlo noise from fresh draws.
    """
    locator = BoundaryLocator(prep.roc_up)

    def run(eps: float) -> SweepRow:
        return sweep_point(prep, eps, seed, draws, repair_monotone, locator)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, eps_values))
