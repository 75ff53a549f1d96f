"""Fairness and performance metrics over threshold indices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike, NDArray

from froc.classifier import RandomizedClassifier, predict_batch
from froc.roc_core import GroupedScores, QueryGrid, RocCurve, auc


@dataclass(frozen=True, eq=False)
class ThresholdStats:
    """Confusion counts of one group at every threshold index.

    Rates are derived from the integer counts, so ``fnr == 1 - tpr`` holds by
    construction.
    """

    tp: NDArray[np.int64]
    fp: NDArray[np.int64]
    fn: NDArray[np.int64]
    tn: NDArray[np.int64]

    def __post_init__(self) -> None:
        arrs = [np.array(a, dtype=np.int64).reshape(-1) for a in (self.tp, self.fp, self.fn, self.tn)]
        if len({a.size for a in arrs}) != 1:
            raise ValueError("count arrays must have equal length")
        if any((a < 0).any() for a in arrs):
            raise ValueError("counts must be nonnegative")
        pos = arrs[0] + arrs[2]
        neg = arrs[1] + arrs[3]
        if (pos == 0).any() or (neg == 0).any():
            raise ValueError("every index needs at least one positive and one negative")
        for name, a in zip(("tp", "fp", "fn", "tn"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return int(self.tp.size)

    @property
    def positives(self) -> NDArray[np.int64]:
        return self.tp + self.fn

    @property
    def negatives(self) -> NDArray[np.int64]:
        return self.fp + self.tn

    @property
    def tpr(self) -> NDArray[np.float64]:
        return self.tp / self.positives

    @property
    def fpr(self) -> NDArray[np.float64]:
        return self.fp / self.negatives

    @property
    def fnr(self) -> NDArray[np.float64]:
        return 1.0 - self.tpr

    @property
    def positive_rate(self) -> NDArray[np.float64]:
        return (self.tp + self.fp) / (self.positives + self.negatives)

    @property
    def accuracy(self) -> NDArray[np.float64]:
        return (self.tp + self.tn) / (self.positives + self.negatives)

    def exact_rates(self, i: int) -> tuple[Fraction, Fraction, Fraction]:
        """``(fpr, tpr, fnr)`` at index ``i`` as exact fractions."""
        tpr = Fraction(int(self.tp[i]), int(self.positives[i]))
        return Fraction(int(self.fp[i]), int(self.negatives[i])), tpr, 1 - tpr


def threshold_stats(predictions: ArrayLike, labels: ArrayLike) -> ThresholdStats:
    """Counts from a ``(k, n)`` matrix of 0/1 predictions against ``n`` labels."""
    pred = np.atleast_2d(np.asarray(predictions, dtype=np.int64))
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if pred.shape[1] != y.size:
        raise ValueError(f"predictions have {pred.shape[1]} columns but there are {y.size} labels")
    pos = y == 1
    tp = pred[:, pos].sum(axis=1)
    fp = pred[:, ~pos].sum(axis=1)
    return ThresholdStats(tp, fp, pos.sum() - tp, (~pos).sum() - fp)


def score_stats(data: GroupedScores, group: int, grid: QueryGrid) -> ThresholdStats:
    """Counts of plain thresholding ``score >= t`` in curve order (decreasing ``t``)."""
    sel = data.group == group
    s = data.score[sel]
    y = data.label[sel]
    pred = (s[None, :] >= grid.thresholds[::-1, None]).astype(np.int64)
    return threshold_stats(pred, y)


def eo_gap(stats0: ThresholdStats, stats1: ThresholdStats, index: int, form: str = "fnr") -> float:
    """Equalized-odds gap at one index.

    ``form="fnr"`` evaluates ``|fpr0 - fpr1| + |fnr0 - fnr1|``; ``form="tpr"``
    evaluates ``|fpr0 - fpr1| + |tpr0 - tpr1|``. Both are computed in exact
    rational arithmetic, so the two forms return the same float.
    """
    f0, t0, n0 = stats0.exact_rates(index)
    f1, t1, n1 = stats1.exact_rates(index)
    if form == "fnr":
        return float(abs(f0 - f1) + abs(n0 - n1))
    if form == "tpr":
        return float(abs(f0 - f1) + abs(t0 - t1))
    raise ValueError(f"form must be 'fnr' or 'tpr', got {form!r}")


def max_eo_gap(stats0: ThresholdStats, stats1: ThresholdStats) -> float:
    if len(stats0) != len(stats1):
        raise ValueError("stats cover different numbers of indices")
    return max(eo_gap(stats0, stats1, i) for i in range(len(stats0)))


def disparate_impact(predictions: ArrayLike, groups: ArrayLike) -> float:
    """``min(rate0, rate1) / max(rate0, rate1)`` of positive-prediction rates."""
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    g = np.asarray(groups).reshape(-1)
    rates = []
    for a in (0, 1):
        sel = g == a
        if not sel.any():
            raise ValueError(f"group {a} has no samples")
        rates.append(float(p[sel].mean()))
    hi = max(rates)
    return 1.0 if hi == 0.0 else min(rates) / hi


def accuracy(predictions: ArrayLike, labels: ArrayLike) -> float:
    p = np.asarray(predictions).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if p.size == 0:
        raise ValueError("accuracy of an empty prediction set")
    if p.shape != y.shape:
        raise ValueError("predictions and labels differ in length")
    return float(np.mean(p == y))


@dataclass(frozen=True)
class LossDecomposition:
    l_pla: float
    l_auc: float
    total: float


def loss_decomposition(reference_fine: RocCurve, pla_curve: RocCurve, fair_curve: RocCurve) -> LossDecomposition:
    l_pla = auc(reference_fine) - auc(pla_curve)
    l_auc = auc(pla_curve) - auc(fair_curve)
    return LossDecomposition(l_pla, l_auc, l_pla + l_auc)


@dataclass(frozen=True)
class ClassifierEvaluation:
    """Monte Carlo evaluation of a randomized classifier at every index."""

    stats: tuple[ThresholdStats, ThresholdStats]
    pooled_accuracy: NDArray[np.float64]
    disparate_impact: NDArray[np.float64]

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.pooled_accuracy))

    @property
    def best_accuracy(self) -> float:
        return float(self.pooled_accuracy[self.best_index])


def evaluate_classifier(
    rc: RandomizedClassifier, data: GroupedScores, seed: int, min_draws: int = 100_000
) -> ClassifierEvaluation:
    """Simulate ``rc`` on ``data`` with at least ``min_draws`` draws per index.

    The rows are replayed ``ceil(min_draws / n)`` times with distinct sample
    ids, so every replay draws fresh randomness. ``data`` is expected on the
    normalized scale.
    """
    n = len(data)
    reps = max(1, math.ceil(min_draws / n))
    ids = np.arange(reps * n)
    scores = np.tile(data.score, reps)
    groups = np.tile(data.group, reps)
    labels = np.tile(data.label, reps)
    preds = np.stack(
        [predict_batch(rc, scores, groups, i, seed, ids, normalized=True) for i in range(rc.k)]
    )
    stats = tuple(threshold_stats(preds[:, groups == a], labels[groups == a]) for a in (0, 1))
    pooled = (preds == labels[None, :]).mean(axis=1)
    rate = [preds[:, groups == a].mean(axis=1) for a in (0, 1)]
    hi = np.maximum(rate[0], rate[1])
    di = np.where(hi == 0, 1.0, np.minimum(rate[0], rate[1]) / np.where(hi == 0, 1.0, hi))
    return ClassifierEvaluation(stats, pooled, di)  # type: ignore[arg-type]
