"""Post-processing transport of group ROC curves toward equalized ROCs."""

from froc.classifier import RandomizedClassifier, construct_classifier, convex_mix, predict, predict_batch
from froc.geometry import NormRhombus, boundary_cut, cut_shift, norm_rhombus
from froc.roc_core import GroupedScores, QueryGrid, RocCurve, RocPoint, auc, empirical_roc, pla
from froc.transport import ShiftKind, TransportPlan, auc_loss, fair_roc, verify_fairness

__version__ = "0.1.0"

__all__ = [
    "GroupedScores",
    "NormRhombus",
    "QueryGrid",
    "RandomizedClassifier",
    "RocCurve",
    "RocPoint",
    "ShiftKind",
    "TransportPlan",
    "auc",
    "auc_loss",
    "boundary_cut",
    "construct_classifier",
    "convex_mix",
    "cut_shift",
    "empirical_roc",
    "fair_roc",
    "norm_rhombus",
    "pla",
    "predict",
    "predict_batch",
    "verify_fairness",
]
