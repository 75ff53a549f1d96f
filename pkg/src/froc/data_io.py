"""Score files, synthetic data and JSON documents."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from froc.classifier import Mixture, RandomizedClassifier, VertexClassifier, VertexKind
from froc.roc_core import GroupedScores, QueryGrid, RocCurve, RocPoint, SlopeBounds, min_max_normalize
from froc.transport import Diagnostic, ShiftKind, TransportPlan

FORMAT_VERSION = 1
HEADER = ["score", "group", "label"]
BUNDLED_SCORES = "biased_scores.csv"


class DataError(ValueError):
    """Malformed input file or document."""


# ---------------------------------------------------------------------------
# Score CSV
# ---------------------------------------------------------------------------


def _parse_binary(text: str, name: str, line: int, path: Path) -> int:
    t = text.strip()
    if t not in ("0", "1"):
        raise DataError(f"{path}:{line}: {name} must be 0 or 1, got {text!r}")
    return int(t)


def load_scores(path: str | Path) -> GroupedScores:
    """Read a ``score,group,label`` CSV and min-max normalize the scores.

    Raises
    ------
    DataError
        Missing file, bad header, malformed row (with its line number) or a
        ``(group, label)`` cell without rows.
    """
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    scores: list[float] = []
    groups: list[int] = []
    labels: list[int] = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise DataError(f"{path}:1: header must be exactly 'score,group,label', got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            try:
                s = float(row[0])
            except ValueError:
                raise DataError(f"{path}:{line}: score is not a number: {row[0]!r}") from None
            if not math.isfinite(s):
                raise DataError(f"{path}:{line}: score must be finite, got {row[0]!r}")
            scores.append(s)
            groups.append(_parse_binary(row[1], "group", line, path))
            labels.append(_parse_binary(row[2], "label", line, path))

    if not scores:
        raise DataError(f"{path}: no data rows")
    raw = np.asarray(scores)
    g = np.asarray(groups)
    y = np.asarray(labels)
    for a in (0, 1):
        for lab in (0, 1):
            if not np.any((g == a) & (y == lab)):
                raise DataError(f"{path}: no rows with group={a}, label={lab}")
    lo, hi = float(raw.min()), float(raw.max())
    return GroupedScores(min_max_normalize(raw, lo, hi), g, y, (lo, hi))


def write_scores(path: str | Path, data: GroupedScores) -> None:
    """Write ``data`` as a score CSV (scores mapped back to the raw scale)."""
    lo, hi = data.normalization
    raw = data.score if (lo, hi) == (0.0, 1.0) else lo + data.score * (hi - lo)
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for s, g, y in zip(raw.tolist(), data.group.tolist(), data.label.tolist()):
                w.writerow([repr(s), g, y])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


def bundled_scores_path() -> Path:
    """Path of the biased example score file shipped with the package."""
    return Path(str(resources.files("froc") / "data" / BUNDLED_SCORES))


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticCell:
    """Scores ``clip(Logistic(loc, scale), 0, 1)`` for one ``(group, label)`` cell."""

    loc: float
    scale: float
    n: int

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    def survival(self, t: np.ndarray) -> np.ndarray:
        """``P(score >= t)`` for ``t`` in ``(0, 1]``."""
        return 1.0 / (1.0 + np.exp((np.asarray(t, dtype=np.float64) - self.loc) / self.scale))


@dataclass(frozen=True)
class SyntheticSpec:
    """Four logistic cells keyed by ``(group, label)`` and a seed."""

    cells: dict[tuple[int, int], LogisticCell] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self) -> None:
        missing = [c for c in ((0, 0), (0, 1), (1, 0), (1, 1)) if c not in self.cells]
        if missing:
            raise ValueError(f"SyntheticSpec lacks cells {missing}")

    @classmethod
    def symmetric(
        cls,
        pos: tuple[float, float],
        neg: tuple[float, float],
        n: int,
        seed: int = 0,
    ) -> SyntheticSpec:
        """Both groups share the same ``(loc, scale)`` per label."""
        cells = {(a, 1): LogisticCell(*pos, n) for a in (0, 1)}
        cells.update({(a, 0): LogisticCell(*neg, n) for a in (0, 1)})
        return cls(cells, seed)

    def slope_bounds(self) -> SlopeBounds:
        """Analytic ``u_T``/``u_F``: the largest logistic density ``1 / (4 scale)`` per label."""
        u_t = max(1.0 / (4.0 * self.cells[(a, 1)].scale) for a in (0, 1))
        u_f = max(1.0 / (4.0 * self.cells[(a, 0)].scale) for a in (0, 1))
        return SlopeBounds(u_t, u_f, estimated=False)


def biased_spec(n: int = 2500, seed: int = 11) -> SyntheticSpec:
    """Preset used for the bundled score file: group 1 is better separated."""
    return SyntheticSpec(
        {
            (1, 1): LogisticCell(0.64, 0.09, n),
            (1, 0): LogisticCell(0.36, 0.09, n),
            (0, 1): LogisticCell(0.62, 0.097, n),
            (0, 0): LogisticCell(0.38, 0.097, n),
        },
        seed,
    )


def spec_to_dict(spec: SyntheticSpec) -> dict:
    """Generator parameters plus analytic slope bounds (sidecar of a score file)."""
    b = spec.slope_bounds()
    return {
        **_header("synthetic-spec"),
        "seed": spec.seed,
        "cells": [
            {"group": a, "label": lab, "loc": c.loc, "scale": c.scale, "n": c.n}
            for (a, lab), c in sorted(spec.cells.items())
        ],
        "slope_bounds": {"u_T": b.u_T, "u_F": b.u_F},
    }


def generate_synthetic(spec: SyntheticSpec) -> tuple[GroupedScores, SlopeBounds]:
    """Sample a dataset from ``spec``; identical seeds give identical data."""
    rng = np.random.default_rng(spec.seed)
    scores, groups, labels = [], [], []
    for (a, lab) in sorted(spec.cells):
        cell = spec.cells[(a, lab)]
        scores.append(np.clip(rng.logistic(cell.loc, cell.scale, cell.n), 0.0, 1.0))
        groups.append(np.full(cell.n, a))
        labels.append(np.full(cell.n, lab))
    data = GroupedScores(np.concatenate(scores), np.concatenate(groups), np.concatenate(labels))
    return data, spec.slope_bounds()


def analytic_roc(spec: SyntheticSpec, group: int, grid: QueryGrid) -> RocCurve:
    """Population ROC of ``group`` at the grid thresholds (decreasing-threshold order)."""
    t = grid.thresholds[::-1]
    return RocCurve(spec.cells[(group, 0)].survival(t), spec.cells[(group, 1)].survival(t), t)


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def _header(kind: str) -> dict:
    return {"format_version": FORMAT_VERSION, "kind": kind}


def _check_header(doc: dict, kind: str, where: str) -> None:
    if not isinstance(doc, dict):
        raise DataError(f"{where}: expected a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{where}: unsupported format_version {doc.get('format_version')!r}")
    if doc.get("kind") != kind:
        raise DataError(f"{where}: expected kind {kind!r}, got {doc.get('kind')!r}")


def curve_to_dict(curve: RocCurve) -> dict:
    return {
        **_header("curve"),
        "fpr": curve.fpr.tolist(),
        "tpr": curve.tpr.tolist(),
        "thresholds": None if curve.thresholds is None else curve.thresholds.tolist(),
    }


def curve_from_dict(doc: dict, where: str = "curve") -> RocCurve:
    _check_header(doc, "curve", where)
    try:
        return RocCurve(doc["fpr"], doc["tpr"], doc.get("thresholds"))
    except (KeyError, TypeError) as exc:
        raise DataError(f"{where}: malformed curve document ({exc})") from exc


def plan_to_dict(plan: TransportPlan) -> dict:
    return {
        **_header("plan"),
        "eps": plan.eps,
        "decisions": [
            {
                "index": d.index,
                "kind": d.kind.value,
                "raw_target": list(d.raw_target),
                "target": list(d.target),
            }
            for d in plan.decisions
        ],
        "fair_up": curve_to_dict(plan.fair_up),
        "fair_down": curve_to_dict(plan.fair_down),
        "diagnostics": [
            {"code": d.code, "message": d.message, "indices": list(d.indices)} for d in plan.diagnostics
        ],
    }


def plan_from_dict(doc: dict, where: str = "plan") -> TransportPlan:
    _check_header(doc, "plan", where)
    try:
        decisions = doc["decisions"]
        kinds = [ShiftKind(d["kind"]) for d in decisions]
        raw = [d["raw_target"] for d in decisions]
        codes = [tuple(ShiftKind).index(k) for k in kinds]
        diags = tuple(Diagnostic(d["code"], d["message"], tuple(d["indices"])) for d in doc["diagnostics"])
        return TransportPlan(
            float(doc["eps"]),
            np.asarray(codes, dtype=np.int8),
            np.asarray(raw, dtype=np.float64).reshape(-1, 2),
            curve_from_dict(doc["fair_up"], f"{where}.fair_up"),
            curve_from_dict(doc["fair_down"], f"{where}.fair_down"),
            diags,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{where}: malformed plan document ({exc})") from exc


def _vertex_to_dict(v: VertexClassifier) -> dict:
    return {"kind": v.kind.value, "point": list(v.point), "index": v.index, "group": v.group}


def _vertex_from_dict(d: dict) -> VertexClassifier:
    return VertexClassifier(VertexKind(d["kind"]), RocPoint(*d["point"]), d.get("index"), d.get("group"))


def classifier_to_dict(rc: RandomizedClassifier) -> dict:
    return {
        **_header("classifier"),
        "k": rc.k,
        "thresholds": list(rc.thresholds),
        "normalization": list(rc.normalization),
        "up_group": rc.up_group,
        "mixtures": [
            [{"vertices": [_vertex_to_dict(v) for v in m.vertices], "probs": list(m.probs)} for m in per_group]
            for per_group in rc.mixtures
        ],
    }


def classifier_from_dict(doc: dict, where: str = "classifier") -> RandomizedClassifier:
    _check_header(doc, "classifier", where)
    try:
        mixtures = tuple(
            tuple(Mixture(tuple(_vertex_from_dict(v) for v in m["vertices"]), tuple(m["probs"])) for m in per_group)
            for per_group in doc["mixtures"]
        )
        return RandomizedClassifier(
            tuple(float(t) for t in doc["thresholds"]),
            (float(doc["normalization"][0]), float(doc["normalization"][1])),
            int(doc["up_group"]),
            mixtures,  # type: ignore[arg-type]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: malformed classifier document ({exc})") from exc


def write_json(doc: dict, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc


def export_curve(curve: RocCurve, path: str | Path) -> None:
    write_json(curve_to_dict(curve), path)


def import_curve(path: str | Path) -> RocCurve:
    return curve_from_dict(read_json(path), str(path))


def export_plan(plan: TransportPlan, path: str | Path) -> None:
    write_json(plan_to_dict(plan), path)


def import_plan(path: str | Path) -> TransportPlan:
    return plan_from_dict(read_json(path), str(path))


def export_classifier(rc: RandomizedClassifier, path: str | Path) -> None:
    write_json(classifier_to_dict(rc), path)


def import_classifier(path: str | Path) -> RandomizedClassifier:
    return classifier_from_dict(read_json(path), str(path))
