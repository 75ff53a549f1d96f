"""``froc`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 fairness check failed,
4 oracle infeasible.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path

import numpy as np

from froc import data_io
from froc.classifier import ClassifierError
from froc.data_io import DataError
from froc.metrics import evaluate_classifier
from froc.oracle import MAX_K, OracleInfeasibleError, optimality_report
from froc.pipeline import (
    IntersectingRocError,
    SweepRow,
    baseline_accuracy,
    build_classifier,
    prepare,
    sweep,
    transport,
)
from froc.roc_core import RocError, auc, interpolate
from froc.transport import auc_loss, verify_fairness

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_UNFAIR = 3
EXIT_INFEASIBLE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    return out


def _load(args: argparse.Namespace):
    data = data_io.load_scores(args.input)
    return prepare(data, args.k, allow_intersecting=args.allow_intersecting)


def _dump(doc: dict, path: Path) -> None:
    data_io.write_json(doc, path)


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_roc(args: argparse.Namespace) -> int:
    prep = _load(args)
    out = _out_dir(args)
    for a in (0, 1):
        data_io.export_curve(prep.curves[a], out / f"roc_group{a}.json")
    alpha = np.linspace(0.0, 1.0, 1001)
    t0 = np.asarray(interpolate(prep.curves[0], alpha))
    t1 = np.asarray(interpolate(prep.curves[1], alpha))
    _write_csv(out / "roc_plot.csv", ["alpha", "tpr0", "tpr1", "gap"], zip(alpha.tolist(), t0.tolist(), t1.tolist(), np.abs(t1 - t0).tolist()))
    print(f"k={args.k} up_group={prep.up_group} dominance={prep.dominance.kind.value}")
    print(f"auc0={auc(prep.curves[0]):.6f} auc1={auc(prep.curves[1]):.6f}")
    return EXIT_OK


def _fairness_doc(plan, prep, eps) -> dict:
    report = verify_fairness(plan.fair_up, plan.fair_down, eps)
    return {
        "format_version": data_io.FORMAT_VERSION,
        "kind": "fairness-report",
        "eps": eps,
        "up_group": prep.up_group,
        "max_index_gap": report.max_index_gap,
        "max_dense_gap": report.max_dense_gap,
        "pass": report.passed,
        "auc_loss": auc_loss(plan, prep.roc_up),
        "shift_counts": {kind.value: int(n) for kind, n in _counts(plan).items()},
        "diagnostics": [d.message for d in plan.diagnostics],
    }


def _counts(plan):
    counts = {}
    for kind in plan.kinds:
        counts[kind] = counts.get(kind, 0) + 1
    return counts


def cmd_transport(args: argparse.Namespace) -> int:
    prep = _load(args)
    out = _out_dir(args)
    plan = transport(prep, args.eps, args.repair_monotone)
    data_io.export_plan(plan, out / "plan.json")
    doc = _fairness_doc(plan, prep, args.eps)
    _dump(doc, out / "fairness.json")
    print(
        f"eps={args.eps} max_index_gap={doc['max_index_gap']:.6g} "
        f"auc_loss={doc['auc_loss']:.6g} pass={doc['pass']}"
    )
    return EXIT_OK if doc["pass"] else EXIT_UNFAIR


def cmd_classify(args: argparse.Namespace) -> int:
    prep = _load(args)
    out = _out_dir(args)
    plan = transport(prep, args.eps, args.repair_monotone)
    rc = build_classifier(prep, plan)
    data_io.export_plan(plan, out / "plan.json")
    data_io.export_classifier(rc, out / "classifier.json")
    passed = verify_fairness(plan.fair_up, plan.fair_down, args.eps).passed
    print(f"classifier with k={rc.k} written to {out / 'classifier.json'} (fair={passed})")
    return EXIT_OK if passed else EXIT_UNFAIR


def cmd_evaluate(args: argparse.Namespace) -> int:
    prep = _load(args)
    out = _out_dir(args)
    if args.classifier:
        rc = data_io.import_classifier(args.classifier)
        if rc.k != args.k:
            raise UsageError(f"classifier has k={rc.k} but --k is {args.k}")
    else:
        rc = build_classifier(prep, transport(prep, args.eps, args.repair_monotone))
    ev = evaluate_classifier(rc, prep.data, args.seed, args.draws)
    s0, s1 = ev.stats
    rows = []
    for i in range(rc.k):
        rows.append(
            (
                i,
                rc.thresholds[i],
                float(s0.fpr[i]),
                float(s0.tpr[i]),
                float(s1.fpr[i]),
                float(s1.tpr[i]),
                float(ev.pooled_accuracy[i]),
                float(ev.disparate_impact[i]),
            )
        )
    _write_csv(
        out / "evaluation.csv",
        ["index", "threshold", "fpr0", "tpr0", "fpr1", "tpr1", "accuracy", "disparate_impact"],
        rows,
    )
    base, base_i = baseline_accuracy(prep)
    doc = {
        "format_version": data_io.FORMAT_VERSION,
        "kind": "evaluation",
        "seed": args.seed,
        "draws": args.draws,
        "best_index": ev.best_index,
        "best_accuracy": ev.best_accuracy,
        "baseline_accuracy": base,
        "baseline_index": base_i,
        "disparate_impact_at_best": float(ev.disparate_impact[ev.best_index]),
    }
    _dump(doc, out / "evaluation.json")
    print(f"best accuracy {ev.best_accuracy:.5f} at index {ev.best_index} (baseline {base:.5f})")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.eps_start < args.eps_stop:
        raise UsageError("--eps-start must be smaller than --eps-stop")
    prep = _load(args)
    out = _out_dir(args)
    eps_values = np.linspace(args.eps_start, args.eps_stop, args.eps_steps).tolist()
    rows = sweep(prep, eps_values, args.seed, args.draws, args.repair_monotone)
    _write_csv(out / "sweep.csv", list(SweepRow.FIELDS), (r.as_tuple() for r in rows))
    base, _ = baseline_accuracy(prep)
    unfair = [r.eps for r in rows if r.max_gap > r.eps + 1e-9]
    print(f"baseline accuracy {base:.5f}; {len(rows)} sweep points written to {out / 'sweep.csv'}")
    if unfair:
        print(f"fairness check failed at eps {unfair}", file=sys.stderr)
        return EXIT_UNFAIR
    return EXIT_OK


def cmd_oracle_compare(args: argparse.Namespace) -> int:
    if args.k > MAX_K:
        raise UsageError(f"oracle-compare needs --k <= {MAX_K}")
    prep = _load(args)
    out = _out_dir(args)
    rep = optimality_report(prep.roc_up, prep.roc_down, args.eps, args.delta, args.boundary_only)
    doc = {
        "format_version": data_io.FORMAT_VERSION,
        "kind": "optimality-report",
        "eps": args.eps,
        "delta": args.delta,
        "boundary_only": args.boundary_only,
        **rep.as_dict(),
    }
    _dump(doc, out / "optimality.json")
    print(
        f"froc_auc={rep.froc_auc:.6f} oracle_auc={rep.oracle_auc:.6f} gap={rep.gap:.3g} "
        f"assumption_42_holds={rep.assumption_42_holds}"
    )
    return EXIT_OK


def cmd_gen_synthetic(args: argparse.Namespace) -> int:
    if args.preset == "biased":
        spec = data_io.biased_spec(args.n, args.seed)
    else:
        spec = data_io.SyntheticSpec.symmetric((0.62, 0.1), (0.38, 0.1), args.n, args.seed)
    data, _ = data_io.generate_synthetic(spec)
    out = Path(args.out)
    if out.suffix.lower() != ".csv":
        raise UsageError("--out for gen-synthetic must name a .csv file")
    if out.parent and not out.parent.exists():
        raise DataError(f"output directory {out.parent} does not exist")
    data_io.write_scores(out, data)
    data_io.write_json(data_io.spec_to_dict(spec), out.with_suffix(".json"))
    print(f"wrote {len(data)} rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="froc", description="Fair ROC transport for binary protected groups.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: argparse.ArgumentParser, eps: bool = True) -> None:
        p.add_argument("--input", required=True, help="score CSV with header score,group,label")
        p.add_argument("--k", type=_positive_int, default=50, help="number of query thresholds (default 50)")
        if eps:
            p.add_argument("--eps", type=_positive_float, default=0.05, help="L1 fairness radius (default 0.05)")
        p.add_argument("--out", default="froc_out", help="output directory (default froc_out)")
        p.add_argument("--repair-monotone", action="store_true", help="repair a non-monotone fair curve")
        p.add_argument(
            "--allow-intersecting",
            action="store_true",
            help="proceed when group ROCs cross outside fpr<=0.2 / tpr>=0.5",
        )

    p = sub.add_parser("roc", help="build both group ROCs and plot data")
    common(p, eps=False)
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("transport", help="run the fair transport and verify fairness")
    common(p)
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("classify", help="build the randomized classifier")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="Monte Carlo evaluation of the randomized classifier")
    common(p)
    p.add_argument("--classifier", help="classifier JSON (default: build one with --eps)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=_positive_int, default=100_000, help="draws per threshold index")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="eps sweep of AUC loss, accuracy, disparate impact and gap")
    common(p, eps=False)
    p.add_argument("--eps-start", type=_positive_float, default=0.01)
    p.add_argument("--eps-stop", type=_positive_float, default=0.1)
    p.add_argument("--eps-steps", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=_positive_int, default=100_000, help="draws per threshold index")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-compare", help="compare against the brute-force optimum (k <= 25)")
    common(p)
    p.add_argument("--delta", type=_positive_float, default=1e-3, help="candidate spacing (>= 1e-4)")
    p.add_argument("--boundary-only", action="store_true", help="omit interior candidates")
    p.set_defaults(func=cmd_oracle_compare, k=10)

    p = sub.add_parser("gen-synthetic", help="write a synthetic score CSV and its generator sidecar")
    p.add_argument("--out", required=True, help="CSV path; the sidecar JSON goes next to it")
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--n", type=_positive_int, default=2500, help="rows per (group, label) cell")
    p.add_argument("--preset", choices=("biased", "fair"), default="biased")
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except UsageError as exc:
        print(f"froc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleInfeasibleError as exc:
        print(f"froc: oracle infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, RocError, IntersectingRocError, ClassifierError) as exc:
        print(f"froc: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"froc: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
