import json

import numpy as np
import pytest

from froc.classifier import construct_classifier
from froc.data_io import (
    FORMAT_VERSION,
    DataError,
    LogisticCell,
    SyntheticSpec,
    biased_spec,
    bundled_scores_path,
    curve_from_dict,
    curve_to_dict,
    export_classifier,
    export_curve,
    export_plan,
    generate_synthetic,
    import_classifier,
    import_curve,
    import_plan,
    load_scores,
    read_json,
    write_scores,
)
from froc.roc_core import DominanceKind, QueryGrid, RocCurve, dominance, empirical_roc
from froc.transport import fair_roc

from instances import dominating_pair


def _write(tmp_path, text, name="scores.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---------------------------------------------------------------------------
# Score CSV
# ---------------------------------------------------------------------------


class TestLoadScores:
    def test_four_rows(self, tmp_path):
        p = _write(tmp_path, "score,group,label\n0.1,0,0\n0.9,0,1\n0.2,1,0\n0.8,1,1\n")
        data = load_scores(p)
        assert len(data) == 4
        assert data.group.tolist() == [0, 0, 1, 1]

    def test_min_max_normalization(self, tmp_path):
        p = _write(tmp_path, "score,group,label\n-3,0,0\n7,0,1\n2,1,0\n2,1,1\n")
        data = load_scores(p)
        assert data.score.tolist() == [0.0, 1.0, 0.5, 0.5]
        assert data.normalization == (-3.0, 7.0)

    def test_constant_scores(self, tmp_path):
        p = _write(tmp_path, "score,group,label\n4,0,0\n4,0,1\n4,1,0\n4,1,1\n")
        assert load_scores(p).score.tolist() == [0.5] * 4

    def test_bad_group_names_line(self, tmp_path):
        p = _write(tmp_path, "score,group,label\n0.1,0,0\n0.5,2,0\n")
        with pytest.raises(DataError, match=r":3: group"):
            load_scores(p)

    @pytest.mark.parametrize(
        "body, pattern",
        [
            ("score,label,group\n", "header"),
            ("score,group,label\n0.1,0\n", "expected 3 fields"),
            ("score,group,label\nabc,0,0\n", "not a number"),
            ("score,group,label\nnan,0,0\n", "finite"),
            ("score,group,label\n", "no data rows"),
            ("score,group,label\n0.1,0,0\n0.2,0,1\n0.3,1,0\n", "group=1, label=1"),
        ],
    )
    def test_malformed(self, tmp_path, body, pattern):
        with pytest.raises(DataError, match=pattern):
            load_scores(_write(tmp_path, body))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="nope.csv"):
            load_scores(tmp_path / "nope.csv")

    def test_bom_and_blank_lines(self, tmp_path):
        p = tmp_path / "bom.csv"
        p.write_bytes("﻿score,group,label\n0.1,0,0\n\n0.9,0,1\n0.2,1,0\n0.8,1,1\n".encode())
        assert len(load_scores(p)) == 4

    def test_round_trip(self, tmp_path):
        data, _ = generate_synthetic(biased_spec(50, seed=3))
        p = tmp_path / "rt.csv"
        write_scores(p, data)
        back = load_scores(p)
        assert np.array_equal(back.group, data.group)
        assert np.allclose(back.score, (data.score - data.score.min()) / (data.score.max() - data.score.min()))


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


class TestSynthetic:
    def test_deterministic(self):
        a, _ = generate_synthetic(biased_spec(200, seed=5))
        b, _ = generate_synthetic(biased_spec(200, seed=5))
        assert np.array_equal(a.score, b.score)

    def test_slope_bound(self):
        spec = SyntheticSpec.symmetric((0.6, 0.08), (0.4, 0.1), 10)
        b = spec.slope_bounds()
        assert b.u_T == pytest.approx(1 / (4 * 0.08))
        assert b.u_F == pytest.approx(1 / (4 * 0.1))
        assert not b.estimated

    def test_symmetric_groups_match(self):
        data, _ = generate_synthetic(SyntheticSpec.symmetric((0.6, 0.1), (0.4, 0.1), 50_000, seed=1))
        grid = QueryGrid(20)
        c0, c1 = (empirical_roc(data, a, grid) for a in (0, 1))
        assert np.max(np.abs(c0.points - c1.points)) < 0.02
        assert dominance(c0, c0).kind is DominanceKind.CURVE0_UP

    def test_bad_cell(self):
        with pytest.raises(ValueError):
            LogisticCell(0.5, 0.0, 10)

    def test_bundled_file(self):
        data = load_scores(bundled_scores_path())
        assert len(data) == 10_000
        sidecar = read_json(bundled_scores_path().with_suffix(".json"))
        assert sidecar["seed"] == 11
        assert sidecar["format_version"] == FORMAT_VERSION


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


class TestDocuments:
    def test_curve_round_trip(self, tmp_path):
        c = RocCurve([0.1, 0.3], [0.5, 0.9], [1.0, 0.5])
        export_curve(c, tmp_path / "c.json")
        assert import_curve(tmp_path / "c.json") == c
        assert curve_from_dict(curve_to_dict(RocCurve([0.2], [0.4]))) == RocCurve([0.2], [0.4])

    def test_plan_round_trip(self, tmp_path):
        up, down = dominating_pair(np.random.default_rng(2), 15)
        plan = fair_roc(up, down, 0.05)
        export_plan(plan, tmp_path / "p.json")
        back = import_plan(tmp_path / "p.json")
        assert back == plan
        assert [d.kind for d in back.decisions] == [d.kind for d in plan.decisions]

    def test_classifier_round_trip(self, tmp_path):
        up, down = dominating_pair(np.random.default_rng(3), 15, proper=True)
        rc = construct_classifier(fair_roc(up, down, 0.05), up, down, up_group=1)
        export_classifier(rc, tmp_path / "rc.json")
        assert import_classifier(tmp_path / "rc.json") == rc

    def test_wrong_kind(self, tmp_path):
        export_curve(RocCurve([0.2], [0.4]), tmp_path / "c.json")
        with pytest.raises(DataError, match="plan"):
            import_plan(tmp_path / "c.json")

    def test_wrong_version(self, tmp_path):
        export_curve(RocCurve([0.2], [0.4]), tmp_path / "c.json")
        doc = json.loads((tmp_path / "c.json").read_text())
        doc["format_version"] = 99
        (tmp_path / "c.json").write_text(json.dumps(doc))
        with pytest.raises(DataError, match="version"):
            import_curve(tmp_path / "c.json")

    def test_not_json(self, tmp_path):
        (tmp_path / "x.json").write_text("{not json")
        with pytest.raises(DataError):
            read_json(tmp_path / "x.json")
