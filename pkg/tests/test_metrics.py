"""Metric arithmetic against an independent brute-force oracle."""

from __future__ import annotations

import csv
import io
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from figbias.metrics import (ConfusionCounts, EvalCell, EvalReport, MetricBundle,
                             build_averages, emit, load_report, mean_bundle,
                             merge_reports, metrics, relative_gap, render_csv,
                             render_markdown, safe_relative_gap, write_report)

M, L = "metaphoric", "literal"


def oracle_metrics(gold: list[str], pred: list[str]) -> dict[str, float]:
    """Recompute every rate from raw (gold, pred) pairs with exact rationals.

    Independent of ConfusionCounts and of the production formulas: counts are
    tallied here, and each percentage is an exact Fraction converted to float
    at the end (one correctly-rounded conversion per value, like the single
    division the production code performs).
    """
    tp = sum(1 for g, p in zip(gold, pred) if g == M and p == M)
    fn = sum(1 for g, p in zip(gold, pred) if g == M and p == L)
    fp = sum(1 for g, p in zip(gold, pred) if g == L and p == M)
    tn = sum(1 for g, p in zip(gold, pred) if g == L and p == L)

    def pct(num: int, den: int) -> float:
        return float(Fraction(100 * num, den)) if den else 0.0

    f1_m = pct(2 * tp, 2 * tp + fp + fn)
    f1_l = pct(2 * tn, 2 * tn + fn + fp)
    return {
        "accuracy": pct(tp + tn, tp + fp + fn + tn),
        "precision_metaphoric": pct(tp, tp + fp),
        "recall_metaphoric": pct(tp, tp + fn),
        "f1_metaphoric": f1_m,
        "precision_literal": pct(tn, tn + fn),
        "recall_literal": pct(tn, tn + fp),
        "f1_literal": f1_l,
        "macro_f1": (f1_m + f1_l) / 2,
    }


def test_hand_computed_example():
    gold = [M, M, M, L, L, L]
    pred = [M, M, L, L, L, L]
    bundle = metrics(ConfusionCounts.from_pairs(gold, pred))
    assert round(bundle.precision_metaphoric, 1) == 100.0
    assert round(bundle.recall_metaphoric, 1) == 66.7
    assert round(bundle.f1_metaphoric, 1) == 80.0
    assert round(bundle.f1_literal, 1) == 85.7
    assert round(bundle.macro_f1, 1) == 82.9
    assert bundle.as_dict() == oracle_metrics(gold, pred)


def test_perfect_predictions():
    gold = [M, L, M, L]
    assert metrics(ConfusionCounts.from_pairs(gold, gold)).macro_f1 == 100.0


def test_all_metaphoric_predictor_on_one_third_metaphoric_data():
    gold = [M] * 120 + [L] * 240
    pred = [M] * 360
    bundle = metrics(ConfusionCounts.from_pairs(gold, pred))
    assert round(bundle.accuracy, 1) == 33.3
    assert bundle.recall_metaphoric == 100.0
    assert bundle.precision_literal == 0.0 and bundle.recall_literal == 0.0


def test_zero_total_is_an_error():
    with pytest.raises(ValueError):
        metrics(ConfusionCounts(0, 0, 0, 0))


def test_mismatched_pair_lengths_rejected():
    with pytest.raises(ValueError):
        ConfusionCounts.from_pairs([M], [M, L])


def test_oracle_agreement_on_random_cases():
    rng = random.Random(20240)
    for _ in range(200):
        n = rng.randint(1, 60)
        gold = [rng.choice((M, L)) for _ in range(n)]
        pred = [rng.choice((M, L)) for _ in range(n)]
        assert metrics(ConfusionCounts.from_pairs(gold, pred)).as_dict() \
            == oracle_metrics(gold, pred)


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_macro_f1_invariant_under_class_swap(tp, fp, fn, tn):
    if tp + fp + fn + tn == 0:
        return
    direct = metrics(ConfusionCounts(tp, fp, fn, tn))
    swapped = metrics(ConfusionCounts(tn, fn, fp, tp))
    assert direct.macro_f1 == swapped.macro_f1
    assert direct.f1_metaphoric == swapped.f1_literal


class TestRelativeGap:
    # Published score pairs and the bracketed gap printed next to them.
    @pytest.mark.parametrize("default,baseline,expected", [
        (75.78, 56.67, -25.2),
        (87.36, 80.88, -7.4),
        (88.81, 91.14, +2.6),
    ])
    def test_published_pairs(self, default, baseline, expected):
        assert relative_gap(default, baseline) == pytest.approx(expected, abs=0.1)

    def test_rounded_to_one_decimal(self):
        assert relative_gap(80.0, 60.0) == -25.0
        assert relative_gap(3.0, 4.0) == 33.3

    def test_zero_default_is_an_error(self):
        with pytest.raises(ValueError):
            relative_gap(0.0, 10.0)
        assert safe_relative_gap(0.0, 10.0) is None
        assert safe_relative_gap(None, 10.0) is None


def _bundle(macro: float) -> MetricBundle:
    return MetricBundle(accuracy=macro, precision_metaphoric=macro, recall_metaphoric=macro,
                        f1_metaphoric=macro, precision_literal=macro, recall_literal=macro,
                        f1_literal=macro, macro_f1=macro)


def _cell(fold: int, mode: str, clf: str, macro: float) -> EvalCell:
    return EvalCell(fold=fold, mode=mode, classifier=clf, metrics=_bundle(macro),
                    majority_accuracy=50.0, n_test=10)


def test_averages_and_gaps_computed_on_averaged_scores():
    cells = [_cell(0, "default", "nb", 80.0), _cell(1, "default", "nb", 90.0),
             _cell(0, "only_pme", "nb", 60.0), _cell(1, "only_pme", "nb", 70.0)]
    rows = {(r.mode, r.classifier): r for r in build_averages(cells)}
    assert rows[("default", "nb")].metrics.macro_f1 == 85.0
    assert rows[("default", "nb")].gap_macro_f1 == 0.0
    assert rows[("only_pme", "nb")].metrics.macro_f1 == 65.0
    # Gap on the averaged scores: 100 * (65 - 85) / 85.
    assert rows[("only_pme", "nb")].gap_macro_f1 == relative_gap(85.0, 65.0)


def test_mean_bundle_requires_input():
    with pytest.raises(ValueError):
        mean_bundle([])


def _report() -> EvalReport:
    cells = [_cell(0, m, c, v) for (m, c, v) in [
        ("default", "nb", 90.0), ("only_pme", "nb", 45.0), ("masked", "nb", 80.0),
        ("default", "majority", 33.3), ("only_pme", "majority", 33.3),
        ("masked", "majority", 33.3)]]
    return EvalReport(dataset="demo", scheme="random_kfold", cells=tuple(cells),
                      averages=tuple(build_averages(cells)), notes=("a note",))


def test_report_json_round_trip(tmp_path):
    report = _report()
    path = tmp_path / "report.json"
    write_report(report, path)
    assert load_report(path) == report


def test_schema_version_checked(tmp_path):
    path = tmp_path / "report.json"
    path.write_text('{"schema_version": 99, "dataset": "d", "scheme": "s", '
                    '"cells": [], "averages": []}')
    with pytest.raises(ValueError):
        load_report(path)


def test_markdown_layout(tmp_path):
    report = _report()
    path = tmp_path / "report.md"
    emit(report, "markdown", path)
    text = path.read_text()
    # Mode columns ordered Def | PME | Masked, majority first in the detail table.
    assert "| Classifier | Def | PME | Masked |" in text
    # 4 metric column groups, each spanning the three modes.
    assert ("| Classifier | Maj | Acc Def | Acc PME | Acc Masked "
            "| P Def | P PME | P Masked | R Def | R PME | R Masked "
            "| F1 Def | F1 PME | F1 Masked |") in text
    assert "(-50.0%)" in text  # 45 vs 90 for nb only_pme


def test_markdown_renders_undefined_gap_as_na():
    cells = [_cell(0, "default", "nb", 0.0), _cell(0, "masked", "nb", 10.0)]
    report = EvalReport(dataset="d", scheme="s", cells=tuple(cells),
                        averages=tuple(build_averages(cells)))
    assert "10.0 (n/a)" in render_markdown(report)


def test_csv_round_trips_through_generic_parser():
    report = _report()
    text = render_csv(report)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == len(report.cells) + len(report.averages)
    cell_rows = [r for r in rows if r["row_type"] == "cell"]
    for row, cell in zip(cell_rows, report.cells):
        assert float(row["macro_f1"]) == cell.metrics.macro_f1
        assert row["mode"] == cell.mode


def test_merge_reports_rebuilds_averages():
    base = _report()
    extra_cells = (_cell(0, "default", "encoder", 95.0), _cell(0, "masked", "encoder", 60.0))
    other = EvalReport(dataset="demo", scheme="random_kfold", cells=extra_cells,
                       averages=tuple(build_averages(list(extra_cells))))
    merged = merge_reports([base, other])
    assert len(merged.cells) == len(base.cells) + 2
    rows = {(r.mode, r.classifier): r for r in merged.averages}
    assert rows[("masked", "encoder")].gap_macro_f1 == relative_gap(95.0, 60.0)
