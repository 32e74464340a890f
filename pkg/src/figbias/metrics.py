"""Exact classification metrics, relative gaps, and report emission.

All rates are percentages. Internal values keep full float precision;
one-decimal rounding happens only at presentation time (and in
``relative_gap``, whose output is itself a presentation value shown in
brackets next to baseline scores).

Metaphoric is the positive class. Zero-denominator conventions: precision,
recall and F1 are 0 when undefined. Each percentage is computed with a
single division (e.g. F1 = 200*tp / (2*tp + fp + fn)) so results are
bit-identical to an exact rational recomputation.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import METAPHORIC

SCHEMA_VERSION = 1

MODE_LABELS = {"default": "Def", "only_pme": "PME", "masked": "Masked"}
MODE_ORDER = ("default", "only_pme", "masked")


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion counts with metaphoric as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_pairs(cls, gold: Sequence[str], pred: Sequence[str]) -> "ConfusionCounts":
        if len(gold) != len(pred):
            raise ValueError(f"{len(gold)} gold labels vs {len(pred)} predictions")
        tp = fp = fn = tn = 0
        for g, p in zip(gold, pred):
            if g == METAPHORIC:
                if p == METAPHORIC:
                    tp += 1
                else:
                    fn += 1
            else:
                if p == METAPHORIC:
                    fp += 1
                else:
                    tn += 1
        return cls(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class MetricBundle:
    """Full-precision percentage scores for one evaluation."""

    accuracy: float
    precision_metaphoric: float
    recall_metaphoric: float
    f1_metaphoric: float
    precision_literal: float
    recall_literal: float
    f1_literal: float
    macro_f1: float

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision_metaphoric": self.precision_metaphoric,
            "recall_metaphoric": self.recall_metaphoric,
            "f1_metaphoric": self.f1_metaphoric,
            "precision_literal": self.precision_literal,
            "recall_literal": self.recall_literal,
            "f1_literal": self.f1_literal,
            "macro_f1": self.macro_f1,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "MetricBundle":
        return cls(**{k: float(row[k]) for k in cls.__dataclass_fields__})


def _rate(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def metrics(counts: ConfusionCounts) -> MetricBundle:
    """Metric bundle from confusion counts; errors on an empty evaluation."""
    if counts.total == 0:
        raise ValueError("cannot compute metrics over zero evaluated examples")
    tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
    f1_met = _rate(200 * tp, 2 * tp + fp + fn)
    f1_lit = _rate(200 * tn, 2 * tn + fn + fp)
    return MetricBundle(
        accuracy=_rate(100 * (tp + tn), counts.total),
        precision_metaphoric=_rate(100 * tp, tp + fp),
        recall_metaphoric=_rate(100 * tp, tp + fn),
        f1_metaphoric=f1_met,
        precision_literal=_rate(100 * tn, tn + fn),
        recall_literal=_rate(100 * tn, tn + fp),
        f1_literal=f1_lit,
        macro_f1=(f1_met + f1_lit) / 2,
    )


def relative_gap(default_score: float, baseline_score: float) -> float:
    """Signed percentage difference of a baseline versus the default score,
    rounded to one decimal (the bracketed presentation value)."""
    if default_score <= 0:
        raise ValueError("relative gap undefined for non-positive default score")
    return round(100.0 * (baseline_score - default_score) / default_score, 1)


def safe_relative_gap(default_score: float | None, baseline_score: float) -> float | None:
    """relative_gap, with undefined gaps mapped to None for report cells."""
    if default_score is None or default_score <= 0:
        return None
    return relative_gap(default_score, baseline_score)


# --- Evaluation reports -----------------------------------------------------

@dataclass(frozen=True)
class EvalCell:
    """Metrics for one (fold, mode, classifier) evaluation."""

    fold: int
    mode: str
    classifier: str
    metrics: MetricBundle
    majority_accuracy: float
    n_test: int
    gap_macro_f1: float | None = None

    def as_dict(self) -> dict:
        return {
            "fold": self.fold,
            "mode": self.mode,
            "classifier": self.classifier,
            "metrics": self.metrics.as_dict(),
            "majority_accuracy": self.majority_accuracy,
            "n_test": self.n_test,
            "gap_macro_f1": self.gap_macro_f1,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "EvalCell":
        return cls(
            fold=int(row["fold"]),
            mode=str(row["mode"]),
            classifier=str(row["classifier"]),
            metrics=MetricBundle.from_dict(row["metrics"]),
            majority_accuracy=float(row["majority_accuracy"]),
            n_test=int(row["n_test"]),
            gap_macro_f1=row.get("gap_macro_f1"),
        )


@dataclass(frozen=True)
class AveragedRow:
    """Per (mode, classifier) metrics averaged over folds, with its gap
    against the default mode computed on the averaged scores."""

    mode: str
    classifier: str
    metrics: MetricBundle
    majority_accuracy: float
    gap_macro_f1: float | None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "classifier": self.classifier,
            "metrics": self.metrics.as_dict(),
            "majority_accuracy": self.majority_accuracy,
            "gap_macro_f1": self.gap_macro_f1,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "AveragedRow":
        return cls(
            mode=str(row["mode"]),
            classifier=str(row["classifier"]),
            metrics=MetricBundle.from_dict(row["metrics"]),
            majority_accuracy=float(row["majority_accuracy"]),
            gap_macro_f1=row.get("gap_macro_f1"),
        )


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    scheme: str
    cells: tuple[EvalCell, ...]
    averages: tuple[AveragedRow, ...]
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": self.dataset,
            "scheme": self.scheme,
            "cells": [c.as_dict() for c in self.cells],
            "averages": [a.as_dict() for a in self.averages],
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, row: dict) -> "EvalReport":
        version = row.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version: {version!r}")
        return cls(
            dataset=str(row["dataset"]),
            scheme=str(row["scheme"]),
            cells=tuple(EvalCell.from_dict(c) for c in row["cells"]),
            averages=tuple(AveragedRow.from_dict(a) for a in row["averages"]),
            notes=tuple(row.get("notes", ())),
        )


def mean_bundle(bundles: Sequence[MetricBundle]) -> MetricBundle:
    if not bundles:
        raise ValueError("cannot average zero metric bundles")
    fields = list(MetricBundle.__dataclass_fields__)
    return MetricBundle(**{
        f: sum(getattr(b, f) for b in bundles) / len(bundles) for f in fields
    })


def build_averages(cells: Sequence[EvalCell]) -> list[AveragedRow]:
    """Fold-averaged rows per (mode, classifier); gaps are computed on the
    averaged macro-F1, matching how cross-validated tables are presented."""
    grouped: dict[tuple[str, str], list[EvalCell]] = {}
    for cell in cells:
        grouped.setdefault((cell.mode, cell.classifier), []).append(cell)

    averaged: dict[tuple[str, str], tuple[MetricBundle, float]] = {}
    for (mode, clf), group in grouped.items():
        bundle = mean_bundle([c.metrics for c in group])
        maj = sum(c.majority_accuracy for c in group) / len(group)
        averaged[(mode, clf)] = (bundle, maj)

    rows = []
    for (mode, clf), (bundle, maj) in averaged.items():
        default = averaged.get(("default", clf))
        if mode == "default":
            gap = 0.0 if default else None
        else:
            gap = safe_relative_gap(default[0].macro_f1 if default else None, bundle.macro_f1)
        rows.append(AveragedRow(mode=mode, classifier=clf, metrics=bundle,
                                majority_accuracy=maj, gap_macro_f1=gap))
    rows.sort(key=lambda r: (r.classifier, _mode_rank(r.mode)))
    return rows


def _mode_rank(mode: str) -> int:
    return MODE_ORDER.index(mode) if mode in MODE_ORDER else len(MODE_ORDER)


def merge_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Combine reports sharing a dataset/scheme (e.g. classical baselines plus
    an external fine-tuned model) into one; averages and gaps are rebuilt."""
    if not reports:
        raise ValueError("nothing to merge")
    datasets = sorted({r.dataset for r in reports})
    schemes = sorted({r.scheme for r in reports})
    cells = [c for r in reports for c in r.cells]
    notes = [n for r in reports for n in r.notes]
    return EvalReport(
        dataset="+".join(datasets),
        scheme="+".join(schemes),
        cells=tuple(cells),
        averages=tuple(build_averages(cells)),
        notes=tuple(notes),
    )


# --- Emission ---------------------------------------------------------------

def _fmt(value: float | None, decimals: int = 1) -> str:
    return "n/a" if value is None else f"{value:.{decimals}f}"


def _fmt_with_gap(score: float, gap: float | None, is_default: bool) -> str:
    if is_default:
        return _fmt(score)
    if gap is None:
        return f"{_fmt(score)} (n/a)"
    return f"{_fmt(score)} ({gap:+.1f}%)"


def render_markdown(report: EvalReport) -> str:
    """Markdown tables: a macro-F1 summary with bracketed gaps, then the
    per-class detail with columns ordered Maj | Default | PME | Masked."""
    lines = [f"# Audit report: {report.dataset} ({report.scheme})", ""]
    classifiers = sorted({row.classifier for row in report.averages})
    modes = [m for m in MODE_ORDER if any(r.mode == m for r in report.averages)]
    modes += sorted({r.mode for r in report.averages} - set(MODE_ORDER))
    by_key = {(r.mode, r.classifier): r for r in report.averages}

    lines.append("## Macro-F1 (averaged over folds)")
    lines.append("")
    header = ["Classifier"] + [MODE_LABELS.get(m, m) for m in modes]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for clf in classifiers:
        row = [clf]
        for mode in modes:
            cell = by_key.get((mode, clf))
            if cell is None:
                row.append("n/a")
            else:
                row.append(_fmt_with_gap(cell.metrics.macro_f1, cell.gap_macro_f1,
                                         mode == "default"))
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")

    lines.append("## Accuracy and metaphor-class precision / recall / F1 (averaged)")
    lines.append("")
    groups = [("Acc", "accuracy"), ("P", "precision_metaphoric"),
              ("R", "recall_metaphoric"), ("F1", "f1_metaphoric")]
    header = ["Classifier", "Maj"]
    for label, _ in groups:
        header += [f"{label} {MODE_LABELS.get(m, m)}" for m in modes]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for clf in classifiers:
        any_row = next((by_key[(m, clf)] for m in modes if (m, clf) in by_key), None)
        row = [clf, _fmt(any_row.majority_accuracy) if any_row else "n/a"]
        for _, attr in groups:
            for mode in modes:
                cell = by_key.get((mode, clf))
                row.append(_fmt(getattr(cell.metrics, attr)) if cell else "n/a")
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")

    if report.notes:
        lines.append("## Notes")
        lines.append("")
        lines.extend(f"- {note}" for note in report.notes)
        lines.append("")
    return "\n".join(lines)


_CSV_COLUMNS = ["dataset", "scheme", "row_type", "fold", "mode", "classifier",
                "accuracy", "precision_metaphoric", "recall_metaphoric", "f1_metaphoric",
                "precision_literal", "recall_literal", "f1_literal", "macro_f1",
                "majority_accuracy", "gap_macro_f1"]


def render_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for cell in report.cells:
        row = {"dataset": report.dataset, "scheme": report.scheme, "row_type": "cell",
               "fold": cell.fold, "mode": cell.mode, "classifier": cell.classifier,
               "majority_accuracy": repr(cell.majority_accuracy),
               "gap_macro_f1": "" if cell.gap_macro_f1 is None else repr(cell.gap_macro_f1)}
        row.update({k: repr(v) for k, v in cell.metrics.as_dict().items()})
        writer.writerow(row)
    for avg in report.averages:
        row = {"dataset": report.dataset, "scheme": report.scheme, "row_type": "average",
               "fold": "", "mode": avg.mode, "classifier": avg.classifier,
               "majority_accuracy": repr(avg.majority_accuracy),
               "gap_macro_f1": "" if avg.gap_macro_f1 is None else repr(avg.gap_macro_f1)}
        row.update({k: repr(v) for k, v in avg.metrics.as_dict().items()})
        writer.writerow(row)
    return buf.getvalue()


def render_json(report: EvalReport) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"


def emit(report: EvalReport, fmt: str, path: str | Path) -> None:
    renderers = {"markdown": render_markdown, "csv": render_csv, "json": render_json}
    if fmt not in renderers:
        raise ValueError(f"unknown report format: {fmt!r}")
    Path(path).write_text(renderers[fmt](report), encoding="utf-8")


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(render_json(report), encoding="utf-8")


def load_report(path: str | Path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
