"""Classification scores and the shared report JSON schema.

Kept dependency-free on purpose: the auditing toolkit defines the schema
(``schema_version: 1``) as its external interface, and this module
produces documents conforming to it without importing the toolkit.
"""

from __future__ import annotations

from typing import Sequence

from .data import METAPHORIC

SCHEMA_VERSION = 1


def metric_bundle(gold: Sequence[str], pred: Sequence[str]) -> dict[str, float]:
    """Percentages from raw label pairs; metaphoric is the positive class,
    undefined rates are 0."""
    if not gold or len(gold) != len(pred):
        raise ValueError("gold and predictions must be non-empty and aligned")
    tp = sum(1 for g, p in zip(gold, pred) if g == METAPHORIC and p == METAPHORIC)
    fn = sum(1 for g, p in zip(gold, pred) if g == METAPHORIC and p != METAPHORIC)
    fp = sum(1 for g, p in zip(gold, pred) if g != METAPHORIC and p == METAPHORIC)
    tn = len(gold) - tp - fn - fp

    def rate(num: int, den: int) -> float:
        return num / den if den else 0.0

    f1_met = rate(200 * tp, 2 * tp + fp + fn)
    f1_lit = rate(200 * tn, 2 * tn + fn + fp)
    return {
        "accuracy": rate(100 * (tp + tn), len(gold)),
        "precision_metaphoric": rate(100 * tp, tp + fp),
        "recall_metaphoric": rate(100 * tp, tp + fn),
        "f1_metaphoric": f1_met,
        "precision_literal": rate(100 * tn, tn + fn),
        "recall_literal": rate(100 * tn, tn + fp),
        "f1_literal": f1_lit,
        "macro_f1": (f1_met + f1_lit) / 2,
    }


def majority_accuracy(train_gold: Sequence[str], test_gold: Sequence[str]) -> float:
    met = sum(1 for g in train_gold if g == METAPHORIC)
    label = METAPHORIC if met >= len(train_gold) - met else "literal"
    return 100.0 * sum(1 for g in test_gold if g == label) / len(test_gold)


def build_report(dataset: str, scheme: str, cells: list[dict],
                 notes: list[str]) -> dict:
    """Assemble the schema_version-1 document from per-fold cell dicts."""
    grouped: dict[tuple[str, str], list[dict]] = {}
    for cell in cells:
        grouped.setdefault((cell["mode"], cell["classifier"]), []).append(cell)
    averages = []
    for (mode, classifier), group in sorted(grouped.items()):
        keys = group[0]["metrics"].keys()
        metrics = {k: sum(c["metrics"][k] for c in group) / len(group) for k in keys}
        maj = sum(c["majority_accuracy"] for c in group) / len(group)
        averages.append({"mode": mode, "classifier": classifier, "metrics": metrics,
                         "majority_accuracy": maj,
                         "gap_macro_f1": 0.0 if mode == "default" else None})
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": dataset,
        "scheme": scheme,
        "cells": cells,
        "averages": averages,
        "notes": notes,
    }
