"""Desk-scale incomplete-information classifiers and the audit loop.

Three classifiers expose the biases this toolkit measures: a constant
majority-class predictor, a per-key memorizer that predicts from the
identity of the target expression alone, and a bag-of-words multinomial
naive Bayes over the ablated text. Every tie anywhere breaks toward
``metaphoric``; the single fixed rule keeps all oracles exact.

All classifiers are deterministic functions of the training multiset and
their hyperparameters, and all models are immutable after training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .ablate import MASK, AblatedExample, ablate
from .corpus import Dataset, Instance, LITERAL, METAPHORIC, SplitKey, split_key_of
from .errors import AuditError, KeyingFallback, SingleLabelError
from .metrics import (ConfusionCounts, EvalCell, EvalReport, build_averages,
                      metrics, safe_relative_gap)
from .split import SplitPlan, verify

CLASSIFIERS = ("majority", "memorizer", "nb")
DEFAULT_ALPHA_GRID = (0.1, 0.5, 1.0)


def _majority_label(met: int, lit: int) -> str:
    # Tie breaks toward metaphoric everywhere in this module.
    return METAPHORIC if met >= lit else LITERAL


@dataclass(frozen=True)
class MajorityModel:
    label: str
    counts: tuple[int, int]  # (metaphoric, literal)

    def predict(self, _example: AblatedExample | None = None) -> str:
        return self.label


def train_majority(train: Sequence[AblatedExample]) -> MajorityModel:
    if not train:
        raise ValueError("cannot train a majority classifier on no examples")
    met = sum(1 for ex in train if ex.label == METAPHORIC)
    lit = len(train) - met
    return MajorityModel(label=_majority_label(met, lit), counts=(met, lit))


@dataclass(frozen=True)
class MemorizerModel:
    """Per-key label counts; unseen keys fall back to the global majority."""

    key: str  # split key description, or "rendered" when keyed on ablated spans
    table: Mapping[str, tuple[int, int]]
    global_counts: tuple[int, int]

    def predict_key(self, key_string: str) -> str:
        counts = self.table.get(key_string)
        if counts is None or counts[0] == counts[1]:
            return _majority_label(*self.global_counts)
        return _majority_label(*counts)

    def predict(self, instance: Instance, key: SplitKey) -> str:
        return self.predict_key(split_key_of(instance, key))


def _train_memorizer_keyed(pairs: Iterable[tuple[str, str]], key_name: str) -> MemorizerModel:
    table: dict[str, list[int]] = {}
    met_total = lit_total = 0
    for key_string, label in pairs:
        counts = table.setdefault(key_string, [0, 0])
        if label == METAPHORIC:
            counts[0] += 1
            met_total += 1
        else:
            counts[1] += 1
            lit_total += 1
    if met_total + lit_total == 0:
        raise ValueError("cannot train a memorizer on no examples")
    return MemorizerModel(key=key_name,
                          table={k: (c[0], c[1]) for k, c in table.items()},
                          global_counts=(met_total, lit_total))


def train_memorizer(train: Iterable[Instance], key: SplitKey) -> MemorizerModel:
    return _train_memorizer_keyed(
        ((split_key_of(inst, key), inst.label) for inst in train), key.describe())


def memorizer_key(instance: Instance, mode: str) -> str:
    """The expression identity as visible under an ablation mode.

    Masked input erases the expression, leaving only placeholder tokens, so
    every instance of a given span length shares one degenerate key and the
    memorizer collapses to (length-conditioned) majority voting.
    """
    if mode == "masked":
        return " ".join([MASK] * len(instance.span_token_indices())).lower()
    return split_key_of(instance, SplitKey("surface"))


@dataclass(frozen=True)
class FeatureSpec:
    """Bag-of-words features over whitespace tokens; bigrams optional."""

    bigrams: bool = False

    def extract(self, text: str) -> list[str]:
        tokens = text.split()
        if not self.bigrams:
            return tokens
        return tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]


@dataclass(frozen=True)
class NaiveBayesModel:
    alpha: float
    features: FeatureSpec
    vocabulary: Mapping[str, int]
    log_priors: Mapping[str, float]
    log_likelihoods: Mapping[str, Mapping[str, float]]  # label -> token -> log P(token|label)

    def scores(self, text: str) -> dict[str, float]:
        totals = dict(self.log_priors)
        for label in totals:
            likelihood = self.log_likelihoods[label]
            for feature in self.features.extract(text):
                if feature in self.vocabulary:
                    totals[label] += likelihood[feature]
        return totals


def train_nb(train: Sequence[AblatedExample], alpha: float = 1.0,
             features: FeatureSpec = FeatureSpec()) -> NaiveBayesModel:
    """Multinomial naive Bayes with Laplace smoothing over ablated text."""
    labels = {ex.label for ex in train}
    if labels != {METAPHORIC, LITERAL}:
        raise SingleLabelError(
            f"naive Bayes needs both labels in training data, got {sorted(labels)}")

    token_counts: dict[str, dict[str, int]] = {METAPHORIC: {}, LITERAL: {}}
    class_totals = {METAPHORIC: 0, LITERAL: 0}
    doc_counts = {METAPHORIC: 0, LITERAL: 0}
    vocabulary: dict[str, int] = {}
    for ex in train:
        doc_counts[ex.label] += 1
        counts = token_counts[ex.label]
        for feature in features.extract(ex.text):
            if feature not in vocabulary:
                vocabulary[feature] = len(vocabulary)
            counts[feature] = counts.get(feature, 0) + 1
            class_totals[ex.label] += 1

    n_docs = len(train)
    v = len(vocabulary)
    log_priors = {label: math.log(doc_counts[label] / n_docs) for label in doc_counts}
    log_likelihoods = {
        label: {
            token: math.log((token_counts[label].get(token, 0) + alpha)
                            / (class_totals[label] + alpha * v))
            for token in vocabulary
        }
        for label in token_counts
    }
    return NaiveBayesModel(alpha=alpha, features=features, vocabulary=vocabulary,
                           log_priors=log_priors, log_likelihoods=log_likelihoods)


def predict_nb(model: NaiveBayesModel, example: AblatedExample | str) -> tuple[str, dict[str, float]]:
    text = example.text if isinstance(example, AblatedExample) else example
    scores = model.scores(text)
    label = METAPHORIC if scores[METAPHORIC] >= scores[LITERAL] else LITERAL
    return label, scores


# --- The audit loop ---------------------------------------------------------

def _predictions(classifier: str, mode: str,
                 train_inst: Sequence[Instance], test_inst: Sequence[Instance],
                 train_ex: Sequence[AblatedExample], test_ex: Sequence[AblatedExample],
                 dev_ex: Sequence[AblatedExample],
                 nb_alpha: float, nb_alpha_grid: Sequence[float] | None,
                 nb_features: FeatureSpec) -> list[str]:
    if classifier == "majority":
        model = train_majority(train_ex)
        return [model.predict(ex) for ex in test_ex]
    if classifier == "memorizer":
        model = _train_memorizer_keyed(
            ((memorizer_key(inst, mode), inst.label) for inst in train_inst), "rendered")
        return [model.predict_key(memorizer_key(inst, mode)) for inst in test_inst]
    if classifier == "nb":
        alpha = nb_alpha
        if nb_alpha_grid:
            alpha = _select_alpha(train_ex, dev_ex, nb_alpha_grid, nb_features, nb_alpha)
        model = train_nb(train_ex, alpha=alpha, features=nb_features)
        return [predict_nb(model, ex)[0] for ex in test_ex]
    raise ValueError(f"unknown classifier: {classifier!r}")


def _select_alpha(train_ex: Sequence[AblatedExample], dev_ex: Sequence[AblatedExample],
                  grid: Sequence[float], features: FeatureSpec,
                  fallback: float) -> float:
    """Pick the smoothing weight with the best dev macro-F1; the grid order
    breaks ties so selection stays deterministic. No dev data, no tuning."""
    if not dev_ex:
        return fallback
    best_alpha, best_score = grid[0], -1.0
    for alpha in grid:
        model = train_nb(train_ex, alpha=alpha, features=features)
        pred = [predict_nb(model, ex)[0] for ex in dev_ex]
        score = metrics(ConfusionCounts.from_pairs([e.label for e in dev_ex], pred)).macro_f1
        if score > best_score:
            best_alpha, best_score = alpha, score
    return best_alpha


def run_audit(dataset: Dataset, plan: SplitPlan,
              modes: Sequence[str] = ("default", "only_pme", "masked"),
              classifiers: Sequence[str] = ("majority", "memorizer", "nb"),
              nb_alpha: float = 1.0,
              nb_alpha_grid: Sequence[float] | None = None,
              nb_features: FeatureSpec = FeatureSpec()) -> EvalReport:
    """Train each classifier on each fold's train partition under each input
    configuration and evaluate on the fold's test partition.

    Classical models tune nothing on dev, except the naive Bayes smoothing
    weight when a dev grid is requested. Per-fold metrics are kept alongside
    fold averages; relative gaps against the default mode are attached to
    both (cell gaps against the same fold, averaged gaps against averaged
    default scores).
    """
    for mode in modes:
        if mode not in ("default", "only_pme", "masked"):
            raise AuditError(f"unknown ablation mode: {mode!r}")
    for classifier in classifiers:
        if classifier not in CLASSIFIERS:
            raise AuditError(f"unknown classifier: {classifier!r}")
    violations = verify(plan, dataset)
    if violations:
        raise AuditError(
            f"plan failed verification with {len(violations)} violations; first: "
            f"{violations[0].message}")

    by_id = dataset.by_id()
    cells: list[EvalCell] = []
    for f in range(plan.k):
        partitions = {p: [by_id[i] for i in plan.partition_ids(f, p)]
                      for p in ("train", "dev", "test")}
        if not partitions["train"] or not partitions["test"]:
            raise AuditError(f"fold {f}: empty train or test partition")

        maj = train_majority([ablate(i, "default") for i in partitions["train"]])
        gold = [i.label for i in partitions["test"]]
        majority_accuracy = metrics(ConfusionCounts.from_pairs(
            gold, [maj.predict() for _ in gold])).accuracy

        fold_macro_default: dict[str, float] = {}
        fold_cells: list[EvalCell] = []
        for mode in modes:
            rendered = {p: [ablate(i, mode) for i in partitions[p]]
                        for p in ("train", "dev", "test")}
            for classifier in classifiers:
                try:
                    pred = _predictions(classifier, mode,
                                        partitions["train"], partitions["test"],
                                        rendered["train"], rendered["test"], rendered["dev"],
                                        nb_alpha, nb_alpha_grid, nb_features)
                except Exception as exc:
                    raise AuditError(
                        f"fold {f}, mode {mode}, classifier {classifier}: {exc}") from exc
                bundle = metrics(ConfusionCounts.from_pairs(gold, pred))
                if mode == "default":
                    fold_macro_default[classifier] = bundle.macro_f1
                fold_cells.append(EvalCell(
                    fold=f, mode=mode, classifier=classifier, metrics=bundle,
                    majority_accuracy=majority_accuracy, n_test=len(gold)))

        for cell in fold_cells:
            default_score = fold_macro_default.get(cell.classifier)
            gap = 0.0 if cell.mode == "default" and default_score is not None else \
                safe_relative_gap(default_score, cell.metrics.macro_f1)
            cells.append(EvalCell(fold=cell.fold, mode=cell.mode, classifier=cell.classifier,
                                  metrics=cell.metrics, majority_accuracy=cell.majority_accuracy,
                                  n_test=cell.n_test, gap_macro_f1=gap))

    return EvalReport(dataset=dataset.name, scheme=plan.scheme, cells=tuple(cells),
                      averages=tuple(build_averages(cells)), notes=plan.warnings)
