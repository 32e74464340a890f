"""Majority, memorizer, and naive Bayes classifiers, plus the audit loop."""

from __future__ import annotations

import math

import pytest

from figbias.ablate import AblatedExample, ablate
from figbias.baselines import (FeatureSpec, memorizer_key, predict_nb, run_audit,
                               train_majority, train_memorizer, train_nb)
from figbias.corpus import LITERAL, METAPHORIC, SplitKey
from figbias.errors import AuditError, SingleLabelError
from figbias.metrics import relative_gap
from figbias.split import plan_lexical, plan_random

from conftest import make_dataset, make_instance
from synthdata import key_determined_dataset

M, L = METAPHORIC, LITERAL


def ex(text: str, label: str, mode: str = "default") -> AblatedExample:
    return AblatedExample(instance_id=text, mode=mode, text=text, label=label)


class TestMajority:
    def test_predicts_more_frequent_label(self):
        model = train_majority([ex("a", M), ex("b", M), ex("c", M), ex("d", L)])
        assert model.predict() == M

    def test_one_third_metaphoric_predicts_literal(self):
        train = [ex(f"t{i}", M if i < 120 else L) for i in range(360)]
        model = train_majority(train)
        assert model.predict() == L
        correct = sum(1 for e in train if e.label == model.predict())
        assert round(100 * correct / len(train), 1) == 66.7

    def test_tie_breaks_metaphoric(self):
        model = train_majority([ex("a", M), ex("b", M), ex("c", L), ex("d", L)])
        assert model.predict() == M

    def test_empty_train_rejected(self):
        with pytest.raises(ValueError):
            train_majority([])


class TestMemorizer:
    def test_per_key_majority(self):
        train = [
            make_instance("a dark age", (1, 2), M, inst_id="1"),
            make_instance("the dark night", (1, 2), M, inst_id="2"),
            make_instance("dark colors", (0, 1), L, inst_id="3"),
        ]
        model = train_memorizer(train, SplitKey("surface"))
        assert model.table["dark"] == (2, 1)
        query = make_instance("so dark here", (1, 2), L, inst_id="q")
        assert model.predict(query, SplitKey("surface")) == M

    def test_unseen_key_falls_back_to_global_majority(self):
        train = [make_instance("x dark y", (1, 2), M, inst_id=str(i)) for i in range(3)]
        train.append(make_instance("x plain y", (1, 2), L, inst_id="lit"))
        model = train_memorizer(train, SplitKey("surface"))
        assert model.predict_key("unseen") == M
        assert model.global_counts == (3, 1)

    def test_per_key_tie_falls_back_to_global(self):
        train = [
            make_instance("a bright idea", (1, 2), M, inst_id="1"),
            make_instance("a bright lamp", (1, 2), L, inst_id="2"),
            make_instance("a plain wall", (1, 2), L, inst_id="3"),
        ]
        model = train_memorizer(train, SplitKey("surface"))
        # bright is tied 1-1; global majority is literal (1 met, 2 lit).
        assert model.predict_key("bright") == L

    def test_key_determined_labels_memorized_under_random_split(self):
        ds = key_determined_dataset(n_keys=10, per_key=12, seed=3)
        plan = plan_random(ds, k=5, seed=3)
        by_id = ds.by_id()
        surface = SplitKey("surface")
        for fold in range(plan.k):
            train = [by_id[i] for i in plan.partition_ids(fold, "train")]
            test = [by_id[i] for i in plan.partition_ids(fold, "test")]
            model = train_memorizer(train, surface)
            # Brute-force oracle: every test key must be present in the
            # training table with a label-consistent count.
            from figbias.corpus import split_key_of
            train_keys = {split_key_of(i, surface) for i in train}
            for inst in test:
                assert split_key_of(inst, surface) in train_keys
            correct = sum(1 for i in test
                          if model.predict(i, surface) == i.label)
            assert correct / len(test) >= 0.99


class TestNaiveBayes:
    def test_hand_computed_posterior(self):
        # Two training texts, three vocabulary words, alpha = 1:
        #   P(w|class) = (count + 1) / (2 + 3), priors 1/2 each.
        model = train_nb([ex("dark age", M), ex("dark colors", L)], alpha=1.0)
        label, scores = predict_nb(model, "dark age")
        assert label == M
        expected_m = math.log(0.5) + math.log(2 / 5) + math.log(2 / 5)
        expected_l = math.log(0.5) + math.log(2 / 5) + math.log(1 / 5)
        assert scores[M] == pytest.approx(expected_m, abs=1e-12)
        assert scores[L] == pytest.approx(expected_l, abs=1e-12)

    def test_empty_text_decided_by_priors(self):
        model = train_nb([ex("a b", M), ex("c d", M), ex("e f", L)])
        label, scores = predict_nb(model, "")
        assert label == M
        assert scores[M] == pytest.approx(math.log(2 / 3))

    def test_prior_normalization(self):
        model = train_nb([ex("a", M), ex("b", M), ex("c", L)])
        total = sum(math.exp(p) for p in model.log_priors.values())
        assert abs(total - 1.0) < 1e-9

    def test_duplicated_training_set_changes_nothing(self):
        # Unsmoothed likelihoods are exactly invariant under uniform count
        # scaling; with a fixed smoothing weight the invariance holds away
        # from the decision boundary (verified by hand for these queries).
        train = [ex("dark age", M), ex("dark colors", L), ex("deep night", M)]
        queries = ["dark age", "dark colors", "deep night", "night", "unseen words", ""]
        base = train_nb(train)
        doubled = train_nb(train + train)
        for q in queries:
            assert predict_nb(base, q)[0] == predict_nb(doubled, q)[0]

    def test_duplicated_symmetric_training_set_identical_decisions(self):
        train = [ex("dark age", M), ex("dark colors", L)]
        base = train_nb(train)
        doubled = train_nb(train + train)
        for q in ("dark age", "dark colors", "age colors colors", "dark", ""):
            assert predict_nb(base, q)[0] == predict_nb(doubled, q)[0]

    def test_oov_tokens_ignored(self):
        model = train_nb([ex("dark age", M), ex("bright colors", L)])
        with_oov = predict_nb(model, "dark age zzz qqq")[1]
        without = predict_nb(model, "dark age")[1]
        assert with_oov == without

    def test_single_label_training_rejected(self):
        with pytest.raises(SingleLabelError):
            train_nb([ex("a", M), ex("b", M)])

    def test_bigram_features(self):
        spec = FeatureSpec(bigrams=True)
        assert spec.extract("rock the boat") == \
            ["rock", "the", "boat", "rock the", "the boat"]

    def test_decision_invariant_under_score_shift(self):
        # Argmax is unchanged by any uniform strictly increasing transform.
        model = train_nb([ex("dark age", M), ex("dark colors", L)])
        for text in ("dark age", "dark colors", "dark", ""):
            label, scores = predict_nb(model, text)
            shifted = {k: 3.0 * v + 7.0 for k, v in scores.items()}
            assert max(shifted, key=shifted.get) == label or \
                shifted[M] == shifted[L]


class TestMemorizerKeys:
    def test_masked_mode_erases_the_key(self):
        inst = make_instance("a dark age", (1, 2), M, inst_id="x")
        assert memorizer_key(inst, "default") == "dark"
        assert memorizer_key(inst, "only_pme") == "dark"
        assert memorizer_key(inst, "masked") == "<masked>"

    def test_multiword_masked_key_by_length(self):
        inst = make_instance("they rock the boat", (1, 4), M, inst_id="x")
        assert memorizer_key(inst, "masked") == "<masked> <masked> <masked>"


class TestRunAudit:
    def test_cell_and_average_counts(self):
        ds = key_determined_dataset(n_keys=6, per_key=10, seed=1)
        plan = plan_random(ds, k=5, seed=1)
        report = run_audit(ds, plan, modes=("default", "only_pme", "masked"),
                           classifiers=("majority", "memorizer"))
        assert len(report.cells) == 5 * 3 * 2
        assert len(report.averages) == 3 * 2

    def test_masked_memorizer_collapses_to_majority(self):
        # Oracle: masked text contains no key tokens, so the memorizer sees
        # one degenerate key and must match the majority classifier exactly.
        ds = key_determined_dataset(n_keys=10, per_key=10, seed=5)
        plan = plan_random(ds, k=5, seed=5)
        report = run_audit(ds, plan, modes=("masked",),
                           classifiers=("majority", "memorizer"))
        rows = {(r.mode, r.classifier): r for r in report.averages}
        assert rows[("masked", "memorizer")].metrics == \
            rows[("masked", "majority")].metrics

    def test_lexical_split_memorizer_equals_majority_exactly(self):
        # Every test key is unseen under a lexical split, so each prediction
        # is the global-majority fallback: metric for metric, the memorizer
        # must equal the constant classifier (not just approximately).
        ds = key_determined_dataset(n_keys=12, per_key=8, seed=6)
        plan = plan_lexical(ds, SplitKey("surface"), k=5, seed=6)
        report = run_audit(ds, plan, modes=("only_pme",),
                           classifiers=("majority", "memorizer"))
        by_fold = {}
        for cell in report.cells:
            by_fold.setdefault(cell.fold, {})[cell.classifier] = cell.metrics
        for fold, cells in by_fold.items():
            assert cells["memorizer"] == cells["majority"], f"fold {fold}"

    def test_gap_attached_per_cell_and_per_average(self):
        ds = key_determined_dataset(n_keys=6, per_key=10, seed=2)
        plan = plan_random(ds, k=5, seed=2)
        report = run_audit(ds, plan, modes=("default", "only_pme"),
                           classifiers=("nb",))
        default_cells = {c.fold: c for c in report.cells if c.mode == "default"}
        for cell in report.cells:
            if cell.mode == "default":
                assert cell.gap_macro_f1 == 0.0
            else:
                expected = relative_gap(default_cells[cell.fold].metrics.macro_f1,
                                        cell.metrics.macro_f1) \
                    if default_cells[cell.fold].metrics.macro_f1 > 0 else None
                assert cell.gap_macro_f1 == expected
        rows = {(r.mode, r.classifier): r for r in report.averages}
        assert rows[("default", "nb")].gap_macro_f1 == 0.0
        expected = relative_gap(rows[("default", "nb")].metrics.macro_f1,
                                rows[("only_pme", "nb")].metrics.macro_f1)
        assert rows[("only_pme", "nb")].gap_macro_f1 == expected

    def test_unknown_classifier_rejected(self):
        ds = key_determined_dataset(n_keys=5, per_key=10, seed=1)
        plan = plan_random(ds, k=5, seed=1)
        with pytest.raises(AuditError, match="unknown classifier"):
            run_audit(ds, plan, classifiers=("transformer",))

    def test_unknown_mode_rejected(self):
        ds = key_determined_dataset(n_keys=5, per_key=10, seed=1)
        plan = plan_random(ds, k=5, seed=1)
        with pytest.raises(AuditError, match="unknown ablation mode"):
            run_audit(ds, plan, modes=("reversed",))

    def test_training_errors_carry_fold_context(self):
        # Keys grouped so that one fold's training data is single-label.
        instances = [
            make_instance("x met y", (1, 2), M, inst_id=f"m{i}") for i in range(4)
        ] + [
            make_instance("x lit y", (1, 2), L, inst_id=f"l{i}") for i in range(4)
        ]
        ds = make_dataset(instances)
        plan = plan_lexical(ds, SplitKey("surface"), k=2, ratios=(0.5, 0.0, 0.5), seed=0)
        with pytest.raises(AuditError, match=r"fold \d, mode"):
            run_audit(ds, plan, modes=("default",), classifiers=("nb",))

    def test_dev_alpha_grid_is_deterministic(self):
        ds = key_determined_dataset(n_keys=8, per_key=10, seed=4)
        plan = plan_random(ds, k=5, seed=4)
        a = run_audit(ds, plan, modes=("default",), classifiers=("nb",),
                      nb_alpha_grid=(0.1, 0.5, 1.0))
        b = run_audit(ds, plan, modes=("default",), classifiers=("nb",),
                      nb_alpha_grid=(0.1, 0.5, 1.0))
        assert a == b
