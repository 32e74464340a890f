"""The three input configurations and their invariants."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from figbias.ablate import (MASK, PME_CLOSE, PME_OPEN, AblatedExample, ablate,
                            ablate_all, read_examples, strip_markers, write_examples)
from figbias.errors import MarkerCollisionError

from conftest import make_instance

RUNNING = make_instance("The latest developments move us closer to a dark age .",
                        (8, 9), "metaphoric", inst_id="run")


def test_default_wraps_span_in_markers():
    assert ablate(RUNNING, "default").text == \
        "The latest developments move us closer to a <PME>dark</PME> age ."


def test_only_pme_emits_bare_expression():
    assert ablate(RUNNING, "only_pme").text == "dark"


def test_masked_replaces_span_token():
    assert ablate(RUNNING, "masked").text == \
        "The latest developments move us closer to a <masked> age ."


def test_multiword_span_rendering():
    inst = make_instance("do n't rock the boat here", (2, 5), "metaphoric")
    assert ablate(inst, "default").text == "do n't <PME>rock the boat</PME> here"
    assert ablate(inst, "only_pme").text == "rock the boat"
    assert ablate(inst, "masked").text == "do n't <masked> <masked> <masked> here"


def test_discontiguous_expression():
    # Tagging runs from the first to the last expression token; masking
    # leaves the intervening context alone.
    inst = make_instance("they rock the political boat daily", [(1, 3), (4, 5)])
    assert ablate(inst, "default").text == \
        "they <PME>rock the political boat</PME> daily"
    assert ablate(inst, "only_pme").text == "rock the political boat"
    assert ablate(inst, "masked").text == \
        "they <masked> <masked> political <masked> daily"


def test_span_at_sentence_edges():
    inst = make_instance("dark clouds gather", (0, 1))
    assert ablate(inst, "default").text == "<PME>dark</PME> clouds gather"
    inst = make_instance("the age is dark", (3, 4))
    assert ablate(inst, "default").text == "the age is <PME>dark</PME>"


def test_marker_collision_is_an_error():
    inst = make_instance(["a", "<PME>", "b"], (2, 3))
    with pytest.raises(MarkerCollisionError):
        ablate(inst, "default")
    inst = make_instance(["a", "x<masked>y", "b"], (0, 1))
    with pytest.raises(MarkerCollisionError):
        ablate(inst, "masked")


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        ablate(RUNNING, "reversed")


def test_label_is_copied():
    inst = make_instance("a b c", (1, 2), "literal")
    assert {ablate(inst, m).label for m in ("default", "only_pme", "masked")} == {"literal"}


def test_jsonl_round_trip(tmp_path):
    examples = ablate_all([RUNNING], "default")
    path = tmp_path / "ablated.jsonl"
    write_examples(examples, path)
    assert list(read_examples(path)) == examples


def random_instance(rng: random.Random):
    n = rng.randint(1, 14)
    tokens = [f"t{rng.randint(0, 40)}" for _ in range(n)]
    n_spans = rng.randint(1, min(3, n))
    # Sorted, non-overlapping spans.
    cuts = sorted(rng.sample(range(n + 1), min(2 * n_spans, n + 1)))
    spans = [(cuts[i], cuts[i + 1]) for i in range(0, len(cuts) - 1, 2)
             if cuts[i] < cuts[i + 1]]
    if not spans:
        spans = [(0, 1)]
    label = rng.choice(["metaphoric", "literal"])
    return make_instance(tokens, spans, label, inst_id=f"r{rng.random()}")


def check_invariants(inst) -> None:
    default = ablate(inst, "default")
    only = ablate(inst, "only_pme")
    masked = ablate(inst, "masked")

    # Label preservation.
    assert default.label == only.label == masked.label == inst.label
    # Markers exactly once each in default mode.
    assert default.text.count(PME_OPEN) == 1 and default.text.count(PME_CLOSE) == 1
    assert PME_OPEN not in only.text and MASK not in default.text
    # The expression rendering is a substring of default with markers stripped.
    assert only.text in strip_markers(default.text)
    # Only-PME contains no token outside the merged span.
    lo, hi = inst.merged_span()
    assert only.text.split() == list(inst.tokens[lo:hi])
    # Masked and default agree on token count, markers worth zero, masks one.
    assert len(strip_markers(default.text).split()) == len(masked.text.split())
    # No surface token from inside any span survives masking.
    masked_positions = set(inst.span_token_indices())
    for i, token in enumerate(masked.text.split()):
        assert (token == MASK) == (i in masked_positions)


def test_invariants_over_random_instances():
    rng = random.Random(1312)
    for _ in range(300):
        check_invariants(random_instance(rng))


@given(st.integers(0, 2**32))
def test_invariants_hypothesis_seeds(seed):
    check_invariants(random_instance(random.Random(seed)))
