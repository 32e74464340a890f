"""Build a binary dataset from a token-level annotated corpus.

Metaphoric instances are the annotated spans themselves. Literal instances
are sampled, per expression, from unannotated occurrences of the same
surface form; if those run out, occurrences with the same lemma sequence
are used, and finally occurrences with the same PoS tag sequence. The
three tiers are disjoint (a lemma match that is also a surface match
counts as surface), which is what makes tier monotonicity checkable: a
lower tier is only drawn from once the tiers above it are exhausted.

Sampling is without replacement globally: an occurrence drawn for one
expression is consumed and never re-used, with expressions visited in a
seeded shuffle order. Identical (corpus, config) inputs always produce
identical datasets.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Dataset, Instance, LITERAL, METAPHORIC

GRANULARITIES = ("token", "span")


@dataclass(frozen=True)
class Sentence:
    doc: str
    sent: int
    tokens: tuple[str, ...]
    lemmas: tuple[str, ...]
    pos: tuple[str, ...]
    met: tuple[bool, ...]

    def __post_init__(self) -> None:
        n = len(self.tokens)
        if not (len(self.lemmas) == len(self.pos) == len(self.met) == n):
            raise ValueError(f"{self.doc}#{self.sent}: parallel arrays differ in length")


@dataclass(frozen=True)
class TokenCorpus:
    sentences: tuple[Sentence, ...]

    @classmethod
    def load(cls, path: str | Path) -> "TokenCorpus":
        sentences = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                sentences.append(Sentence(
                    doc=str(row["doc"]), sent=int(row["sent"]),
                    tokens=tuple(row["tokens"]), lemmas=tuple(row["lemmas"]),
                    pos=tuple(row["pos"]), met=tuple(bool(m) for m in row["met"])))
        return cls(sentences=tuple(sentences))


@dataclass(frozen=True)
class SamplerConfig:
    """Target balance and draw determinism for literal sampling.

    ``ratio`` is literal-per-metaphoric: each expression's quota is
    ceil(count * ratio), optionally capped by ``max_literals_per_expression``.
    """

    ratio: float = 1.0
    seed: int = 0
    max_literals_per_expression: int | None = None
    granularity: str = "span"

    def __post_init__(self) -> None:
        if self.ratio <= 0:
            raise ValueError("ratio must be positive")
        if self.max_literals_per_expression is not None and self.max_literals_per_expression < 1:
            raise ValueError("max_literals_per_expression must be >= 1")
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"granularity must be one of {GRANULARITIES}")


@dataclass(frozen=True)
class Occurrence:
    sentence_index: int
    start: int
    end: int


@dataclass
class TierLog:
    draws: list[dict] = field(default_factory=list)
    shortfalls: list[dict] = field(default_factory=list)

    def tier_counts(self) -> dict[int, int]:
        counts = {1: 0, 2: 0, 3: 0}
        for draw in self.draws:
            counts[draw["tier"]] += 1
        return counts

    def as_dict(self) -> dict:
        return {"draws": self.draws, "shortfalls": self.shortfalls,
                "tier_counts": {str(t): c for t, c in self.tier_counts().items()}}

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2) + "\n", encoding="utf-8")


def _metaphoric_runs(flags: Sequence[bool], granularity: str) -> list[tuple[int, int]]:
    runs = []
    i = 0
    while i < len(flags):
        if flags[i]:
            j = i + 1
            if granularity == "span":
                while j < len(flags) and flags[j]:
                    j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def _instance_from_occurrence(corpus: TokenCorpus, occ: Occurrence, label: str,
                              dataset_name: str) -> Instance:
    sent = corpus.sentences[occ.sentence_index]
    suffix = "met" if label == METAPHORIC else "lit"
    return Instance(
        id=f"{sent.doc}-s{sent.sent}-{occ.start}.{occ.end}-{suffix}",
        dataset=dataset_name,
        tokens=sent.tokens,
        spans=((occ.start, occ.end),),
        label=label,
        lemmas=sent.lemmas,
        pos=sent.pos,
    )


def extract_metaphoric(corpus: TokenCorpus, granularity: str = "span",
                       dataset_name: str = "sampled") -> list[Instance]:
    """One metaphoric instance per annotated token (token granularity) or
    per maximal run of annotated tokens (span granularity)."""
    instances = []
    for idx, sent in enumerate(corpus.sentences):
        for start, end in _metaphoric_runs(sent.met, granularity):
            instances.append(_instance_from_occurrence(
                corpus, Occurrence(idx, start, end), METAPHORIC, dataset_name))
    return instances


def _surface(sent: Sentence, start: int, end: int) -> tuple[str, ...]:
    return tuple(t.lower() for t in sent.tokens[start:end])


def _lemma_seq(sent: Sentence, start: int, end: int) -> tuple[str, ...]:
    return tuple(t.lower() for t in sent.lemmas[start:end])


def _pos_seq(sent: Sentence, start: int, end: int) -> tuple[str, ...]:
    return tuple(sent.pos[start:end])


def _clean_windows(corpus: TokenCorpus, lengths: set[int]) -> list[Occurrence]:
    """Every window of a needed length containing no annotated token."""
    windows = []
    for idx, sent in enumerate(corpus.sentences):
        for length in sorted(lengths):
            for start in range(len(sent.tokens) - length + 1):
                end = start + length
                if not any(sent.met[start:end]):
                    windows.append(Occurrence(idx, start, end))
    return windows


def sample_literals(corpus: TokenCorpus, metaphoric: Sequence[Instance],
                    config: SamplerConfig,
                    dataset_name: str = "sampled") -> tuple[list[Instance], TierLog]:
    """Draw literal occurrences for each metaphoric expression.

    Candidate tiers, per expression: (1) same surface sequence, (2) same
    lemma sequence but different surface, (3) same PoS sequence but
    different lemma and surface. No candidate overlaps an annotated token,
    and shortfalls are logged rather than fatal.
    """
    if not metaphoric:
        raise ValueError("no metaphoric instances to balance against")

    # Group expressions by case-folded surface; remember each group's
    # observed lemma and PoS sequences (occurrences can disagree).
    group_counts: dict[tuple[str, ...], int] = {}
    group_lemmas: dict[tuple[str, ...], set[tuple[str, ...]]] = {}
    group_pos: dict[tuple[str, ...], set[tuple[str, ...]]] = {}
    for inst in metaphoric:
        lo, hi = inst.merged_span()
        surface = tuple(t.lower() for t in inst.tokens[lo:hi])
        group_counts[surface] = group_counts.get(surface, 0) + 1
        if inst.lemmas is not None:
            group_lemmas.setdefault(surface, set()).add(
                tuple(t.lower() for t in inst.lemmas[lo:hi]))
        if inst.pos is not None:
            group_pos.setdefault(surface, set()).add(tuple(inst.pos[lo:hi]))

    lengths = {len(surface) for surface in group_counts}
    by_surface: dict[tuple[str, ...], list[Occurrence]] = {}
    by_lemmas: dict[tuple[str, ...], list[Occurrence]] = {}
    by_pos: dict[tuple[str, ...], list[Occurrence]] = {}
    for occ in _clean_windows(corpus, lengths):
        sent = corpus.sentences[occ.sentence_index]
        by_surface.setdefault(_surface(sent, occ.start, occ.end), []).append(occ)
        by_lemmas.setdefault(_lemma_seq(sent, occ.start, occ.end), []).append(occ)
        by_pos.setdefault(_pos_seq(sent, occ.start, occ.end), []).append(occ)

    rng = random.Random(config.seed)
    expressions = sorted(group_counts)
    rng.shuffle(expressions)

    consumed: set[tuple[int, int, int]] = set()
    literals: list[Instance] = []
    log = TierLog()

    for surface in expressions:
        quota = math.ceil(group_counts[surface] * config.ratio)
        if config.max_literals_per_expression is not None:
            quota = min(quota, config.max_literals_per_expression)

        tier1 = list(by_surface.get(surface, []))
        tier2 = [occ for lem in sorted(group_lemmas.get(surface, ()))
                 for occ in by_lemmas.get(lem, [])
                 if _surface(corpus.sentences[occ.sentence_index], occ.start, occ.end) != surface]
        lemma_seqs = group_lemmas.get(surface, set())
        tier3 = [occ for pos in sorted(group_pos.get(surface, ()))
                 for occ in by_pos.get(pos, [])
                 if _surface(corpus.sentences[occ.sentence_index], occ.start, occ.end) != surface
                 and _lemma_seq(corpus.sentences[occ.sentence_index], occ.start, occ.end)
                 not in lemma_seqs]

        drawn = 0
        for tier, pool in ((1, tier1), (2, tier2), (3, tier3)):
            if drawn >= quota:
                break
            available = [occ for occ in pool
                         if (occ.sentence_index, occ.start, occ.end) not in consumed]
            available.sort(key=lambda o: (o.sentence_index, o.start, o.end))
            take = min(quota - drawn, len(available))
            for occ in rng.sample(available, take):
                consumed.add((occ.sentence_index, occ.start, occ.end))
                inst = _instance_from_occurrence(corpus, occ, LITERAL, dataset_name)
                literals.append(inst)
                log.draws.append({"expression": " ".join(surface), "tier": tier,
                                  "instance_id": inst.id,
                                  "sentence_index": occ.sentence_index,
                                  "start": occ.start, "end": occ.end})
                drawn += 1
        if drawn < quota:
            log.shortfalls.append({"expression": " ".join(surface),
                                   "quota": quota, "drawn": drawn})

    literals.sort(key=lambda inst: inst.id)
    return literals, log


def assemble(metaphoric: Sequence[Instance], literal: Sequence[Instance],
             config: SamplerConfig, log: TierLog | None = None,
             name: str = "sampled") -> Dataset:
    """Merge the two sides into one dataset with sampling provenance."""
    instances = tuple(metaphoric) + tuple(literal)
    total = len(instances)
    met_pct = 100.0 * len(metaphoric) / total if total else 0.0
    target_pct = 100.0 / (1.0 + config.ratio)
    provenance = (f"sampled with ratio {config.ratio} (target {target_pct:.1f}% metaphoric), "
                  f"seed {config.seed}, granularity {config.granularity}; "
                  f"achieved {met_pct:.1f}% metaphoric")
    if log is not None:
        counts = log.tier_counts()
        provenance += (f"; tier draws surface={counts[1]} lemma={counts[2]} pos={counts[3]}"
                       f", shortfalls={len(log.shortfalls)}")
    return Dataset(name=name, instances=instances, provenance=provenance)


def sample_corpus(corpus: TokenCorpus, config: SamplerConfig,
                  name: str = "sampled") -> tuple[Dataset, TierLog]:
    """extract + sample + assemble in one call (the CLI entry point)."""
    metaphoric = extract_metaphoric(corpus, config.granularity, dataset_name=name)
    literal, log = sample_literals(corpus, metaphoric, config, dataset_name=name)
    return assemble(metaphoric, literal, config, log, name=name), log
