"""Canonical data model for span-labeled binary metaphoricity datasets.

Every dataset flowing through the toolkit is a sequence of instances: a
tokenized context, one or more target spans marking the expression under
test, and a binary label. Token indices (half-open ``[start, end)``) are
canonical; adapters resolve characters to tokens once at ingestion.

The on-disk format is JSONL, one instance per line, UTF-8. Unknown fields
are preserved on round-trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import KeyingFallback

METAPHORIC = "metaphoric"
LITERAL = "literal"
LABELS = (METAPHORIC, LITERAL)
PARTITIONS = ("train", "dev", "test")

KEY_KINDS = ("surface", "lemma", "head_index")

# Core JSONL fields; anything else on a line is carried in Instance.extra.
_CORE_FIELDS = ("id", "dataset", "tokens", "spans", "label", "lemmas", "pos",
                "split_hint", "source_spans")


@dataclass(frozen=True)
class SplitKey:
    """How instances are keyed for lexical splitting.

    ``surface`` joins the span tokens, ``lemma`` joins the span lemmas,
    and ``head_index`` selects the lemma of the k-th span token (used for
    adjective-vs-noun style splits of pair datasets).
    """

    kind: str = "surface"
    head_index: int = 0

    def __post_init__(self) -> None:
        if self.kind not in KEY_KINDS:
            raise ValueError(f"unknown split key kind: {self.kind!r}")
        if self.head_index < 0:
            raise ValueError("head_index must be >= 0")

    @classmethod
    def parse(cls, text: str) -> "SplitKey":
        """Parse a CLI-style key spec: ``surface``, ``lemma`` or ``head:<k>``."""
        if text in ("surface", "lemma"):
            return cls(kind=text)
        if text.startswith("head:"):
            return cls(kind="head_index", head_index=int(text.split(":", 1)[1]))
        raise ValueError(f"unknown split key spec: {text!r}")

    def describe(self) -> str:
        if self.kind == "head_index":
            return f"head:{self.head_index}"
        return self.kind


@dataclass(frozen=True)
class Instance:
    """One labeled example: context tokens, target span(s), binary label.

    ``spans`` holds half-open token ranges sorted by start; more than one
    range means a discontiguous multiword expression. ``source_spans``
    preserves the original ranges after discontiguous normalization merges
    them. ``extra`` carries unknown JSONL fields for lossless round-trips.
    """

    id: str
    dataset: str
    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]
    label: str
    lemmas: tuple[str, ...] | None = None
    pos: tuple[str, ...] | None = None
    split_hint: str | None = None
    source_spans: tuple[tuple[int, int], ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def merged_span(self) -> tuple[int, int]:
        """Single covering range: min start to max end over all spans."""
        return (min(s for s, _ in self.spans), max(e for _, e in self.spans))

    def span_token_indices(self) -> list[int]:
        return [i for s, e in self.spans for i in range(s, e)]

    def span_tokens(self) -> list[str]:
        return [self.tokens[i] for i in self.span_token_indices()]

    def span_lemmas(self) -> list[str] | None:
        if self.lemmas is None:
            return None
        return [self.lemmas[i] for i in self.span_token_indices()]


@dataclass(frozen=True)
class Dataset:
    name: str
    instances: tuple[Instance, ...]
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    def by_id(self) -> dict[str, Instance]:
        return {inst.id: inst for inst in self.instances}

    def percent_metaphoric(self) -> float:
        if not self.instances:
            return 0.0
        met = sum(1 for i in self.instances if i.label == METAPHORIC)
        return 100.0 * met / len(self.instances)


@dataclass(frozen=True)
class Violation:
    """One invariant violation found by a validator. Violations are data,
    not errors: validators never raise on bad content."""

    kind: str
    message: str
    instance_id: str | None = None

    def as_dict(self) -> dict:
        return {"kind": self.kind, "message": self.message, "instance_id": self.instance_id}


def validate(dataset: Dataset) -> list[Violation]:
    """Check every model invariant; an empty report means the dataset is valid."""
    report: list[Violation] = []
    seen_ids: set[str] = set()
    labels_present: set[str] = set()

    for inst in dataset.instances:
        if inst.id in seen_ids:
            report.append(Violation("duplicate_id", f"id {inst.id!r} occurs more than once", inst.id))
        seen_ids.add(inst.id)

        if inst.label not in LABELS:
            report.append(Violation("bad_label", f"label {inst.label!r} is not in {LABELS}", inst.id))
        else:
            labels_present.add(inst.label)

        n = len(inst.tokens)
        if not inst.spans:
            report.append(Violation("no_spans", "instance has no target span", inst.id))
        prev_end = None
        for start, end in inst.spans:
            if start >= end:
                report.append(Violation("empty_span", f"empty span [{start},{end})", inst.id))
            if start < 0 or end > n:
                report.append(Violation("span_out_of_bounds",
                                        f"span [{start},{end}) outside 0..{n}", inst.id))
            if prev_end is not None and start < prev_end:
                report.append(Violation("span_order",
                                        "spans overlap or are not sorted by start", inst.id))
            prev_end = max(end, prev_end) if prev_end is not None else end

        if inst.lemmas is not None and len(inst.lemmas) != n:
            report.append(Violation("lemma_length_mismatch",
                                    f"{len(inst.lemmas)} lemmas for {n} tokens", inst.id))
        if inst.pos is not None and len(inst.pos) != n:
            report.append(Violation("pos_length_mismatch",
                                    f"{len(inst.pos)} PoS tags for {n} tokens", inst.id))
        if inst.split_hint is not None and inst.split_hint not in PARTITIONS:
            report.append(Violation("bad_split_hint",
                                    f"split_hint {inst.split_hint!r} not in {PARTITIONS}", inst.id))

    # Training operations reject single-label data; flag it here so audits
    # can see the problem before any training starts.
    if dataset.instances and len(labels_present) == 1:
        report.append(Violation("single_label",
                                f"dataset {dataset.name!r} carries only {labels_present.pop()!r} instances"))
    return report


def split_key_of(instance: Instance, key: SplitKey) -> str:
    """Deterministic, case-folded lexical key for an instance.

    Raises KeyingFallback for lemma-based kinds when the instance lacks
    lemmas (or the head index is out of range); the caller decides whether
    to fall back to surface keying.
    """
    if key.kind == "surface":
        return " ".join(tok.lower() for tok in instance.span_tokens())
    lemmas = instance.span_lemmas()
    if lemmas is None:
        raise KeyingFallback(f"instance {instance.id!r} has no lemmas for {key.describe()} keying")
    if key.kind == "lemma":
        return " ".join(lem.lower() for lem in lemmas)
    if key.head_index >= len(lemmas):
        raise KeyingFallback(
            f"instance {instance.id!r}: head index {key.head_index} outside span of length {len(lemmas)}")
    return lemmas[key.head_index].lower()


def effective_split_key(instance: Instance, key: SplitKey) -> tuple[str, bool]:
    """split_key_of with the documented surface fallback applied.

    Returns (key_string, fell_back).
    """
    try:
        return split_key_of(instance, key), False
    except KeyingFallback:
        return split_key_of(instance, SplitKey("surface")), True


# --- JSONL round-trip -------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    row = {
        "id": inst.id,
        "dataset": inst.dataset,
        "tokens": list(inst.tokens),
        "spans": [[s, e] for s, e in inst.spans],
        "label": inst.label,
        "lemmas": list(inst.lemmas) if inst.lemmas is not None else None,
        "pos": list(inst.pos) if inst.pos is not None else None,
        "split_hint": inst.split_hint,
    }
    if inst.source_spans is not None:
        row["source_spans"] = [[s, e] for s, e in inst.source_spans]
    for key, value in inst.extra.items():
        if key not in row:
            row[key] = value
    return row


def instance_from_dict(row: dict) -> Instance:
    extra = {k: v for k, v in row.items() if k not in _CORE_FIELDS}
    source = row.get("source_spans")
    return Instance(
        id=str(row["id"]),
        dataset=str(row.get("dataset", "")),
        tokens=tuple(row["tokens"]),
        spans=tuple((int(s), int(e)) for s, e in row["spans"]),
        label=str(row["label"]),
        lemmas=tuple(row["lemmas"]) if row.get("lemmas") is not None else None,
        pos=tuple(row["pos"]) if row.get("pos") is not None else None,
        split_hint=row.get("split_hint"),
        source_spans=tuple((int(s), int(e)) for s, e in source) if source is not None else None,
        extra=extra,
    )


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            fh.write(json.dumps(instance_to_dict(inst), ensure_ascii=False) + "\n")


def read_instances(path: str | Path) -> Iterator[Instance]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            yield instance_from_dict(row)


def load_dataset(path: str | Path, name: str | None = None, provenance: str = "") -> Dataset:
    instances = tuple(read_instances(path))
    if name is None:
        name = instances[0].dataset if instances else Path(path).stem
    return Dataset(name=name, instances=instances, provenance=provenance)


def with_instances(dataset: Dataset, instances: Iterable[Instance]) -> Dataset:
    return replace(dataset, instances=tuple(instances))
