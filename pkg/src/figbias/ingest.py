"""Adapters from third-party dataset formats to the canonical model.

An adapter is declarative: a parser kind (delimited, JSONL or XML) plus a
field mapping and a total label map. Obtaining the raw files is the user's
responsibility; this module only converts and preprocesses them. Unicode
is normalized to NFC once, here, and nowhere else.

Preprocessing mirrors how such datasets are usually cleaned before split
generation: exact deduplication, merging of discontiguous expression
spans, and detection (never removal) of instances that share a context.
"""

from __future__ import annotations

import csv
import json
import unicodedata
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Dataset, Instance, LABELS, METAPHORIC, LITERAL
from .errors import AdapterError, SpanResolutionError, UnmappedLabelError

FORMATS = ("delimited", "jsonl", "xml")
DEDUP_SCOPES = ("exact_instance", "context_and_span")


@dataclass(frozen=True)
class AdapterSpec:
    """Declarative mapping from one raw file format to canonical instances.

    Exactly one of ``text_field`` (whitespace-tokenized sentence) or
    ``tokens_field`` (pre-tokenized list) must be set. Spans come either
    from ``span_field`` (explicit [start, end) pairs) or by locating the
    ``pme_field`` string inside the tokens. Scored datasets binarize at
    ``binarize_threshold`` (score >= threshold means metaphoric); the
    midpoint of the published scale is the sensible default.
    """

    name: str
    format: str
    label_field: str = "label"
    label_map: dict = field(default_factory=dict)
    id_field: str | None = None
    text_field: str | None = None
    tokens_field: str | None = None
    span_field: str | None = None
    pme_field: str | None = None
    lemmas_field: str | None = None
    pos_field: str | None = None
    split_field: str | None = None
    split_map: dict = field(default_factory=dict)
    score_field: str | None = None
    binarize_threshold: float | None = None
    expected_met_range: tuple[float, float] | None = None
    # Drop the sentence context and keep only the expression tokens
    # (some pair datasets ship bare pairs in training but sentences in test).
    ignore_context: bool = False
    delimiter: str = "\t"
    has_header: bool = True
    # XML only: tag of one record element and, per field, the child tag or
    # @attribute to read.
    record_tag: str = "instance"

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise AdapterError(f"unknown adapter format: {self.format!r}")
        if (self.text_field is None) == (self.tokens_field is None):
            raise AdapterError("adapter needs exactly one of text_field or tokens_field")
        if self.span_field is None and self.pme_field is None:
            raise AdapterError("adapter needs span_field or pme_field")
        if self.score_field is not None and self.binarize_threshold is None:
            raise AdapterError("score_field requires binarize_threshold")

    @classmethod
    def from_json(cls, path: str | Path) -> "AdapterSpec":
        row = json.loads(Path(path).read_text(encoding="utf-8"))
        if "expected_met_range" in row and row["expected_met_range"] is not None:
            row["expected_met_range"] = tuple(row["expected_met_range"])
        return cls(**row)


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def _read_delimited(path: Path, spec: AdapterSpec) -> list[dict]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        if spec.has_header:
            return [dict(row) for row in csv.DictReader(fh, delimiter=spec.delimiter)]
        rows = list(csv.reader(fh, delimiter=spec.delimiter))
    # Headerless files are addressed by stringified column index.
    return [{str(i): value for i, value in enumerate(row)} for row in rows]


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _read_xml(path: Path, spec: AdapterSpec) -> list[dict]:
    root = ET.parse(path).getroot()
    records = []
    for element in root.iter(spec.record_tag):
        row = dict(element.attrib)
        for child in element:
            row[child.tag] = (child.text or "").strip()
        records.append(row)
    return records


def _get(record: dict, field_name: str, index: int) -> object:
    if field_name.startswith("@"):  # XML attribute mapped into the record dict
        field_name = field_name[1:]
    if field_name not in record:
        raise AdapterError(f"record {index}: missing field {field_name!r}")
    return record[field_name]


def _resolve_span(tokens: Sequence[str], pme: str, index: int) -> tuple[int, int]:
    needle = [t.lower() for t in _nfc(pme).split()]
    if not needle:
        raise SpanResolutionError(f"record {index}: empty expression string")
    haystack = [t.lower() for t in tokens]
    for start in range(len(haystack) - len(needle) + 1):
        if haystack[start:start + len(needle)] == needle:
            return (start, start + len(needle))
    raise SpanResolutionError(
        f"record {index}: expression {pme!r} does not occur in the sentence")


def _map_label(record: dict, spec: AdapterSpec, index: int,
               threshold_override: float | None) -> str:
    if spec.score_field is not None:
        threshold = threshold_override if threshold_override is not None \
            else spec.binarize_threshold
        score = float(_get(record, spec.score_field, index))
        return METAPHORIC if score >= threshold else LITERAL
    raw = str(_get(record, spec.label_field, index)).strip()
    if raw in spec.label_map:
        mapped = spec.label_map[raw]
    elif raw in LABELS:
        mapped = raw
    else:
        raise UnmappedLabelError(f"record {index}: label {raw!r} has no mapping "
                                 f"in adapter {spec.name!r}")
    if mapped not in LABELS:
        raise UnmappedLabelError(f"adapter {spec.name!r} maps {raw!r} to invalid "
                                 f"label {mapped!r}")
    return mapped


def ingest(raw_path: str | Path, spec: AdapterSpec,
           binarize_threshold: float | None = None) -> Dataset:
    """Parse a raw file under an adapter into a validated canonical dataset.

    The achieved percentage of metaphoric instances is compared against the
    adapter's declared expected range; being outside it is a warning, not a
    failure (the range encodes an expectation, not an invariant).
    """
    path = Path(raw_path)
    if not path.exists():
        raise AdapterError(f"no such file: {path}")
    readers = {"delimited": lambda: _read_delimited(path, spec),
               "jsonl": lambda: _read_jsonl(path),
               "xml": lambda: _read_xml(path, spec)}
    records = readers[spec.format]()

    instances = []
    for index, record in enumerate(records):
        label = _map_label(record, spec, index, binarize_threshold)
        if spec.tokens_field is not None:
            tokens = [_nfc(str(t)) for t in _get(record, spec.tokens_field, index)]
        else:
            tokens = [_nfc(t) for t in str(_get(record, spec.text_field, index)).split()]
        if spec.span_field is not None:
            raw_spans = _get(record, spec.span_field, index)
            spans = tuple((int(s), int(e)) for s, e in raw_spans)
        else:
            spans = (_resolve_span(tokens, str(_get(record, spec.pme_field, index)), index),)
        if spec.ignore_context:
            lo = min(s for s, _ in spans)
            hi = max(e for _, e in spans)
            tokens = tokens[lo:hi]
            spans = ((0, hi - lo),)

        inst_id = str(_get(record, spec.id_field, index)) if spec.id_field \
            else f"{spec.name}-{index:05d}"
        lemmas = None
        if spec.lemmas_field is not None and record.get(spec.lemmas_field) is not None:
            lemmas = tuple(_nfc(str(t)) for t in record[spec.lemmas_field])
        pos = None
        if spec.pos_field is not None and record.get(spec.pos_field) is not None:
            pos = tuple(str(t) for t in record[spec.pos_field])
        split_hint = None
        if spec.split_field is not None and record.get(spec.split_field) is not None:
            raw_split = str(record[spec.split_field])
            split_hint = spec.split_map.get(raw_split, raw_split)

        instances.append(Instance(
            id=inst_id, dataset=spec.name, tokens=tuple(tokens), spans=spans,
            label=label, lemmas=lemmas, pos=pos, split_hint=split_hint))

    provenance = f"ingested from {path.name} via adapter {spec.name!r}"
    if spec.score_field is not None:
        threshold = binarize_threshold if binarize_threshold is not None \
            else spec.binarize_threshold
        provenance += f"; binarized at threshold {threshold}"
    dataset = Dataset(name=spec.name, instances=tuple(instances), provenance=provenance)

    if spec.expected_met_range is not None and instances:
        lo, hi = spec.expected_met_range
        pct = dataset.percent_metaphoric()
        if not lo <= pct <= hi:
            warnings.warn(f"{spec.name}: {pct:.1f}% metaphoric outside the expected "
                          f"range [{lo}, {hi}]", stacklevel=2)
    return dataset


# --- Preprocessing ----------------------------------------------------------

@dataclass(frozen=True)
class Removal:
    removed_id: str
    kept_id: str
    scope: str

    def as_dict(self) -> dict:
        return {"removed_id": self.removed_id, "kept_id": self.kept_id, "scope": self.scope}


def _dedup_key(inst: Instance, scope: str) -> tuple:
    if scope == "exact_instance":
        return (inst.dataset, inst.tokens, inst.spans, inst.label, inst.lemmas, inst.pos)
    if scope == "context_and_span":
        return (inst.tokens, inst.spans)
    raise ValueError(f"unknown dedup scope: {scope!r}")


def deduplicate(dataset: Dataset, scope: str = "exact_instance") -> tuple[Dataset, list[Removal]]:
    """Drop repeated instances, keeping the first occurrence in input order."""
    kept: dict[tuple, str] = {}
    retained = []
    removals = []
    for inst in dataset.instances:
        key = _dedup_key(inst, scope)
        if key in kept:
            removals.append(Removal(removed_id=inst.id, kept_id=kept[key], scope=scope))
        else:
            kept[key] = inst.id
            retained.append(inst)
    return replace(dataset, instances=tuple(retained)), removals


def normalize_discontiguous(instance: Instance) -> Instance:
    """Merge the spans of a discontiguous expression into one covering range.

    The merged range runs from the first to the last expression token, so
    context between the parts is swallowed into the span. Original spans are
    kept on the instance for reporting. Single-span instances are returned
    unchanged.
    """
    if len(instance.spans) <= 1:
        return instance
    return replace(instance, spans=(instance.merged_span(),), source_spans=instance.spans)


def _context_key(inst: Instance) -> tuple:
    lo, hi = inst.merged_span()
    return (inst.tokens[:lo], inst.tokens[hi:])


def context_duplicates(a: Instance, b: Instance) -> bool:
    """Whether two instances share a context while targeting different spans.

    Covers both flavors seen in practice: the same sentence annotated at two
    different positions, and near-identical sentences where the expression
    was substituted in place (identical material around each one's own span).
    Exact twins (same tokens, same spans) are deduplication's business, not
    context duplication.
    """
    if a.tokens == b.tokens and a.spans == b.spans:
        return False
    if a.tokens == b.tokens and a.spans != b.spans:
        return True
    return _context_key(a) == _context_key(b)


def detect_context_duplication(dataset: Dataset) -> list[list[str]]:
    """Group ids of instances sharing a context with differing spans.

    Groups are reported, never modified; what to do about context
    duplication is left to the dataset owner. Groups are connected
    components of the pairwise relation, each sorted by id.
    """
    instances = list(dataset.instances)
    parent = {inst.id: inst.id for inst in instances}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: str, y: str) -> None:
        parent[find(x)] = find(y)

    buckets: dict[tuple, list[Instance]] = {}
    for inst in instances:
        buckets.setdefault(("ctx", *_context_key(inst)), []).append(inst)
        buckets.setdefault(("tok", inst.tokens), []).append(inst)
    for members in buckets.values():
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                if context_duplicates(a, b):
                    union(a.id, b.id)

    components: dict[str, list[str]] = {}
    for inst in instances:
        components.setdefault(find(inst.id), []).append(inst.id)
    groups = [sorted(ids) for ids in components.values() if len(ids) >= 2]
    groups.sort(key=lambda g: g[0])
    return groups


def write_removal_log(removals: Iterable[Removal], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for removal in removals:
            fh.write(json.dumps(removal.as_dict()) + "\n")


# --- Built-in adapters ------------------------------------------------------

_COMMON_LABELS = {
    "metaphoric": METAPHORIC, "metaphorical": METAPHORIC, "metaphor": METAPHORIC,
    "met": METAPHORIC, "m": METAPHORIC, "figurative": METAPHORIC, "idiomatic": METAPHORIC,
    "i": METAPHORIC, "1": METAPHORIC, "y": METAPHORIC, "yes": METAPHORIC,
    "literal": LITERAL, "lit": LITERAL, "l": LITERAL, "nonliteral": METAPHORIC,
    "0": LITERAL, "n": LITERAL, "no": LITERAL,
}

BUILTIN_ADAPTERS: dict[str, AdapterSpec] = {
    "generic_tsv": AdapterSpec(
        name="generic_tsv", format="delimited", delimiter="\t",
        id_field="id", text_field="sentence", pme_field="pme",
        label_field="label", label_map=dict(_COMMON_LABELS),
        split_field="split"),
    "generic_csv": AdapterSpec(
        name="generic_csv", format="delimited", delimiter=",",
        id_field="id", text_field="sentence", pme_field="pme",
        label_field="label", label_map=dict(_COMMON_LABELS),
        split_field="split"),
    "tokenized_jsonl": AdapterSpec(
        name="tokenized_jsonl", format="jsonl",
        id_field="id", tokens_field="tokens", span_field="spans",
        label_field="label", label_map=dict(_COMMON_LABELS),
        lemmas_field="lemmas", pos_field="pos", split_field="split"),
    "scored_jsonl": AdapterSpec(
        name="scored_jsonl", format="jsonl",
        id_field="id", tokens_field="tokens", span_field="spans",
        score_field="score", binarize_threshold=0.5),
    "generic_xml": AdapterSpec(
        name="generic_xml", format="xml", record_tag="instance",
        id_field="@id", text_field="sentence", pme_field="pme",
        label_field="label", label_map=dict(_COMMON_LABELS)),
}


def resolve_adapter(name_or_path: str) -> AdapterSpec:
    """Look up a built-in adapter or load a declarative spec from JSON."""
    if name_or_path in BUILTIN_ADAPTERS:
        return BUILTIN_ADAPTERS[name_or_path]
    path = Path(name_or_path)
    if path.exists() and path.suffix == ".json":
        return AdapterSpec.from_json(path)
    raise AdapterError(f"unknown adapter {name_or_path!r}; built-ins: "
                       f"{', '.join(sorted(BUILTIN_ADAPTERS))}")
