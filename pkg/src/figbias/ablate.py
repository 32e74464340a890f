"""Render instances under the three partial-input configurations.

``default`` shows the full context with the target expression wrapped in
reserved marker strings, ``only_pme`` shows the expression alone, and
``masked`` replaces every expression token with a placeholder while the
context survives. The three renderings are what downstream classifiers
see; nothing else about an instance leaks through.

Detokenization is plain space joining. Deterministic output matters more
than fluent punctuation here: downstream models tokenize on whitespace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import Instance
from .errors import MarkerCollisionError

PME_OPEN = "<PME>"
PME_CLOSE = "</PME>"
MASK = "<masked>"
RESERVED_MARKERS = (PME_OPEN, PME_CLOSE, MASK)

MODES = ("default", "only_pme", "masked")


@dataclass(frozen=True)
class AblatedExample:
    instance_id: str
    mode: str
    text: str
    label: str

    def as_dict(self) -> dict:
        return {"instance_id": self.instance_id, "mode": self.mode,
                "text": self.text, "label": self.label}

    @classmethod
    def from_dict(cls, row: dict) -> "AblatedExample":
        return cls(instance_id=str(row["instance_id"]), mode=str(row["mode"]),
                   text=str(row["text"]), label=str(row["label"]))


def ablate(instance: Instance, mode: str) -> AblatedExample:
    """Render one instance under a given input configuration.

    ``default`` wraps the merged span in one marker pair (a discontiguous
    expression is tagged from its first to its last token, intervening
    context included). ``only_pme`` emits the merged span alone. ``masked``
    replaces each span token in place with one placeholder, so context
    between discontiguous parts survives.
    """
    if mode not in MODES:
        raise ValueError(f"unknown ablation mode: {mode!r}")
    for token in instance.tokens:
        for marker in RESERVED_MARKERS:
            if marker in token:
                raise MarkerCollisionError(
                    f"instance {instance.id!r}: token {token!r} contains reserved marker {marker}")

    lo, hi = instance.merged_span()
    if mode == "default":
        pieces = list(instance.tokens[:lo])
        pieces.append(PME_OPEN + " ".join(instance.tokens[lo:hi]) + PME_CLOSE)
        pieces.extend(instance.tokens[hi:])
        text = " ".join(pieces)
    elif mode == "only_pme":
        text = " ".join(instance.tokens[lo:hi])
    else:
        out = list(instance.tokens)
        for start, end in instance.spans:
            for i in range(start, end):
                out[i] = MASK
        text = " ".join(out)
    return AblatedExample(instance_id=instance.id, mode=mode, text=text, label=instance.label)


def ablate_all(instances: Iterable[Instance], mode: str) -> list[AblatedExample]:
    return [ablate(inst, mode) for inst in instances]


def strip_markers(text: str) -> str:
    """Remove the default-mode markers, recovering the plain surface text."""
    return text.replace(PME_OPEN, "").replace(PME_CLOSE, "")


def write_examples(examples: Iterable[AblatedExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.as_dict(), ensure_ascii=False) + "\n")


def read_examples(path: str | Path) -> Iterator[AblatedExample]:
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield AblatedExample.from_dict(json.loads(line))
