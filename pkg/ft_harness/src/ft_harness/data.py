"""Export-tree reading, marker-aware tokenization, and vocabulary."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

METAPHORIC = "metaphoric"
LITERAL = "literal"
LABEL_TO_ID = {LITERAL: 0, METAPHORIC: 1}
ID_TO_LABEL = {v: k for k, v in LABEL_TO_ID.items()}

PME_OPEN = "<PME>"
PME_CLOSE = "</PME>"
MASK = "<masked>"

PAD, UNK, CLS = "[PAD]", "[UNK]", "[CLS]"


@dataclass(frozen=True)
class Example:
    instance_id: str
    text: str
    label: str


def read_examples(path: Path) -> list[Example]:
    examples = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            examples.append(Example(instance_id=str(row["instance_id"]),
                                    text=str(row["text"]), label=str(row["label"])))
    return examples


def load_fold(export_dir: str | Path, fold: int, mode: str) -> dict[str, list[Example]]:
    base = Path(export_dir) / f"fold_{fold}" / mode
    if not base.is_dir():
        raise FileNotFoundError(f"no export partition at {base}")
    return {part: read_examples(base / f"{part}.jsonl")
            for part in ("train", "dev", "test")}


def discover_folds(export_dir: str | Path) -> list[int]:
    folds = sorted(int(p.name.split("_", 1)[1]) for p in Path(export_dir).glob("fold_*")
                   if p.is_dir())
    if not folds:
        raise FileNotFoundError(f"no fold_* directories under {export_dir}")
    return folds


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with the reserved markers peeled off as their own
    tokens, so the expression position is a first-class input symbol."""
    tokens: list[str] = []
    for piece in text.split():
        if piece.startswith(PME_OPEN) and piece != PME_OPEN:
            tokens.append(PME_OPEN)
            piece = piece[len(PME_OPEN):]
        close = False
        if piece.endswith(PME_CLOSE) and piece != PME_CLOSE:
            close = True
            piece = piece[:-len(PME_CLOSE)]
        if piece:
            tokens.append(piece)
        if close:
            tokens.append(PME_CLOSE)
    return tokens


@dataclass(frozen=True)
class Vocab:
    index: dict[str, int]

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocab":
        # Reserved markers are registered unconditionally: a mode may not
        # surface them in training text, but inputs are allowed to carry them.
        index = {PAD: 0, UNK: 1, CLS: 2, PME_OPEN: 3, PME_CLOSE: 4, MASK: 5}
        for text in texts:
            for token in tokenize(text):
                if token not in index:
                    index[token] = len(index)
        return cls(index=index)

    def __len__(self) -> int:
        return len(self.index)

    def encode(self, text: str, max_len: int) -> tuple[list[int], list[int]]:
        ids = [self.index[CLS]]
        ids += [self.index.get(tok, self.index[UNK]) for tok in tokenize(text)]
        ids = ids[:max_len]
        mask = [1] * len(ids)
        pad = self.index[PAD]
        while len(ids) < max_len:
            ids.append(pad)
            mask.append(0)
        return ids, mask


def batch_encode(examples: Sequence[Example], vocab: Vocab,
                 max_len: int) -> tuple[list[list[int]], list[list[int]], list[int]]:
    ids, masks, labels = [], [], []
    for ex in examples:
        i, m = vocab.encode(ex.text, max_len)
        ids.append(i)
        masks.append(m)
        labels.append(LABEL_TO_ID[ex.label])
    return ids, masks, labels
