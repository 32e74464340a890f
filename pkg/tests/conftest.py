"""Shared builders for test fixtures."""

from __future__ import annotations

from figbias.corpus import Dataset, Instance


def make_instance(tokens: str | list[str], spans, label: str = "metaphoric",
                  inst_id: str = "i0", dataset: str = "test", **kwargs) -> Instance:
    if isinstance(tokens, str):
        tokens = tokens.split()
    if isinstance(spans, tuple) and len(spans) == 2 and isinstance(spans[0], int):
        spans = [spans]
    return Instance(id=inst_id, dataset=dataset, tokens=tuple(tokens),
                    spans=tuple((s, e) for s, e in spans), label=label, **kwargs)


def make_dataset(instances, name: str = "test", provenance: str = "") -> Dataset:
    return Dataset(name=name, instances=tuple(instances), provenance=provenance)
