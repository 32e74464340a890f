"""Fixture generation through the auditor's external interfaces only.

Canonical dataset JSONL is written directly (it is a documented on-disk
format); split plans and export trees come from the ``figbias`` CLI.
"""

from __future__ import annotations

import json
import random
import subprocess
from pathlib import Path

MET_CUE = "cuemet"
LIT_CUE = "cuelit"


def write_key_determined_jsonl(path: Path, n_keys: int = 50, per_key: int = 40,
                               vocab_size: int = 200, seed: int = 7,
                               name: str = "fixture") -> None:
    """Random contexts; every expression token carries a fixed label."""
    rng = random.Random(seed)
    vocab = [f"w{i:03d}" for i in range(vocab_size)]
    with path.open("w", encoding="utf-8") as fh:
        for key_index in range(n_keys):
            key = f"pme{key_index:03d}"
            label = "metaphoric" if key_index % 2 == 0 else "literal"
            for j in range(per_key):
                tokens = [rng.choice(vocab) for _ in range(rng.randint(6, 12))]
                position = rng.randrange(len(tokens) + 1)
                tokens.insert(position, key)
                fh.write(json.dumps({
                    "id": f"{name}-{key_index:03d}-{j:03d}", "dataset": name,
                    "tokens": tokens, "spans": [[position, position + 1]],
                    "label": label, "lemmas": None, "pos": None,
                    "split_hint": None}) + "\n")


def build_export(tmp_path: Path, modes: str = "default,masked", k: int = 1,
                 seed: int = 7, **dataset_kwargs) -> Path:
    """figbias split + export over a freshly written fixture."""
    data = tmp_path / "fixture.jsonl"
    write_key_determined_jsonl(data, seed=seed, **dataset_kwargs)
    plan = tmp_path / "plan.json"
    subprocess.run(["figbias", "split", "--scheme", "random", "--k", str(k),
                    "--seed", str(seed), "--in", str(data), "--out", str(plan)],
                   check=True, capture_output=True)
    export = tmp_path / "export"
    subprocess.run(["figbias", "export", "--in", str(data), "--plan", str(plan),
                    "--modes", modes, "--out", str(export)],
                   check=True, capture_output=True)
    return export
