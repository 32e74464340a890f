"""Deterministic train/dev/test split plans with verifiable disjointness.

Three schemes: ``original`` mirrors split hints carried from a source
dataset, ``random_kfold`` partitions a seeded permutation of instance ids
into contiguous blocks, and ``lexical_kfold`` treats key groups (all
instances sharing a lexical key) as atomic units so no key ever straddles
test and train/dev.

Planning is pure in (instance ids, key, k, ratios, seed): instance order
on disk never matters. All randomness flows through one ``random.Random``
seeded instance.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import (Dataset, Instance, METAPHORIC, SplitKey, Violation,
                     effective_split_key)
from .errors import PlanError

SCHEMES = ("original", "random_kfold", "lexical_kfold")
DEFAULT_RATIOS = (0.7, 0.1, 0.2)
# Single train/dev/test split instead of k folds once the would-be test
# partition exceeds this many instances.
DEFAULT_SINGLE_SPLIT_THRESHOLD = 10_000

_EPS = 1e-9


@dataclass(frozen=True)
class SplitPlan:
    dataset: str
    scheme: str
    k: int
    ratios: tuple[float, float, float]
    key: str | None
    seed: int | None
    assignment: tuple[dict, ...]  # per fold: instance_id -> partition
    warnings: tuple[str, ...] = ()
    fallback_ids: tuple[str, ...] = ()

    def partition_ids(self, fold: int, partition: str) -> list[str]:
        return sorted(i for i, p in self.assignment[fold].items() if p == partition)

    def as_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "scheme": self.scheme,
            "k": self.k,
            "ratios": list(self.ratios),
            "key": self.key,
            "seed": self.seed,
            "assignment": [sorted(fold.items()) for fold in self.assignment],
            "warnings": list(self.warnings),
            "fallback_ids": list(self.fallback_ids),
        }

    @classmethod
    def from_dict(cls, row: dict) -> "SplitPlan":
        return cls(
            dataset=str(row["dataset"]),
            scheme=str(row["scheme"]),
            k=int(row["k"]),
            ratios=tuple(float(r) for r in row["ratios"]),
            key=row.get("key"),
            seed=row.get("seed"),
            assignment=tuple({str(i): str(p) for i, p in fold} for fold in row["assignment"]),
            warnings=tuple(row.get("warnings", ())),
            fallback_ids=tuple(row.get("fallback_ids", ())),
        )


def write_plan(plan: SplitPlan, path: str | Path) -> None:
    Path(path).write_text(json.dumps(plan.as_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_plan(path: str | Path) -> SplitPlan:
    return SplitPlan.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3:
        raise PlanError(f"ratios must be (train, dev, test), got {ratios!r}")
    train, dev, test = (float(r) for r in ratios)
    if min(train, dev, test) < 0 or abs(train + dev + test - 1.0) > 1e-6:
        raise PlanError(f"ratios must be non-negative and sum to 1, got {ratios!r}")
    if test <= 0:
        raise PlanError("test ratio must be positive")
    return (train, dev, test)


def effective_fold_count(n: int, k: int, ratios: Sequence[float],
                         single_split_threshold: int | None) -> int:
    """Large datasets fall back to a single train/dev/test split."""
    if single_split_threshold is not None and n * float(ratios[2]) > single_split_threshold:
        return 1
    return k


def plan_original(dataset: Dataset) -> SplitPlan:
    """Single-fold plan mirroring the split hints carried by each instance."""
    missing = sorted(inst.id for inst in dataset if inst.split_hint is None)
    if missing:
        raise PlanError(f"instances without split_hint: {', '.join(missing)}")
    fold = {inst.id: inst.split_hint for inst in dataset}
    n = len(dataset)
    counts = {p: sum(1 for v in fold.values() if v == p) for p in ("train", "dev", "test")}
    ratios = tuple(counts[p] / n for p in ("train", "dev", "test")) if n else (0.0, 0.0, 0.0)
    return SplitPlan(dataset=dataset.name, scheme="original", k=1, ratios=ratios,
                     key=None, seed=None, assignment=(fold,))


def plan_random(dataset: Dataset, k: int = 5,
                ratios: Sequence[float] = DEFAULT_RATIOS,
                seed: int = 0) -> SplitPlan:
    """k-fold random plan over a seeded permutation of sorted instance ids.

    Fold f's test set is the f-th contiguous block of the permutation
    (cyclic when block boundaries pass the end), dev is the next block
    after it, and everything else is train.
    """
    train_r, dev_r, test_r = _check_ratios(ratios)
    n = len(dataset)
    if n < k:
        raise PlanError(f"dataset of size {n} cannot be split into {k} folds")
    ids = sorted(inst.id for inst in dataset)
    rng = random.Random(seed)
    rng.shuffle(ids)

    test_size = round(n * test_r)
    dev_size = round(n * dev_r)
    if test_size + dev_size > n:
        raise PlanError(f"ratios {ratios!r} infeasible for dataset of size {n}")

    # When the k test blocks are meant to cover the permutation but fixed-size
    # blocks would fall one instance short of n (rounding), tile with exact
    # boundaries instead; sizes stay within one instance of the target.
    tile = 1.0 - _EPS <= k * test_r < 1.0 + k / (2 * n)
    folds = []
    for f in range(k):
        if tile:
            start = round(f * n / k)
            block = round((f + 1) * n / k) - start
        else:
            start = (f * test_size) % n
            block = test_size
        test_idx = [(start + j) % n for j in range(block)]
        dev_start = (start + block) % n
        dev_idx = [(dev_start + j) % n for j in range(dev_size)]
        fold = {inst_id: "train" for inst_id in ids}
        for j in test_idx:
            fold[ids[j]] = "test"
        for j in dev_idx:
            fold[ids[j]] = "dev"
        folds.append(fold)
    return SplitPlan(dataset=dataset.name, scheme="random_kfold", k=k,
                     ratios=(train_r, dev_r, test_r), key=None, seed=seed,
                     assignment=tuple(folds))


def _group_instances(dataset: Dataset, key: SplitKey) -> tuple[dict[str, list[Instance]], list[str]]:
    groups: dict[str, list[Instance]] = {}
    fallbacks: list[str] = []
    for inst in sorted(dataset, key=lambda i: i.id):
        key_string, fell_back = effective_split_key(inst, key)
        if fell_back:
            fallbacks.append(inst.id)
        groups.setdefault(key_string, []).append(inst)
    return groups, fallbacks


def _canonical_group_order(groups: dict[str, list[Instance]]) -> list[str]:
    # Largest groups placed first; key string breaks ties deterministically.
    return sorted(groups, key=lambda key: (-len(groups[key]), key))


def _pack_buckets(order: list[str], groups: dict[str, list[Instance]], k: int) -> list[list[str]]:
    """Greedy largest-first packing of key groups into k equal-target buckets."""
    buckets: list[list[str]] = [[] for _ in range(k)]
    sizes = [0] * k
    for key in order:
        target = min(range(k), key=lambda b: (sizes[b], b))
        buckets[target].append(key)
        sizes[target] += len(groups[key])
    return buckets


def plan_lexical(dataset: Dataset, key: SplitKey, k: int = 5,
                 ratios: Sequence[float] = DEFAULT_RATIOS,
                 seed: int = 0) -> SplitPlan:
    """k-fold lexical plan: key groups are atomic units of assignment.

    Groups are packed largest-first into k buckets; a seeded rotation picks
    which bucket serves as fold f's test partition, so every group reaches
    the test side in some fold (exactly once when test ratio is 1/k). The
    remaining groups are balanced greedily between train and dev against
    their ratio targets, with label stratification as a tie-break.
    """
    train_r, dev_r, test_r = _check_ratios(ratios)
    n = len(dataset)
    if n == 0:
        raise PlanError("cannot split an empty dataset")
    groups, fallbacks = _group_instances(dataset, key)
    order = _canonical_group_order(groups)
    rng = random.Random(seed)
    rotation = rng.randrange(k)

    warnings = []
    if fallbacks:
        warnings.append(
            f"{len(fallbacks)} instances fell back to surface keying under {key.describe()}")
    largest = order[0]
    if len(groups[largest]) > test_r * n:
        warnings.append(
            f"key {largest!r} covers {len(groups[largest])} of {n} instances "
            f"(more than the test ratio); balance unattainable")

    met_total = sum(1 for i in dataset if i.label == METAPHORIC)
    met_frac = met_total / n

    # Coverage across folds needs every group to reach the test side; a
    # rotating bucket per fold provides that. With test ratio exactly 1/k the
    # bucket IS the test partition (each group tested exactly once); with a
    # larger ratio the greedy pass tops test up towards its target.
    exact_kfold = abs(k * test_r - 1.0) < 1e-6
    need_coverage = k * test_r >= 1.0 - _EPS
    buckets = _pack_buckets(order, groups, k) if need_coverage else None

    folds = []
    for f in range(k):
        test_keys = set(buckets[(f + rotation) % k]) if buckets is not None else set()
        fold_order = order
        if buckets is None and order:
            # Rotate the greedy order per fold so test composition varies.
            offset = (f + rotation) % len(order)
            fold_order = order[offset:] + order[:offset]

        fold: dict[str, str] = {}
        fill = {"train": 0, "dev": 0, "test": 0}
        met = {"train": 0, "dev": 0, "test": 0}
        targets = {"train": train_r * n, "dev": dev_r * n, "test": test_r * n}
        open_parts = ["train", "dev"] if exact_kfold else ["train", "dev", "test"]

        for key_string in fold_order:
            members = groups[key_string]
            if key_string in test_keys:
                part = "test"
            else:
                part = _most_deficient(open_parts, fill, targets, met, met_frac, members)
            for inst in members:
                fold[inst.id] = part
            fill[part] += len(members)
            met[part] += sum(1 for i in members if i.label == METAPHORIC)
        folds.append(fold)

    return SplitPlan(dataset=dataset.name, scheme="lexical_kfold", k=k,
                     ratios=(train_r, dev_r, test_r), key=key.describe(), seed=seed,
                     assignment=tuple(folds), warnings=tuple(warnings),
                     fallback_ids=tuple(fallbacks))


def _most_deficient(parts: list[str], fill: dict[str, int], targets: dict[str, float],
                    met: dict[str, int], met_frac: float, members: list[Instance]) -> str:
    deficits = {p: targets[p] - fill[p] for p in parts}
    best = max(deficits.values())
    tied = [p for p in parts if abs(deficits[p] - best) < 1e-12]
    if len(tied) == 1:
        return tied[0]
    # Secondary objective: keep each partition's label mix near the dataset's.
    group_met = sum(1 for i in members if i.label == METAPHORIC)

    def imbalance(part: str) -> float:
        size = fill[part] + len(members)
        return abs((met[part] + group_met) / size - met_frac) if size else 0.0

    return min(tied, key=lambda p: (imbalance(p), parts.index(p)))


def verify(plan: SplitPlan, dataset: Dataset) -> list[Violation]:
    """Check every plan invariant against a dataset; empty report = valid."""
    report: list[Violation] = []
    by_id = dataset.by_id()
    all_ids = set(by_id)
    n = len(dataset)
    train_r, dev_r, test_r = plan.ratios

    key = SplitKey.parse(plan.key) if plan.key else None
    keys_of = {}
    if key is not None:
        keys_of = {inst.id: effective_split_key(inst, key)[0] for inst in dataset}
    group_sizes: dict[str, int] = {}
    for key_string in keys_of.values():
        group_sizes[key_string] = group_sizes.get(key_string, 0) + 1
    max_group = max(group_sizes.values()) if group_sizes else 0

    seen_in_test: set[str] = set()
    for f, fold in enumerate(plan.assignment):
        for inst_id, part in fold.items():
            if inst_id not in all_ids:
                report.append(Violation("dangling_id",
                                        f"fold {f}: id {inst_id!r} not in dataset", inst_id))
            if part not in ("train", "dev", "test"):
                report.append(Violation("bad_partition",
                                        f"fold {f}: id {inst_id!r} assigned to {part!r}", inst_id))
        uncovered = all_ids - set(fold)
        for inst_id in sorted(uncovered):
            report.append(Violation("uncovered_instance",
                                    f"fold {f}: instance {inst_id!r} not assigned", inst_id))

        parts = {p: [i for i, q in fold.items() if q == p] for p in ("train", "dev", "test")}
        seen_in_test.update(parts["test"])

        if key is not None:
            test_keys = {keys_of[i] for i in parts["test"] if i in keys_of}
            trainside_keys = {keys_of[i] for i in parts["train"] + parts["dev"] if i in keys_of}
            for leaked in sorted(test_keys & trainside_keys):
                report.append(Violation(
                    "lexical_leak",
                    f"fold {f}: key {leaked!r} appears in test and in train/dev"))

        if plan.scheme == "random_kfold":
            tolerance = 2.0
        elif plan.scheme == "lexical_kfold":
            tolerance = max_group + 1.0
        else:
            tolerance = None
        if tolerance is not None:
            for part, ratio in (("train", train_r), ("dev", dev_r), ("test", test_r)):
                deviation = abs(len(parts[part]) - ratio * n)
                if deviation > tolerance:
                    report.append(Violation(
                        "size_tolerance",
                        f"fold {f}: {part} holds {len(parts[part])} instances, "
                        f"target {ratio * n:.1f} (tolerance {tolerance:.1f})"))

    if plan.scheme in ("random_kfold", "lexical_kfold") and plan.k * test_r >= 1.0 - _EPS:
        for inst_id in sorted(all_ids - seen_in_test):
            report.append(Violation("test_coverage",
                                    f"instance {inst_id!r} never appears in a test partition",
                                    inst_id))
    return report
