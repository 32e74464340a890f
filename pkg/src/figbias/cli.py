"""Command-line interface: every module as a subcommand, plus ``run``.

``run`` drives the full pipeline (ingest, dedup, split, ablate, audit,
report) from a TOML or JSON config file, with flags overriding config
values. Every intermediate artifact is written to disk and reloadable, so
any stage can be replayed on its own; reruns with identical inputs produce
byte-identical outputs (no timestamps, sorted keys, one seed).

On failure the process exits non-zero after printing a machine-readable
error record naming the failing stage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import ablate as ablate_mod
from . import baselines, corpus, ingest as ingest_mod, metrics, sampler, split as split_mod
from .errors import FigbiasError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

SEED_ENV_VAR = "FIGBIAS_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV_VAR, "0"))


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def _fail(stage: str, exc: Exception) -> "StageError":
    return StageError(stage, str(exc))


# --- Subcommand implementations ----------------------------------------------

def cmd_ingest(args: argparse.Namespace) -> None:
    try:
        spec = ingest_mod.resolve_adapter(args.adapter)
        dataset = ingest_mod.ingest(args.infile, spec,
                                    binarize_threshold=args.binarize_threshold)
        removals = []
        if args.dedup != "none":
            dataset, removals = ingest_mod.deduplicate(dataset, scope=args.dedup)
        corpus.write_dataset(dataset, args.out)
        if args.dedup != "none":
            ingest_mod.write_removal_log(removals, str(args.out) + ".dedup.log")
    except (FigbiasError, OSError, ValueError) as exc:
        raise _fail("ingest", exc)
    print(f"wrote {len(dataset)} instances "
          f"({dataset.percent_metaphoric():.1f}% metaphoric) to {args.out}")


def cmd_ablate(args: argparse.Namespace) -> None:
    try:
        dataset = corpus.load_dataset(args.infile)
        examples = ablate_mod.ablate_all(dataset.instances, args.mode)
        ablate_mod.write_examples(examples, args.out)
    except (FigbiasError, OSError, ValueError) as exc:
        raise _fail("ablate", exc)
    print(f"wrote {len(examples)} {args.mode} examples to {args.out}")


def _build_plan(dataset: corpus.Dataset, scheme: str, key_spec: str, k: int,
                ratios: tuple[float, float, float], seed: int,
                single_split_threshold: int) -> split_mod.SplitPlan:
    k_eff = split_mod.effective_fold_count(len(dataset), k, ratios, single_split_threshold)
    if scheme == "original":
        return split_mod.plan_original(dataset)
    if scheme == "random":
        return split_mod.plan_random(dataset, k=k_eff, ratios=ratios, seed=seed)
    if scheme == "lexical":
        key = corpus.SplitKey.parse(key_spec)
        return split_mod.plan_lexical(dataset, key, k=k_eff, ratios=ratios, seed=seed)
    raise ValueError(f"unknown split scheme: {scheme!r}")


def cmd_split(args: argparse.Namespace) -> None:
    try:
        dataset = corpus.load_dataset(args.infile)
        plan = _build_plan(dataset, args.scheme, args.key, args.k,
                           tuple(args.ratios), args.seed, args.single_split_threshold)
        violations = split_mod.verify(plan, dataset)
        if violations:
            raise FigbiasError(f"plan failed verification: {violations[0].message}")
        split_mod.write_plan(plan, args.out)
    except (FigbiasError, OSError, ValueError) as exc:
        raise _fail("split", exc)
    print(f"wrote {plan.scheme} plan with {plan.k} folds to {args.out}")


def cmd_audit(args: argparse.Namespace) -> None:
    try:
        dataset = corpus.load_dataset(args.infile)
        plan = split_mod.load_plan(args.plan)
        report = baselines.run_audit(
            dataset, plan,
            modes=args.modes.split(","),
            classifiers=args.classifiers.split(","),
            nb_alpha=args.nb_alpha,
            nb_alpha_grid=baselines.DEFAULT_ALPHA_GRID if args.nb_alpha_grid else None)
        metrics.write_report(report, args.out)
    except (FigbiasError, OSError, ValueError) as exc:
        raise _fail("audit", exc)
    print(f"wrote audit report ({len(report.cells)} cells) to {args.out}")


def cmd_sample(args: argparse.Namespace) -> None:
    try:
        token_corpus = sampler.TokenCorpus.load(args.infile)
        config = sampler.SamplerConfig(ratio=args.ratio, seed=args.seed,
                                       max_literals_per_expression=args.max_literals,
                                       granularity=args.granularity)
        dataset, log = sampler.sample_corpus(token_corpus, config, name=args.name)
        corpus.write_dataset(dataset, args.out)
        if args.log:
            log.write(args.log)
    except (FigbiasError, OSError, ValueError) as exc:
        raise _fail("sample", exc)
    print(f"wrote {len(dataset)} instances "
          f"({dataset.percent_metaphoric():.1f}% metaphoric) to {args.out}")


def cmd_report(args: argparse.Namespace) -> None:
    try:
        reports = [metrics.load_report(path) for path in args.infiles]
        report = reports[0] if len(reports) == 1 else metrics.merge_reports(reports)
        metrics.emit(report, args.format, args.out)
    except (FigbiasError, OSError, ValueError) as exc:
        raise _fail("report", exc)
    print(f"wrote {args.format} report to {args.out}")


def cmd_export(args: argparse.Namespace) -> None:
    """Per-fold, per-mode train/dev/test JSONL trees for external trainers."""
    try:
        dataset = corpus.load_dataset(args.infile)
        plan = split_mod.load_plan(args.plan)
        by_id = dataset.by_id()
        out_dir = Path(args.out)
        for fold in range(plan.k):
            for mode in args.modes.split(","):
                target = out_dir / f"fold_{fold}" / mode
                target.mkdir(parents=True, exist_ok=True)
                for partition in ("train", "dev", "test"):
                    instances = [by_id[i] for i in plan.partition_ids(fold, partition)]
                    examples = ablate_mod.ablate_all(instances, mode)
                    ablate_mod.write_examples(examples, target / f"{partition}.jsonl")
    except (FigbiasError, OSError, ValueError, KeyError) as exc:
        raise _fail("export", exc)
    print(f"exported {plan.k} folds x {args.modes} to {args.out}")


# --- Pipeline orchestration ---------------------------------------------------

@dataclass
class AuditConfig:
    """One reviewable artifact describing a full audit run."""

    name: str
    input_path: str
    out_dir: str
    adapter: str | None = None  # None means the input is already canonical
    dedup: str = "none"
    schemes: tuple[str, ...] = ("random",)
    key: str = "surface"
    k: int = 5
    ratios: tuple[float, float, float] = split_mod.DEFAULT_RATIOS
    seed: int = 0
    single_split_threshold: int = split_mod.DEFAULT_SINGLE_SPLIT_THRESHOLD
    modes: tuple[str, ...] = ("default", "only_pme", "masked")
    classifiers: tuple[str, ...] = ("majority", "memorizer", "nb")
    formats: tuple[str, ...] = ("json", "markdown")

    @classmethod
    def load(cls, path: str | Path) -> "AuditConfig":
        text = Path(path).read_bytes()
        if str(path).endswith(".toml"):
            raw = tomllib.loads(text.decode("utf-8"))
        else:
            raw = json.loads(text)
        dataset = raw.get("dataset", {})
        split_cfg = raw.get("split", {})
        audit_cfg = raw.get("audit", {})
        report_cfg = raw.get("report", {})
        run = raw.get("run", {})
        schemes = split_cfg.get("schemes", [split_cfg.get("scheme", "random")])
        return cls(
            name=dataset.get("name", Path(dataset.get("input", "dataset")).stem),
            input_path=dataset["input"],
            out_dir=run.get("out_dir", "figbias-out"),
            adapter=dataset.get("adapter"),
            dedup=dataset.get("dedup", "none"),
            schemes=tuple(schemes),
            key=split_cfg.get("key", "surface"),
            k=int(split_cfg.get("k", 5)),
            ratios=tuple(split_cfg.get("ratios", split_mod.DEFAULT_RATIOS)),
            seed=int(run.get("seed", _default_seed())),
            single_split_threshold=int(split_cfg.get(
                "single_split_threshold", split_mod.DEFAULT_SINGLE_SPLIT_THRESHOLD)),
            modes=tuple(audit_cfg.get("modes", ("default", "only_pme", "masked"))),
            classifiers=tuple(audit_cfg.get("classifiers", ("majority", "memorizer", "nb"))),
            formats=tuple(report_cfg.get("formats", ("json", "markdown"))),
        )


def run_pipeline(config: AuditConfig) -> list[Path]:
    """ingest -> dedup -> split -> ablate -> audit -> report, all on disk."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []

    try:
        if config.adapter:
            spec = ingest_mod.resolve_adapter(config.adapter)
            dataset = ingest_mod.ingest(config.input_path, spec)
        else:
            dataset = corpus.load_dataset(config.input_path, name=config.name)
        canonical = out_dir / f"{config.name}.canonical.jsonl"
        if config.dedup != "none":
            dataset, removals = ingest_mod.deduplicate(dataset, scope=config.dedup)
            ingest_mod.write_removal_log(removals, str(canonical) + ".dedup.log")
            artifacts.append(Path(str(canonical) + ".dedup.log"))
        corpus.write_dataset(dataset, canonical)
        artifacts.append(canonical)
    except (FigbiasError, OSError, ValueError, KeyError) as exc:
        raise _fail("ingest", exc)

    for scheme in config.schemes:
        try:
            plan = _build_plan(dataset, scheme, config.key, config.k, config.ratios,
                               config.seed, config.single_split_threshold)
            violations = split_mod.verify(plan, dataset)
            if violations:
                raise FigbiasError(f"plan failed verification: {violations[0].message}")
            plan_path = out_dir / f"{config.name}.{plan.scheme}.plan.json"
            split_mod.write_plan(plan, plan_path)
            artifacts.append(plan_path)
        except (FigbiasError, OSError, ValueError) as exc:
            raise _fail("split", exc)

        try:
            for mode in config.modes:
                examples = ablate_mod.ablate_all(dataset.instances, mode)
                path = out_dir / f"{config.name}.{mode}.ablated.jsonl"
                ablate_mod.write_examples(examples, path)
                artifacts.append(path)
        except (FigbiasError, OSError, ValueError) as exc:
            raise _fail("ablate", exc)

        try:
            report = baselines.run_audit(dataset, plan, modes=config.modes,
                                         classifiers=config.classifiers)
            report_path = out_dir / f"{config.name}.{plan.scheme}.report.json"
            metrics.write_report(report, report_path)
            artifacts.append(report_path)
        except (FigbiasError, ValueError) as exc:
            raise _fail("audit", exc)

        try:
            for fmt in config.formats:
                if fmt == "json":
                    continue  # the audit stage already wrote the canonical JSON
                suffix = {"markdown": "md", "csv": "csv"}[fmt]
                path = out_dir / f"{config.name}.{plan.scheme}.report.{suffix}"
                metrics.emit(report, fmt, path)
                artifacts.append(path)
        except (FigbiasError, OSError, ValueError, KeyError) as exc:
            raise _fail("report", exc)

    return artifacts


def cmd_run(args: argparse.Namespace) -> None:
    try:
        config = AuditConfig.load(args.config)
    except (OSError, ValueError, KeyError) as exc:
        raise _fail("config", exc)
    if args.out_dir:
        config.out_dir = args.out_dir
    if args.seed is not None:
        config.seed = args.seed
    if args.modes:
        config.modes = tuple(args.modes.split(","))
    if args.classifiers:
        config.classifiers = tuple(args.classifiers.split(","))
    artifacts = run_pipeline(config)
    for path in artifacts:
        print(path)


# --- Parser wiring ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figbias",
        description="Audit span-labeled figurative-language datasets for "
                    "partial-input biases, and sample bias-mitigated datasets "
                    "from annotated corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a raw dataset file to canonical JSONL")
    p.add_argument("--adapter", required=True,
                   help="built-in adapter name or path to an adapter spec JSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--binarize-threshold", type=float, default=None,
                   help="override the adapter's score binarization threshold")
    p.add_argument("--dedup", choices=("none",) + ingest_mod.DEDUP_SCOPES, default="none",
                   help="deduplicate after ingestion; removals logged to <out>.dedup.log")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("ablate", help="render instances under one input configuration")
    p.add_argument("--mode", choices=ablate_mod.MODES, required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("split", help="build a train/dev/test plan")
    p.add_argument("--scheme", choices=("original", "random", "lexical"), required=True)
    p.add_argument("--key", default="surface",
                   help="lexical split key: surface, lemma, or head:<k>")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--ratios", type=float, nargs=3, metavar=("TRAIN", "DEV", "TEST"),
                   default=list(split_mod.DEFAULT_RATIOS))
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help=f"defaults to ${SEED_ENV_VAR} or 0")
    p.add_argument("--single-split-threshold", type=int,
                   default=split_mod.DEFAULT_SINGLE_SPLIT_THRESHOLD,
                   help="use a single fold once the test partition would exceed this size")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("audit", help="train and evaluate baselines over a plan")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--modes", default="default,only_pme,masked")
    p.add_argument("--classifiers", default="majority,memorizer,nb")
    p.add_argument("--nb-alpha", type=float, default=1.0)
    p.add_argument("--nb-alpha-grid", action="store_true",
                   help="select naive Bayes smoothing on dev from a small grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sample", help="build a binary dataset from an annotated corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ratio", type=float, default=1.0,
                   help="literal instances per metaphoric instance")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--granularity", choices=sampler.GRANULARITIES, default="span")
    p.add_argument("--max-literals", type=int, default=None,
                   help="cap on literals drawn per expression")
    p.add_argument("--name", default="sampled")
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="write tier statistics JSON here")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("report", help="render (and optionally merge) audit reports")
    p.add_argument("--in", dest="infiles", action="append", required=True,
                   help="report JSON; repeat to merge several reports")
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export", help="write per-fold per-mode train/dev/test JSONL trees")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--modes", default="default,only_pme,masked")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("run", help="run the full pipeline from a config file")
    p.add_argument("--config", required=True, help="TOML or JSON config")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--modes", default=None)
    p.add_argument("--classifiers", default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(json.dumps({"stage": exc.stage, "error": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
