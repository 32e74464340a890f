"""The ``finetune`` command: train on an export tree, emit mergeable metrics."""

from __future__ import annotations

import argparse
import sys

from .train import TrainConfig, run_finetune, write_outputs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finetune",
        description="Fine-tune a bidirectional encoder classifier on an exported "
                    "fold/mode/partition tree and emit a metrics JSON that merges "
                    "into auditing reports.")
    parser.add_argument("--export-dir", required=True,
                        help="directory containing fold_<F>/<mode>/{train,dev,test}.jsonl")
    parser.add_argument("--mode", required=True,
                        choices=("default", "only_pme", "masked"))
    parser.add_argument("--trials", type=int, default=0,
                        help="random-search trials; 0 trains the fixed config")
    parser.add_argument("--seed", type=int, default=1, help="search seed")
    parser.add_argument("--out", required=True, help="metrics JSON path; test "
                        "predictions go to <out>.predictions.jsonl")
    parser.add_argument("--encoder", default=None,
                        help="pretrained checkpoint name or path; defaults to a "
                             "config-initialized tiny encoder")
    parser.add_argument("--fold", type=int, action="append", default=None,
                        help="restrict to specific folds (repeatable)")
    parser.add_argument("--classifier-name", default="encoder",
                        help="classifier label used in the emitted report")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--epochs", type=int, default=8)
    parser.add_argument("--train-seed", type=int, default=1,
                        help="seed of the fixed config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fixed = TrainConfig(batch_size=args.batch_size, learning_rate=args.lr,
                        epochs=args.epochs, seed=args.train_seed)
    try:
        report, predictions = run_finetune(
            args.export_dir, args.mode, trials=args.trials, seed=args.seed,
            fixed=fixed, encoder=args.encoder, folds=args.fold,
            classifier_name=args.classifier_name)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    pred_path = write_outputs(report, predictions, args.out)
    macro = [row["metrics"]["macro_f1"] for row in report["averages"]]
    print(f"wrote {args.out} (macro-F1 {macro[0]:.2f}) and {pred_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
