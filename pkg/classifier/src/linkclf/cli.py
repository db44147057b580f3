"""Command line: train a classifier on a dataset directory and report
accuracy, optionally at several masked observation lengths.

    linkclf train DATASET_DIR --out runs/clf [--curriculum HARD_DIR] ...
    linkclf eval  MODEL.pt DATASET_DIR [--lengths 64,128,256]
"""
import argparse
import json
import sys
from pathlib import Path

import torch

from .data import load_dataset
from .model import LinkClassifier, ModelConfig
from .training import TrainConfig, evaluate, train, train_fresh


def _model_config(dataset, args) -> ModelConfig:
    # rows are seq_length tokens: the classification marker, then events
    return ModelConfig(vocab_size=dataset.vocab_size,
                       max_len=dataset.seq_length,
                       d_model=args.d_model, n_layers=args.n_layers,
                       n_heads=args.n_heads, window=args.window)


def _train_config(args) -> TrainConfig:
    return TrainConfig(batch_size=args.batch_size,
                       learning_rate=args.learning_rate,
                       max_epochs=args.max_epochs, patience=args.patience,
                       min_delta=args.min_delta, seed=args.seed)


def cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    model_cfg = _model_config(dataset, args)
    result = train_fresh(model_cfg, dataset.splits["train"],
                         dataset.splits["validation"], _train_config(args))
    stage_summaries = [{"dataset": str(args.dataset),
                        "best_val_accuracy": result.best_val_accuracy,
                        "epochs": result.epochs_run,
                        "stopped_early": result.stopped_early}]
    if args.curriculum:
        hard = load_dataset(args.curriculum)
        result = train(result.model, hard.splits["train"],
                       hard.splits["validation"], _train_config(args))
        stage_summaries.append({"dataset": str(args.curriculum),
                                "best_val_accuracy": result.best_val_accuracy,
                                "epochs": result.epochs_run,
                                "stopped_early": result.stopped_early})
        dataset = hard
    test_acc, correct, total = evaluate(result.model, dataset.splits["test"])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    torch.save({"model_config": model_cfg.__dict__,
                "state_dict": result.model.state_dict()}, out / "model.pt")
    (out / "metrics.json").write_text(json.dumps(
        {"stages": stage_summaries, "test_accuracy": test_acc,
         "test_correct": correct, "test_total": total,
         "history": result.history}, indent=2) + "\n")
    for stage in stage_summaries:
        print(f"train: {stage['dataset']} best val {stage['best_val_accuracy']:.3f} "
              f"({stage['epochs']} epochs)")
    print(f"test accuracy {test_acc:.3f} ({correct}/{total}) -> {out}")
    return 0


def cmd_eval(args) -> int:
    saved = torch.load(args.model, weights_only=False)
    model = LinkClassifier(ModelConfig(**saved["model_config"]))
    model.load_state_dict(saved["state_dict"])
    dataset = load_dataset(args.dataset)
    split = dataset.splits[args.split]
    lengths = ([int(x) for x in args.lengths.split(",")]
               if args.lengths else [None])
    report = {}
    for length in lengths:
        acc, correct, total = evaluate(model, split, length=length)
        name = "full" if length is None else str(length)
        report[name] = {"accuracy": acc, "correct": correct, "total": total}
        print(f"eval: length {name:>5} accuracy {acc:.3f} ({correct}/{total})")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linkclf")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train on a dataset directory")
    p_train.add_argument("dataset", type=Path)
    p_train.add_argument("--curriculum", type=Path, default=None,
                         help="harder dataset to continue on afterwards")
    p_train.add_argument("--out", type=Path, default=Path("runs/classifier"))
    p_train.add_argument("--d-model", type=int, default=64)
    p_train.add_argument("--n-layers", type=int, default=4)
    p_train.add_argument("--n-heads", type=int, default=4)
    p_train.add_argument("--window", type=int, default=64)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--learning-rate", type=float, default=1e-3)
    p_train.add_argument("--max-epochs", type=int, default=40)
    p_train.add_argument("--patience", type=int, default=20)
    p_train.add_argument("--min-delta", type=float, default=0.01)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved model")
    p_eval.add_argument("model", type=Path)
    p_eval.add_argument("dataset", type=Path)
    p_eval.add_argument("--split", default="test")
    p_eval.add_argument("--lengths", default=None,
                        help="comma-separated masked lengths, e.g. 64,128,256")
    p_eval.add_argument("--out", type=Path, default=None)
    p_eval.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
