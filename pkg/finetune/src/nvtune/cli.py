"""Harness CLI: build a tiny encoder, fine-tune, ablate, attribute.

Exit codes: 0 ok, 1 processing error, 2 usage error.
"""

import argparse
import sys
from pathlib import Path

from .attribution import attribute_tokens, write_attributions
from .data import parse_extended, read_corpus, require_mode, strip_specials
from .encoder import (
    DEFAULT_HIDDEN,
    DEFAULT_LAYERS,
    DEFAULT_PRETRAIN_LR,
    DEFAULT_PRETRAIN_STEPS,
    pretrain_encoder,
)
from .train import (
    TrainSpec,
    finetune_eval,
    format_metrics_table,
    run_ablation,
    write_metrics,
)


def _modes(raw: str) -> list[str]:
    modes = [m.strip().lower() for m in raw.split(",") if m.strip()]
    if not modes:
        raise ValueError("no modes given")
    return modes


def cmd_make_encoder(args) -> int:
    records = read_corpus(args.corpus)
    texts = []
    for r in records:
        for mode in sorted(r.extended_text):
            texts.append(strip_specials(r.extended_text[mode]))
    out = pretrain_encoder(
        texts,
        args.out,
        hidden_size=args.hidden,
        num_layers=args.layers,
        steps=args.steps,
        lr=args.pretrain_lr,
        seed=args.seed,
    )
    print(f"pre-trained encoder on {len(texts)} texts -> {out}")
    return 0


def cmd_finetune(args) -> int:
    spec = TrainSpec(
        corpus=args.corpus,
        encoder=args.encoder,
        mode=args.mode,
        task=args.task,
        learning_rate=args.lr,
        dropout=args.dropout,
        epochs=args.epochs,
        seed=args.seed,
        scheduler=args.scheduler,
        batch_size=args.batch_size,
    )
    result = finetune_eval(spec)
    print(f"train loss: initial {result.initial_loss:.4f} -> final {result.final_loss:.4f} "
          f"(drop {result.loss_drop * 100:.1f}%)")
    dataset = args.dataset_name or Path(args.corpus).stem
    write_metrics(args.out, dataset, args.task, {args.mode: result.metrics})
    print(format_metrics_table(dataset, {args.mode: result.metrics}))
    if args.save_model:
        result.model.save_pretrained(args.save_model)
        result.tokenizer.save_pretrained(args.save_model)
        print(f"saved fine-tuned model to {args.save_model}")
    return 0


def cmd_ablation(args) -> int:
    per_mode = run_ablation(
        args.corpus,
        args.encoder,
        args.task,
        modes=_modes(args.modes),
        learning_rate=args.lr,
        dropout=args.dropout,
        epochs=args.epochs,
        seed=args.seed,
        scheduler=args.scheduler,
        batch_size=args.batch_size,
    )
    dataset = args.dataset_name or Path(args.corpus).stem
    write_metrics(args.out, dataset, args.task, per_mode)
    print(format_metrics_table(dataset, per_mode))
    print(f"wrote {args.out}")
    return 0


def cmd_attribute(args) -> int:
    from transformers import AutoTokenizer, BertForSequenceClassification

    records = read_corpus(args.corpus)
    require_mode(records, args.mode)
    if args.split:
        records = [r for r in records if r.split == args.split]
    if args.limit:
        records = records[: args.limit]
    if not records:
        raise ValueError("no records to attribute")
    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = BertForSequenceClassification.from_pretrained(args.model, num_labels=1)
    reports = [
        attribute_tokens(model, tokenizer, r, args.mode, steps=args.steps)
        for r in records
    ]
    write_attributions(reports, args.out)
    worst = max(r.completeness_gap for r in reports)
    print(f"wrote {len(reports)} attribution reports to {args.out} "
          f"(worst completeness gap {worst * 100:.2f}%)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvtune", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    mk = sub.add_parser("make-encoder", help="pre-train a tiny encoder on corpus text")
    mk.add_argument("--corpus", required=True)
    mk.add_argument("--out", required=True)
    mk.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN)
    mk.add_argument("--layers", type=int, default=DEFAULT_LAYERS)
    mk.add_argument("--steps", type=int, default=DEFAULT_PRETRAIN_STEPS)
    mk.add_argument("--pretrain-lr", type=float, default=DEFAULT_PRETRAIN_LR)
    mk.add_argument("--seed", type=int, default=0)
    mk.set_defaults(func=cmd_make_encoder)

    def train_flags(sp):
        sp.add_argument("--corpus", required=True)
        sp.add_argument("--encoder", required=True)
        sp.add_argument("--task", required=True, choices=["binary", "regression"])
        sp.add_argument("--lr", type=float, default=5e-05)
        sp.add_argument("--dropout", type=float, default=0.05)
        sp.add_argument("--epochs", type=int, default=2)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--scheduler", default="reduce-on-plateau",
                        choices=["linear-warmup", "reduce-on-plateau"])
        sp.add_argument("--batch-size", type=int, default=1)
        sp.add_argument("--dataset-name")
        sp.add_argument("--out", required=True)

    ft = sub.add_parser("finetune", help="fine-tune on one mode and evaluate")
    train_flags(ft)
    ft.add_argument("--mode", default="tav")
    ft.add_argument("--save-model", help="directory for the fine-tuned model")
    ft.set_defaults(func=cmd_finetune)

    ab = sub.add_parser("ablation", help="fine-tune per mode and emit the 4-column table")
    train_flags(ab)
    ab.add_argument("--modes", default="t,tv,ta,tav")
    ab.set_defaults(func=cmd_ablation)

    at = sub.add_parser("attribute", help="integrated-gradients token attributions")
    at.add_argument("--corpus", required=True)
    at.add_argument("--model", required=True, help="fine-tuned model directory")
    at.add_argument("--mode", default="tav")
    at.add_argument("--split", choices=["train", "dev", "test"])
    at.add_argument("--limit", type=int)
    at.add_argument("--steps", type=int, default=96)
    at.add_argument("--out", required=True)
    at.set_defaults(func=cmd_attribute)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
