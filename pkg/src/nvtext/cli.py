"""Command-line pipeline: synth -> fit -> textualize -> baseline.

Codebooks are always fit on the training split only; textualize applies
a frozen artifact to every split. All subcommands are idempotent: same
inputs and flags, byte-identical outputs. Exit codes: 0 ok, 1 processing
error, 2 usage error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import DEFAULT_FALLBACK_WINDOW, align_corpus
from .baseline import TrainConfig, format_metrics_table, run_ablation
from .clustering import fit_standardizer, select_k
from .corpus_io import (
    ArtifactCorruptionError,
    ModelArtifact,
    load_frames,
    load_manifest,
    read_corpus,
    read_frames_csv,
    read_model,
    write_corpus,
    write_model,
)
from .description import (
    DEFAULT_ABS_FLOOR,
    DEFAULT_AU_CATALOG,
    DEFAULT_SIGMA_MULT,
    build_codebook,
    fit_intensity_thresholds,
    load_au_catalog,
)
from .synthgen import LABEL_RULES, SynthSpec, gen_corpus
from .textgen import AblationMode, textualize_segment


def _parse_modes(raw: str) -> list[AblationMode]:
    modes = [AblationMode.parse(m) for m in raw.split(",") if m.strip()]
    if not modes:
        raise ValueError("no ablation modes given")
    return modes


def cmd_fit(args) -> int:
    manifest = load_manifest(args.manifest)
    entries = manifest.split_entries("train")
    if not entries:
        raise ValueError(f"{args.manifest}: no training-split segments to fit on")
    frames, dropped = load_frames(entries, args.modality)
    segments = [e.segment for e in entries]
    word_vectors, missing = align_corpus(segments, frames, args.modality, args.fallback_window)
    if not word_vectors:
        raise ValueError("no word vectors survived alignment")
    raw = np.stack([wv.vector for wv in word_vectors])
    feature_names = next(iter(frames.values())).feature_names

    standardizer = fit_standardizer(raw, feature_names)
    z = standardizer.transform(raw)
    k, model = select_k(
        z, args.k_min, args.k_max, args.seed, modality=args.modality, feature_names=feature_names
    )
    model.standardizer = standardizer

    thresholds = None
    if args.modality == "acoustic":
        thresholds = fit_intensity_thresholds(raw, feature_names, args.sigma_mult)
        build_codebook(model, raw, thresholds=thresholds)
    else:
        catalog = load_au_catalog(args.au_catalog) if args.au_catalog else DEFAULT_AU_CATALOG
        build_codebook(model, raw, catalog=catalog, abs_floor=args.abs_floor)

    write_model(ModelArtifact(model, thresholds), args.out)

    print(f"fit {args.modality} codebook on {len(raw)} word vectors "
          f"({len(missing)} words skipped, {dropped} frame rows dropped)")
    print(f"selected k={k} (silhouette {model.silhouette:.4f}), wrote {args.out}")
    print(_descriptor_table(model))
    return 0


def _descriptor_table(model) -> str:
    rows = []
    if model.modality == "visual":
        by_desc = {v: k for k, v in DEFAULT_AU_CATALOG.items()}
        rows.append(("cluster", "AUs", "description"))
        for c, descs in enumerate(model.descriptors):
            aus = ",".join(str(by_desc[d]) for d in descs if d in by_desc)
            rows.append((str(c), aus or "none", ", ".join(descs)))
    else:
        rows.append(("cluster", "description"))
        for c, descs in enumerate(model.descriptors):
            rows.append((str(c), ", ".join(descs)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows)


def cmd_textualize(args) -> int:
    manifest = load_manifest(args.manifest)
    modes = _parse_modes(args.modes)
    models = {}
    if args.visual_model:
        models["visual"] = read_model(args.visual_model).model
    if args.acoustic_model:
        models["acoustic"] = read_model(args.acoustic_model).model

    records = []
    skipped = {"visual": 0, "acoustic": 0}
    for entry in manifest.entries:
        frames = {}
        for modality in models:
            path = entry.visual_frames if modality == "visual" else entry.acoustic_frames
            if path is not None:
                frames[modality], _ = read_frames_csv(path, modality)
        record = textualize_segment(
            entry.segment, frames, models, modes, args.fallback_window
        )
        record.split = entry.split
        for modality, ids in record.cluster_ids.items():
            skipped[modality] += len(entry.segment.words) - len(ids)
        records.append(record)

    write_corpus(records, args.out, [m.key for m in modes], args.strip_special_tokens)
    print(f"wrote {len(records)} records to {args.out} "
          f"(skipped words: visual {skipped['visual']}, acoustic {skipped['acoustic']})")
    return 0


def cmd_baseline(args) -> int:
    records = read_corpus(args.corpus)
    if not records:
        raise ValueError(f"{args.corpus}: empty corpus")
    train_records = [r for r in records if r.split == "train"]
    test_records = [r for r in records if r.split == "test"]
    if not train_records or not test_records:
        raise ValueError("corpus needs non-empty train and test splits")
    modes = [m.key for m in _parse_modes(args.modes)]
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        l2=args.l2,
        seed=args.seed,
        ngram_order=args.ngram_order,
        tfidf=args.tfidf,
    )
    per_mode = run_ablation(train_records, test_records, args.task, modes, config)

    dataset = args.dataset_name or Path(args.corpus).stem
    doc = {
        "task": args.task,
        "metric": "acc2",
        "rows": [
            {"dataset": dataset, "cells": {m: per_mode[m].get("acc2") for m in modes}}
        ],
        "details": {dataset: per_mode},
    }
    table = format_metrics_table(dataset, per_mode)
    out = Path(args.out)
    out.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")
    out.with_suffix(".txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    print(f"wrote {out} and {out.with_suffix('.txt')}")
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        seed=args.seed,
        k_visual=args.k_visual,
        k_acoustic=args.k_acoustic,
        separation=args.separation,
        words_per_segment=args.words_per_segment,
        segments=args.segments,
        label_rule=args.label_rule,
    )
    out = gen_corpus(spec, args.out_dir)
    print(f"synth corpus: {spec.segments} segments x {spec.words_per_segment} words, "
          f"k_visual={spec.k_visual} k_acoustic={spec.k_acoustic} "
          f"separation={spec.separation} labels={spec.label_rule} seed={spec.seed}")
    print(f"wrote {out.manifest}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvtext", description=__doc__)
    p.add_argument("--version", action="version", version=f"nvtext {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a per-modality codebook on the training split")
    fit.add_argument("--manifest", required=True)
    fit.add_argument("--modality", required=True, choices=["visual", "acoustic"])
    fit.add_argument("--k-min", type=int, default=2)
    fit.add_argument("--k-max", type=int, default=12)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--abs-floor", type=float, default=DEFAULT_ABS_FLOOR,
                     help="visual dominance floor on the AU intensity scale")
    fit.add_argument("--sigma-mult", type=float, default=DEFAULT_SIGMA_MULT,
                     help="acoustic low/high cutoffs at mean +/- mult*std")
    fit.add_argument("--fallback-window", type=float, default=DEFAULT_FALLBACK_WINDOW)
    fit.add_argument("--au-catalog", help="JSON file overriding the action-unit wording")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    tx = sub.add_parser("textualize", help="apply frozen codebooks and emit a corpus file")
    tx.add_argument("--manifest", required=True)
    tx.add_argument("--visual-model")
    tx.add_argument("--acoustic-model")
    tx.add_argument("--modes", default="t,tv,ta,tav")
    tx.add_argument("--fallback-window", type=float, default=DEFAULT_FALLBACK_WINDOW)
    tx.add_argument("--strip-special-tokens", action="store_true")
    tx.add_argument("--out", required=True)
    tx.set_defaults(func=cmd_textualize)

    bl = sub.add_parser("baseline", help="n-gram linear ablation over corpus modes")
    bl.add_argument("--corpus", required=True)
    bl.add_argument("--task", required=True, choices=["binary", "regression"])
    bl.add_argument("--modes", default="t,tv,ta,tav")
    bl.add_argument("--dataset-name")
    bl.add_argument("--lr", type=float, default=0.05)
    bl.add_argument("--epochs", type=int, default=300)
    bl.add_argument("--l2", type=float, default=1e-4)
    bl.add_argument("--ngram-order", type=int, default=1, choices=[1, 2])
    bl.add_argument("--tfidf", action="store_true")
    bl.add_argument("--seed", type=int, default=0)
    bl.add_argument("--out", required=True)
    bl.set_defaults(func=cmd_baseline)

    sy = sub.add_parser("synth", help="generate a planted-structure synthetic dataset")
    sy.add_argument("--out-dir", required=True)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--k-visual", type=int, default=4)
    sy.add_argument("--k-acoustic", type=int, default=4)
    sy.add_argument("--separation", type=float, default=10.0)
    sy.add_argument("--words-per-segment", type=int, default=8)
    sy.add_argument("--segments", type=int, default=250)
    sy.add_argument("--label-rule", default="from_acoustic_cluster", choices=list(LABEL_RULES))
    sy.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, ArtifactCorruptionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
