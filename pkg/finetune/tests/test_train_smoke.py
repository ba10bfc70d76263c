import json
import time

import pytest

from nvtune.data import read_corpus
from nvtune.train import (
    TrainSpec,
    finetune_eval,
    format_metrics_table,
    run_ablation,
    write_metrics,
)


def test_trainspec_validates_search_spaces(smoke_corpus):
    TrainSpec(corpus=str(smoke_corpus), encoder="x", learning_rate=3e-05, dropout=0.30)
    with pytest.raises(ValueError, match="search space"):
        TrainSpec(corpus=str(smoke_corpus), encoder="x", learning_rate=1e-3)
    with pytest.raises(ValueError, match="dropout"):
        TrainSpec(corpus=str(smoke_corpus), encoder="x", dropout=0.5)
    with pytest.raises(ValueError, match="scheduler"):
        TrainSpec(corpus=str(smoke_corpus), encoder="x", scheduler="cosine")
    with pytest.raises(ValueError, match="task"):
        TrainSpec(corpus=str(smoke_corpus), encoder="x", task="ranking")


def test_missing_mode_is_error(smoke_corpus, tiny_encoder, tmp_path):
    trimmed = tmp_path / "trimmed.jsonl"
    lines = []
    for line in smoke_corpus.read_text().splitlines():
        rec = json.loads(line)
        rec["extended_text"].pop("ta")
        lines.append(json.dumps(rec))
    trimmed.write_text("\n".join(lines) + "\n")
    spec = TrainSpec(corpus=str(trimmed), encoder=str(tiny_encoder), mode="ta")
    with pytest.raises(ValueError, match="ta"):
        finetune_eval(spec)


def test_regression_on_binary_labels_is_error(smoke_corpus, tiny_encoder):
    spec = TrainSpec(corpus=str(smoke_corpus), encoder=str(tiny_encoder),
                     mode="ta", task="regression")
    with pytest.raises(ValueError, match="task/label mismatch"):
        finetune_eval(spec)


def test_smoke_finetune_loss_drops_30_percent(smoke_corpus, tiny_encoder):
    spec = TrainSpec(
        corpus=str(smoke_corpus),
        encoder=str(tiny_encoder),
        mode="ta",
        task="binary",
        learning_rate=5e-05,
        dropout=0.05,
        epochs=2,
        seed=10,
    )
    t0 = time.monotonic()
    result = finetune_eval(spec)
    elapsed = time.monotonic() - t0
    assert elapsed < 600.0, f"fine-tune took {elapsed:.0f}s"
    assert len(result.epoch_losses) == 2
    assert result.loss_drop >= 0.30, (
        f"loss {result.initial_loss:.4f} -> {result.final_loss:.4f} "
        f"({result.loss_drop * 100:.1f}% drop)"
    )
    print(f"\nACCEPTANCE PASS: smoke fine-tune (loss {result.initial_loss:.4f} -> "
          f"{result.final_loss:.4f}, {result.loss_drop * 100:.1f}% drop, {elapsed:.0f}s)")


def test_ablation_emits_four_column_table_with_ta_signal(
    smoke_corpus, tiny_encoder, tmp_path
):
    per_mode = run_ablation(
        str(smoke_corpus), str(tiny_encoder), "binary",
        modes=["t", "tv", "ta", "tav"], seed=10,
    )
    assert set(per_mode) == {"t", "tv", "ta", "tav"}
    assert per_mode["ta"]["acc2"] >= per_mode["t"]["acc2"]

    out = tmp_path / "report.json"
    write_metrics(out, "smoke", "binary", per_mode)
    doc = json.loads(out.read_text())
    assert set(doc["rows"][0]["cells"]) == {"t", "tv", "ta", "tav"}
    table = format_metrics_table("smoke", per_mode)
    assert table.splitlines()[0].split() == ["Dataset", "T", "T+V", "T+A", "T+A+V"]
    print("\nACCEPTANCE PASS: ablation report "
          f"(T {per_mode['t']['acc2']:.3f}, T+V {per_mode['tv']['acc2']:.3f}, "
          f"T+A {per_mode['ta']['acc2']:.3f}, T+A+V {per_mode['tav']['acc2']:.3f})")


def test_metrics_schema_matches_baseline_writer(tmp_path):
    per_mode = {"t": {"acc2": 0.5, "f1": 0.5, "mae": 0.5, "corr": 0.0, "acc7": None}}
    out = tmp_path / "m.json"
    write_metrics(out, "demo", "binary", per_mode)
    doc = json.loads(out.read_text())
    assert set(doc) == {"task", "metric", "rows", "details"}
    assert doc["metric"] == "acc2"
    assert doc["rows"] == [{"dataset": "demo", "cells": {"t": 0.5}}]
    assert out.with_suffix(".txt").read_text().splitlines()[0].split() == ["Dataset", "T"]


def test_splits_required(tiny_encoder, tmp_path, smoke_corpus):
    only_train = tmp_path / "train_only.jsonl"
    lines = [l for l in smoke_corpus.read_text().splitlines() if '"split":"train"' in l]
    only_train.write_text("\n".join(lines) + "\n")
    spec = TrainSpec(corpus=str(only_train), encoder=str(tiny_encoder), mode="ta")
    with pytest.raises(ValueError, match="splits"):
        finetune_eval(spec)
