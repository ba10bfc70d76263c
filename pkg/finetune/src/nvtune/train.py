"""Fine-tune a pre-trained encoder on one corpus mode and evaluate it.

Loss follows the task: squared error for real-valued sentiment labels,
binary cross-entropy otherwise. The learning rate must come from the
published search grid {1e-05, 3e-05, 5e-05, 1e-06} and dropout from
[0.05, 0.30]; epochs, batch size and scheduler details are this
harness's own defaults. Metrics files use the same schema as the
pipeline's baseline, so one report generator serves both.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from transformers import AutoTokenizer, BertForSequenceClassification

from .data import Record, parse_extended, read_corpus, require_mode

LEARNING_RATES = (1e-05, 3e-05, 5e-05, 1e-06)
DROPOUT_RANGE = (0.05, 0.30)
SCHEDULERS = ("linear-warmup", "reduce-on-plateau")
TASKS = ("binary", "regression")

MODE_COLUMNS = {"t": "T", "tv": "T+V", "ta": "T+A", "tav": "T+A+V"}


@dataclass
class TrainSpec:
    corpus: str
    encoder: str
    mode: str = "tav"
    task: str = "binary"
    learning_rate: float = 5e-05
    dropout: float = 0.05
    epochs: int = 2
    seed: int = 0
    scheduler: str = "reduce-on-plateau"
    batch_size: int = 1
    max_length: int = 96

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if not any(math.isclose(self.learning_rate, lr) for lr in LEARNING_RATES):
            raise ValueError(
                f"learning rate {self.learning_rate} outside the search space {LEARNING_RATES}"
            )
        if not DROPOUT_RANGE[0] <= self.dropout <= DROPOUT_RANGE[1]:
            raise ValueError(f"dropout {self.dropout} outside {DROPOUT_RANGE}")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be >= 1")


@dataclass
class FinetuneResult:
    metrics: dict
    initial_loss: float
    epoch_losses: list[float]
    final_loss: float
    model: BertForSequenceClassification = field(repr=False)
    tokenizer: object = field(repr=False)

    @property
    def loss_drop(self) -> float:
        """Relative training-loss drop from the pre-training-only model."""
        if self.initial_loss == 0.0:
            return 0.0
        return (self.initial_loss - self.final_loss) / self.initial_loss


def _check_labels(labels: np.ndarray, task: str) -> None:
    binary_valued = bool(np.all(np.isin(labels, (0.0, 1.0))))
    if task == "binary" and not binary_valued:
        raise ValueError("task/label mismatch: binary task needs 0/1 labels")
    if task == "regression" and binary_valued:
        raise ValueError("task/label mismatch: regression task on binary labels")


def _model_inputs(records: list[Record], mode: str, tokenizer, max_length: int):
    texts = [parse_extended(r.extended_text[mode]).string for r in records]
    enc = tokenizer(texts, return_tensors="pt", padding=True, truncation=True,
                    max_length=max_length)
    labels = torch.tensor([r.label for r in records], dtype=torch.float32)
    return enc, labels


def _loss_fn(task: str):
    if task == "binary":
        return torch.nn.BCEWithLogitsLoss()
    return torch.nn.MSELoss()


def _full_loss(model, enc, labels, loss_fn) -> float:
    model.eval()
    with torch.no_grad():
        logits = model(**enc).logits.squeeze(-1)
        return float(loss_fn(logits, labels))


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if a.std() == 0.0 or b.std() == 0.0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])


def _f1(pred_pos: np.ndarray, true_pos: np.ndarray) -> float:
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def compute_metrics(scores: np.ndarray, labels: np.ndarray, task: str) -> dict:
    """Same definitions and schema as the pipeline baseline."""
    if task == "binary":
        probs = 1.0 / (1.0 + np.exp(-scores))
        pred = probs >= 0.5
        truth = labels == 1.0
        return {
            "acc2": float(np.mean(pred == truth)),
            "f1": _f1(pred, truth),
            "mae": float(np.mean(np.abs(probs - labels))),
            "corr": _pearson(probs, labels),
            "acc7": None,
        }
    nz = labels != 0.0
    if np.any(nz):
        acc2 = float(np.mean((scores[nz] > 0) == (labels[nz] > 0)))
        f1 = _f1(scores[nz] > 0, labels[nz] > 0)
    else:
        acc2, f1 = None, None
    seven = lambda v: np.clip(np.rint(v), -3, 3)
    return {
        "acc2": acc2,
        "f1": f1,
        "mae": float(np.mean(np.abs(scores - labels))),
        "corr": _pearson(scores, labels),
        "acc7": float(np.mean(seven(scores) == seven(labels))),
    }


def finetune_eval(spec: TrainSpec) -> FinetuneResult:
    """Train on the train split, evaluate on the test split."""
    records = read_corpus(spec.corpus)
    require_mode(records, spec.mode)
    train_recs = [r for r in records if r.split == "train"]
    test_recs = [r for r in records if r.split == "test"]
    if not train_recs or not test_recs:
        raise ValueError("corpus needs non-empty train and test splits")
    _check_labels(np.array([r.label for r in train_recs]), spec.task)

    tokenizer = AutoTokenizer.from_pretrained(spec.encoder)
    torch.manual_seed(spec.seed)
    model = BertForSequenceClassification.from_pretrained(
        spec.encoder,
        num_labels=1,
        hidden_dropout_prob=spec.dropout,
        attention_probs_dropout_prob=spec.dropout,
    )

    enc, labels = _model_inputs(train_recs, spec.mode, tokenizer, spec.max_length)
    loss_fn = _loss_fn(spec.task)
    opt = torch.optim.AdamW(model.parameters(), lr=spec.learning_rate)
    n = labels.shape[0]
    steps_per_epoch = math.ceil(n / spec.batch_size)
    if spec.scheduler == "linear-warmup":
        total = spec.epochs * steps_per_epoch
        warmup = max(1, total // 10)
        sched = torch.optim.lr_scheduler.LambdaLR(
            opt,
            lambda step: step / warmup if step < warmup
            else max(0.0, (total - step) / max(1, total - warmup)),
        )
    else:
        sched = torch.optim.lr_scheduler.ReduceLROnPlateau(opt, factor=0.5, patience=1)

    initial_loss = _full_loss(model, enc, labels, loss_fn)
    epoch_losses = []
    for epoch in range(spec.epochs):
        model.train()
        perm = torch.randperm(n, generator=torch.Generator().manual_seed(spec.seed + epoch))
        running = 0.0
        for i in range(0, n, spec.batch_size):
            idx = perm[i : i + spec.batch_size]
            batch = {k: v[idx] for k, v in enc.items()}
            loss = loss_fn(model(**batch).logits.squeeze(-1), labels[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            if spec.scheduler == "linear-warmup":
                sched.step()
            running += float(loss.detach()) * len(idx)
        epoch_losses.append(running / n)
        if spec.scheduler == "reduce-on-plateau":
            sched.step(epoch_losses[-1])
    final_loss = _full_loss(model, enc, labels, loss_fn)

    test_enc, test_labels = _model_inputs(test_recs, spec.mode, tokenizer, spec.max_length)
    model.eval()
    with torch.no_grad():
        scores = model(**test_enc).logits.squeeze(-1).numpy()
    metrics = compute_metrics(scores, test_labels.numpy(), spec.task)
    return FinetuneResult(metrics, initial_loss, epoch_losses, final_loss, model, tokenizer)


def run_ablation(
    corpus: str,
    encoder: str,
    task: str,
    modes: list[str] = ("t", "tv", "ta", "tav"),
    **spec_overrides,
) -> dict[str, dict]:
    """One fine-tune per ablation mode; returns mode -> metrics."""
    out = {}
    for mode in modes:
        spec = TrainSpec(corpus=corpus, encoder=encoder, mode=mode, task=task,
                         **spec_overrides)
        out[mode] = finetune_eval(spec).metrics
    return out


def format_metrics_table(dataset: str, per_mode: dict[str, dict], metric: str = "acc2") -> str:
    modes = [m for m in MODE_COLUMNS if m in per_mode]
    header = ["Dataset"] + [MODE_COLUMNS[m] for m in modes]
    cells = [dataset]
    for m in modes:
        v = per_mode[m].get(metric)
        cells.append("-" if v is None else f"{v:.4f}")
    widths = [max(len(h), len(c)) for h, c in zip(header, cells)]
    line = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths))
    return "\n".join([line(header), line(["-" * w for w in widths]), line(cells)])


def write_metrics(path, dataset: str, task: str, per_mode: dict[str, dict]) -> None:
    """Machine-readable report, schema-identical to the baseline's."""
    doc = {
        "task": task,
        "metric": "acc2",
        "rows": [{"dataset": dataset, "cells": {m: per_mode[m].get("acc2") for m in per_mode}}],
        "details": {dataset: per_mode},
    }
    path = Path(path)
    path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n",
                    encoding="utf-8")
    path.with_suffix(".txt").write_text(
        format_metrics_table(dataset, per_mode) + "\n", encoding="utf-8"
    )
