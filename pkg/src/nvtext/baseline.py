"""Desk-scale n-gram linear baseline over corpus text fields.

A deliberately small model: bag-of-ngrams features, full-batch gradient
descent on binary cross-entropy (binary task) or squared error
(regression), L2 on the weights. Its job is detecting label signal in
the generated nonverbal text, not leaderboard numbers.
"""

import re
from dataclasses import dataclass, field

import numpy as np

TOKEN_RE = re.compile(r"[a-z0-9]+")

TASKS = ("binary", "regression")


def tokenize(text: str) -> list[str]:
    return TOKEN_RE.findall(text.lower())


def extract_ngrams(text: str, order: int) -> list[str]:
    tokens = tokenize(text)
    grams = list(tokens)
    for n in range(2, order + 1):
        grams.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return grams


@dataclass
class NGramVocab:
    order: int
    index: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int


def build_vocab(texts: list[str], order: int = 1) -> NGramVocab:
    """Dense, first-seen-ordered vocabulary with document frequencies."""
    if not 1 <= order <= 2:
        raise ValueError("n-gram order must be 1 or 2")
    index: dict[str, int] = {}
    df: list[int] = []
    for text in texts:
        for gram in set(extract_ngrams(text, order)):
            if gram not in index:
                index[gram] = len(index)
                df.append(0)
            df[index[gram]] += 1
    return NGramVocab(order, index, np.array(df, dtype=np.float64), len(texts))


def featurize(text: str, vocab: NGramVocab, tfidf: bool = False) -> np.ndarray:
    """Count (or tf-idf) vector over the vocabulary; unseen grams are dropped.

    The idf is the smoothed variant ln((1 + N) / (1 + df)) + 1, so a gram
    present in every document still contributes its raw count.
    """
    vec = np.zeros(len(vocab.index), dtype=np.float64)
    for gram in extract_ngrams(text, vocab.order):
        i = vocab.index.get(gram)
        if i is not None:
            vec[i] += 1.0
    if tfidf:
        idf = np.log((1.0 + vocab.n_docs) / (1.0 + vocab.doc_freq)) + 1.0
        vec *= idf
    return vec


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    l2: float = 1e-4
    seed: int = 0
    ngram_order: int = 1
    tfidf: bool = False


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    task: str
    config: TrainConfig
    vocab: NGramVocab
    loss_history_: list[float] = field(default_factory=list, repr=False, compare=False)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(
    w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, task: str, l2: float
) -> tuple[float, np.ndarray, float]:
    """Mean loss with 0.5*l2*||w||^2 (bias unpenalized) and its gradient."""
    n = x.shape[0]
    z = x @ w + b
    if task == "binary":
        # stable BCE: max(z,0) - z*y + log1p(exp(-|z|))
        loss = float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))
        resid = _sigmoid(z) - y
        grad_w = x.T @ resid / n
        grad_b = float(resid.mean())
    elif task == "regression":
        resid = z - y
        loss = float(np.mean(resid**2))
        grad_w = 2.0 * (x.T @ resid) / n
        grad_b = float(2.0 * resid.mean())
    else:
        raise ValueError(f"unknown task {task!r}")
    loss += 0.5 * l2 * float(w @ w)
    grad_w = grad_w + l2 * w
    return loss, grad_w, grad_b


def _check_labels(y: np.ndarray, task: str) -> None:
    binary_valued = bool(np.all(np.isin(y, (0.0, 1.0))))
    if task == "binary" and not binary_valued:
        raise ValueError("task/label mismatch: binary task needs 0/1 labels")
    if task == "regression" and binary_valued:
        raise ValueError("task/label mismatch: regression task on binary labels")


def train(
    records: list, mode: str, task: str, config: TrainConfig | None = None
) -> LinearModel:
    """Fit on the given records' extended text for one ablation mode."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if not records:
        raise ValueError("empty training set")
    config = config or TrainConfig()
    texts = [r.extended_text[mode] for r in records]
    y = np.array([r.label for r in records], dtype=np.float64)
    _check_labels(y, task)

    vocab = build_vocab(texts, config.ngram_order)
    x = np.stack([featurize(t, vocab, config.tfidf) for t in texts])
    w = np.zeros(x.shape[1], dtype=np.float64)
    b = 0.0
    history = []
    for _ in range(config.epochs):
        loss, gw, gb = loss_and_grad(w, b, x, y, task, config.l2)
        history.append(loss)
        w -= config.learning_rate * gw
        b -= config.learning_rate * gb
    model = LinearModel(w, b, task, config, vocab)
    model.loss_history_ = history
    return model


def predict_scores(model: LinearModel, texts: list[str]) -> np.ndarray:
    x = np.stack([featurize(t, model.vocab, model.config.tfidf) for t in texts])
    z = x @ model.weights + model.bias
    return _sigmoid(z) if model.task == "binary" else z


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if a.std() == 0.0 or b.std() == 0.0:
        return 0.0  # degenerate; correlation undefined
    return float(np.corrcoef(a, b)[0, 1])


def _f1(pred_pos: np.ndarray, true_pos: np.ndarray) -> float:
    tp = int(np.sum(pred_pos & true_pos))
    fp = int(np.sum(pred_pos & ~true_pos))
    fn = int(np.sum(~pred_pos & true_pos))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def evaluate(model: LinearModel, records: list, mode: str) -> dict:
    """Metrics over one corpus field: Acc-2, F1, MAE, Pearson r, Acc-7.

    For regression (sentiment) Acc-2 and F1 follow the positive/negative
    convention and exclude zero-labeled items; Acc-7 rounds and clamps
    to the integer scale [-3, 3]. Acc-7 is None for the binary task.
    """
    if not records:
        raise ValueError("empty evaluation set")
    y = np.array([r.label for r in records], dtype=np.float64)
    _check_labels(y, model.task)
    scores = predict_scores(model, [r.extended_text[mode] for r in records])

    if model.task == "binary":
        pred = scores >= 0.5
        truth = y == 1.0
        return {
            "acc2": float(np.mean(pred == truth)),
            "f1": _f1(pred, truth),
            "mae": float(np.mean(np.abs(scores - y))),
            "corr": _pearson(scores, y),
            "acc7": None,
        }

    nz = y != 0.0
    if np.any(nz):
        acc2 = float(np.mean((scores[nz] > 0) == (y[nz] > 0)))
        f1 = _f1(scores[nz] > 0, y[nz] > 0)
    else:
        acc2, f1 = None, None
    seven = lambda v: np.clip(np.rint(v), -3, 3)
    return {
        "acc2": acc2,
        "f1": f1,
        "mae": float(np.mean(np.abs(scores - y))),
        "corr": _pearson(scores, y),
        "acc7": float(np.mean(seven(scores) == seven(y))),
    }


def run_ablation(
    train_records: list,
    test_records: list,
    task: str,
    modes: list[str],
    config: TrainConfig | None = None,
) -> dict[str, dict]:
    """Train and evaluate one model per ablation mode."""
    out = {}
    for mode in modes:
        model = train(train_records, mode, task, config)
        out[mode] = evaluate(model, test_records, mode)
    return out


MODE_COLUMNS = {"t": "T", "tv": "T+V", "ta": "T+A", "tav": "T+A+V"}


def format_metrics_table(dataset: str, per_mode: dict[str, dict], metric: str = "acc2") -> str:
    """Aligned text table: one dataset row, one column per ablation mode."""
    modes = [m for m in MODE_COLUMNS if m in per_mode]
    header = ["Dataset"] + [MODE_COLUMNS[m] for m in modes]
    cells = [dataset]
    for m in modes:
        v = per_mode[m].get(metric)
        cells.append("-" if v is None else f"{v:.4f}")
    widths = [max(len(h), len(c)) for h, c in zip(header, cells)]
    line = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths))
    return "\n".join([line(header), line(["-" * w for w in widths]), line(cells)])
