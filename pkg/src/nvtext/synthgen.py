"""Synthetic corpora with planted cluster structure.

Word vectors are drawn from isotropic unit-variance Gaussians around
planted centroids spaced ``separation`` apart, and frame rows inside
each word window repeat the word's vector exactly, so slicing recovers
the planted vectors. Utterance tokens come from a fixed vocabulary and
can be tied to labels (or kept independent of them) by the label rule.
Everything is driven by one seeded generator: same spec, same bytes.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus_io import ACOUSTIC_HEADER, VISUAL_HEADER

LABEL_RULES = ("from_acoustic_cluster", "from_text_token", "random")

BASE_VOCAB = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliett "
    "kilo lima mike november oscar papa"
).split()
MARKER_TOKEN = "zulu"  # injected only under the from_text_token rule

WORD_PERIOD = 0.4
WORD_LENGTH = 0.3
FRAME_STEP = 0.05
FRAMES_PER_WORD = 6

N_VISUAL_FEATURES = len(VISUAL_HEADER.split(",")) - 1
N_ACOUSTIC_FEATURES = len(ACOUSTIC_HEADER.split(",")) - 1


@dataclass
class SynthSpec:
    seed: int = 0
    k_visual: int = 4
    k_acoustic: int = 4
    separation: float = 10.0
    words_per_segment: int = 8
    segments: int = 250
    label_rule: str = "from_acoustic_cluster"

    def __post_init__(self):
        if self.separation <= 0:
            raise ValueError("separation must be > 0")
        if min(self.k_visual, self.k_acoustic, self.words_per_segment, self.segments) < 1:
            raise ValueError("counts must be >= 1")
        if self.label_rule not in LABEL_RULES:
            raise ValueError(f"unknown label rule {self.label_rule!r}")
        total_words = self.segments * self.words_per_segment
        if self.k_visual > total_words or self.k_acoustic > total_words:
            raise ValueError(
                f"infeasible spec: k exceeds {total_words} total words"
            )
        if self.k_acoustic > self.segments:
            raise ValueError("k_acoustic exceeds segment count (one acoustic cluster per segment)")


@dataclass
class SynthOutput:
    manifest: Path
    alignments: Path
    truth: Path
    frames_dir: Path


def planted_centroids(k: int, dim: int, separation: float) -> np.ndarray:
    """Axis-aligned centroids with pairwise distance >= separation.

    Signs alternate so odd clusters sit below the feature mean: the
    acoustic descriptor stage then emits both "high" and "low" phrases.
    """
    c = np.zeros((k, dim), dtype=np.float64)
    for j in range(k):
        sign = 1.0 if j % 2 == 0 else -1.0
        c[j, j % dim] = sign * separation * (1 + j // dim)
    return c


def _write_frames_csv(path: Path, header: str, rows: list[tuple[float, np.ndarray]]) -> None:
    lines = [header]
    for t, vec in rows:
        lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in vec]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def gen_corpus(spec: SynthSpec, out_dir) -> SynthOutput:
    """Emit manifest, alignments, frame CSVs and a ground-truth sidecar."""
    out = Path(out_dir)
    frames_dir = out / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    centroids = {
        "visual": planted_centroids(spec.k_visual, N_VISUAL_FEATURES, spec.separation),
        "acoustic": planted_centroids(spec.k_acoustic, N_ACOUSTIC_FEATURES, spec.separation),
    }

    alignment_lines = []
    truth_lines = []
    manifest_segments = []
    width = len(str(spec.segments - 1))
    for s in range(spec.segments):
        sid = f"seg-{s:0{width}d}"
        acoustic_id = s % spec.k_acoustic
        visual_ids = [int(rng.integers(spec.k_visual)) for _ in range(spec.words_per_segment)]

        if spec.label_rule == "from_acoustic_cluster":
            label = acoustic_id % 2
        elif spec.label_rule == "from_text_token":
            label = s % 2
        else:
            label = int(rng.integers(2))

        tokens = [BASE_VOCAB[int(rng.integers(len(BASE_VOCAB)))] for _ in range(spec.words_per_segment)]
        if spec.label_rule == "from_text_token" and label == 1:
            tokens[s % spec.words_per_segment] = MARKER_TOKEN

        words = []
        vis_rows, ac_rows = [], []
        for i in range(spec.words_per_segment):
            start = WORD_PERIOD * i
            words.append({"w": tokens[i], "start": start, "end": start + WORD_LENGTH})
            vis_vec = rng.normal(centroids["visual"][visual_ids[i]], 1.0)
            ac_vec = rng.normal(centroids["acoustic"][acoustic_id], 1.0)
            for f in range(FRAMES_PER_WORD):
                t = start + FRAME_STEP * f
                vis_rows.append((t, vis_vec))
                ac_rows.append((t, ac_vec))

        _write_frames_csv(frames_dir / f"{sid}.visual.csv", VISUAL_HEADER, vis_rows)
        _write_frames_csv(frames_dir / f"{sid}.acoustic.csv", ACOUSTIC_HEADER, ac_rows)

        alignment_lines.append(
            json.dumps(
                {"segment_id": sid, "text": " ".join(tokens), "label": label, "words": words},
                sort_keys=True,
                separators=(",", ":"),
            )
        )
        truth_lines.append(
            json.dumps(
                {
                    "segment_id": sid,
                    "label": label,
                    "visual_ids": visual_ids,
                    "acoustic_ids": [acoustic_id] * spec.words_per_segment,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
        cycle = s % 10
        split = "train" if cycle < 7 else "dev" if cycle == 7 else "test"
        manifest_segments.append(
            {
                "id": sid,
                "split": split,
                "visual_frames": f"frames/{sid}.visual.csv",
                "acoustic_frames": f"frames/{sid}.acoustic.csv",
            }
        )

    alignments = out / "alignments.jsonl"
    alignments.write_text("".join(line + "\n" for line in alignment_lines), encoding="utf-8")
    truth = out / "truth.jsonl"
    truth.write_text("".join(line + "\n" for line in truth_lines), encoding="utf-8")
    manifest = out / "manifest.json"
    manifest.write_text(
        json.dumps(
            {"dataset": "synth", "alignments": "alignments.jsonl", "segments": manifest_segments},
            sort_keys=True,
            separators=(",", ":"),
        )
        + "\n",
        encoding="utf-8",
    )
    return SynthOutput(manifest, alignments, truth, frames_dir)


def load_truth(path) -> dict[str, dict]:
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rec = json.loads(line)
                out[rec["segment_id"]] = rec
    return out


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two partitions of the same items."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("label arrays must be 1-D and equal length")
    n = a.shape[0]
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    comb2 = lambda m: m * (m - 1) // 2
    sum_ij = int(comb2(table).sum())
    sum_a = int(comb2(table.sum(axis=1)).sum())
    sum_b = int(comb2(table.sum(axis=0)).sum())
    total = comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if math.isclose(denom, 0.0, abs_tol=1e-15):
        return 1.0
    return float((sum_ij - expected) / denom)
