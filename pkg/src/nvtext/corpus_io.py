"""File formats: frame CSVs, alignment JSONL, dataset manifests, model
artifacts and corpus files.

Readers fail fast on malformed input; the one documented repair is the
drop (with count) of frame rows containing non-finite values. All
writers serialize canonically -- sorted keys, full-precision floats --
so equal in-memory values produce byte-equal files.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import FrameSeries, Segment, WordToken
from .clustering import ClusterModel, Standardizer
from .description import IntensityThresholds
from .textgen import CorpusRecord, strip_special_tokens

VISUAL_HEADER = "timestamp,AU02_r,AU04_r,AU05_r,AU06_r,AU07_r,AU09_r,AU12_r,AU15_r,AU23_r,AU26_r,AU45_r"
ACOUSTIC_HEADER = "timestamp,pitch,loudness,jitter,shimmer"
_HEADERS = {"visual": VISUAL_HEADER, "acoustic": ACOUSTIC_HEADER}

SPLITS = ("train", "dev", "test")

ARTIFACT_FORMAT = "nvtext-model"


class ArtifactCorruptionError(Exception):
    """Model artifact is unreadable or fails its content hash."""


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def read_frames_csv(path, modality: str) -> tuple[FrameSeries, int]:
    """Parse a feature CSV; returns (series, count of dropped non-finite rows)."""
    path = Path(path)
    expected = _HEADERS.get(modality)
    if expected is None:
        raise ValueError(f"unknown modality {modality!r}")
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").rstrip("\r")
        if header != expected:
            raise ValueError(
                f"{path}: bad {modality} header\n  expected: {expected}\n  found:    {header}"
            )
        names = expected.split(",")[1:]
        timestamps, rows = [], []
        dropped = 0
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(names) + 1:
                raise ValueError(f"{path}:{lineno}: expected {len(names) + 1} columns, got {len(cells)}")
            try:
                values = [float(c) for c in cells]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: unparseable row") from None
            if not all(np.isfinite(values)):
                dropped += 1
                continue
            timestamps.append(values[0])
            rows.append(values[1:])
    series = FrameSeries(
        modality=modality,
        timestamps=np.array(timestamps, dtype=np.float64),
        values=np.array(rows, dtype=np.float64).reshape(len(rows), len(names)),
        feature_names=names,
    )
    return series, dropped


def read_alignments(path) -> list[Segment]:
    """Parse newline-delimited segment records with word timings."""
    path = Path(path)
    segments: list[Segment] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                seg = Segment(
                    id=str(rec["segment_id"]),
                    text=str(rec["text"]),
                    words=[
                        WordToken(str(w["w"]), float(w["start"]), float(w["end"]))
                        for w in rec["words"]
                    ],
                    label=float(rec["label"]),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
                raise ValueError(f"{path}:{lineno}: malformed alignment record: {e}") from None
            if not np.isfinite(seg.label) or not -3.0 <= seg.label <= 3.0:
                raise ValueError(f"{path}:{lineno}: label {seg.label} outside [-3, 3]")
            if seg.id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate segment id {seg.id!r}")
            seen.add(seg.id)
            segments.append(seg)
    return segments


@dataclass
class ManifestEntry:
    segment: Segment
    split: str
    visual_frames: Path | None
    acoustic_frames: Path | None


@dataclass
class DatasetManifest:
    dataset: str
    entries: list[ManifestEntry]

    def split_entries(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]


def load_manifest(path) -> DatasetManifest:
    """Read a manifest JSON and join it with its alignments file.

    Word timings, text and label live once, in the alignments file; the
    manifest carries the per-segment split and frame-file paths. The two
    id sets must match exactly.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    base = path.parent
    try:
        dataset = str(raw["dataset"])
        alignments_path = base / raw["alignments"]
        seg_entries = raw["segments"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"{path}: malformed manifest: {e}") from None

    segments = {s.id: s for s in read_alignments(alignments_path)}
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for e in seg_entries:
        sid = str(e["id"])
        if sid in seen:
            raise ValueError(f"{path}: duplicate segment id {sid!r}")
        seen.add(sid)
        if sid not in segments:
            raise ValueError(f"{path}: segment {sid!r} has no alignment record")
        split = e.get("split", "train")
        if split not in SPLITS:
            raise ValueError(f"{path}: segment {sid!r} has unknown split {split!r}")
        paths = {}
        for modality in ("visual", "acoustic"):
            rel = e.get(f"{modality}_frames")
            if rel is None:
                paths[modality] = None
                continue
            p = base / rel
            if not p.is_file():
                raise FileNotFoundError(f"{path}: segment {sid!r}: missing frame file {p}")
            paths[modality] = p
        seg = segments[sid]
        seg.frames = {m: p for m, p in paths.items() if p is not None}
        entries.append(ManifestEntry(seg, split, paths["visual"], paths["acoustic"]))
    extra = set(segments) - seen
    if extra:
        raise ValueError(f"{path}: alignments contain ids absent from manifest: {sorted(extra)[:5]}")
    return DatasetManifest(dataset, entries)


def load_frames(
    entries: list[ManifestEntry], modality: str
) -> tuple[dict[str, FrameSeries], int]:
    """Frame series per segment id; total dropped-row count alongside."""
    out: dict[str, FrameSeries] = {}
    dropped = 0
    for e in entries:
        p = e.visual_frames if modality == "visual" else e.acoustic_frames
        if p is None:
            raise ValueError(f"segment {e.segment.id!r} has no {modality} frame file")
        series, n = read_frames_csv(p, modality)
        out[e.segment.id] = series
        dropped += n
    return out, dropped


@dataclass
class ModelArtifact:
    model: ClusterModel
    thresholds: IntensityThresholds | None = None


def _model_payload(artifact: ModelArtifact) -> dict:
    m = artifact.model
    payload = {
        "modality": m.modality,
        "k": m.k,
        "seed": m.seed,
        "objective": m.objective,
        "silhouette": m.silhouette,
        "feature_names": m.feature_names,
        "centroids": m.centroids.tolist(),
        "standardizer": None
        if m.standardizer is None
        else {"mean": m.standardizer.mean.tolist(), "std": m.standardizer.std.tolist()},
        "descriptors": m.descriptors,
        "thresholds": None,
    }
    t = artifact.thresholds
    if t is not None:
        payload["thresholds"] = {
            "feature_names": t.feature_names,
            "mean": t.mean.tolist(),
            "std": t.std.tolist(),
            "multiplier": t.multiplier,
        }
    return payload


def write_model(artifact: ModelArtifact, path) -> None:
    payload = _model_payload(artifact)
    digest = hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()
    doc = {
        "format": ARTIFACT_FORMAT,
        "tool_version": __version__,
        "sha256": digest,
        "payload": payload,
    }
    Path(path).write_text(_canonical(doc) + "\n", encoding="utf-8")


def read_model(path) -> ModelArtifact:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("format") != ARTIFACT_FORMAT:
            raise ArtifactCorruptionError(f"{path}: not a {ARTIFACT_FORMAT} file")
        payload = doc["payload"]
        stored = doc["sha256"]
    except ArtifactCorruptionError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise ArtifactCorruptionError(f"{path}: unreadable artifact: {e}") from None
    digest = hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()
    if digest != stored:
        raise ArtifactCorruptionError(f"{path}: content hash mismatch")
    std = payload["standardizer"]
    model = ClusterModel(
        modality=payload["modality"],
        k=payload["k"],
        centroids=np.array(payload["centroids"], dtype=np.float64),
        seed=payload["seed"],
        objective=payload["objective"],
        standardizer=None
        if std is None
        else Standardizer(np.array(std["mean"]), np.array(std["std"])),
        silhouette=payload["silhouette"],
        feature_names=payload["feature_names"],
        descriptors=payload["descriptors"],
    )
    t = payload["thresholds"]
    thresholds = None
    if t is not None:
        thresholds = IntensityThresholds(
            feature_names=t["feature_names"],
            mean=np.array(t["mean"]),
            std=np.array(t["std"]),
            multiplier=t["multiplier"],
        )
    return ModelArtifact(model, thresholds)


def _record_payload(r: CorpusRecord, modes: list[str], strip_specials: bool) -> dict:
    missing = [m for m in modes if m not in r.extended_text]
    if missing:
        raise ValueError(f"record {r.segment_id!r} lacks extended text for modes {missing}")
    extended = {m: r.extended_text[m] for m in modes}
    if strip_specials:
        extended = {m: strip_special_tokens(s) for m, s in extended.items()}
    return {
        "segment_id": r.segment_id,
        "split": r.split,
        "label": r.label,
        "text": r.text,
        "visual_text": r.visual_text,
        "acoustic_text": r.acoustic_text,
        "extended_text": extended,
        "cluster_ids": r.cluster_ids,
    }


def write_corpus(
    records: list[CorpusRecord], path, modes: list[str], strip_specials: bool = False
) -> None:
    """Newline-delimited records sorted by segment id, one extended text per mode."""
    ids = [r.segment_id for r in records]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate segment ids in corpus: {dup[:5]}")
    lines = [
        _canonical(_record_payload(r, modes, strip_specials))
        for r in sorted(records, key=lambda r: r.segment_id)
    ]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_corpus(path) -> list[CorpusRecord]:
    path = Path(path)
    records: list[CorpusRecord] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                records.append(
                    CorpusRecord(
                        segment_id=str(rec["segment_id"]),
                        split=str(rec["split"]),
                        label=float(rec["label"]),
                        text=str(rec["text"]),
                        visual_text=str(rec["visual_text"]),
                        acoustic_text=str(rec["acoustic_text"]),
                        extended_text=dict(rec["extended_text"]),
                        cluster_ids={k: list(v) for k, v in rec["cluster_ids"].items()},
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
                raise ValueError(f"{path}:{lineno}: malformed corpus record: {e}") from None
    return records
