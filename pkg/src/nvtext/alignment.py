"""Word-level slicing of frame-level feature streams.

Frame rows are canonicalized by sorting on timestamp, so the per-word
mean is invariant to the row order of the input file. A word whose time
window contains no frame falls back to the single nearest frame within
``fallback_window`` seconds of the word midpoint; beyond that the word
is reported as missing rather than given fabricated features.
"""

from dataclasses import dataclass, field

import numpy as np

MODALITIES = ("visual", "acoustic")

DEFAULT_FALLBACK_WINDOW = 0.25


@dataclass
class FrameSeries:
    """Timestamped frame-level feature rows for one modality of one segment."""

    modality: str
    timestamps: np.ndarray  # (n,) seconds, strictly increasing after sort
    values: np.ndarray  # (n, d) feature magnitudes
    feature_names: list[str]

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"unknown modality {self.modality!r}")
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps.ndim != 1:
            raise ValueError("timestamps must be 1-D")
        if self.values.ndim != 2:
            self.values = self.values.reshape(len(self.timestamps), -1)
        if self.values.shape[0] != self.timestamps.shape[0]:
            raise ValueError(
                f"row count {self.values.shape[0]} != timestamp count {self.timestamps.shape[0]}"
            )
        if self.values.shape[1] != len(self.feature_names):
            raise ValueError(
                f"column count {self.values.shape[1]} != feature name count {len(self.feature_names)}"
            )
        if not np.all(np.isfinite(self.timestamps)):
            raise ValueError("non-finite timestamp")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite frame value; drop such rows at ingestion")
        # canonicalize: sort rows by timestamp so row order never matters
        order = np.argsort(self.timestamps, kind="stable")
        self.timestamps = self.timestamps[order]
        self.values = self.values[order]
        if len(self.timestamps) > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise ValueError("duplicate timestamp in frame series")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass
class WordToken:
    text: str
    start: float
    end: float

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("empty word text")
        if not (self.start < self.end):
            raise ValueError(f"word {self.text!r}: start {self.start} >= end {self.end}")


@dataclass
class Segment:
    """One utterance: ordered timed words plus a task label.

    ``frames`` maps modality name to a frame-file path (filled by the
    manifest loader; empty for segments built in memory).
    """

    id: str
    text: str
    words: list[WordToken]
    label: float
    frames: dict = field(default_factory=dict)

    def __post_init__(self):
        for prev, cur in zip(self.words, self.words[1:]):
            if cur.start < prev.end:
                raise ValueError(
                    f"segment {self.id}: words {prev.text!r} and {cur.text!r} overlap"
                )


@dataclass
class WordVector:
    segment_id: str
    word_index: int
    modality: str
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(self.vector)):
            raise ValueError("non-finite word vector")


def slice_word_features(
    frames: FrameSeries,
    word: WordToken,
    fallback_window: float = DEFAULT_FALLBACK_WINDOW,
) -> np.ndarray | None:
    """Mean feature vector over frames in [start, end), or None if missing.

    The window is half-open so a frame on the boundary between two
    adjacent words is counted once. An empty window falls back to the
    single frame nearest the word midpoint if it lies within
    ``fallback_window`` seconds (ties go to the earlier frame).
    """
    if len(frames) == 0:
        return None
    t = frames.timestamps
    lo = np.searchsorted(t, word.start, side="left")
    hi = np.searchsorted(t, word.end, side="left")
    if hi > lo:
        return frames.values[lo:hi].mean(axis=0)
    mid = 0.5 * (word.start + word.end)
    i = int(np.argmin(np.abs(t - mid)))
    if abs(t[i] - mid) <= fallback_window:
        return frames.values[i].copy()
    return None


@dataclass
class MissingWord:
    segment_id: str
    word_index: int
    word: str
    reason: str


def align_corpus(
    segments: list[Segment],
    frames_by_segment: dict[str, FrameSeries],
    modality: str,
    fallback_window: float = DEFAULT_FALLBACK_WINDOW,
) -> tuple[list[WordVector], list[MissingWord]]:
    """One word-aligned vector per non-missing word, in (segment, word) order."""
    vectors: list[WordVector] = []
    missing: list[MissingWord] = []
    for seg in segments:
        if seg.id not in frames_by_segment:
            raise KeyError(f"segment {seg.id!r} has no {modality} frame series")
        frames = frames_by_segment[seg.id]
        if frames.modality != modality:
            raise ValueError(
                f"segment {seg.id!r}: expected {modality} frames, got {frames.modality}"
            )
        for i, word in enumerate(seg.words):
            vec = slice_word_features(frames, word, fallback_window)
            if vec is None:
                missing.append(
                    MissingWord(seg.id, i, word.text, "no frame within window or fallback")
                )
            else:
                vectors.append(WordVector(seg.id, i, modality, vec))
    return vectors, missing
