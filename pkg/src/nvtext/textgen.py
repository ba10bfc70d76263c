"""From per-word cluster ids to visual-text, acoustic-text and the
extended input string.

Descriptor phrases are counted over the expanded per-word descriptor
multiset, sorted by frequency (ties by first occurrence), deduplicated,
and joined with ", ". The extended string follows a fixed byte-exact
template per ablation mode, with literal "[CLS]"/"[SEP]" markers.
"""

from dataclasses import dataclass, field
from enum import Enum

from .alignment import DEFAULT_FALLBACK_WINDOW, slice_word_features
from .clustering import assign_cluster

CLS = "[CLS]"
SEP = "[SEP]"

_VISUAL_MARK = "Facial expressions shown: "
_ACOUSTIC_MARK_TAIL = "and acoustic expressions shown: "
_ACOUSTIC_MARK_SOLO = "Acoustic expressions shown: "


class AblationMode(Enum):
    T = "t"
    TV = "tv"
    TA = "ta"
    TAV = "tav"

    @property
    def key(self) -> str:
        return self.value

    @property
    def needs_visual(self) -> bool:
        return self in (AblationMode.TV, AblationMode.TAV)

    @property
    def needs_acoustic(self) -> bool:
        return self in (AblationMode.TA, AblationMode.TAV)

    @classmethod
    def parse(cls, name: str) -> "AblationMode":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown ablation mode {name!r}; expected t, tv, ta or tav")


@dataclass
class ClusterIdSequence:
    modality: str
    ids: list[int]


@dataclass
class NonverbalText:
    visual_text: str = ""
    acoustic_text: str = ""


@dataclass
class ExtendedText:
    string: str
    mode: AblationMode
    spans: dict[str, tuple[int, int]]  # utf-8 byte offsets per component


@dataclass
class CorpusRecord:
    """One textualized segment, ready for corpus serialization."""

    segment_id: str
    label: float
    text: str
    visual_text: str = ""
    acoustic_text: str = ""
    extended_text: dict[str, str] = field(default_factory=dict)
    cluster_ids: dict[str, list[int]] = field(default_factory=dict)
    split: str = ""


def generate_modality_text(ids: ClusterIdSequence, codebook) -> str:
    """Frequency-sorted, deduplicated descriptor phrases for one segment."""
    if codebook.descriptors is None:
        raise ValueError("codebook has no descriptors; run the description stage first")
    expanded: list[str] = []
    for cid in ids.ids:
        if not 0 <= cid < codebook.k:
            raise ValueError(f"cluster id {cid} out of range for k={codebook.k}")
        expanded.extend(codebook.descriptors[cid])
    if not expanded:
        return ""
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for pos, phrase in enumerate(expanded):
        counts[phrase] = counts.get(phrase, 0) + 1
        first_seen.setdefault(phrase, pos)
    ordered = sorted(counts, key=lambda p: (-counts[p], first_seen[p]))
    return ", ".join(ordered)


def assemble_extended_text(
    utterance: str, nv: NonverbalText, mode: AblationMode
) -> ExtendedText:
    """Render the mode's template; spans give utf-8 byte offsets of each part."""
    if mode.needs_visual and not nv.visual_text:
        raise ValueError(f"mode {mode.key} requires a visual-text")
    if mode.needs_acoustic and not nv.acoustic_text:
        raise ValueError(f"mode {mode.key} requires an acoustic-text")

    parts: list[tuple[str | None, str]] = [(None, f"{CLS} "), ("text", utterance)]
    if mode is AblationMode.TAV:
        parts += [
            (None, f" {SEP} {_VISUAL_MARK}"),
            ("visual", nv.visual_text),
            (None, f" {_ACOUSTIC_MARK_TAIL}"),
            ("acoustic", nv.acoustic_text),
        ]
    elif mode is AblationMode.TV:
        parts += [(None, f" {SEP} {_VISUAL_MARK}"), ("visual", nv.visual_text)]
    elif mode is AblationMode.TA:
        parts += [(None, f" {SEP} {_ACOUSTIC_MARK_SOLO}"), ("acoustic", nv.acoustic_text)]
    parts.append((None, f" {SEP}"))

    spans: dict[str, tuple[int, int]] = {}
    offset = 0
    chunks = []
    for name, piece in parts:
        nbytes = len(piece.encode("utf-8"))
        if name is not None:
            spans[name] = (offset, offset + nbytes)
        offset += nbytes
        chunks.append(piece)
    return ExtendedText("".join(chunks), mode, spans)


def parse_extended_text(s: str) -> tuple[AblationMode, str, str, str]:
    """Invert the template: (mode, text, visual_text, acoustic_text)."""
    if not s.startswith(f"{CLS} ") or not s.endswith(f" {SEP}"):
        raise ValueError("extended text missing [CLS]/[SEP] frame")
    core = s[len(CLS) + 1 : -(len(SEP) + 1)]
    vis_mark = f" {SEP} {_VISUAL_MARK}"
    ac_solo = f" {SEP} {_ACOUSTIC_MARK_SOLO}"
    ac_tail = f" {_ACOUSTIC_MARK_TAIL}"
    if vis_mark in core:
        text, rest = core.split(vis_mark, 1)
        if ac_tail in rest:
            visual, acoustic = rest.split(ac_tail, 1)
            return AblationMode.TAV, text, visual, acoustic
        return AblationMode.TV, text, rest, ""
    if ac_solo in core:
        text, acoustic = core.split(ac_solo, 1)
        return AblationMode.TA, text, "", acoustic
    if SEP in core:
        raise ValueError("extended text has a [SEP] but no known component marker")
    return AblationMode.T, core, "", ""


def strip_special_tokens(s: str) -> str:
    """Remove literal [CLS]/[SEP] markers for tokenizers that add their own."""
    out = s.replace(CLS, " ").replace(SEP, " ")
    return " ".join(out.split())


def textualize_segment(
    segment,
    frames_by_modality: dict,
    models: dict,
    modes: list[AblationMode],
    fallback_window: float = DEFAULT_FALLBACK_WINDOW,
) -> CorpusRecord:
    """Run a segment end to end: slice, assign, describe, assemble.

    Modalities required by any requested mode must yield at least one
    word vector; other modalities are filled best-effort when a model
    and frames are available.
    """
    needs = {
        "visual": any(m.needs_visual for m in modes),
        "acoustic": any(m.needs_acoustic for m in modes),
    }
    texts = {"visual": "", "acoustic": ""}
    cluster_ids: dict[str, list[int]] = {}
    for modality in ("visual", "acoustic"):
        model = models.get(modality)
        frames = frames_by_modality.get(modality)
        if model is None or frames is None:
            if needs[modality]:
                raise ValueError(
                    f"segment {segment.id}: mode requires {modality} but no "
                    f"{'model' if model is None else 'frames'} was provided"
                )
            continue
        ids = []
        for word in segment.words:
            vec = slice_word_features(frames, word, fallback_window)
            if vec is not None:
                ids.append(assign_cluster(model, vec))
        if not ids and needs[modality]:
            raise ValueError(f"segment {segment.id}: every word is missing {modality} frames")
        cluster_ids[modality] = ids
        texts[modality] = generate_modality_text(ClusterIdSequence(modality, ids), model)

    nv = NonverbalText(texts["visual"], texts["acoustic"])
    extended = {
        mode.key: assemble_extended_text(segment.text, nv, mode).string for mode in modes
    }
    return CorpusRecord(
        segment_id=segment.id,
        label=segment.label,
        text=segment.text,
        visual_text=nv.visual_text,
        acoustic_text=nv.acoustic_text,
        extended_text=extended,
        cluster_ids=cluster_ids,
    )
