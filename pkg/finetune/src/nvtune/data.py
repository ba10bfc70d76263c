"""Corpus-file access for the harness.

The harness is coupled to the pipeline only through its corpus wire
format: newline-delimited records with per-mode extended texts built
from fixed templates. Literal [CLS]/[SEP] markers are stripped here
(the tokenizer adds its own specials); component spans are recomputed
against the stripped string by inverting the template.
"""

import json
from dataclasses import dataclass

MODES = ("t", "tv", "ta", "tav")

CLS = "[CLS]"
SEP = "[SEP]"
VISUAL_MARK = "Facial expressions shown: "
ACOUSTIC_MARK_TAIL = "and acoustic expressions shown: "
ACOUSTIC_MARK_SOLO = "Acoustic expressions shown: "


@dataclass
class Record:
    segment_id: str
    split: str
    label: float
    text: str
    visual_text: str
    acoustic_text: str
    extended_text: dict


def read_corpus(path) -> list[Record]:
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                records.append(
                    Record(
                        segment_id=str(rec["segment_id"]),
                        split=str(rec["split"]),
                        label=float(rec["label"]),
                        text=str(rec["text"]),
                        visual_text=str(rec.get("visual_text", "")),
                        acoustic_text=str(rec.get("acoustic_text", "")),
                        extended_text=dict(rec["extended_text"]),
                    )
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
                raise ValueError(f"{path}:{lineno}: malformed corpus record: {e}") from None
    return records


def require_mode(records: list[Record], mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    missing = [r.segment_id for r in records if mode not in r.extended_text]
    if missing:
        raise ValueError(
            f"corpus lacks extended text for mode {mode!r} "
            f"(first missing: {missing[0]!r})"
        )


def strip_specials(s: str) -> str:
    return " ".join(s.replace(CLS, " ").replace(SEP, " ").split())


@dataclass
class ParsedInput:
    """Model-ready string plus char spans of each template component."""

    string: str
    spans: dict  # component -> (start, end) char offsets into `string`


def parse_extended(extended: str) -> ParsedInput:
    """Invert the corpus template on the marker phrases.

    Works on both raw ("[CLS] ... [SEP]") and pre-stripped corpus lines;
    the returned string never carries the literal specials.
    """
    core = strip_specials(extended)
    spans = {}
    if VISUAL_MARK in core:
        text, rest = core.split(VISUAL_MARK, 1)
        text = text.rstrip()
        if ACOUSTIC_MARK_TAIL in rest:
            visual, acoustic = rest.split(f" {ACOUSTIC_MARK_TAIL}", 1)
        else:
            visual, acoustic = rest, None
        start = len(text) + 1 + len(VISUAL_MARK)
        spans["text"] = (0, len(text))
        spans["visual"] = (start, start + len(visual))
        if acoustic is not None:
            start = spans["visual"][1] + 1 + len(ACOUSTIC_MARK_TAIL)
            spans["acoustic"] = (start, start + len(acoustic))
    elif ACOUSTIC_MARK_SOLO in core:
        text, acoustic = core.split(ACOUSTIC_MARK_SOLO, 1)
        text = text.rstrip()
        start = len(text) + 1 + len(ACOUSTIC_MARK_SOLO)
        spans["text"] = (0, len(text))
        spans["acoustic"] = (start, start + len(acoustic))
    else:
        spans["text"] = (0, len(core))
    for name, (lo, hi) in spans.items():
        if core[lo:hi] == "":
            raise ValueError(f"empty {name} component in extended text")
    return ParsedInput(core, spans)


def component_of_char(parsed: ParsedInput, pos: int) -> str:
    """Which component a character position belongs to ('marker' for template glue)."""
    for name, (lo, hi) in parsed.spans.items():
        if lo <= pos < hi:
            return name
    return "marker"
