import json

import numpy as np
import pytest

from nvtext.clustering import Standardizer, fit_standardizer, kmeans_fit
from nvtext.corpus_io import (
    ACOUSTIC_HEADER,
    VISUAL_HEADER,
    ArtifactCorruptionError,
    ModelArtifact,
    load_manifest,
    read_alignments,
    read_corpus,
    read_frames_csv,
    read_model,
    write_corpus,
    write_model,
)
from nvtext.description import fit_intensity_thresholds
from nvtext.textgen import (
    AblationMode,
    ClusterIdSequence,
    CorpusRecord,
    NonverbalText,
    assemble_extended_text,
    generate_modality_text,
)

ACOUSTIC_NAMES = ["pitch", "loudness", "jitter", "shimmer"]


# ------------------------------------------------------------- frames csv

def _visual_row(t, fill=0.5):
    return ",".join([str(t)] + [str(fill)] * 11)


def test_read_visual_frames(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("\n".join([VISUAL_HEADER, _visual_row(0.0), _visual_row(0.1), _visual_row(0.2)]) + "\n")
    series, dropped = read_frames_csv(p, "visual")
    assert len(series) == 3 and dropped == 0
    assert series.values.shape == (3, 11)
    assert series.feature_names[0] == "AU02_r"


def test_read_frames_header_mismatch(tmp_path):
    p = tmp_path / "v.csv"
    bad = VISUAL_HEADER.replace(",AU45_r", "")
    p.write_text(bad + "\n" + ",".join(["0.0"] + ["1"] * 10) + "\n")
    with pytest.raises(ValueError) as err:
        read_frames_csv(p, "visual")
    assert "expected" in str(err.value) and "found" in str(err.value)


def test_read_frames_drops_nonfinite_rows(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(
        "\n".join([ACOUSTIC_HEADER, "0.0,1,2,3,4", "0.1,NaN,2,3,4", "0.2,1,2,3,4"]) + "\n"
    )
    series, dropped = read_frames_csv(p, "acoustic")
    assert dropped == 1
    assert len(series) == 2


def test_read_frames_unparseable_row_names_line(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("\n".join([ACOUSTIC_HEADER, "0.0,1,2,3,4", "0.1,oops,2,3,4"]) + "\n")
    with pytest.raises(ValueError, match=r"a\.csv:3"):
        read_frames_csv(p, "acoustic")


def test_read_frames_wrong_column_count(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("\n".join([ACOUSTIC_HEADER, "0.0,1,2,3"]) + "\n")
    with pytest.raises(ValueError, match="columns"):
        read_frames_csv(p, "acoustic")


# ------------------------------------------------------------- alignments

def _alignment_line(sid, label=1.0, words=None):
    words = words or [{"w": "hi", "start": 0.0, "end": 0.3}]
    return json.dumps({"segment_id": sid, "text": "hi", "label": label, "words": words})


def test_read_alignments_two_records(tmp_path):
    p = tmp_path / "al.jsonl"
    p.write_text(_alignment_line("a") + "\n" + _alignment_line("b", label=2.4) + "\n")
    segs = read_alignments(p)
    assert [s.id for s in segs] == ["a", "b"]
    assert segs[1].label == 2.4  # sentiment-valued


def test_read_alignments_zero_length_word(tmp_path):
    p = tmp_path / "al.jsonl"
    p.write_text(_alignment_line("a", words=[{"w": "x", "start": 0.5, "end": 0.5}]) + "\n")
    with pytest.raises(ValueError, match="start"):
        read_alignments(p)


def test_read_alignments_malformed_line_numbered(tmp_path):
    p = tmp_path / "al.jsonl"
    p.write_text(_alignment_line("a") + "\n" + "{not json}\n")
    with pytest.raises(ValueError, match=r"al\.jsonl:2"):
        read_alignments(p)


def test_read_alignments_label_range(tmp_path):
    p = tmp_path / "al.jsonl"
    p.write_text(_alignment_line("a", label=4.5) + "\n")
    with pytest.raises(ValueError, match=r"\[-3, 3\]"):
        read_alignments(p)


def test_read_alignments_duplicate_id(tmp_path):
    p = tmp_path / "al.jsonl"
    p.write_text(_alignment_line("a") + "\n" + _alignment_line("a") + "\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_alignments(p)


# ---------------------------------------------------------------- model io

def _fitted_artifact(rng):
    x = rng.normal(size=(40, 4)) + 5 * rng.integers(0, 2, size=(40, 1))
    std = fit_standardizer(x, ACOUSTIC_NAMES)
    model = kmeans_fit(std.transform(x), k=2, seed=3, modality="acoustic",
                       feature_names=ACOUSTIC_NAMES)
    model.standardizer = std
    model.silhouette = 0.5
    model.descriptors = [["normal voice"], ["high pitch", "normal loudness",
                                            "normal jitter", "normal shimmer"]]
    thresholds = fit_intensity_thresholds(x, ACOUSTIC_NAMES)
    return ModelArtifact(model, thresholds)


def test_model_roundtrip_field_for_field(tmp_path, rng):
    artifact = _fitted_artifact(rng)
    p = tmp_path / "m.json"
    write_model(artifact, p)
    back = read_model(p)
    m0, m1 = artifact.model, back.model
    assert (m0.modality, m0.k, m0.seed) == (m1.modality, m1.k, m1.seed)
    assert m0.objective == m1.objective and m0.silhouette == m1.silhouette
    assert np.array_equal(m0.centroids, m1.centroids)
    assert np.array_equal(m0.standardizer.mean, m1.standardizer.mean)
    assert np.array_equal(m0.standardizer.std, m1.standardizer.std)
    assert m0.descriptors == m1.descriptors
    assert m0.feature_names == m1.feature_names
    assert np.array_equal(artifact.thresholds.mean, back.thresholds.mean)
    assert artifact.thresholds.multiplier == back.thresholds.multiplier


def test_model_writes_are_byte_identical(tmp_path, rng):
    artifact = _fitted_artifact(rng)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_model(artifact, a)
    write_model(artifact, b)
    assert a.read_bytes() == b.read_bytes()


def test_model_truncated_file_is_corruption(tmp_path, rng):
    p = tmp_path / "m.json"
    write_model(_fitted_artifact(rng), p)
    p.write_bytes(p.read_bytes()[:-40])
    with pytest.raises(ArtifactCorruptionError):
        read_model(p)


def test_model_hash_mismatch_is_corruption(tmp_path, rng):
    p = tmp_path / "m.json"
    write_model(_fitted_artifact(rng), p)
    doc = json.loads(p.read_text())
    doc["payload"]["k"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(ArtifactCorruptionError, match="hash"):
        read_model(p)


# ---------------------------------------------------------------- corpus io

def _record(sid, label=1.0, split="train"):
    nv = NonverbalText("jaw drop", "normal voice")
    text = f"utterance {sid}"
    return CorpusRecord(
        segment_id=sid,
        label=label,
        text=text,
        visual_text=nv.visual_text,
        acoustic_text=nv.acoustic_text,
        extended_text={
            "t": assemble_extended_text(text, nv, AblationMode.T).string,
            "tav": assemble_extended_text(text, nv, AblationMode.TAV).string,
        },
        cluster_ids={"visual": [0, 1], "acoustic": [0, 0]},
        split=split,
    )


def test_corpus_roundtrip_and_sorting(tmp_path):
    p = tmp_path / "c.jsonl"
    write_corpus([_record("b"), _record("a"), _record("c")], p, ["t", "tav"])
    lines = p.read_text().splitlines()
    assert len(lines) == 3
    back = read_corpus(p)
    assert [r.segment_id for r in back] == ["a", "b", "c"]
    assert back[0].extended_text.keys() == {"t", "tav"}


def test_corpus_empty_list_writes_empty_file(tmp_path):
    p = tmp_path / "c.jsonl"
    write_corpus([], p, ["t"])
    assert p.read_text() == ""
    assert read_corpus(p) == []


def test_corpus_duplicate_id_rejected(tmp_path):
    with pytest.raises(ValueError, match="duplicate"):
        write_corpus([_record("a"), _record("a")], tmp_path / "c.jsonl", ["t"])


def test_corpus_missing_mode_rejected(tmp_path):
    with pytest.raises(ValueError, match="tv"):
        write_corpus([_record("a")], tmp_path / "c.jsonl", ["tv"])


def test_corpus_strip_specials_flag(tmp_path):
    p = tmp_path / "c.jsonl"
    write_corpus([_record("a")], p, ["t"], strip_specials=True)
    rec = read_corpus(p)[0]
    assert rec.extended_text["t"] == "utterance a"


def test_corpus_reassembles_from_stored_cluster_ids(tmp_path, rng):
    # re-running textgen on the stored id sequences must reproduce the
    # stored extended texts exactly
    from test_textgen import _planted_frames, _planted_models
    from nvtext.textgen import textualize_segment
    from conftest import make_segment

    seg = make_segment(
        "r1", [("hello", 0.0, 0.3), ("there", 0.4, 0.7), ("world", 0.8, 1.1)]
    )
    models = _planted_models()
    record = textualize_segment(seg, _planted_frames(), models, [AblationMode.TAV])
    p = tmp_path / "c.jsonl"
    write_corpus([record], p, ["tav"])
    stored = read_corpus(p)[0]

    nv = NonverbalText(
        generate_modality_text(
            ClusterIdSequence("visual", stored.cluster_ids["visual"]), models["visual"]
        ),
        generate_modality_text(
            ClusterIdSequence("acoustic", stored.cluster_ids["acoustic"]), models["acoustic"]
        ),
    )
    rebuilt = assemble_extended_text(stored.text, nv, AblationMode.TAV).string
    assert rebuilt == stored.extended_text["tav"]


# ----------------------------------------------------------------- manifest

def _write_dataset(tmp_path, n=3):
    frames_dir = tmp_path / "frames"
    frames_dir.mkdir()
    seg_entries = []
    al_lines = []
    for i in range(n):
        sid = f"s{i}"
        (frames_dir / f"{sid}.visual.csv").write_text(
            VISUAL_HEADER + "\n" + _visual_row(0.1) + "\n"
        )
        (frames_dir / f"{sid}.acoustic.csv").write_text(
            ACOUSTIC_HEADER + "\n0.1,1,2,3,4\n"
        )
        seg_entries.append(
            {
                "id": sid,
                "split": "train" if i else "test",
                "visual_frames": f"frames/{sid}.visual.csv",
                "acoustic_frames": f"frames/{sid}.acoustic.csv",
            }
        )
        al_lines.append(_alignment_line(sid))
    (tmp_path / "alignments.jsonl").write_text("\n".join(al_lines) + "\n")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {"dataset": "demo", "alignments": "alignments.jsonl", "segments": seg_entries}
        )
    )
    return manifest


def test_manifest_joins_alignments(tmp_path):
    manifest = load_manifest(_write_dataset(tmp_path))
    assert manifest.dataset == "demo"
    assert len(manifest.entries) == 3
    assert manifest.entries[0].split == "test"
    assert manifest.entries[0].segment.words[0].text == "hi"
    assert len(manifest.split_entries("train")) == 2


def test_manifest_missing_frame_file(tmp_path):
    path = _write_dataset(tmp_path)
    (tmp_path / "frames" / "s0.visual.csv").unlink()
    with pytest.raises(FileNotFoundError, match="s0"):
        load_manifest(path)


def test_manifest_unknown_split(tmp_path):
    path = _write_dataset(tmp_path)
    doc = json.loads(path.read_text())
    doc["segments"][0]["split"] = "validation"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="split"):
        load_manifest(path)


def test_manifest_alignment_id_mismatch(tmp_path):
    path = _write_dataset(tmp_path)
    doc = json.loads(path.read_text())
    doc["segments"] = doc["segments"][:2]  # alignments now have an extra id
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="absent from manifest"):
        load_manifest(path)
