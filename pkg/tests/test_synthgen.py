import numpy as np
import pytest

from nvtext.alignment import align_corpus
from nvtext.clustering import fit_standardizer, select_k
from nvtext.corpus_io import load_frames, load_manifest
from nvtext.synthgen import (
    MARKER_TOKEN,
    SynthSpec,
    adjusted_rand_index,
    gen_corpus,
    load_truth,
)


def all_file_bytes(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_same_seed_same_bytes(tmp_path):
    spec = SynthSpec(seed=5, segments=12, words_per_segment=4)
    gen_corpus(spec, tmp_path / "a")
    gen_corpus(spec, tmp_path / "b")
    assert all_file_bytes(tmp_path / "a") == all_file_bytes(tmp_path / "b")


def test_different_seed_different_bytes(tmp_path):
    gen_corpus(SynthSpec(seed=1, segments=6), tmp_path / "a")
    gen_corpus(SynthSpec(seed=2, segments=6), tmp_path / "b")
    assert all_file_bytes(tmp_path / "a") != all_file_bytes(tmp_path / "b")


def test_k1_spec_plants_single_cluster(tmp_path):
    out = gen_corpus(SynthSpec(seed=0, k_visual=1, k_acoustic=1, segments=6), tmp_path)
    truth = load_truth(out.truth)
    ids = {i for rec in truth.values() for i in rec["visual_ids"] + rec["acoustic_ids"]}
    assert ids == {0}


def test_infeasible_spec_rejected():
    with pytest.raises(ValueError, match="infeasible"):
        SynthSpec(k_visual=100, segments=3, words_per_segment=2)
    with pytest.raises(ValueError, match="k_acoustic"):
        SynthSpec(k_acoustic=10, segments=5, words_per_segment=50)


def test_marker_token_tracks_label(tmp_path):
    out = gen_corpus(
        SynthSpec(seed=3, segments=20, label_rule="from_text_token"), tmp_path
    )
    manifest = load_manifest(out.manifest)
    for entry in manifest.entries:
        has_marker = MARKER_TOKEN in entry.segment.text.split()
        assert has_marker == (entry.segment.label == 1.0)


def test_slicing_recovers_planted_vectors_and_clustering_recovers_ids(tmp_path):
    spec = SynthSpec(seed=11, segments=125, words_per_segment=8, separation=10.0)
    out = gen_corpus(spec, tmp_path)
    manifest = load_manifest(out.manifest)
    truth = load_truth(out.truth)

    frames, dropped = load_frames(manifest.entries, "acoustic")
    assert dropped == 0
    segments = [e.segment for e in manifest.entries]
    vectors, missing = align_corpus(segments, frames, "acoustic")
    assert not missing
    assert len(vectors) == spec.segments * spec.words_per_segment

    planted = [truth[v.segment_id]["acoustic_ids"][v.word_index] for v in vectors]
    raw = np.stack([v.vector for v in vectors])
    z = fit_standardizer(raw).transform(raw)
    k, model = select_k(z, 2, 8, seed=11)
    assert k == spec.k_acoustic
    assert adjusted_rand_index(model.assignments_, planted) >= 0.9


def test_acoustic_labels_independent_of_tokens(tmp_path):
    out = gen_corpus(
        SynthSpec(seed=9, segments=120, label_rule="from_acoustic_cluster"), tmp_path
    )
    manifest = load_manifest(out.manifest)
    labels = np.array([e.segment.label for e in manifest.entries])
    token_sets = [set(e.segment.text.split()) for e in manifest.entries]
    vocab = sorted(set().union(*token_sets))
    presence = np.array([[t in s for t in vocab] for s in token_sets], dtype=float)

    def max_assoc(y):
        centered = y - y.mean()
        stats = []
        for j in range(presence.shape[1]):
            col = presence[:, j] - presence[:, j].mean()
            denom = np.sqrt((col**2).sum() * (centered**2).sum())
            stats.append(abs(col @ centered) / denom if denom else 0.0)
        return max(stats)

    observed = max_assoc(labels)
    rng = np.random.default_rng(0)
    null = [max_assoc(rng.permutation(labels)) for _ in range(200)]
    p = (1 + sum(s >= observed for s in null)) / 201
    assert p > 0.01


def test_ari_hand_values():
    assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0  # relabeling
    assert adjusted_rand_index([0, 0, 0, 0], [0, 0, 0, 0]) == 1.0
    mixed = adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1])
    assert mixed < 0.1


def test_ari_matches_sklearn(rng):
    sk = pytest.importorskip("sklearn.metrics")
    for _ in range(10):
        a = rng.integers(0, 4, size=50)
        b = rng.integers(0, 3, size=50)
        assert adjusted_rand_index(a, b) == pytest.approx(
            sk.adjusted_rand_score(a, b), abs=1e-12
        )
