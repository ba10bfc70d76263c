from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# 64-segment planted corpus emitted by the pipeline CLI:
#   nvtext synth --out-dir data --seed 13 --segments 64 --words-per-segment 6
#   nvtext fit ... --modality visual/acoustic --seed 13 --k-min 2 --k-max 6
#   nvtext textualize ... --modes t,tv,ta,tav
# Labels are the acoustic cluster id mod 2; utterance tokens are random.
SMOKE_CORPUS = FIXTURES / "smoke_corpus.jsonl"


@pytest.fixture(scope="session")
def smoke_corpus():
    return SMOKE_CORPUS


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """Pre-trained tiny encoder shared by the training/attribution tests."""
    from nvtune.data import read_corpus, strip_specials
    from nvtune.encoder import pretrain_encoder

    records = read_corpus(SMOKE_CORPUS)
    texts = [
        strip_specials(r.extended_text[m])
        for r in records
        for m in sorted(r.extended_text)
    ]
    out = tmp_path_factory.mktemp("encoder")
    pretrain_encoder(texts, out, seed=0)
    return out
