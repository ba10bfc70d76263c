import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nvtext.alignment import FrameSeries, Segment, WordToken

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_frames(modality, timestamps, values, feature_names=None):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(values.shape[1])]
    return FrameSeries(modality, np.asarray(timestamps, dtype=np.float64), values, feature_names)


def make_segment(sid, word_specs, label=0.0, text=None):
    words = [WordToken(w, s, e) for w, s, e in word_specs]
    return Segment(sid, text or " ".join(w for w, _, _ in word_specs), words, label)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
