"""Human-readable descriptors for fitted clusters.

Visual clusters are described by their dominant action units (cluster
mean clears both an absolute floor and the global mean); a cluster with
no dominant unit reads "neutral face". Acoustic clusters are described
per feature as low/normal/high against cutoffs from a fitted normal
distribution, or "normal voice" when every feature is in range.
"""

import json
import re
from dataclasses import dataclass

import numpy as np

# Canonical action-unit wording. A superset of the 11 ingested AUs so a
# config file can widen the feature set without touching code.
DEFAULT_AU_CATALOG: dict[int, str] = {
    2: "outer brow raiser",
    4: "brow lowerer",
    5: "upper lid raiser",
    6: "cheek raiser",
    7: "lid tightener",
    9: "nose wrinkler",
    12: "lip corner puller",
    15: "lip corner depressor",
    20: "lip stretcher",
    23: "lip tightener",
    25: "lips part",
    26: "jaw drop",
    45: "blink",
}

NEUTRAL_FACE = "neutral face"
NORMAL_VOICE = "normal voice"

DEFAULT_ABS_FLOOR = 1.0  # on the extractor's 0-5 AU intensity scale
DEFAULT_SIGMA_MULT = 1.0


def validate_au_catalog(catalog: dict[int, str]) -> dict[int, str]:
    for au, desc in catalog.items():
        if not isinstance(au, int) or au < 0:
            raise ValueError(f"bad action unit id {au!r}")
        if not desc or desc != desc.strip() or desc != desc.lower():
            raise ValueError(f"AU{au}: descriptor must be non-empty lowercase, got {desc!r}")
    return dict(catalog)


def load_au_catalog(path) -> dict[int, str]:
    """Read a {"<au id>": "<descriptor>"} JSON file."""
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    try:
        catalog = {int(au): desc for au, desc in raw.items()}
    except (ValueError, AttributeError) as e:
        raise ValueError(f"{path}: AU catalog must map integer ids to strings") from e
    return validate_au_catalog(catalog)


def au_id_from_feature_name(name: str) -> int:
    """'AU02_r' -> 2."""
    m = re.fullmatch(r"AU(\d+)(?:_r)?", name)
    if not m:
        raise ValueError(f"feature name {name!r} is not an action-unit column")
    return int(m.group(1))


@dataclass
class IntensityThresholds:
    """Per-feature low/high cutoffs at mean +/- multiplier * std."""

    feature_names: list[str]
    mean: np.ndarray
    std: np.ndarray
    multiplier: float

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if np.any(self.std <= 0):
            raise ValueError("threshold std must be > 0")

    @property
    def low(self) -> np.ndarray:
        return self.mean - self.multiplier * self.std

    @property
    def high(self) -> np.ndarray:
        return self.mean + self.multiplier * self.std

    def classify(self, values: np.ndarray) -> list[str]:
        """'low' | 'normal' | 'high' per feature (strict cutoffs)."""
        values = np.asarray(values, dtype=np.float64)
        out = []
        for v, lo, hi in zip(values, self.low, self.high):
            out.append("low" if v < lo else "high" if v > hi else "normal")
        return out


@dataclass
class ClusterDescriptor:
    cluster_id: int
    descriptors: list[str]
    au_ids: list[int] | None = None  # visual only, ordered by mean intensity


def dominant_aus(
    cluster_members: np.ndarray,
    global_mean: np.ndarray,
    au_ids: list[int],
    abs_floor: float = DEFAULT_ABS_FLOOR,
) -> list[int]:
    """Action units dominant in a cluster, strongest first.

    An AU is dominant iff its cluster mean is >= abs_floor and >= its
    global mean. Ties in cluster mean break toward the lower AU id. The
    empty list is a valid result and maps to "neutral face".
    """
    members = np.asarray(cluster_members, dtype=np.float64)
    if members.ndim != 2 or members.shape[0] == 0:
        raise ValueError("cluster members must be a non-empty 2-D array")
    means = members.mean(axis=0)
    keep = [
        (float(means[i]), au)
        for i, au in enumerate(au_ids)
        if means[i] >= abs_floor and means[i] >= global_mean[i]
    ]
    keep.sort(key=lambda t: (-t[0], t[1]))
    return [au for _, au in keep]


def fit_intensity_thresholds(
    values: np.ndarray,
    feature_names: list[str],
    multiplier: float = DEFAULT_SIGMA_MULT,
) -> IntensityThresholds:
    """Fit a normal distribution per feature over raw word-aligned values."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 value rows per feature")
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    bad = np.flatnonzero(std == 0)
    if bad.size:
        raise ValueError(f"constant feature: {', '.join(feature_names[i] for i in bad)}")
    return IntensityThresholds(list(feature_names), mean, std, multiplier)


def label_acoustic_cluster(
    centroid_raw: np.ndarray,
    thresholds: IntensityThresholds,
    cluster_id: int = 0,
) -> ClusterDescriptor:
    """Low/normal/high phrase per feature for a raw-unit centroid.

    High phrases come first, then low, then normal; within each level
    features are ordered by |z| deviation descending. A centroid with
    every feature in the normal band reads just "normal voice".
    """
    centroid = np.asarray(centroid_raw, dtype=np.float64)
    levels = thresholds.classify(centroid)
    if all(level == "normal" for level in levels):
        return ClusterDescriptor(cluster_id, [NORMAL_VOICE])
    z = np.abs((centroid - thresholds.mean) / thresholds.std)
    phrases = []
    for wanted in ("high", "low", "normal"):
        group = [
            (float(z[i]), i) for i, level in enumerate(levels) if level == wanted
        ]
        group.sort(key=lambda t: (-t[0], t[1]))
        phrases.extend(f"{wanted} {thresholds.feature_names[i]}" for _, i in group)
    return ClusterDescriptor(cluster_id, phrases)


def build_codebook(
    model,
    vectors_raw: np.ndarray,
    catalog: dict[int, str] | None = None,
    thresholds: IntensityThresholds | None = None,
    abs_floor: float = DEFAULT_ABS_FLOOR,
):
    """Attach an ordered descriptor list per cluster to a fitted model.

    ``vectors_raw`` are the raw-unit fitting vectors, row-aligned with
    the model's stored assignments.
    """
    from .clustering import assign_cluster

    x = np.asarray(vectors_raw, dtype=np.float64)
    if model.assignments_ is not None and len(model.assignments_) == x.shape[0]:
        labels = np.asarray(model.assignments_)
    else:
        labels = np.array([assign_cluster(model, v) for v in x])

    descriptors: list[list[str]] = []
    if model.modality == "visual":
        catalog = validate_au_catalog(catalog or DEFAULT_AU_CATALOG)
        au_ids = [au_id_from_feature_name(n) for n in model.feature_names]
        unknown = [au for au in au_ids if au not in catalog]
        if unknown:
            raise ValueError(f"action units missing from catalog: {unknown}")
        global_mean = x.mean(axis=0)
        for c in range(model.k):
            members = x[labels == c]
            if members.shape[0] == 0:
                raise ValueError(f"cluster {c} has no members")
            aus = dominant_aus(members, global_mean, au_ids, abs_floor)
            descriptors.append([catalog[au] for au in aus] if aus else [NEUTRAL_FACE])
    elif model.modality == "acoustic":
        if thresholds is None:
            raise ValueError("acoustic codebook needs intensity thresholds")
        for c in range(model.k):
            if not np.any(labels == c):
                raise ValueError(f"cluster {c} has no members")
            centroid = model.centroids[c]
            if model.standardizer is not None:
                centroid = model.standardizer.inverse(centroid)
            descriptors.append(label_acoustic_cluster(centroid, thresholds, c).descriptors)
    else:
        raise ValueError(f"unknown modality {model.modality!r}")

    model.descriptors = descriptors
    return model
