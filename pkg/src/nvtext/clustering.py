"""Seeded K-means codebooks with silhouette-based K selection.

All fitting runs in float64 with fixed reduction order, so a given
(vectors, k, seed) triple produces bit-identical centroids run to run.
Vectors are standardized by the caller before fitting; a fitted model
may carry the standardizer so raw-space queries can be assigned.
"""

from dataclasses import dataclass, field

import numpy as np

DEFAULT_MAX_ITER = 300
DEFAULT_REL_TOL = 1e-6
SILHOUETTE_SUBSAMPLE_CAP = 10_000


@dataclass
class Standardizer:
    """Per-feature z-scoring (population std) learned from the fitting set."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if np.any(self.std <= 0):
            raise ValueError("standardizer std must be > 0")

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.mean.shape[0]:
            raise ValueError(f"dimension mismatch: {x.shape[-1]} != {self.mean.shape[0]}")
        return (x - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return z * self.std + self.mean


def fit_standardizer(vectors: np.ndarray, feature_names: list[str] | None = None) -> Standardizer:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 vectors to fit a standardizer")
    mean = x.mean(axis=0)
    std = x.std(axis=0)  # ddof=0: transformed set then has std exactly 1
    bad = np.flatnonzero(std == 0)
    if bad.size:
        names = [feature_names[i] if feature_names else f"column {i}" for i in bad]
        raise ValueError(f"constant feature: {', '.join(names)}")
    return Standardizer(mean, std)


def apply_standardizer(standardizer: Standardizer, vectors: np.ndarray) -> np.ndarray:
    return standardizer.transform(vectors)


@dataclass
class ClusterModel:
    """A fitted per-modality codebook.

    ``centroids`` live in the space the model was fit in (standardized,
    when ``standardizer`` is set). ``descriptors`` is filled later by the
    description stage. Attributes with a trailing underscore are fitting
    byproducts and are not part of the serialized artifact.
    """

    modality: str
    k: int
    centroids: np.ndarray
    seed: int
    objective: float
    standardizer: Standardizer | None = None
    silhouette: float | None = None
    feature_names: list[str] | None = None
    descriptors: list[list[str]] | None = None

    assignments_: np.ndarray | None = field(default=None, repr=False, compare=False)
    objective_history_: list[float] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.centroids.shape[0] != self.k:
            raise ValueError("centroid count != k")
        if self.silhouette is not None and not -1.0 <= self.silhouette <= 1.0:
            raise ValueError("silhouette out of [-1, 1]")


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances, computed the direct way: the
    # ||x||^2 - 2x.c expansion loses the exact-zero guarantee for points
    # equal to a centroid, which the tie-break contract relies on.
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        # cumulative-sum draw; already-chosen points have d2 == 0 and
        # are never re-picked while distinct points remain
        cum = np.cumsum(d2)
        idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
        idx = min(idx, n - 1)
        centroids[j] = x[idx]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _reseed_empty(x, labels, centroids, point_d2):
    """Replace each empty cluster's centroid with the point farthest from its own."""
    for j in range(centroids.shape[0]):
        if np.any(labels == j):
            continue
        far = int(np.argmax(point_d2))
        centroids[j] = x[far]
        labels[far] = j
        point_d2[far] = 0.0
    return labels, centroids


def kmeans_fit(
    vectors: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    rel_tol: float = DEFAULT_REL_TOL,
    modality: str = "visual",
    feature_names: list[str] | None = None,
) -> ClusterModel:
    """Lloyd iterations from seeded k-means++ starts.

    The per-iteration objective (within-cluster sum of squares) is
    recorded in ``objective_history_`` and is non-increasing; iteration
    stops at ``max_iter`` or when the relative objective drop falls
    below ``rel_tol``. Empty clusters are reseeded to the point farthest
    from its current centroid, which also lowers the objective.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must be 2-D")
    n = x.shape[0]
    n_distinct = np.unique(x, axis=0).shape[0]
    if k > n_distinct:
        raise ValueError(f"k={k} exceeds {n_distinct} distinct vectors")
    if k < 1:
        raise ValueError("k must be >= 1")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(x, k, rng)

    history: list[float] = []
    prev = None
    for _ in range(max_iter):
        d2 = _sq_dists(x, centroids)
        labels = np.argmin(d2, axis=1)  # ties -> lowest index
        point_d2 = d2[np.arange(n), labels]
        labels, centroids = _reseed_empty(x, labels, centroids, point_d2)
        for j in range(k):
            centroids[j] = x[labels == j].mean(axis=0)
        obj = float(((x - centroids[labels]) ** 2).sum())
        if prev is not None and obj > prev:
            break  # fp noise at convergence; keep the history monotone
        history.append(obj)
        if prev is not None and (prev - obj) < rel_tol * prev:
            break
        if obj == 0.0:
            break
        prev = obj

    # final consistent assignment against the final centroids
    labels = np.argmin(_sq_dists(x, centroids), axis=1)
    obj = float(((x - centroids[labels]) ** 2).sum())
    if not history or obj <= history[-1]:
        history.append(obj)

    model = ClusterModel(
        modality=modality,
        k=k,
        centroids=centroids,
        seed=seed,
        objective=history[-1],
        feature_names=feature_names,
    )
    model.assignments_ = labels
    model.objective_history_ = history
    return model


def assign_cluster(model: ClusterModel, vector: np.ndarray) -> int:
    """Index of the nearest centroid; ties break to the lowest index.

    ``vector`` is in raw feature space; the model's standardizer (when
    present) is applied before the distance scan.
    """
    v = np.asarray(vector, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("vector must be 1-D")
    if model.standardizer is not None:
        v = model.standardizer.transform(v)
    if v.shape[0] != model.centroids.shape[1]:
        raise ValueError(
            f"dimension mismatch: vector has {v.shape[0]} features, model has {model.centroids.shape[1]}"
        )
    d2 = ((model.centroids - v) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def silhouette_score(
    vectors: np.ndarray,
    assignments: np.ndarray,
    subsample_cap: int = SILHOUETTE_SUBSAMPLE_CAP,
    seed: int = 0,
) -> float:
    """Mean silhouette over points: (b - a) / max(a, b).

    a is the mean intra-cluster distance excluding self; b is the
    smallest mean distance to any other cluster. Points in singleton
    clusters score 0. Above ``subsample_cap`` points a seeded uniform
    subsample is scored instead of the full set.
    """
    x = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(assignments)
    if x.shape[0] != labels.shape[0]:
        raise ValueError("vectors and assignments length mismatch")
    if np.unique(labels).size < 2:
        raise ValueError("silhouette undefined for k=1")

    n = x.shape[0]
    if n > subsample_cap:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(n, size=subsample_cap, replace=False))
        x, labels = x[keep], labels[keep]
        n = subsample_cap
        if np.unique(labels).size < 2:
            raise ValueError("silhouette undefined for k=1 (after subsampling)")

    uniq, dense = np.unique(labels, return_inverse=True)
    k = uniq.size
    onehot = np.zeros((n, k), dtype=np.float64)
    onehot[np.arange(n), dense] = 1.0
    counts = onehot.sum(axis=0)

    scores = np.empty(n, dtype=np.float64)
    chunk = 512
    for start in range(0, n, chunk):
        rows = x[start : start + chunk]
        dists = np.sqrt(np.maximum(_sq_dists(rows, x), 0.0))  # (m, n)
        sums = dists @ onehot  # (m, k) sum of distances into each cluster
        m = rows.shape[0]
        own = dense[start : start + m]
        own_count = counts[own]
        for i in range(m):
            c = own[i]
            if own_count[i] <= 1:
                scores[start + i] = 0.0
                continue
            a = sums[i, c] / (own_count[i] - 1)  # exclude self (distance 0)
            other = np.delete(sums[i] / counts, c)
            b = other.min()
            denom = max(a, b)
            scores[start + i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def select_k(
    vectors: np.ndarray,
    k_min: int,
    k_max: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    rel_tol: float = DEFAULT_REL_TOL,
    modality: str = "visual",
    feature_names: list[str] | None = None,
) -> tuple[int, ClusterModel]:
    """Fit each k in [k_min, k_max] with the same seed; keep the best silhouette.

    Silhouette ties break toward the smaller k.
    """
    if not 2 <= k_min <= k_max:
        raise ValueError(f"need 2 <= k_min <= k_max, got [{k_min}, {k_max}]")
    best: tuple[float, int, ClusterModel] | None = None
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(
            vectors, k, seed, max_iter, rel_tol, modality=modality, feature_names=feature_names
        )
        score = silhouette_score(vectors, model.assignments_, seed=seed)
        model.silhouette = score
        if best is None or score > best[0]:
            best = (score, k, model)
    return best[1], best[2]
