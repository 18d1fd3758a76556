"""K-Means over message embeddings, quality metrics, and k selection.

The fit is deliberately self-contained: k-means++ seeding, Lloyd iterations,
best of several restarts.  All reductions run through numpy's pairwise sums
in index order and distances avoid BLAS matrix products, so a fixed seed
gives bit-identical assignments across runs and platforms.  An iteration that
fails to improve inertia (possible only through float rounding, never in
exact arithmetic) terminates the restart, which keeps the recorded inertia
history non-increasing.

Inputs are used raw: the sentence-embedding models this feeds on emit
unit-norm vectors, and the file reader warns when that does not hold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class ClusterError(ValueError):
    pass


class KTooLarge(ClusterError):
    def __init__(self, k: int, n: int):
        super().__init__(f"k={k} exceeds the number of points ({n})")


class SingleCluster(ClusterError):
    def __init__(self):
        super().__init__("silhouette/CH/DB are undefined for a single cluster")


class EmptyCluster(ClusterError):
    def __init__(self, cluster: int):
        super().__init__(f"cluster {cluster} is empty")


class EmptyClusterDistance(ClusterError):
    def __init__(self):
        super().__init__("two clusters share an identical centroid; DB is undefined")


class EmbeddingFormatError(ClusterError):
    pass


@dataclass(frozen=True)
class EmbeddingSet:
    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", vec)
        if vec.ndim != 2 or vec.shape[1] < 2:
            raise ClusterError("vectors must be an N x D matrix with D >= 2")
        if len(self.ids) != vec.shape[0]:
            raise ClusterError("ids and vector rows are misaligned")
        if len(set(self.ids)) != len(self.ids):
            raise ClusterError("ids must be unique")
        if not np.isfinite(vec).all():
            raise ClusterError("vectors must be finite")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    seed: int
    iterations: int
    inertia_history: tuple[float, ...]
    repaired_clusters: int = 0
    degenerate: bool = False


@dataclass(frozen=True)
class MetricsRow:
    k: int
    inertia: float
    silhouette: float
    calinski_harabasz: float
    davies_bouldin: float

    def __post_init__(self):
        if not -1.0 <= self.silhouette <= 1.0:
            raise ClusterError(f"silhouette {self.silhouette} outside [-1, 1]")
        if self.calinski_harabasz < 0 or self.davies_bouldin < 0 or self.inertia < 0:
            raise ClusterError("inertia/CH/DB must be non-negative")


def _sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, one centroid at a time (no BLAS reductions)."""
    out = np.empty((X.shape[0], centers.shape[0]), dtype=np.float64)
    for j in range(centers.shape[0]):
        diff = X - centers[j]
        out[:, j] = np.sum(diff * diff, axis=1)
    return out


def _inertia(X: np.ndarray, centers: np.ndarray, labels: np.ndarray) -> float:
    diff = X - centers[labels]
    return float(np.sum(np.sum(diff * diff, axis=1)))


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[int(rng.integers(n))]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _repair_empty(X, centers, labels, dists, k) -> int:
    """Reseed each empty cluster at the point farthest from its assigned centroid.

    Only points from multi-member clusters are eligible, so a repair can never
    empty another cluster (pigeonhole guarantees a candidate while k <= n).
    """
    n = X.shape[0]
    repaired = 0
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return repaired
        j = int(empty[0])
        own = dists[np.arange(n), labels]
        eligible = np.where(counts[labels] > 1, own, -1.0)
        far = int(np.argmax(eligible))
        centers[j] = X[far]
        labels[far] = j
        dists[:, j] = np.sum((X - centers[j]) ** 2, axis=1)
        repaired += 1


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int, tol: float):
    n, k = X.shape[0], centers.shape[0]
    history: list[float] = []
    labels = np.zeros(n, dtype=np.int64)
    repaired = 0
    iterations = 0
    state = (centers, labels)
    for _ in range(max_iter):
        iterations += 1
        dists = _sq_dists(X, centers)
        labels = dists.argmin(axis=1)
        repaired += _repair_empty(X, centers, labels, dists, k)
        new_centers = np.empty_like(centers)
        for j in range(k):
            new_centers[j] = X[labels == j].mean(axis=0)
        shift = float(np.sqrt(np.max(np.sum((new_centers - centers) ** 2, axis=1))))
        inertia = _inertia(X, new_centers, labels)
        if history and inertia > history[-1]:
            # rounding floor: exact arithmetic cannot increase, so stop at the
            # last consistent (centers, labels) snapshot
            centers, labels = state
            break
        history.append(inertia)
        centers = new_centers
        state = (new_centers, labels)
        if shift < tol:
            break
    return centers, labels, history[-1], iterations, tuple(history), repaired


def kmeans_fit(X: EmbeddingSet, k: int, seed: int, max_iter: int = 300,
               tol: float = 1e-6, restarts: int = 10) -> ClusterModel:
    """Best-of-restarts Lloyd's algorithm; fully deterministic for a fixed seed."""
    data = X.vectors
    n = X.n
    if k < 1:
        raise ClusterError("k must be >= 1")
    if k > n:
        raise KTooLarge(k, n)
    degenerate = bool(k > 1 and np.all(data == data[0]))
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, k, r])
        centers = _kmeanspp(data, k, rng)
        fit = _lloyd(data, centers.copy(), max_iter, tol)
        if best is None or fit[2] < best[2]:
            best = fit
    centers, labels, inertia, iterations, history, repaired = best
    return ClusterModel(
        k=k, centroids=centers, assignments=labels, inertia=inertia,
        seed=seed, iterations=iterations, inertia_history=history,
        repaired_clusters=repaired, degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# quality metrics


def cluster_metrics(X: EmbeddingSet, model: ClusterModel) -> MetricsRow:
    """Silhouette, Calinski-Harabasz, and Davies-Bouldin for a fitted model.

    All three follow the textbook definitions over the final partition;
    singleton clusters contribute a silhouette term of 0.
    """
    data = X.vectors
    n, k = X.n, model.k
    if k < 2:
        raise SingleCluster()
    labels = np.asarray(model.assignments)
    counts = np.bincount(labels, minlength=k)
    if (counts == 0).any():
        raise EmptyCluster(int(np.flatnonzero(counts == 0)[0]))

    means = np.stack([data[labels == j].mean(axis=0) for j in range(k)])

    # pairwise Euclidean distances
    dmat = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        diff = data - data[i]
        dmat[i] = np.sqrt(np.sum(diff * diff, axis=1))

    sil_terms = np.zeros(n, dtype=np.float64)
    for i in range(n):
        own = labels[i]
        if counts[own] > 1:
            mask = labels == own
            a = dmat[i, mask].sum() / (counts[own] - 1)
            b = min(float(dmat[i, labels == j].mean()) for j in range(k) if j != own)
            denom = max(a, b)
            sil_terms[i] = 0.0 if denom == 0.0 else (b - a) / denom
    silhouette = float(sil_terms.mean())

    overall = data.mean(axis=0)
    within = sum(float(np.sum((data[labels == j] - means[j]) ** 2)) for j in range(k))
    between = sum(float(counts[j] * np.sum((means[j] - overall) ** 2)) for j in range(k))
    if within == 0.0:
        ch = math.inf
    else:
        ch = (between / (k - 1)) / (within / (n - k))

    sigma = np.array([
        float(np.mean(np.sqrt(np.sum((data[labels == j] - means[j]) ** 2, axis=1))))
        for j in range(k)
    ])
    db_terms = []
    for i in range(k):
        worst = 0.0
        for j in range(k):
            if j == i:
                continue
            dist = float(np.sqrt(np.sum((means[i] - means[j]) ** 2)))
            if dist == 0.0:
                raise EmptyClusterDistance()
            worst = max(worst, (sigma[i] + sigma[j]) / dist)
        db_terms.append(worst)
    db = float(np.mean(db_terms))

    return MetricsRow(k=k, inertia=model.inertia, silhouette=silhouette,
                      calinski_harabasz=ch, davies_bouldin=db)


# ---------------------------------------------------------------------------
# k selection


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[MetricsRow, ...]
    recommended_k: int
    elbow_k: int | None


def _dense_ranks(values, descending: bool) -> list[int]:
    order = sorted(set(values), reverse=descending)
    pos = {v: i for i, v in enumerate(order)}
    return [pos[v] for v in values]


def recommend_k(rows) -> SweepResult:
    """Rank-sum over (silhouette desc, CH desc, DB asc); ties go to smaller k."""
    rows = tuple(sorted(rows, key=lambda r: r.k))
    if not rows:
        raise ClusterError("no metrics rows to rank")
    ranks = [
        _dense_ranks([r.silhouette for r in rows], descending=True),
        _dense_ranks([r.calinski_harabasz for r in rows], descending=True),
        _dense_ranks([r.davies_bouldin for r in rows], descending=False),
    ]
    sums = [sum(col) for col in zip(*ranks)]
    best = min(range(len(rows)), key=lambda i: (sums[i], rows[i].k))

    elbow = None
    if len(rows) >= 3:
        curvature = [rows[i - 1].inertia - 2 * rows[i].inertia + rows[i + 1].inertia
                     for i in range(1, len(rows) - 1)]
        elbow = rows[1 + max(range(len(curvature)), key=lambda i: (curvature[i], -i))].k
    return SweepResult(rows=rows, recommended_k=rows[best].k, elbow_k=elbow)


def sweep_and_recommend(X: EmbeddingSet, k_min: int = 2, k_max: int = 100,
                        seed: int = 0, max_iter: int = 300, tol: float = 1e-6,
                        restarts: int = 10) -> SweepResult:
    if k_min < 2 or k_min > k_max:
        raise ClusterError("need 2 <= k_min <= k_max")
    if k_max > X.n:
        raise KTooLarge(k_max, X.n)
    rows = []
    for k in range(k_min, k_max + 1):
        model = kmeans_fit(X, k, seed=seed, max_iter=max_iter, tol=tol, restarts=restarts)
        rows.append(cluster_metrics(X, model))
    return recommend_k(rows)


# ---------------------------------------------------------------------------
# embedding file interchange


def read_embeddings(fh) -> tuple[EmbeddingSet, list[str]]:
    """Parse line-delimited ``{"msg_id":..., "vec":[...]}`` records.

    Structural problems raise; soft oddities (non-unit norms) come back as
    warnings.
    """
    ids: list[str] = []
    rows: list[list[float]] = []
    dim = None
    for line_no, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise EmbeddingFormatError(f"line {line_no}: invalid JSON: {e.msg}") from e
        if not isinstance(obj, dict) or set(obj) != {"msg_id", "vec"}:
            raise EmbeddingFormatError(f"line {line_no}: record must have msg_id and vec")
        vec = obj["vec"]
        if (not isinstance(vec, list) or len(vec) < 2
                or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vec)):
            raise EmbeddingFormatError(f"line {line_no}: vec must be >= 2 finite numbers")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise EmbeddingFormatError(f"line {line_no}: dimension {len(vec)} != {dim}")
        ids.append(str(obj["msg_id"]))
        rows.append([float(v) for v in vec])
    if not rows:
        raise EmbeddingFormatError("no embedding records found")
    emb = EmbeddingSet(tuple(ids), np.array(rows, dtype=np.float64))
    warnings = []
    norms = np.sqrt(np.sum(emb.vectors ** 2, axis=1))
    if float(np.max(np.abs(norms - 1.0))) > 1e-2:
        warnings.append("embedding vectors are not unit-norm; distances will be scale-sensitive")
    return emb, warnings


def write_embeddings(ids, vectors, fh) -> int:
    vec = np.asarray(vectors, dtype=np.float64)
    if not np.isfinite(vec).all():
        raise EmbeddingFormatError("refusing to write non-finite vectors")
    n = 0
    for msg_id, row in zip(ids, vec):
        fh.write(json.dumps({"msg_id": msg_id, "vec": [float(v) for v in row]},
                            separators=(",", ":")) + "\n")
        n += 1
    return n
