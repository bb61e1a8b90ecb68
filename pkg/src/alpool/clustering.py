"""kmeans++ seeding and Lloyd iterations over sparse rows.

Points stay sparse, centroids are dense. Squared distances are computed as
``||x||^2 - 2<x, c> + ||c||^2`` with cached norms and clipped at zero.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

__all__ = [
    "ClusterModel",
    "KMeansPlusPlus",
    "assign",
    "distance_to_centroid",
    "dump_cluster_model",
    "kmeans_fit",
    "kmeanspp_seed",
    "load_cluster_model",
]

_CHUNK = 1024


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray
    assignment: np.ndarray
    within_cluster_sse: float
    sse_history: tuple = ()
    n_iter: int = 0
    centroid_sq_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.centroids, dtype=np.float64)
        object.__setattr__(self, "centroids", c)
        object.__setattr__(self, "centroid_sq_norms", np.einsum("ij,ij->i", c, c))

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dimension(self) -> int:
        return self.centroids.shape[1]


def _as_rows(X):
    if isinstance(X, np.ndarray) and X.ndim == 1:
        X = X[None, :]
    if sp.issparse(X):
        return sp.csr_matrix(X, dtype=np.float64)
    return check_array(X, dtype=np.float64)


def _row_sq_norms(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", X, X)


def _sq_dist_block(X, centroids, c_norms, x_norms):
    d2 = x_norms[:, None] - 2.0 * np.asarray(X @ centroids.T) + c_norms[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def _sq_distances(X, centroids, c_norms=None, x_norms=None, n_jobs=1):
    """Dense ``(n, k)`` squared distances, chunked over rows.

    Each row's value is computed by the same kernel regardless of chunking,
    so results do not depend on ``n_jobs``.
    """
    if c_norms is None:
        c_norms = np.einsum("ij,ij->i", centroids, centroids)
    if x_norms is None:
        x_norms = _row_sq_norms(X)
    n = X.shape[0]
    bounds = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]
    out = np.empty((n, centroids.shape[0]))

    def work(b):
        s, e = b
        out[s:e] = _sq_dist_block(X[s:e], centroids, c_norms, x_norms[s:e])

    if n_jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(work, bounds))
    else:
        for b in bounds:
            work(b)
    return out


def _dense_row(X, i) -> np.ndarray:
    if sp.issparse(X):
        return X[i].toarray().ravel()
    return np.array(X[i], dtype=np.float64)


def _distinct_groups(X) -> np.ndarray:
    """Group id per row; identical rows share a group."""
    keys = {}
    groups = np.empty(X.shape[0], dtype=np.int64)
    if sp.issparse(X):
        X = sp.csr_matrix(X)
        X.sum_duplicates()
        X.eliminate_zeros()
        for i in range(X.shape[0]):
            s, e = X.indptr[i], X.indptr[i + 1]
            key = (X.indices[s:e].tobytes(), X.data[s:e].tobytes())
            groups[i] = keys.setdefault(key, len(keys))
    else:
        for i, row in enumerate(X):
            groups[i] = keys.setdefault((row + 0.0).tobytes(), len(keys))
    return groups


def kmeanspp_seed(X, k: int, rng_seed=None, *, return_indices=False):
    """D^2-weighted seeding: first centre uniform, later ones by squared distance."""
    X = _as_rows(X)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    groups = _distinct_groups(X)
    if len(np.unique(groups)) < k:
        raise ValueError("k exceeds distinct points")
    rng = np.random.default_rng(rng_seed)
    x_norms = _row_sq_norms(X)
    chosen = [int(rng.integers(n))]
    closest = _sq_distances(X, _dense_row(X, chosen[0])[None, :], x_norms=x_norms).ravel()
    closest[groups == groups[chosen[0]]] = 0.0
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # only reachable when the clipped distances underflow
            idx = int(np.flatnonzero(~np.isin(groups, groups[chosen]))[0])
        chosen.append(idx)
        d_new = _sq_distances(X, _dense_row(X, idx)[None, :], x_norms=x_norms).ravel()
        d_new[groups == groups[idx]] = 0.0
        np.minimum(closest, d_new, out=closest)
    centroids = np.vstack([_dense_row(X, i) for i in chosen])
    if return_indices:
        return centroids, np.array(chosen)
    return centroids


def _update_centroids(X, labels, d2, k):
    n = X.shape[0]
    member = sp.csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(k, n))
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    sums = member @ X
    sums = sums.toarray() if sp.issparse(sums) else np.asarray(sums, dtype=np.float64)
    centroids = np.zeros_like(sums)
    nonempty = counts > 0
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    empty = np.flatnonzero(~nonempty)
    if len(empty):
        # reseed each empty cluster at the point farthest from its centroid
        own = d2[np.arange(n), labels].copy()
        for j in empty:
            far = int(np.argmax(own))
            centroids[j] = _dense_row(X, far)
            own[far] = -1.0
    return centroids


def _exact_sq_dist(X, centroids, labels) -> np.ndarray:
    """``||x - c||^2`` to each row's own centroid, by direct subtraction.

    The norm expansion used for assignment leaves rounding residue, so a
    point sitting on its centroid would report a distance near 1e-8.
    """
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], _CHUNK):
        block = X[s:s + _CHUNK]
        block = block.toarray() if sp.issparse(block) else np.asarray(block)
        diff = centroids[labels[s:s + _CHUNK]] - block
        out[s:s + _CHUNK] = np.einsum("ij,ij->i", diff, diff)
    return out


def assign(X, centroids, c_norms=None, n_jobs=1):
    """Nearest centroid (lowest id on ties) and squared distance for each row."""
    d2 = _sq_distances(X, centroids, c_norms=c_norms, n_jobs=n_jobs)
    labels = np.argmin(d2, axis=1)
    return labels, d2


def kmeans_fit(
    X, k: int, rng_seed=None, max_iter: int = 100, tol: float = 1e-4, n_jobs: int = 1
) -> ClusterModel:
    """Lloyd iterations from :func:`kmeanspp_seed`.

    Stops when the largest centroid displacement drops below ``tol`` or after
    ``max_iter`` updates. ``sse_history`` holds the SSE after every
    assignment step, the final one included.
    """
    X = _as_rows(X)
    centroids = kmeanspp_seed(X, k, rng_seed)
    n = X.shape[0]
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels, d2 = assign(X, centroids, n_jobs=n_jobs)
        history.append(float(d2[np.arange(n), labels].sum()))
        new = _update_centroids(X, labels, d2, k)
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        if shift < tol:
            break
    labels, d2 = assign(X, centroids, n_jobs=n_jobs)
    sse = float(d2[np.arange(n), labels].sum())
    history.append(sse)
    return ClusterModel(centroids, labels, sse, tuple(history), n_iter)


def distance_to_centroid(x, model: ClusterModel):
    """Return ``(cluster id, euclidean distance)`` of the nearest centroid."""
    x = _as_rows(x)
    if x.shape[1] != model.dimension:
        raise ValueError(
            f"dimension mismatch: vector has {x.shape[1]}, model has {model.dimension}"
        )
    if x.shape[0] != 1:
        raise ValueError("expected a single row")
    labels, _ = assign(x, model.centroids, model.centroid_sq_norms)
    j = int(labels[0])
    return j, float(np.sqrt(_exact_sq_dist(x, model.centroids, labels)[0]))


def nearest_centroids(X, model: ClusterModel, n_jobs=1):
    """Vectorized :func:`distance_to_centroid` over all rows of ``X``."""
    X = _as_rows(X)
    if X.shape[1] != model.dimension:
        raise ValueError(
            f"dimension mismatch: rows have {X.shape[1]}, model has {model.dimension}"
        )
    labels, _ = assign(X, model.centroids, model.centroid_sq_norms, n_jobs=n_jobs)
    return labels, np.sqrt(_exact_sq_dist(X, model.centroids, labels))


def dump_cluster_model(model: ClusterModel, path) -> None:
    """Text dump: header line, then ``cluster<TAB>index<TAB>value`` nonzeros."""
    lines = [f"k={model.k}\tdim={model.dimension}\tsse={float(model.within_cluster_sse)!r}"]
    for j, row in enumerate(model.centroids):
        for i in np.flatnonzero(row):
            lines.append(f"{j}\t{i}\t{float(row[i])!r}")
    lines.append("assignment\t" + ",".join(str(int(a)) for a in model.assignment))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_cluster_model(path) -> ClusterModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = dict(part.split("=") for part in lines[0].split("\t"))
    c = np.zeros((int(header["k"]), int(header["dim"])))
    assignment = np.empty(0, dtype=np.int64)
    for line in lines[1:]:
        if line.startswith("assignment\t"):
            body = line.split("\t", 1)[1]
            assignment = np.array([int(a) for a in body.split(",") if a], dtype=np.int64)
            continue
        j, i, v = line.split("\t")
        c[int(j), int(i)] = float(v)
    return ClusterModel(c, assignment, float(header["sse"]))


class KMeansPlusPlus(ClusterMixin, TransformerMixin, BaseEstimator):
    """Euclidean k-means with kmeans++ seeding for sparse or dense rows.

    Parameters
    ----------
    n_clusters : int, default=10
    max_iter : int, default=100
    tol : float, default=1e-4
        Threshold on the largest centroid displacement.
    random_state : int or None, default=None
    n_jobs : int, default=1
        Threads used for distance computation; never changes the result.
    """

    def __init__(self, n_clusters=10, max_iter=100, tol=1e-4, random_state=None, n_jobs=1):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X, accept_sparse="csr", dtype=np.float64)
        self.model_ = kmeans_fit(
            X, self.n_clusters, self.random_state, self.max_iter, self.tol, self.n_jobs
        )
        self.cluster_centers_ = self.model_.centroids
        self.labels_ = self.model_.assignment
        self.inertia_ = self.model_.within_cluster_sse
        self.n_iter_ = self.model_.n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return nearest_centroids(X, self.model_, self.n_jobs)[0]

    def transform(self, X):
        check_is_fitted(self, "model_")
        X = _as_rows(X)
        return np.sqrt(_sq_distances(X, self.model_.centroids, self.model_.centroid_sq_norms))
