"""Uncertainty scores and batch selectors for pool-based active learning.

All selectors maximize a "higher = more uncertain" score. Least confidence
is therefore reoriented as ``0.5 - |0.5 - p|`` before aggregation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterModel, nearest_centroids

__all__ = [
    "STRATEGY_NAMES",
    "StrategySpec",
    "aggregate",
    "binary_entropy",
    "lc_raw",
    "lc_uncertainty",
    "parse_strategy",
    "score_pool",
    "select_batch",
    "select_cluster",
    "select_random",
    "select_two_stage",
    "select_uncertainty",
    "select_wum",
    "two_stage_candidates",
]

CLUSTER_K_PRESETS = (2, 5, 10)
_ENTROPY_CLAMP = 1e-12

STRATEGY_NAMES = (
    ("random",)
    + tuple(f"{m}_{a}" for m in ("be", "lc") for a in ("mean", "mode"))
    + tuple(f"{m}_{a}_ts" for m in ("be", "lc") for a in ("mean", "mode"))
    + tuple(f"{m}_{a}_w" for m in ("be", "lc") for a in ("mean", "mode"))
    + tuple(f"kmeans_{p}{k}" for p in "rcb" for k in CLUSTER_K_PRESETS)
)

_PICKS = {"r": "random", "c": "center", "b": "border"}
_MEASURES = {"be": "entropy", "lc": "lc"}
_UNC_RE = re.compile(r"^(be|lc)_(mean|mode)(?:_(ts|w))?$")
_KM_RE = re.compile(r"^kmeans_([rcb])(\d+)$")


@dataclass(frozen=True)
class StrategySpec:
    family: str
    measure: str | None = None
    aggregation: str | None = None
    cluster_k: int | None = None
    cluster_pick: str | None = None
    ts_candidates_per_cluster: int = 50

    @property
    def needs_model(self) -> bool:
        return self.family in ("uncertainty", "two_stage", "wum")

    @property
    def needs_clusters(self) -> bool:
        return self.family in ("cluster", "two_stage", "wum")


def parse_strategy(name: str, hybrid_k: int = 10, ts_candidates_per_cluster: int = 50) -> StrategySpec:
    """Map a strategy string (e.g. ``lc_mode_ts``, ``kmeans_r10``) to a spec.

    ``hybrid_k`` is the cluster count used by the two-stage and weighted
    variants, whose names carry no k.
    """
    if name == "random":
        return StrategySpec("random")
    m = _UNC_RE.match(name)
    if m:
        measure, agg, suffix = m.groups()
        family = {None: "uncertainty", "ts": "two_stage", "w": "wum"}[suffix]
        return StrategySpec(
            family,
            measure=_MEASURES[measure],
            aggregation=agg,
            cluster_k=hybrid_k if suffix else None,
            ts_candidates_per_cluster=ts_candidates_per_cluster,
        )
    m = _KM_RE.match(name)
    if m and int(m.group(2)) in CLUSTER_K_PRESETS:
        return StrategySpec("cluster", cluster_k=int(m.group(2)), cluster_pick=_PICKS[m.group(1)])
    raise ValueError(
        f"unknown strategy {name!r}; accepted: {', '.join(STRATEGY_NAMES)}"
    )


def _check_prob(p):
    arr = np.asarray(p, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    return arr


def _scalar_or_array(out, p):
    return float(out) if np.ndim(p) == 0 else out


def lc_raw(p):
    """Least confidence ``|0.5 - p|``; 0 is most uncertain."""
    arr = _check_prob(p)
    return _scalar_or_array(np.abs(0.5 - arr), p)


def lc_uncertainty(p):
    """``0.5 - lc_raw(p)``, so that larger means more uncertain."""
    arr = _check_prob(p)
    return _scalar_or_array(0.5 - np.abs(0.5 - arr), p)


def binary_entropy(p):
    """Entropy in bits, with ``p`` clamped to ``[1e-12, 1 - 1e-12]``."""
    arr = np.clip(_check_prob(p), _ENTROPY_CLAMP, 1.0 - _ENTROPY_CLAMP)
    h = -arr * np.log2(arr) - (1.0 - arr) * np.log2(1.0 - arr)
    return _scalar_or_array(h, p)


_MEASURE_FNS = {"lc": lc_uncertainty, "entropy": binary_entropy}


def _mode_rows(S: np.ndarray) -> np.ndarray:
    # 2-decimal bins; frequency ties go to the higher bin
    bins = np.floor(S * 100.0 + 0.5).astype(np.int64)
    out = np.empty(S.shape[0])
    for i, row in enumerate(bins):
        values, counts = np.unique(row, return_counts=True)
        best = np.flatnonzero(counts == counts.max())
        out[i] = values[best[-1]] / 100.0
    return out


def aggregate(per_label_scores, mode: str = "mean"):
    """Collapse per-label scores (last axis) with ``mean`` or ``mode``."""
    S = np.asarray(per_label_scores, dtype=np.float64)
    if S.size == 0 or S.shape[-1] == 0:
        raise ValueError("cannot aggregate an empty score sequence")
    flat = S.reshape(-1, S.shape[-1])
    if mode == "mean":
        out = flat.mean(axis=1)
    elif mode == "mode":
        out = _mode_rows(flat)
    else:
        raise ValueError(f"unknown aggregation {mode!r}")
    return float(out[0]) if S.ndim == 1 else out.reshape(S.shape[:-1])


def score_pool(model, X_pool, measure: str, aggregation: str) -> np.ndarray:
    """Aggregated uncertainty of every row of ``X_pool``."""
    if X_pool.shape[0] == 0:
        return np.empty(0)
    P = model.predict_proba(X_pool)
    return aggregate(_MEASURE_FNS[measure](P), aggregation)


def _check_batch(batch, pool_size):
    if batch < 0:
        raise ValueError("batch must be non-negative")
    if batch > pool_size:
        raise ValueError(f"batch {batch} exceeds pool size {pool_size}")


def _top_by_score(scores, ids, batch):
    # descending score, ties by lowest id
    order = np.lexsort((ids, -scores))
    return [int(i) for i in ids[order[:batch]]]


def select_random(pool_unlabeled_ids, batch: int, rng_seed=None) -> list:
    ids = np.asarray(pool_unlabeled_ids, dtype=np.int64)
    _check_batch(batch, len(ids))
    rng = np.random.default_rng(rng_seed)
    return [int(i) for i in rng.choice(ids, size=batch, replace=False)] if batch else []


def select_uncertainty(model, X_pool, pool_ids, batch: int, measure="entropy", aggregation="mean") -> list:
    ids = np.asarray(pool_ids, dtype=np.int64)
    _check_batch(batch, len(ids))
    if batch == 0:
        return []
    return _top_by_score(score_pool(model, X_pool, measure, aggregation), ids, batch)


def _cluster_members(cluster_model, X_pool, ids):
    labels, dist = nearest_centroids(X_pool, cluster_model)
    members = {}
    for j in range(cluster_model.k):
        mask = labels == j
        members[j] = (ids[mask], dist[mask])
    return members


def select_cluster(
    cluster_model: ClusterModel, X_pool, pool_ids, batch: int, pick: str = "random", rng_seed=None
) -> list:
    """Round-robin picks over clusters, largest current cluster first.

    Within a cluster: ``random`` draws uniformly, ``center`` takes the points
    nearest the centroid, ``border`` the farthest (ties by lowest id).
    """
    ids = np.asarray(pool_ids, dtype=np.int64)
    _check_batch(batch, len(ids))
    if pick not in ("random", "center", "border"):
        raise ValueError(f"unknown cluster pick {pick!r}")
    if len(ids) == 0:
        if batch == 0:
            return []
        raise ValueError("all clusters are empty")
    members = _cluster_members(cluster_model, X_pool, ids)
    rng = np.random.default_rng(rng_seed)
    queues = {}
    for j, (m_ids, m_dist) in members.items():
        if pick == "random":
            queues[j] = list(rng.permutation(np.sort(m_ids)))
        elif pick == "center":
            queues[j] = list(m_ids[np.lexsort((m_ids, m_dist))])
        else:
            queues[j] = list(m_ids[np.lexsort((m_ids, -m_dist))])
    order = sorted(queues, key=lambda j: (-len(queues[j]), j))
    picked = []
    pos = {j: 0 for j in order}
    while len(picked) < batch:
        for j in order:
            if len(picked) == batch:
                break
            if pos[j] < len(queues[j]):
                picked.append(int(queues[j][pos[j]]))
                pos[j] += 1
    return picked


def two_stage_candidates(cluster_model, X_pool, pool_ids, m_per_cluster: int, rng_seed=None) -> np.ndarray:
    """Stage one: up to ``m_per_cluster`` uniform draws from every cluster.

    Returns positions into ``pool_ids`` (and rows of ``X_pool``), sorted.
    """
    ids = np.asarray(pool_ids, dtype=np.int64)
    labels, _ = nearest_centroids(X_pool, cluster_model)
    rng = np.random.default_rng(rng_seed)
    chosen = []
    for j in range(cluster_model.k):
        rows = np.flatnonzero(labels == j)
        if len(rows) > m_per_cluster:
            rows = rng.choice(rows, size=m_per_cluster, replace=False)
        chosen.append(rows)
    return np.sort(np.concatenate(chosen)) if chosen else np.empty(0, dtype=np.int64)


def select_two_stage(
    cluster_model, model, X_pool, pool_ids, batch: int, measure="entropy", aggregation="mean",
    m_per_cluster: int = 50, rng_seed=None,
) -> list:
    ids = np.asarray(pool_ids, dtype=np.int64)
    _check_batch(batch, len(ids))
    if batch == 0:
        return []
    rows = two_stage_candidates(cluster_model, X_pool, ids, m_per_cluster, rng_seed)
    if len(rows) < batch:
        raise ValueError(
            f"two-stage candidate set ({len(rows)}) smaller than batch ({batch})"
        )
    return select_uncertainty(model, X_pool[rows], ids[rows], batch, measure, aggregation)


def select_wum(
    cluster_model, model, X_pool, pool_ids, batch: int, measure="entropy", aggregation="mean"
) -> list:
    """Uncertainty weighted by ``1 / (1 + distance to the nearest centroid)``."""
    ids = np.asarray(pool_ids, dtype=np.int64)
    _check_batch(batch, len(ids))
    if batch == 0:
        return []
    u = score_pool(model, X_pool, measure, aggregation)
    _, dist = nearest_centroids(X_pool, cluster_model)
    return _top_by_score(u / (1.0 + dist), ids, batch)


def select_batch(
    spec: StrategySpec, *, pool_ids, batch: int, X_pool=None, model=None, cluster_model=None,
    rng_seed=None,
) -> list:
    """Dispatch to the selector for ``spec.family``."""
    if spec.needs_model and model is None:
        raise ValueError(f"strategy family {spec.family!r} needs a trained model")
    if spec.needs_clusters and cluster_model is None:
        raise ValueError(f"strategy family {spec.family!r} needs a cluster model")
    if spec.family == "random":
        return select_random(pool_ids, batch, rng_seed)
    if spec.family == "uncertainty":
        return select_uncertainty(model, X_pool, pool_ids, batch, spec.measure, spec.aggregation)
    if spec.family == "cluster":
        return select_cluster(cluster_model, X_pool, pool_ids, batch, spec.cluster_pick, rng_seed)
    if spec.family == "two_stage":
        return select_two_stage(
            cluster_model, model, X_pool, pool_ids, batch, spec.measure, spec.aggregation,
            spec.ts_candidates_per_cluster, rng_seed,
        )
    if spec.family == "wum":
        return select_wum(cluster_model, model, X_pool, pool_ids, batch, spec.measure, spec.aggregation)
    raise ValueError(f"unknown strategy family {spec.family!r}")
