"""Per-label random forests of Gini decision trees over sparse rows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .base import MultiLabelClassifier, check_XY, constant_columns

_LEAF = -1
_PREDICT_CHUNK = 2048


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf.

    ``value`` is the fraction of positive training samples reaching the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] != _LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    @classmethod
    def leaf(cls, value: float) -> "Tree":
        return cls(
            np.array([_LEAF]), np.zeros(1), np.array([_LEAF]), np.array([_LEAF]),
            np.array([float(value)]),
        )


def best_gini_split(D: np.ndarray, y: np.ndarray):
    """Best ``(column, threshold, weighted_gini)`` over the columns of ``D``.

    Returns ``None`` when no column has two distinct values.
    """
    n = D.shape[0]
    order = np.argsort(D, axis=0, kind="stable")
    Ds = np.take_along_axis(D, order, axis=0)
    ys = y[order]
    pos = ys[:, 0].sum()
    left_pos = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    right_pos = pos - left_pos
    # n_l * gini_l = n_l - (p_l^2 + q_l^2) / n_l, likewise on the right
    weighted = (
        n_left - (left_pos**2 + (n_left - left_pos) ** 2) / n_left
        + n_right - (right_pos**2 + (n_right - right_pos) ** 2) / n_right
    ) / n
    weighted[~(Ds[1:] > Ds[:-1])] = np.inf
    flat = int(np.argmin(weighted))
    i, c = divmod(flat, D.shape[1])
    if not np.isfinite(weighted[i, c]):
        return None
    lo, hi = Ds[i, c], Ds[i + 1, c]
    thr = lo + (hi - lo) / 2.0
    if not thr < hi:
        thr = lo
    return c, thr, float(weighted[i, c])


def build_tree(X, y, rng, max_depth=500, min_samples_split=2, max_features=None) -> Tree:
    """Grow one tree on a bootstrap sample of the rows of CSR matrix ``X``.

    At each node ``max_features`` candidates are drawn from the features that
    are nonzero somewhere in the node; if none of them separates the node the
    remaining supported features are tried before declaring a leaf.
    """
    n, V = X.shape
    m = max_features or math.ceil(math.sqrt(V))
    sample = rng.integers(0, n, size=n)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for lst, v in ((feature, _LEAF), (threshold, 0.0), (left, _LEAF), (right, _LEAF), (value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    stack = [(new_node(), sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        yi = y[idx]
        n_node = len(idx)
        pos = yi.sum()
        value[node] = pos / n_node
        if pos == 0 or pos == n_node or depth >= max_depth or n_node < min_samples_split:
            continue
        sub = X[idx]
        support = np.unique(sub.indices)
        if len(support) == 0:
            continue
        feats = rng.choice(support, size=min(m, len(support)), replace=False)
        split = best_gini_split(sub[:, feats].toarray(), yi)
        if split is None and len(feats) < len(support):
            feats = np.setdiff1d(support, feats)
            split = best_gini_split(sub[:, feats].toarray(), yi)
        if split is None:
            continue
        c, thr, _ = split
        col = sub[:, [feats[c]]].toarray().ravel()
        go_left = col <= thr
        feature[node] = int(feats[c])
        threshold[node] = float(thr)
        l, r = new_node(), new_node()
        left[node], right[node] = l, r
        stack.append((r, idx[~go_left], depth + 1))
        stack.append((l, idx[go_left], depth + 1))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value),
    )


def tree_leaf_values(tree: Tree, Xd: np.ndarray, col_of: np.ndarray) -> np.ndarray:
    """Leaf ``value`` per row; ``Xd[:, col_of[f]]`` holds feature ``f``."""
    n = Xd.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    active = tree.feature[node] != _LEAF
    while active.any():
        r, nd = rows[active], node[active]
        x = Xd[r, col_of[tree.feature[nd]]]
        node[r] = np.where(x <= tree.threshold[nd], tree.left[nd], tree.right[nd])
        active = tree.feature[node] != _LEAF
    return tree.value[node]


class RandomForestOVR(MultiLabelClassifier):
    """One forest of Gini trees per label; probability = fraction of positive votes.

    Parameters
    ----------
    n_estimators : int, default=30
    max_depth : int, default=500
    min_samples_split : int, default=2
    max_features : int or None, default=None
        Candidate features per split; ``None`` means ``ceil(sqrt(V))``.
    random_state : int or None, default=None
    """

    def __init__(
        self, n_estimators=30, max_depth=500, min_samples_split=2, max_features=None,
        random_state=None,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, Y):
        X, Y = check_XY(X, Y)
        X = sp.csr_matrix(X)
        self.constant_ = constant_columns(Y)
        self.forests_ = []
        seeds = np.random.SeedSequence(self.random_state).spawn(Y.shape[1])
        for j in range(Y.shape[1]):
            if not np.isnan(self.constant_[j]):
                self.forests_.append([])
                continue
            rng = np.random.default_rng(seeds[j])
            self.forests_.append([
                build_tree(X, Y[:, j], rng, self.max_depth, self.min_samples_split,
                           self.max_features)
                for _ in range(self.n_estimators)
            ])
        self.n_features_in_ = X.shape[1]
        self.n_labels_ = Y.shape[1]
        return self

    def _raw_proba(self, X):
        X = sp.csr_matrix(X)
        used = np.unique(np.concatenate(
            [t.feature for forest in self.forests_ for t in forest] + [np.array([_LEAF])]
        ))
        used = used[used != _LEAF]
        col_of = np.zeros(self.n_features_in_ + 1, dtype=np.int64)
        col_of[used] = np.arange(len(used))
        P = np.zeros((X.shape[0], self.n_labels_))
        for s in range(0, X.shape[0], _PREDICT_CHUNK):
            Xd = X[s:s + _PREDICT_CHUNK][:, used].toarray()
            for j, forest in enumerate(self.forests_):
                if not forest:
                    continue
                votes = sum((tree_leaf_values(t, Xd, col_of) > 0.5).astype(np.float64)
                            for t in forest)
                P[s:s + _PREDICT_CHUNK, j] = votes / len(forest)
        return P
