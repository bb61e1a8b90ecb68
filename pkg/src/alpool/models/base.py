"""Shared pieces of the multi-label classifiers."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

# probability emitted for a label never (or always) seen positive in training
CONSTANT_NEGATIVE = 0.01
CONSTANT_POSITIVE = 0.99


def check_X(X, n_features=None):
    """Validate a feature matrix; 1-D input is read as a single row."""
    if isinstance(X, np.ndarray) and X.ndim == 1:
        X = X[None, :]
    if sp.issparse(X) and X.ndim == 1:
        X = sp.csr_matrix(X)
    X = check_array(X, accept_sparse="csr", dtype=np.float64, ensure_min_samples=0)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(
            f"dimension mismatch: X has {X.shape[1]} features, model expects {n_features}"
        )
    return X


def check_XY(X, Y):
    X = check_X(X)
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if Y.shape[0] != X.shape[0]:
        raise ValueError(
            f"dimension mismatch: {X.shape[0]} rows in X but {Y.shape[0]} label vectors"
        )
    if not np.isin(Y, (0, 1)).all():
        raise ValueError("label vectors must be binary")
    return X, Y.astype(np.float64)


def constant_columns(Y) -> np.ndarray:
    """Per label: NaN if trainable, else the constant probability to emit."""
    pos = Y.sum(axis=0)
    const = np.full(Y.shape[1], np.nan)
    const[pos == 0] = CONSTANT_NEGATIVE
    const[pos == Y.shape[0]] = CONSTANT_POSITIVE
    return const


class MultiLabelClassifier(ClassifierMixin, BaseEstimator):
    """Base for estimators that emit one independent probability per label."""

    def predict_proba(self, X):
        check_is_fitted(self, "constant_")
        X = check_X(X, self.n_features_in_)
        P = self._raw_proba(X)
        fixed = ~np.isnan(self.constant_)
        P[:, fixed] = self.constant_[fixed]
        return P

    def predict(self, X, threshold=0.5):
        if not 0.0 < threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        return (self.predict_proba(X) >= threshold).astype(np.int8)

    def score(self, X, Y, threshold=0.5):
        from ..metrics import confusion, micro_prf

        return micro_prf(confusion(self.predict(X, threshold), Y))[2]

    def _more_tags(self):
        return {"multilabel": True}
