"""One-vs-rest L2-regularized logistic regression trained with L-BFGS."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from ._lbfgs import lbfgs
from .base import MultiLabelClassifier, check_XY, constant_columns


def binary_objective(w, X, y, alpha):
    """Summed log-loss plus ``alpha/2 * ||coef||^2`` for one label.

    ``w`` packs the coefficients followed by the intercept (not penalized).
    """
    coef, b = w[:-1], w[-1]
    z = X @ coef + b
    loss = float(np.sum(np.logaddexp(0.0, z) - y * z)) + 0.5 * alpha * float(coef @ coef)
    r = expit(z) - y
    grad = np.empty_like(w)
    grad[:-1] = X.T @ r + alpha * coef
    grad[-1] = r.sum()
    return loss, grad


def loss_and_gradient(params, X, Y, alpha=1.0):
    """Objective summed over labels; ``params`` has shape ``(k, V + 1)``."""
    X, Y = check_XY(X, Y)
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (Y.shape[1], X.shape[1] + 1):
        raise ValueError(
            f"parameter shape {params.shape} does not match ({Y.shape[1]}, {X.shape[1] + 1})"
        )
    total = 0.0
    grad = np.empty_like(params)
    for j in range(Y.shape[1]):
        f, g = binary_objective(params[j], X, Y[:, j], alpha)
        total += f
        grad[j] = g
    return total, grad


class LogisticRegressionOVR(MultiLabelClassifier):
    """Per-label logistic regression.

    Parameters
    ----------
    alpha : float, default=1.0
        L2 penalty on the coefficients of each label.
    memory : int, default=10
        Number of curvature pairs kept by L-BFGS.
    max_iter : int, default=200
    gtol : float, default=1e-6
        Stop when the gradient 2-norm falls below this value.
    random_state : ignored
        Present so every model kind shares the same constructor surface.
    """

    def __init__(self, alpha=1.0, memory=10, max_iter=200, gtol=1e-6, random_state=None):
        self.alpha = alpha
        self.memory = memory
        self.max_iter = max_iter
        self.gtol = gtol
        self.random_state = random_state

    def fit(self, X, Y):
        X, Y = check_XY(X, Y)
        n, V = X.shape
        k = Y.shape[1]
        self.constant_ = constant_columns(Y)
        self.coef_ = np.zeros((k, V))
        self.intercept_ = np.zeros(k)
        self.n_iter_ = np.zeros(k, dtype=np.int64)
        self.loss_history_ = [[] for _ in range(k)]
        for j in np.flatnonzero(np.isnan(self.constant_)):
            y = Y[:, j]
            res = lbfgs(
                lambda w: binary_objective(w, X, y, self.alpha),
                np.zeros(V + 1),
                memory=self.memory,
                max_iter=self.max_iter,
                gtol=self.gtol,
            )
            self.coef_[j] = res.x[:-1]
            self.intercept_[j] = res.x[-1]
            self.n_iter_[j] = res.n_iter
            self.loss_history_[j] = res.history
        self.final_loss_ = float(sum(h[-1] for h in self.loss_history_ if h))
        self.n_features_in_ = V
        self.n_labels_ = k
        return self

    def get_parameters(self):
        return np.hstack([self.coef_, self.intercept_[:, None]])

    def _raw_proba(self, X):
        z = np.asarray(X @ self.coef_.T) + self.intercept_
        return np.clip(expit(z), 1e-12, 1.0 - 1e-12)
