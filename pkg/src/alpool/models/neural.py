"""Feed-forward network: ReLU hidden layers, sigmoid outputs, BCE, plain SGD."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .base import MultiLabelClassifier, check_XY, constant_columns

_EPS = 1e-12


def init_parameters(layer_sizes, rng):
    """Glorot-uniform weights and zero biases as ``[W1, b1, W2, b2, ...]``."""
    params = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def _forward(params, X):
    pre = []
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = np.asarray(h @ params[2 * i]) + params[2 * i + 1]
        pre.append(z)
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
    return pre


def loss_and_gradient(params, X, Y):
    """Binary cross-entropy (summed over labels, averaged over samples) and
    its gradient, shaped like ``params``."""
    X, Y = check_XY(X, Y)
    return _loss_grad(params, X, Y)


def _loss_grad(params, X, Y):
    n_layers = len(params) // 2
    pre = _forward(params, X)
    logits = pre[-1]
    scale = 1.0 / Y.shape[0]
    loss = float(np.sum(np.logaddexp(0.0, logits) - Y * logits)) * scale
    delta = (expit(logits) - Y) * scale
    grads = [None] * len(params)
    for i in range(n_layers - 1, -1, -1):
        h_in = X if i == 0 else np.maximum(pre[i - 1], 0.0)
        grads[2 * i] = np.asarray(h_in.T @ delta)
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params[2 * i].T) * (pre[i - 1] > 0)
    return loss, grads


class FeedForwardNN(MultiLabelClassifier):
    """Multi-label MLP with one sigmoid output unit per label.

    Retrained from scratch on every ``fit`` call.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(500, 100)
    epochs : int, default=30
    learning_rate : float, default=0.1
    batch_size : int, default=32
    random_state : int or None, default=None
        Seeds both the weight initialization and the per-epoch shuffles.
    """

    def __init__(
        self,
        hidden_layer_sizes=(500, 100),
        epochs=30,
        learning_rate=0.1,
        batch_size=32,
        random_state=None,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, Y):
        X, Y = check_XY(X, Y)
        n, V = X.shape
        rng = np.random.default_rng(self.random_state)
        sizes = [V, *self.hidden_layer_sizes, Y.shape[1]]
        params = init_parameters(sizes, rng)
        self.constant_ = constant_columns(Y)
        self.loss_curve_ = []
        lr = self.learning_rate
        for _ in range(self.epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                loss, grads = _loss_grad(params, X[idx], Y[idx])
                epoch_loss += loss * len(idx)
                for p, g in zip(params, grads):
                    p -= lr * g
            self.loss_curve_.append(epoch_loss / n)
        self.coefs_ = params[0::2]
        self.intercepts_ = params[1::2]
        self.n_features_in_ = V
        self.n_labels_ = Y.shape[1]
        self.final_loss_ = self.loss_curve_[-1] if self.loss_curve_ else float("nan")
        return self

    def get_parameters(self):
        return [a for pair in zip(self.coefs_, self.intercepts_) for a in pair]

    def set_parameters(self, params):
        """Install explicit weights, e.g. for inspection or tests."""
        params = [np.asarray(p, dtype=np.float64) for p in params]
        self.coefs_ = params[0::2]
        self.intercepts_ = params[1::2]
        self.n_features_in_ = self.coefs_[0].shape[0]
        self.n_labels_ = self.coefs_[-1].shape[1]
        if not hasattr(self, "constant_") or len(self.constant_) != self.n_labels_:
            self.constant_ = np.full(self.n_labels_, np.nan)
        return self

    def _raw_proba(self, X):
        logits = _forward(self.get_parameters(), X)[-1]
        return np.clip(expit(logits), _EPS, 1.0 - _EPS)

