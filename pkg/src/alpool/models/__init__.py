"""Multi-label probabilistic classifiers behind one contract.

Every estimator follows the scikit-learn API (``fit``, ``predict_proba``,
``predict``, ``get_params``). The functional helpers below take a
:class:`ModelConfig` for callers that prefer plain data over estimators.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import logistic, neural
from .base import CONSTANT_NEGATIVE, CONSTANT_POSITIVE, MultiLabelClassifier
from .forest import RandomForestOVR
from .logistic import LogisticRegressionOVR
from .neural import FeedForwardNN

__all__ = [
    "CONSTANT_NEGATIVE",
    "CONSTANT_POSITIVE",
    "FeedForwardNN",
    "LogisticRegressionOVR",
    "MODEL_KINDS",
    "ModelConfig",
    "MultiLabelClassifier",
    "RandomForestOVR",
    "canonical_kind",
    "fit",
    "load_model",
    "loss_and_gradient",
    "make_model",
    "predict",
    "predict_proba",
    "save_model",
]

MODEL_KINDS = {
    "logistic_regression": LogisticRegressionOVR,
    "random_forest": RandomForestOVR,
    "feedforward_nn": FeedForwardNN,
}
_ALIASES = {"lr": "logistic_regression", "rf": "random_forest", "fnn": "feedforward_nn"}

_SAVE_FORMAT = 1


def canonical_kind(kind: str) -> str:
    kind = _ALIASES.get(kind.lower(), kind.lower())
    if kind not in MODEL_KINDS:
        raise ValueError(
            f"unknown model kind {kind!r}; accepted: "
            + ", ".join([*MODEL_KINDS, *_ALIASES])
        )
    return kind


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    params: dict = field(default_factory=dict)
    rng_seed: int | None = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        make_model(self)  # validates parameter names


def make_model(config: ModelConfig) -> MultiLabelClassifier:
    cls = MODEL_KINDS[canonical_kind(config.kind)]
    est = cls(random_state=config.rng_seed)
    if config.params:
        est.set_params(**config.params)
    return est


def fit(config: ModelConfig, X, Y) -> MultiLabelClassifier:
    return make_model(config).fit(X, Y)


def predict_proba(model: MultiLabelClassifier, x) -> np.ndarray:
    """Per-label probabilities; a single row gives a 1-D vector of length k."""
    single = getattr(x, "ndim", 2) == 1 or x.shape[0] == 1
    P = model.predict_proba(x)
    return P[0] if single else P


def predict(model: MultiLabelClassifier, x, threshold: float = 0.5) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    return (np.asarray(predict_proba(model, x)) >= threshold).astype(np.int8)


def loss_and_gradient(config: ModelConfig, parameters, X, Y):
    """Training objective and analytic gradient for the differentiable kinds.

    Logistic regression: ``parameters`` is a ``(k, V + 1)`` array (intercept
    last). Feed-forward net: a list ``[W1, b1, W2, b2, ...]``.
    """
    kind = canonical_kind(config.kind)
    if kind == "logistic_regression":
        alpha = config.params.get("alpha", 1.0)
        return logistic.loss_and_gradient(parameters, X, Y, alpha=alpha)
    if kind == "feedforward_nn":
        params = [np.asarray(p, dtype=np.float64) for p in parameters]
        return neural.loss_and_gradient(params, X, Y)
    raise ValueError("non-differentiable model")


def save_model(model: MultiLabelClassifier, path) -> None:
    payload = {"format": _SAVE_FORMAT, "class": type(model).__name__, "model": model}
    Path(path).write_bytes(pickle.dumps(payload, protocol=4))


def load_model(path) -> MultiLabelClassifier:
    payload = pickle.loads(Path(path).read_bytes())
    if payload.get("format") != _SAVE_FORMAT:
        raise ValueError(f"unsupported model file format {payload.get('format')!r}")
    return payload["model"]
