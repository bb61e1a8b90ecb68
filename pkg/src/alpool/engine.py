"""Pool-based active-learning loop: train, evaluate, select, label, repeat."""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .acquisition import StrategySpec, parse_strategy, select_batch
from .clustering import ClusterModel, kmeans_fit
from .corpus import (
    Document,
    LabelSpace,
    build_label_space,
    clean_text,
    filter_by_label_space,
    label_matrix,
    split_corpus,
)
from .features import FeatureMatrix, Vocabulary, fit_vocabulary, transform_all
from .metrics import confusion, micro_prf
from .models import ModelConfig, canonical_kind, make_model

log = logging.getLogger(__name__)

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "IterationRecord",
    "Oracle",
    "Pool",
    "PreparedCorpus",
    "default_seed_size",
    "oracle_labels",
    "prepare_corpus",
    "read_results_csv",
    "run_experiment",
    "seed_pool",
    "write_results_csv",
]

CSV_COLUMNS = (
    "experiment_id", "strategy", "model", "seed", "iteration", "n_selected", "n_labeled",
    "split", "precision_micro", "recall_micro", "f1_micro", "wall_time_ms",
)

DEFAULT_SEED_SIZE = 10
LR_SEED_SIZE = 50
_LR_SEED_ATTEMPTS = 1000


@dataclass
class Pool:
    """Labeled ids (in labeling order) and the remaining unlabeled ids."""

    labeled_ids: list
    unlabeled_ids: set

    def __post_init__(self):
        if len(set(self.labeled_ids)) != len(self.labeled_ids):
            raise ValueError("duplicate id in labeled set")
        if set(self.labeled_ids) & self.unlabeled_ids:
            raise ValueError("labeled and unlabeled sets overlap")

    @property
    def size(self) -> int:
        return len(self.labeled_ids) + len(self.unlabeled_ids)

    def move(self, ids) -> None:
        for i in ids:
            if i not in self.unlabeled_ids:
                raise ValueError(f"id {i} is not in the unlabeled pool")
        for i in ids:
            self.unlabeled_ids.remove(i)
            self.labeled_ids.append(i)


@dataclass(frozen=True)
class PreparedCorpus:
    """Vectorized splits and label matrices ready for experiments."""

    label_space: LabelSpace
    vocabulary: Vocabulary
    train: FeatureMatrix
    test: FeatureMatrix
    Y_train: np.ndarray
    Y_test: np.ndarray
    validation_ids: tuple = ()

    @property
    def train_ids(self) -> np.ndarray:
        return self.train.row_ids

    @property
    def test_ids(self) -> np.ndarray:
        return self.test.row_ids


def prepare_corpus(
    docs: Sequence[Document],
    top_k: int = 10,
    train_fraction: float = 0.7,
    validation_fraction: float = 0.1,
    split_seed: int = 0,
    max_features: int = 20_000,
) -> PreparedCorpus:
    """Label space, filtering, split, and TF-IDF fit on the training split."""
    space = build_label_space(docs, top_k)
    kept = filter_by_label_space(docs, space)
    split = split_corpus(kept, train_fraction, validation_fraction, split_seed)
    by_id = {d.id: d for d in kept}
    train_docs = [by_id[i] for i in sorted(split.train_ids)]
    test_docs = [by_id[i] for i in sorted(split.test_ids)]
    train_text = [clean_text(d.raw_text) for d in train_docs]
    vocab = fit_vocabulary(train_text, max_features)
    return PreparedCorpus(
        label_space=space,
        vocabulary=vocab,
        train=transform_all(train_text, vocab, [d.id for d in train_docs]),
        test=transform_all([clean_text(d.raw_text) for d in test_docs], vocab,
                           [d.id for d in test_docs]),
        Y_train=label_matrix(train_docs, space),
        Y_test=label_matrix(test_docs, space),
        validation_ids=tuple(sorted(split.validation_ids)),
    )


class Oracle:
    """Simulated annotator answering only for training-pool ids."""

    def __init__(self, train_ids, Y_train, test_ids=()):
        self._labels = {int(i): np.array(y, dtype=np.int8) for i, y in zip(train_ids, Y_train)}
        self._test = {int(i) for i in test_ids}

    def __call__(self, ids) -> np.ndarray:
        out = []
        for i in ids:
            i = int(i)
            if i in self._test:
                raise ValueError(f"oracle restricted to training pool (id {i} is a test id)")
            if i not in self._labels:
                raise ValueError(f"unknown id {i}")
            out.append(self._labels[i])
        k = next(iter(self._labels.values())).shape[0] if self._labels else 0
        return np.array(out, dtype=np.int8).reshape(len(out), k)


def oracle_labels(ids, corpus: PreparedCorpus) -> np.ndarray:
    return Oracle(corpus.train_ids, corpus.Y_train, corpus.test_ids)(ids)


def default_seed_size(model_kind: str) -> int:
    return LR_SEED_SIZE if canonical_kind(model_kind) == "logistic_regression" else DEFAULT_SEED_SIZE


def seed_pool(train_ids, model_kind: str, labels, k: int, seed_size: int | None = None, rng_seed=None) -> Pool:
    """Initial random labeled set.

    For logistic regression the draw is repeated until every one of the
    ``k`` labels has a positive example; after 1000 failed draws the seed is
    repaired greedily with the lowest-id positive document of each missing
    label.
    """
    ids = np.sort(np.asarray(train_ids, dtype=np.int64))
    order = np.argsort(np.asarray(train_ids, dtype=np.int64), kind="stable")
    Y = np.asarray(labels)[order]
    if seed_size is None:
        seed_size = default_seed_size(model_kind)
    if seed_size > len(ids):
        raise ValueError(f"seed size {seed_size} exceeds training pool of {len(ids)}")
    rng = np.random.default_rng(rng_seed)
    if canonical_kind(model_kind) != "logistic_regression":
        rows = rng.choice(len(ids), size=seed_size, replace=False)
    else:
        if Y.shape[1] != k:
            raise ValueError(f"label matrix has {Y.shape[1]} columns, expected {k}")
        if not Y.any(axis=0).all():
            missing = np.flatnonzero(~Y.any(axis=0)).tolist()
            raise ValueError(f"label coverage impossible: labels {missing} have no positive")
        for _ in range(_LR_SEED_ATTEMPTS):
            rows = rng.choice(len(ids), size=seed_size, replace=False)
            if Y[rows].any(axis=0).all():
                break
        else:
            rows = _repair_coverage(rows, Y)
    chosen = [int(ids[r]) for r in rows]
    return Pool(chosen, set(int(i) for i in ids) - set(chosen))


def _repair_coverage(rows, Y):
    rows = list(rows)
    for j in range(Y.shape[1]):
        if Y[rows, j].any():
            continue
        newcomer = int(np.flatnonzero(Y[:, j])[0])
        counts = Y[rows].sum(axis=0)
        # drop the latest-drawn member whose removal uncovers nothing
        for pos in range(len(rows) - 1, -1, -1):
            if not np.any((Y[rows[pos]] == 1) & (counts == 1)):
                rows[pos] = newcomer
                break
        else:
            raise ValueError("seed too small to cover every label")
    return np.array(rows)


@dataclass
class ExperimentConfig:
    strategy: str = "random"
    model: str = "feedforward_nn"
    batch_size: int = 10
    max_iterations: int = 300
    threshold: float = 0.5
    rng_seed: int = 0
    seed_size: int | None = None
    model_params: dict = field(default_factory=dict)
    ts_candidates_per_cluster: int = 50
    hybrid_cluster_k: int = 10
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-4
    record_timing: bool = False
    experiment_id: str | None = None

    def __post_init__(self):
        self.model = canonical_kind(self.model)
        self.strategy_spec  # validates the name
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        if self.experiment_id is None:
            self.experiment_id = f"{self.strategy}__{self.model}__s{self.rng_seed}"

    @property
    def strategy_spec(self) -> StrategySpec:
        return parse_strategy(self.strategy, self.hybrid_cluster_k, self.ts_candidates_per_cluster)

    @property
    def model_config(self) -> ModelConfig:
        return ModelConfig(self.model, dict(self.model_params), self.rng_seed)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    n_selected: int
    n_labeled: int
    split: str
    precision_micro: float
    recall_micro: float
    f1_micro: float
    wall_time_ms: float = 0.0


def _evaluate(model, X, Y, threshold):
    if X.shape[0] == 0:
        return 0.0, 0.0, 0.0
    return micro_prf(confusion(model.predict(X, threshold), Y))


def _selection_seed(rng_seed, iteration):
    return np.random.SeedSequence([int(rng_seed), int(iteration), 0x5E1]).generate_state(1)[0]


def fit_pool_clusters(config: ExperimentConfig, X_pool) -> ClusterModel:
    spec = config.strategy_spec
    seed = np.random.SeedSequence([int(config.rng_seed), 0xC1]).generate_state(1)[0]
    return kmeans_fit(X_pool, spec.cluster_k, int(seed), config.kmeans_max_iter, config.kmeans_tol)


def run_experiment(config: ExperimentConfig, corpus: PreparedCorpus) -> list:
    """Run one strategy/model/seed experiment and return its records.

    Iteration 0 trains on the random seed set; iteration ``t`` trains after
    ``t`` selections. Each iteration logs a ``train`` record (on the labeled
    set) and a ``test`` record (on the whole test split) before selecting.
    """
    spec = config.strategy_spec
    train_ids = np.asarray(corpus.train_ids, dtype=np.int64)
    row_of = {int(i): r for r, i in enumerate(train_ids)}
    oracle = Oracle(train_ids, corpus.Y_train, corpus.test_ids)
    X_train = corpus.train.matrix
    k = corpus.Y_train.shape[1]

    pool = seed_pool(train_ids, config.model, corpus.Y_train, k, config.seed_size, config.rng_seed)
    seed_count = len(pool.labeled_ids)
    labeled_Y = {i: y for i, y in zip(pool.labeled_ids, oracle(pool.labeled_ids))}

    cluster_model = None
    if spec.needs_clusters:
        initial = np.array(sorted(pool.unlabeled_ids), dtype=np.int64)
        cluster_model = fit_pool_clusters(config, X_train[[row_of[i] for i in initial]])

    records = []
    n_selected = 0
    for t in range(config.max_iterations + 1):
        start = time.perf_counter()
        lab = sorted(pool.labeled_ids)
        rows = [row_of[i] for i in lab]
        X_lab = X_train[rows]
        Y_lab = np.array([labeled_Y[i] for i in lab])
        model = make_model(config.model_config).fit(X_lab, Y_lab)
        tr = _evaluate(model, X_lab, Y_lab, config.threshold)
        te = _evaluate(model, corpus.test.matrix, corpus.Y_test, config.threshold)
        ms = (time.perf_counter() - start) * 1000.0 if config.record_timing else 0.0
        n_lab = len(pool.labeled_ids)
        records.append(IterationRecord(t, n_selected, n_lab, "train", *tr, ms))
        records.append(IterationRecord(t, n_selected, n_lab, "test", *te, ms))
        log.debug("%s it=%d n=%d test_f1=%.4f", config.experiment_id, t, n_lab, te[2])
        if t == config.max_iterations or not pool.unlabeled_ids:
            break
        pool_ids = np.array(sorted(pool.unlabeled_ids), dtype=np.int64)
        batch = min(config.batch_size, len(pool_ids))
        X_pool = X_train[[row_of[i] for i in pool_ids]] if spec.family != "random" else None
        picked = select_batch(
            spec, pool_ids=pool_ids, batch=batch, X_pool=X_pool, model=model,
            cluster_model=cluster_model, rng_seed=_selection_seed(config.rng_seed, t),
        )
        for i, y in zip(picked, oracle(picked)):
            labeled_Y[i] = y
        pool.move(picked)
        n_selected += len(picked)
    log.info(
        "%s finished: %d iterations, %d labeled (seed %d)",
        config.experiment_id, records[-1].iteration, len(pool.labeled_ids), seed_count,
    )
    return records


def _fmt(x: float) -> str:
    return repr(float(x))


def records_to_csv(config: ExperimentConfig, records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([
            config.experiment_id, config.strategy, config.model, config.rng_seed, r.iteration,
            r.n_selected, r.n_labeled, r.split, _fmt(r.precision_micro), _fmt(r.recall_micro),
            _fmt(r.f1_micro), f"{r.wall_time_ms:.3f}",
        ])
    return buf.getvalue()


def write_results_csv(path, config: ExperimentConfig, records) -> Path:
    """Atomically write (or overwrite) one experiment's results file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(records_to_csv(config, records))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_results_csv(path) -> list:
    """Rows of a results file as dicts with numeric fields converted."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for row in reader:
            for key in ("seed", "iteration", "n_selected", "n_labeled"):
                row[key] = int(row[key])
            for key in ("precision_micro", "recall_micro", "f1_micro", "wall_time_ms"):
                row[key] = float(row[key])
            rows.append(row)
    return rows
