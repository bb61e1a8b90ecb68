"""TF-IDF vectorization fit on the training split only."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import clean_text

__all__ = [
    "FeatureMatrix",
    "TfidfFeaturizer",
    "Vocabulary",
    "dump_vocabulary",
    "fit_vocabulary",
    "load_vocabulary",
    "tfidf_transform",
    "transform_all",
]


@dataclass(frozen=True)
class Vocabulary:
    """Term index plus the document frequencies used for idf."""

    terms: tuple
    doc_frequency: np.ndarray
    n_train_docs: int

    def __post_init__(self):
        object.__setattr__(self, "term_index", {t: i for i, t in enumerate(self.terms)})
        df = np.asarray(self.doc_frequency, dtype=np.int64)
        object.__setattr__(self, "doc_frequency", df)
        object.__setattr__(
            self, "idf", np.log((1.0 + self.n_train_docs) / (1.0 + df)) + 1.0
        )

    def __len__(self):
        return len(self.terms)

    @property
    def size(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class FeatureMatrix:
    """CSR matrix of TF-IDF rows together with the document id of each row."""

    matrix: sp.csr_matrix
    row_ids: np.ndarray

    def __post_init__(self):
        if self.matrix.shape[0] != len(self.row_ids):
            raise ValueError("row count does not match row_ids")

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]

    def rows_for(self, ids) -> sp.csr_matrix:
        pos = {int(i): r for r, i in enumerate(self.row_ids)}
        return self.matrix[[pos[int(i)] for i in ids]]


def fit_vocabulary(train_docs: Sequence[str], max_features: int = 20_000) -> Vocabulary:
    """Keep the ``max_features`` terms with highest document frequency.

    Ties are broken lexicographically; indices follow lexicographic term order.
    """
    if max_features < 1:
        raise ValueError("max_features must be positive")
    if len(train_docs) == 0:
        raise ValueError("train_docs must be nonempty")
    df = Counter()
    for doc in train_docs:
        df.update(set(doc.split()))
    if not df:
        raise ValueError("empty vocabulary")
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    terms = sorted(t for t, _ in ranked)
    return Vocabulary(tuple(terms), np.array([df[t] for t in terms]), len(train_docs))


def _tfidf_row(doc: str, vocab: Vocabulary):
    counts = Counter(t for t in doc.split() if t in vocab.term_index)
    if not counts:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.array(sorted(vocab.term_index[t] for t in counts), dtype=np.int64)
    inv = {vocab.term_index[t]: c for t, c in counts.items()}
    tf = np.array([inv[i] for i in idx], dtype=np.float64)
    w = tf * vocab.idf[idx]
    return idx, w / math.sqrt(float(w @ w))


def tfidf_transform(doc: str, vocab: Vocabulary) -> sp.csr_matrix:
    """Return a ``(1, V)`` L2-normalized TF-IDF row; OOV-only docs give zeros."""
    idx, w = _tfidf_row(doc, vocab)
    return sp.csr_matrix((w, idx, [0, len(idx)]), shape=(1, vocab.size))


def transform_all(docs: Sequence[str], vocab: Vocabulary, ids=None) -> FeatureMatrix:
    indptr = [0]
    indices, data = [], []
    for doc in docs:
        idx, w = _tfidf_row(doc, vocab)
        indices.append(idx)
        data.append(w)
        indptr.append(indptr[-1] + len(idx))
    X = sp.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
            np.array(indptr),
        ),
        shape=(len(docs), vocab.size),
    )
    row_ids = np.arange(len(docs)) if ids is None else np.asarray(ids, dtype=np.int64)
    return FeatureMatrix(X, row_ids)


def dump_vocabulary(vocab: Vocabulary, path) -> None:
    """Write ``term<TAB>index<TAB>df`` lines in index order."""
    lines = [f"# n_train_docs={vocab.n_train_docs}"]
    lines += [
        f"{t}\t{i}\t{int(vocab.doc_frequency[i])}" for i, t in enumerate(vocab.terms)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path) -> Vocabulary:
    terms, dfs, n_docs = [], [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# n_train_docs="):
            n_docs = int(line.split("=", 1)[1])
            continue
        if not line or line.startswith("#"):
            continue
        term, index, df = line.split("\t")
        if int(index) != len(terms):
            raise ValueError(f"vocabulary dump out of order at term {term!r}")
        terms.append(term)
        dfs.append(int(df))
    if n_docs is None:
        n_docs = max(dfs)
    return Vocabulary(tuple(terms), np.array(dfs), n_docs)


class TfidfFeaturizer(TransformerMixin, BaseEstimator):
    """Text to sparse TF-IDF rows.

    Parameters
    ----------
    max_features : int, default=20000
        Vocabulary cap; the most document-frequent terms are kept.
    clean : bool, default=True
        Apply :func:`alpool.corpus.clean_text` to every input string first.
    """

    def __init__(self, max_features=20_000, clean=True):
        self.max_features = max_features
        self.clean = clean

    def _prep(self, docs):
        if isinstance(docs, str):
            raise TypeError("expected an iterable of strings, got a single string")
        return [clean_text(d) for d in docs] if self.clean else list(docs)

    def fit(self, X, y=None):
        self.vocabulary_ = fit_vocabulary(self._prep(X), self.max_features)
        self.n_features_out_ = self.vocabulary_.size
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        return transform_all(self._prep(X), self.vocabulary_).matrix

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.asarray(self.vocabulary_.terms, dtype=object)
