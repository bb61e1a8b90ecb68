"""Corpus loading, cleaning, label-space construction and splitting.

Corpus files are UTF-8 text with one record per line::

    <id>\\t<comma-separated label codes>\\t<raw text>

Lines starting with ``#`` are comments and blank lines are skipped.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._stopwords import STOPWORDS

__all__ = [
    "CorpusFormatError",
    "Document",
    "LabelSpace",
    "SplitSpec",
    "build_label_space",
    "clean_text",
    "filter_by_label_space",
    "label_matrix",
    "labels_to_vector",
    "load_corpus",
    "split_corpus",
    "write_corpus",
]

_DEID_SPAN = re.compile(r"\[\*\*.*?\*\*\]", re.DOTALL)
_DEID_DANGLING = re.compile(r"\[\*\*.*\Z", re.DOTALL)
_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


class CorpusFormatError(ValueError):
    """Raised when a corpus file does not follow the record format."""


@dataclass(frozen=True)
class Document:
    id: int
    raw_text: str
    label_codes: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.label_codes, frozenset):
            object.__setattr__(self, "label_codes", frozenset(self.label_codes))


@dataclass(frozen=True)
class LabelSpace:
    """Ordered top-k label vocabulary."""

    codes: tuple

    def __post_init__(self):
        object.__setattr__(self, "codes", tuple(self.codes))
        if len(set(self.codes)) != len(self.codes):
            raise ValueError("label codes must be unique")
        object.__setattr__(
            self, "index_of", {c: i for i, c in enumerate(self.codes)}
        )

    def __len__(self):
        return len(self.codes)

    @property
    def k(self) -> int:
        return len(self.codes)


@dataclass(frozen=True)
class SplitSpec:
    train_ids: tuple
    validation_ids: tuple
    test_ids: tuple

    def __post_init__(self):
        tr, va, te = set(self.train_ids), set(self.validation_ids), set(self.test_ids)
        if tr & va or tr & te or va & te:
            raise ValueError("split partitions must be pairwise disjoint")


def clean_text(raw_text: str) -> str:
    """Lowercase, drop ``[** ... **]`` de-identifiers, punctuation and stopwords."""
    text = raw_text.lower()
    text = _DEID_SPAN.sub(" ", text)
    text = _DEID_DANGLING.sub(" ", text)
    text = text.translate(_PUNCT_TABLE)
    return " ".join(tok for tok in text.split() if tok not in STOPWORDS)


def build_label_space(docs: Iterable[Document], top_k: int) -> LabelSpace:
    """Pick the ``top_k`` most frequent codes (ties broken lexicographically)."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    counts = Counter()
    for doc in docs:
        counts.update(doc.label_codes)
    if len(counts) < top_k:
        raise ValueError(
            f"insufficient label diversity: {len(counts)} distinct codes, "
            f"top_k={top_k}"
        )
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return LabelSpace(tuple(code for code, _ in ranked[:top_k]))


def filter_by_label_space(docs: Iterable[Document], space: LabelSpace) -> list:
    keep = frozenset(space.codes)
    out = []
    for doc in docs:
        codes = doc.label_codes & keep
        if codes:
            out.append(Document(doc.id, doc.raw_text, codes))
    return out


def labels_to_vector(doc: Document, space: LabelSpace) -> np.ndarray:
    vec = np.zeros(space.k, dtype=np.int8)
    for code in doc.label_codes:
        j = space.index_of.get(code)
        if j is not None:
            vec[j] = 1
    if not vec.any():
        raise ValueError(
            f"unlabeled document reached vectorization (id={doc.id})"
        )
    return vec


def label_matrix(docs: Sequence[Document], space: LabelSpace) -> np.ndarray:
    """Stack :func:`labels_to_vector` rows into an ``(n, k)`` int8 array."""
    if not docs:
        return np.zeros((0, space.k), dtype=np.int8)
    return np.vstack([labels_to_vector(d, space) for d in docs])


def _parse_line(line: str, lineno: int) -> Document:
    parts = line.split("\t")
    if len(parts) != 3:
        raise CorpusFormatError(
            f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}"
        )
    raw_id, raw_labels, text = parts
    try:
        doc_id = int(raw_id.strip())
    except ValueError:
        raise CorpusFormatError(f"line {lineno}: invalid id {raw_id!r}") from None
    if doc_id < 0:
        raise CorpusFormatError(f"line {lineno}: negative id {doc_id}")
    codes = frozenset(c.strip() for c in raw_labels.split(",") if c.strip())
    return Document(doc_id, text, codes)


def load_corpus(path) -> list:
    """Read a corpus file; raises :class:`CorpusFormatError` on bad records."""
    docs = []
    seen = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            doc = _parse_line(line, lineno)
            if doc.id in seen:
                raise CorpusFormatError(
                    f"duplicate id {doc.id} on lines {seen[doc.id]} and {lineno}"
                )
            seen[doc.id] = lineno
            docs.append(doc)
    return docs


def write_corpus(docs: Iterable[Document], path, header: str | None = None) -> None:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for doc in docs:
        if "\t" in doc.raw_text or "\n" in doc.raw_text:
            raise CorpusFormatError(f"document {doc.id}: text contains TAB or newline")
        codes = sorted(doc.label_codes)
        if any("," in c or "\t" in c for c in codes):
            raise CorpusFormatError(f"document {doc.id}: label code contains a separator")
        lines.append(f"{doc.id}\t{','.join(codes)}\t{doc.raw_text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def split_corpus(
    docs: Sequence[Document],
    train_fraction: float = 0.7,
    validation_fraction: float = 0.1,
    seed: int = 0,
) -> SplitSpec:
    """Seeded shuffle followed by a contiguous train/validation/test cut."""
    if train_fraction <= 0 or validation_fraction < 0:
        raise ValueError("train_fraction must be positive and validation_fraction non-negative")
    if train_fraction + validation_fraction >= 1:
        raise ValueError("train_fraction + validation_fraction must be < 1")
    n = len(docs)
    if n < 3:
        raise ValueError("corpus too small to split")
    ids = np.array([d.id for d in docs], dtype=np.int64)
    if len(np.unique(ids)) != n:
        raise ValueError("document ids must be unique")
    perm = np.random.default_rng(seed).permutation(n)
    shuffled = ids[perm]
    # guard against 0.7 * 10 == 6.999...
    n_train = math.floor(train_fraction * n + 1e-9)
    n_val = math.floor(validation_fraction * n + 1e-9)
    return SplitSpec(
        tuple(int(i) for i in shuffled[:n_train]),
        tuple(int(i) for i in shuffled[n_train:n_train + n_val]),
        tuple(int(i) for i in shuffled[n_train + n_val:]),
    )
