"""Deterministic synthetic multi-label corpora with power-law label imbalance."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import Document, write_corpus

__all__ = ["SynthSpec", "generate", "label_probabilities", "write_synthetic"]

TARGET_LABELS_PER_DOC = 2.0
MAX_LABEL_PROBABILITY = 0.9
MIN_TOKENS_PER_LABEL = 10
MANIFEST_SUFFIX = ".manifest.json"


@dataclass(frozen=True)
class SynthSpec:
    n_docs: int = 2000
    n_labels: int = 10
    vocab_size: int = 2000
    tokens_per_doc: int = 80
    power_exponent: float = 1.5
    label_signal_strength: float = 0.7
    rng_seed: int = 0

    def validate(self) -> None:
        if self.n_labels < 1:
            raise ValueError("n_labels must be >= 1")
        if self.tokens_per_doc < 1:
            raise ValueError("tokens_per_doc must be >= 1")
        if self.power_exponent <= 0:
            raise ValueError("power_exponent must be > 0")
        if not 0.0 < self.label_signal_strength < 1.0:
            raise ValueError("label_signal_strength must lie in (0, 1)")
        if self.n_labels * MIN_TOKENS_PER_LABEL > self.vocab_size:
            raise ValueError(
                f"infeasible spec: {self.n_labels} labels need at least "
                f"{self.n_labels * MIN_TOKENS_PER_LABEL} vocabulary tokens"
            )
        if self.n_docs < 10 * self.n_labels:
            raise ValueError(
                f"infeasible spec: n_docs must be >= 10 * n_labels ({10 * self.n_labels})"
            )


def label_probabilities(n_labels: int, exponent: float) -> np.ndarray:
    """Independent per-label inclusion probabilities ``min(cap, c * j**-s)``.

    ``c`` is solved by bisection so the expected label count is 2 (or as
    close as the per-label cap allows).
    """
    base = np.arange(1, n_labels + 1, dtype=np.float64) ** -exponent
    target = min(TARGET_LABELS_PER_DOC, MAX_LABEL_PROBABILITY * n_labels)

    def expected(c):
        return np.minimum(MAX_LABEL_PROBABILITY, c * base).sum()

    lo, hi = 0.0, MAX_LABEL_PROBABILITY / base[-1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if expected(mid) < target:
            lo = mid
        else:
            hi = mid
    return np.minimum(MAX_LABEL_PROBABILITY, hi * base)


def _token_layout(spec: SynthSpec):
    rng = np.random.default_rng([spec.rng_seed, 0xC0DE])
    tokens = np.array([f"w{i:05d}" for i in range(spec.vocab_size)])
    perm = rng.permutation(spec.vocab_size)
    per_label = max(MIN_TOKENS_PER_LABEL, spec.vocab_size // (4 * spec.n_labels))
    owned = perm[: spec.n_labels * per_label].reshape(spec.n_labels, per_label)
    background = perm[spec.n_labels * per_label:]
    if len(background) == 0:
        background = perm
    return tokens, owned, background


def generate(spec: SynthSpec | None = None):
    """Return ``(documents, Y)`` where ``Y[i, j] = 1`` iff doc ``i`` has label ``j``.

    Label ``j`` (0-based) is named ``C{j:03d}``; lower indices are more frequent.
    """
    spec = spec or SynthSpec()
    spec.validate()
    probs = label_probabilities(spec.n_labels, spec.power_exponent)
    tokens, owned, background = _token_layout(spec)
    codes = [f"C{j:03d}" for j in range(spec.n_labels)]
    docs = []
    Y = np.zeros((spec.n_docs, spec.n_labels), dtype=np.int8)
    for i in range(spec.n_docs):
        rng = np.random.default_rng([spec.rng_seed, i])
        labels = np.empty(0, dtype=np.int64)
        while len(labels) == 0:
            labels = np.flatnonzero(rng.random(spec.n_labels) < probs)
        Y[i, labels] = 1
        from_label = rng.random(spec.tokens_per_doc) < spec.label_signal_strength
        which = labels[rng.integers(0, len(labels), size=spec.tokens_per_doc)]
        label_tok = owned[which, rng.integers(0, owned.shape[1], size=spec.tokens_per_doc)]
        bg_tok = background[rng.integers(0, len(background), size=spec.tokens_per_doc)]
        picks = np.where(from_label, label_tok, bg_tok)
        text = " ".join(tokens[picks])
        docs.append(Document(i, text, frozenset(codes[j] for j in labels)))
    return docs, Y


def write_synthetic(spec: SynthSpec, path) -> tuple:
    """Write the corpus file plus a JSON manifest sidecar; returns both paths."""
    docs, _ = generate(spec)
    path = Path(path)
    write_corpus(docs, path, header=f"synthetic corpus seed={spec.rng_seed}")
    manifest = path.with_name(path.name + MANIFEST_SUFFIX)
    body = {"generator": "alpool.synthgen", "format_version": 1, "spec": asdict(spec)}
    manifest.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path, manifest
