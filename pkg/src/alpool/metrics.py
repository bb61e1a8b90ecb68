"""Micro-averaged precision, recall and F1 for multi-label predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _binary_2d(a, name):
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must be binary")
    return a.astype(bool)


def confusion(pred, truth) -> ConfusionCounts:
    """Counts pooled over every (instance, label) cell."""
    p, t = _binary_2d(pred, "pred"), _binary_2d(truth, "truth")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    return ConfusionCounts(
        tp=int(np.sum(p & t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
        tn=int(np.sum(~p & ~t)),
    )


def _ratio(num, den):
    return num / den if den else 0.0


def micro_prf(c: ConfusionCounts):
    """``(precision, recall, f1)``; any zero denominator yields 0."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return precision, recall, f1


def macro_prf(pred, truth):
    """Unweighted mean over labels of the per-label precision/recall/F1."""
    p, t = _binary_2d(pred, "pred"), _binary_2d(truth, "truth")
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    per_label = np.array([
        micro_prf(confusion(p[:, j : j + 1], t[:, j : j + 1])) for j in range(p.shape[1])
    ])
    return tuple(float(v) for v in per_label.mean(axis=0))
