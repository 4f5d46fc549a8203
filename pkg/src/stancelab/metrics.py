"""Evaluation metrics: per-class precision/recall/F1, accuracy and f-avg."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import CLASS_ORDER, StanceLabel


def _as_labels(values: Sequence) -> list[StanceLabel]:
    out = []
    for v in values:
        if isinstance(v, StanceLabel):
            out.append(v)
        elif isinstance(v, str):
            out.append(StanceLabel(v.upper()))
        elif isinstance(v, (int, np.integer)):
            out.append(CLASS_ORDER[int(v)])
        else:
            raise TypeError(f"cannot interpret {v!r} as a stance label")
    return out


def per_class_prf(preds: Sequence, gold: Sequence) -> dict[StanceLabel, dict[str, float]]:
    """Precision/recall/F1 per class; any zero denominator yields 0."""
    preds = _as_labels(preds)
    gold = _as_labels(gold)
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(gold)} gold")
    if not preds:
        raise ValueError("empty prediction list")
    out = {}
    for cls in CLASS_ORDER:
        tp = sum(1 for p, g in zip(preds, gold) if p == cls and g == cls)
        fp = sum(1 for p, g in zip(preds, gold) if p == cls and g != cls)
        fn = sum(1 for p, g in zip(preds, gold) if p != cls and g == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[cls] = {"precision": precision, "recall": recall, "f1": f1}
    return out


def f_avg(preds: Sequence, gold: Sequence) -> float:
    """Mean of the AGAINST and FAVOR F1 scores; NONE is scored but excluded."""
    prf = per_class_prf(preds, gold)
    return (prf[StanceLabel.AGAINST]["f1"] + prf[StanceLabel.FAVOR]["f1"]) / 2.0


def accuracy(preds: Sequence, gold: Sequence) -> float:
    preds = _as_labels(preds)
    gold = _as_labels(gold)
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(gold)} gold")
    return sum(1 for p, g in zip(preds, gold) if p == g) / len(preds)
