"""Confusion-matrix metrics and threshold sweeps (fraud = positive class)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifier import ClassifierModel, check_threshold, decide, predict_proba
from .dae import DaeModel, denoise


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def transpose(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp, self.fn, self.fp, self.tn)


@dataclass(frozen=True)
class SweepRow:
    threshold: float
    recall: float
    accuracy: float


def _binary(v, name: str) -> np.ndarray:
    a = np.asarray(v)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-D class vector")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} values must be 0 or 1")
    return a.astype(bool)


def confusion(pred, actual) -> ConfusionMatrix:
    p = _binary(pred, "pred")
    a = _binary(actual, "actual")
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {a.size} labels")
    return ConfusionMatrix(
        tp=int(np.sum(p & a)),
        fp=int(np.sum(p & ~a)),
        fn=int(np.sum(~p & a)),
        tn=int(np.sum(~p & ~a)),
    )


def recall(cm: ConfusionMatrix) -> float:
    """Detection rate tp / (tp + fn); undefined without positive samples."""
    if cm.tp + cm.fn == 0:
        raise ValueError("recall is undefined: evaluation set has no fraud rows")
    return cm.tp / (cm.tp + cm.fn)


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy is undefined for an empty confusion matrix")
    return (cm.tp + cm.tn) / cm.total


def precision(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fp == 0:
        raise ValueError("precision is undefined: nothing was labeled fraud")
    return cm.tp / (cm.tp + cm.fp)


def sweep_probs(probs, y, thresholds: Sequence[float]) -> list[SweepRow]:
    """Recall/accuracy for each threshold over precomputed class probabilities."""
    if len(thresholds) == 0:
        raise ValueError("need at least one threshold")
    rows = []
    for t in thresholds:
        cm = confusion(decide(probs, check_threshold(t)), y)
        rows.append(SweepRow(float(t), recall(cm), accuracy(cm)))
    return rows


def threshold_sweep(
    model: ClassifierModel,
    dae: DaeModel | None,
    x,
    y,
    thresholds: Sequence[float],
) -> list[SweepRow]:
    """Optionally denoise ``x``, score it once and evaluate every threshold in order."""
    for t in thresholds:
        check_threshold(t)
    feats = denoise(dae, x) if dae is not None else x
    return sweep_probs(predict_proba(model, feats), y, thresholds)


def format_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["threshold,recall,accuracy"]
    lines += [f"{r.threshold:g},{r.recall:.17g},{r.accuracy:.17g}" for r in rows]
    return "\n".join(lines) + "\n"


def format_table(rows: Sequence[SweepRow], title: str | None = None) -> str:
    """Aligned percentage table, two decimals."""
    out = [title] if title else []
    out.append(f"{'Threshold':<10}{'Recall Rate':>12}{'Accuracy':>12}")
    for r in rows:
        out.append(f"{r.threshold:<10g}{r.recall * 100:>11.2f}%{r.accuracy * 100:>11.2f}%")
    return "\n".join(out) + "\n"
