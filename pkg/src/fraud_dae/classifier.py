"""Fully connected 29-22-15-10-5-2 softmax classifier and threshold decisions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn

CLF_WIDTHS = (29, 22, 15, 10, 5, 2)
FRAUD = 1


@dataclass
class ClassifierModel:
    params: nn.NetworkParams
    history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.params.widths != CLF_WIDTHS:
            raise ValueError(f"classifier widths must be {CLF_WIDTHS}, got {self.params.widths}")


def classifier_specs() -> list[nn.LayerSpec]:
    w = CLF_WIDTHS
    return [nn.LayerSpec(w[i], w[i + 1], "relu" if i < len(w) - 2 else "linear") for i in range(len(w) - 1)]


def init_classifier(seed: int = 0) -> ClassifierModel:
    return ClassifierModel(nn.init_network(classifier_specs(), seed))


def train_classifier(x, labels, cfg: nn.TrainConfig) -> ClassifierModel:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != CLF_WIDTHS[0]:
        raise ValueError(f"classifier input must have {CLF_WIDTHS[0]} columns, got shape {x.shape}")
    y = np.asarray(labels)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    params, history = nn.train(nn.init_network(classifier_specs(), cfg.seed), x, y.astype(np.int64), "softmax_xent", cfg)
    return ClassifierModel(params, history)


def predict_proba(model: ClassifierModel, x) -> np.ndarray:
    """Rows of (P(normal), P(fraud))."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != CLF_WIDTHS[0]:
        raise ValueError(f"classifier input must have {CLF_WIDTHS[0]} columns, got shape {x.shape}")
    return nn.softmax(nn.predict(model.params, x))


def check_threshold(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return t


def decide(probs, t: float) -> np.ndarray:
    """Label a row fraud when P(fraud) >= t."""
    t = check_threshold(t)
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) probability matrix, got shape {p.shape}")
    if np.any(p < 0) or not np.allclose(p.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("probability rows must be non-negative and sum to 1")
    return (p[:, FRAUD] >= t).astype(np.int64)


def save_classifier(path, model: ClassifierModel) -> None:
    nn.save_network(path, model.params, {"kind": "classifier"})


def load_classifier(path) -> ClassifierModel:
    params, meta = nn.load_network(path)
    if meta.get("kind") != "classifier":
        raise nn.ModelFormatError(f"{path} does not hold a classifier")
    return ClassifierModel(params)
