"""Surrogate loss and empirical risk, recomputed from scratch as an independent check.

Everything here rebuilds per-sample scores from the model rather than trusting
any state cached by the trainer, so tests can cross-check the incremental
bookkeeping of the boosting loop against a second route through the math.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .costs import CostMatrix, dataset_terms, loss_floor

if TYPE_CHECKING:
    from .boost import StrongClassifier
    from .io import Dataset


@dataclass
class LossReport:
    surrogate: float
    floor: float
    excess: float
    error_rate: float
    risk: float


def coupled_sum(h: np.ndarray, label: int) -> float:
    """Half the true class's down-weight plus the other classes' up-weights.

    sigma(h; y) = (exp(-h_y) + sum_{k != y} exp(h_k)) / 2.  Convex in h, with
    infimum 0, and at least 1 whenever any other class scores at or above the
    true one, which is what makes it a misclassification upper bound.
    """
    h = np.asarray(h, dtype=np.float64)
    y = label - 1
    if not 0 <= y < h.shape[0]:
        raise ValueError(f"label {label} out of range for {h.shape[0]} classes")
    others = np.exp(np.delete(h, y)).sum()
    return float(0.5 * (np.exp(-h[y]) + others))


def surrogate_loss(model: "StrongClassifier", data: "Dataset", costs: CostMatrix) -> LossReport:
    """Full-dataset surrogate loss, floor, excess, and the hard error/risk rates."""
    if data.k != costs.k:
        raise ValueError(f"dataset has {data.k} classes, cost matrix {costs.k}")
    c_plus, c_minus, c_star, _ = dataset_terms(costs, data.labels)
    floor, _ = loss_floor(costs, data.labels)
    h = model.scores(data.features)
    per_sample = (np.sum(c_plus * np.exp(h), axis=1)
                  + np.sum(c_minus * np.exp(-h), axis=1) - c_star)
    surrogate = floor + float(np.mean(per_sample)) / 2.0
    preds = np.argmax(h, axis=1) + 1
    labels0 = data.labels - 1
    error_rate = float(np.mean(preds - 1 != labels0))
    risk = float(np.mean(costs.entries[labels0, preds - 1]))
    return LossReport(surrogate=surrogate, floor=floor, excess=surrogate - floor,
                      error_rate=error_rate, risk=risk)


def empirical_risk(predictions: np.ndarray, labels: np.ndarray, costs: CostMatrix) -> float:
    """Mean cost of 1-based predictions against 1-based true labels."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels must have the same shape")
    if predictions.size == 0:
        raise ValueError("empty prediction set")
    for name, arr in (("predictions", predictions), ("labels", labels)):
        if arr.min() < 1 or arr.max() > costs.k:
            raise ValueError(f"{name} out of range 1..{costs.k}")
    return float(np.mean(costs.entries[labels - 1, predictions - 1]))
