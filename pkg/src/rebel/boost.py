"""Boosting loop minimizing the coupled exponential surrogate of cost-sensitive risk.

Each round jointly picks a binary weak learner and a free per-class output
vector.  Sample weights split into a positive and a negative part seeded by
the cost decomposition; their product is invariant under score updates, which
pins the unreachable loss floor and yields a certificate threshold below
which training risk is provably zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .costs import CostMatrix, dataset_terms, loss_floor
from .weak import (SplitScores, Tree, WeightState, accumulate_split, build_grid, grow_layer,
                   optimal_vector, split_value, stump_search)

if TYPE_CHECKING:
    from .io import Dataset

OVERFLOW_LIMIT = 1e300
FLOOR_STOP = 1e-12


class NumericOverflowError(RuntimeError):
    """A weight left the representable range; training cannot continue."""

    def __init__(self, round_index):
        self.round_index = round_index
        super().__init__(f"weight overflow (> {OVERFLOW_LIMIT:g}) in round {round_index}")


@dataclass
class StrongClassifier:
    """Additive model: scores(x) = a0 + sum_t f_t(x) * a_t, class = argmax score."""

    k: int
    d: int
    a0: np.ndarray
    rounds: list[tuple[Tree, np.ndarray]]
    fingerprint: str = ""

    def scores(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.d:
            raise ValueError(f"expected (N, {self.d}) features, got {features.shape}")
        h = np.tile(self.a0, (features.shape[0], 1))
        for tree, vector in self.rounds:
            h += tree.evaluate(features)[:, None] * vector
        return h


@dataclass
class TrainConfig:
    rounds: int
    tree_depth: int = 1
    n_tau: int = 200
    epsilon: float | None = None  # None -> 1 / (2 N K)
    fit_a0: bool = True
    seed: int = 0
    early_stop_on_certificate: bool = True

    def validate(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.tree_depth < 1:
            raise ValueError("tree_depth must be >= 1")
        if self.n_tau < 1:
            raise ValueError("n_tau must be >= 1")
        if self.epsilon is not None and not (self.epsilon >= 0):
            raise ValueError("epsilon must be >= 0")


@dataclass
class RoundRecord:
    index: int
    loss: float
    excess: float
    gamma: float
    phi: float
    depth: int
    feature: int
    threshold: float
    train_error: float
    train_risk: float


@dataclass
class TrainTrace:
    floor: float
    certificate: float
    c_star_bar: float
    loss_initial: float
    stopped: str = "rounds"
    rounds: list[RoundRecord] = field(default_factory=list)


def init_weights(costs: CostMatrix, data: "Dataset") -> WeightState:
    """Weights at the zero model: the raw (c_plus, c_minus) pairs per sample."""
    c_plus, c_minus, _, _ = dataset_terms(costs, data.labels)
    return WeightState(w_plus=c_plus.copy(), w_minus=c_minus.copy())


def fit_constant(weights: WeightState, epsilon: float) -> np.ndarray:
    """Closed-form constant score offset (the a0 term); updates weights in place."""
    ones = np.ones(weights.w_plus.shape[0], dtype=np.int64)
    a0, _ = optimal_vector(accumulate_split(ones, weights), epsilon)
    weights.w_plus *= np.exp(a0)
    weights.w_minus *= np.exp(-a0)
    return a0


def update_weights(weights: WeightState, outputs: np.ndarray, vector: np.ndarray,
                   round_index: int | None = None) -> WeightState:
    """Multiply in the round's contribution: w+ *= exp(f a), w- *= exp(-f a), in place."""
    with np.errstate(over="ignore"):
        shift = np.exp(outputs[:, None] * vector)
        weights.w_plus *= shift
        weights.w_minus /= shift
    peak = max(weights.w_plus.max(), weights.w_minus.max())
    if not np.isfinite(peak) or peak > OVERFLOW_LIMIT:
        raise NumericOverflowError(round_index)
    return weights


def edge(scores: SplitScores, c_star_bar: float, floor: float,
         certificate: float) -> tuple[float, float]:
    """Achieved weak-learner edge gamma and its bound-ready deflation phi.

    gamma = <|s+ - s-|, 1> / (<s+ + s-, 1> - c_star_bar); phi deflates it by
    the certificate gap so that sqrt(1 - phi^2) contracts the loss excess per
    round while the loss sits above the certificate.  Not-applicable cases
    (zero denominators at the floor) come back as nan.
    """
    denom = float(np.sum(scores.s_plus + scores.s_minus)) - c_star_bar
    if denom <= 0:
        return float("nan"), float("nan")
    gamma = float(np.sum(np.abs(scores.s_plus - scores.s_minus))) / denom
    gap = certificate - floor + c_star_bar
    if gap <= 0:
        return gamma, float("nan")
    phi = gamma * (1.0 - c_star_bar / gap)
    return gamma, phi


def _fingerprint(cfg: TrainConfig, epsilon: float) -> str:
    return (f"rounds={cfg.rounds} depth={cfg.tree_depth} ntau={cfg.n_tau} "
            f"epsilon={epsilon!r} a0={int(cfg.fit_a0)} seed={cfg.seed}")


def train(data: "Dataset", costs: CostMatrix, cfg: TrainConfig) -> tuple[StrongClassifier, TrainTrace]:
    """Greedy stagewise training; returns the model and a per-round trace.

    Stops at the round budget, when the loss drops below the certificate
    threshold (if enabled), or when the loss excess above the floor falls
    under 1e-12.  Deterministic for fixed inputs and config.
    """
    cfg.validate()
    X = data.features
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples to train")
    if data.k != costs.k:
        raise ValueError(f"dataset has {data.k} classes, cost matrix {costs.k}")
    if all(X[:, j].min() == X[:, j].max() for j in range(X.shape[1])):
        raise ValueError("every feature is constant; nothing to split on")

    epsilon = cfg.epsilon if cfg.epsilon is not None else 1.0 / (2.0 * n * costs.k)
    _, _, c_star, _ = dataset_terms(costs, data.labels)
    c_star_bar = float(c_star.mean() / 2.0)
    floor, certificate = loss_floor(costs, data.labels)

    weights = init_weights(costs, data)
    h = np.zeros((n, costs.k))
    a0 = np.zeros(costs.k)
    if cfg.fit_a0:
        a0 = fit_constant(weights, epsilon)
        h += a0

    def current_loss() -> float:
        mass = (weights.w_plus.sum() + weights.w_minus.sum()) / (2.0 * n)
        return float(floor + mass - c_star_bar)

    grid = build_grid(X, cfg.n_tau)
    trace = TrainTrace(floor=floor, certificate=certificate, c_star_bar=c_star_bar,
                       loss_initial=current_loss())
    model = StrongClassifier(k=costs.k, d=X.shape[1], a0=a0, rounds=[],
                             fingerprint=_fingerprint(cfg, epsilon))

    if cfg.early_stop_on_certificate and trace.loss_initial < certificate:
        trace.stopped = "certificate"
        return model, trace

    labels0 = data.labels - 1
    for t in range(1, cfg.rounds + 1):
        stump, vector, _ = stump_search(data, weights, grid, epsilon)
        learner = Tree.from_stump(stump)
        while learner.depth < cfg.tree_depth:
            learner, vector, _ = grow_layer(learner, vector, data, weights, grid, epsilon)

        outputs = learner.evaluate(X)
        scores = accumulate_split(outputs, weights)
        model.rounds.append((learner, vector))
        h += outputs[:, None] * vector
        update_weights(weights, outputs, vector, round_index=t)

        loss = current_loss()
        preds = np.argmax(h, axis=1)
        gamma, phi = edge(scores, c_star_bar, floor, certificate)
        root = learner.nodes[0]
        trace.rounds.append(RoundRecord(
            index=t, loss=loss, excess=loss - floor, gamma=gamma, phi=phi,
            depth=learner.depth, feature=root.feature, threshold=root.threshold,
            train_error=float(np.mean(preds != labels0)),
            train_risk=float(np.mean(costs.entries[labels0, preds])),
        ))
        if loss - floor <= FLOOR_STOP:
            trace.stopped = "floor"
            break
        if cfg.early_stop_on_certificate and loss < certificate:
            trace.stopped = "certificate"
            break

    return model, trace


def predict(model: StrongClassifier, x: np.ndarray) -> tuple[int, np.ndarray]:
    """Minimum-risk class estimate (argmax score, ties to the lowest index) for one sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise ValueError(f"expected {model.d} features, got shape {x.shape}")
    scores = model.scores(x[None, :])[0]
    return int(np.argmax(scores)) + 1, scores


def predict_all(model: StrongClassifier, features: np.ndarray) -> np.ndarray:
    """1-based class estimates for a feature matrix."""
    return np.argmax(model.scores(features), axis=1) + 1
