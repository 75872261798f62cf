"""Baselines: discrete AdaBoost on binary problems and the two-step cost plug-in.

The AdaBoost trainer shares the threshold grid, tie-breaking, and smoothing
scale of the multiclass trainer, so on a two-class problem with uniform costs
the two must pick the same stump and coefficient every round; the reduction
checker below verifies exactly that.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .boost import StrongClassifier, TrainConfig, train
from .costs import CostMatrix
from .weak import (SELECTION_SLACK, Stump, ThresholdGrid, build_grid, first_within_slack,
                   _bucketize)

if TYPE_CHECKING:
    from .io import Dataset


@dataclass
class BinaryAdaBoostModel:
    """Weighted vote of stumps; margin(x) = sum_t alpha_t f_t(x) for class 1 vs 2."""

    d: int
    rounds: list[tuple[Stump, float]]

    def margin(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        out = np.zeros(features.shape[0])
        for stump, alpha in self.rounds:
            out += alpha * stump.evaluate(features)
        return out

    def predict(self, features: np.ndarray) -> np.ndarray:
        """1-based labels; a zero margin ties to class 1 (lowest index)."""
        return np.where(self.margin(features) >= 0, 1, 2)


def adaboost_train(data: "Dataset", rounds: int, n_tau: int = 200,
                   epsilon: float | None = None) -> BinaryAdaBoostModel:
    """Discrete AdaBoost with grid stumps searched in both polarities.

    Sample weights start at one each and are never renormalized; the
    coefficient is alpha = ln((correct + eps) / (error + eps)) / 2 over
    weight masses, with eps defaulting to 1/2 (the multiclass trainer's
    smoothing scale under this weight normalization).  Stump selection
    maximizes distance of the error mass from half the round's total, with
    ties to the lowest feature, then lowest threshold, then +1 polarity.
    Starting at integer weights keeps first-round masses exact, so ties
    resolve by scan order rather than by summation noise.
    """
    if data.k != 2:
        raise ValueError("adaboost baseline needs a binary dataset")
    X = data.features
    n = X.shape[0]
    if epsilon is None:
        epsilon = 0.5
    y_star = np.where(data.labels == 1, 1.0, -1.0)
    grid = build_grid(X, n_tau)
    weights = np.ones(n)
    model = BinaryAdaBoostModel(d=X.shape[1], rounds=[])

    buckets = [_bucketize(X[:, j], thr) for j, thr in enumerate(grid.thresholds)]
    for _ in range(rounds):
        total = weights.sum()
        pos_mass = np.where(y_star > 0, weights, 0.0)
        neg_mass = np.where(y_star < 0, weights, 0.0)
        tot_neg = neg_mass.sum()
        rows = []
        lowest = np.inf
        for j, thr in enumerate(grid.thresholds):
            m = thr.shape[0]
            below_pos = np.cumsum(np.bincount(buckets[j], weights=pos_mass, minlength=m + 1))[:m]
            below_neg = np.cumsum(np.bincount(buckets[j], weights=neg_mass, minlength=m + 1))[:m]
            # +1-polarity error: negatives above the cut plus positives below it
            err_plus = (tot_neg - below_neg) + below_pos
            key = np.minimum(err_plus, total - err_plus)
            rows.append((key, err_plus))
            lowest = min(lowest, float(key.min()))

        # candidates within the slack of the best key count as tied; take the
        # earliest in scan order, mirroring the multiclass trainer's rule
        limit = lowest + SELECTION_SLACK * total
        for j, (key, err_plus) in enumerate(rows):
            if key.min() <= limit:
                i = first_within_slack(key, limit)
                break
        err = float(err_plus[i])
        if err <= total - err:
            stump = Stump(feature=j, threshold=float(grid.thresholds[j][i]), polarity=1)
        else:
            stump = Stump(feature=j, threshold=float(grid.thresholds[j][i]), polarity=-1)
            err = total - err
        alpha = 0.5 * (np.log((total - err) + epsilon) - np.log(err + epsilon))
        model.rounds.append((stump, float(alpha)))
        weights = weights * np.exp(-alpha * y_star * stump.evaluate(X))
    return model


def estimate_posterior(model: StrongClassifier, x: np.ndarray) -> np.ndarray:
    """Class posterior implied by the score vector: softmax of twice the scores."""
    x = np.asarray(x, dtype=np.float64)
    return posterior_all(model, x[None, :])[0]


def posterior_all(model: StrongClassifier, features: np.ndarray) -> np.ndarray:
    h = 2.0 * model.scores(features)
    h -= h.max(axis=1, keepdims=True)
    e = np.exp(h)
    return e / e.sum(axis=1, keepdims=True)


def two_step_predict(posterior: np.ndarray, costs: CostMatrix) -> int:
    """Minimum expected cost class under an estimated posterior (ties to lowest index)."""
    posterior = np.asarray(posterior, dtype=np.float64)
    if posterior.shape != (costs.k,):
        raise ValueError(f"posterior must have {costs.k} entries")
    return int(np.argmin(posterior @ costs.entries)) + 1


def two_step_predict_all(posteriors: np.ndarray, costs: CostMatrix) -> np.ndarray:
    return np.argmin(posteriors @ costs.entries, axis=1) + 1


# --- binary reduction checker --------------------------------------------


def random_binary_dataset(seed: int, n: int = 200, d: int = 5):
    """Two overlapping Gaussian classes for reduction trials."""
    from .io import Dataset

    rng = np.random.default_rng(seed)
    labels = np.empty(n, dtype=np.int64)
    labels[: n // 2] = 1
    labels[n // 2:] = 2
    shift = rng.uniform(0.3, 1.0, size=d) * np.where(labels[:, None] == 1, 1.0, -1.0)
    features = rng.normal(size=(n, d)) + shift
    return Dataset.from_arrays(features, labels, k=2)


def run_reduction_trial(seed: int, n: int = 200, d: int = 5, rounds: int = 50,
                        n_tau: int = 200, epsilon_scale: float = 1.0) -> dict:
    """Train both binary routes on one random problem and report worst deviations.

    epsilon_scale deliberately mis-scales the AdaBoost smoothing when != 1,
    as a negative control; the routes then diverge and the checker must say
    so.  Returns per-trial maxima: coefficient gap, score-antisymmetry gap,
    and the number of rounds whose stumps disagree.
    """
    data = random_binary_dataset(seed, n=n, d=d)
    cfg = TrainConfig(rounds=rounds, tree_depth=1, n_tau=n_tau, fit_a0=False,
                      early_stop_on_certificate=False)
    model, _ = train(data, CostMatrix.uniform(2), cfg)
    ada = adaboost_train(data, rounds=rounds, n_tau=n_tau,
                         epsilon=epsilon_scale * 0.5)

    stump_mismatches = 0
    coeff_gap = 0.0
    paired = 0
    for (tree, vector), (stump, alpha) in zip(model.rounds, ada.rounds):
        root = tree.nodes[0]
        paired += 1
        if (root.feature, root.threshold) != (stump.feature, stump.threshold):
            stump_mismatches += 1
            continue
        coeff_gap = max(coeff_gap, abs(float(vector[0]) - stump.polarity * alpha))

    h = model.scores(data.features)
    symmetry_gap = float(np.max(np.abs(h[:, 0] + h[:, 1]))) if h.size else 0.0
    return {
        "seed": seed,
        "rounds_compared": paired,
        "stump_mismatches": stump_mismatches,
        "coeff_gap": coeff_gap,
        "symmetry_gap": symmetry_gap,
    }
