"""Binary weak learners: stumps, complete shallow trees, and the split search.

A weak learner outputs +-1; its per-class contribution to the strong model is
a free K-vector fitted in closed form from split scores.  The search over
(feature, threshold) bins samples into threshold buckets once per feature and
reads every candidate split off prefix sums, so a full scan costs
O(d * (N + n_tau) * K) instead of O(d * n_tau * N * K).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .io import Dataset


@dataclass(frozen=True)
class Stump:
    """Axis-aligned threshold test: polarity * sign(x[feature] - threshold), sign(0) = -1."""

    feature: int
    threshold: float
    polarity: int

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        vals = features[:, self.feature]
        return self.polarity * np.where(vals > self.threshold, 1, -1)


@dataclass
class Tree:
    """Complete binary tree of stumps in level order; depth D means 2^D - 1 nodes.

    A sample is routed by each stump's +-1 output (-1 left, +1 right); the
    output of the last stump on the path is the tree's output.
    """

    depth: int
    nodes: list[Stump]

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("tree depth must be >= 1")
        if len(self.nodes) != 2 ** self.depth - 1:
            raise ValueError(f"depth {self.depth} tree needs {2 ** self.depth - 1} nodes, "
                             f"got {len(self.nodes)}")

    @classmethod
    def from_stump(cls, stump: Stump) -> "Tree":
        return cls(depth=1, nodes=[stump])

    def _node_arrays(self):
        feat = np.array([s.feature for s in self.nodes], dtype=np.int64)
        thr = np.array([s.threshold for s in self.nodes], dtype=np.float64)
        pol = np.array([s.polarity for s in self.nodes], dtype=np.int64)
        return feat, thr, pol

    def route(self, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate and also report which leaf slot (0..2^D - 1) each sample reaches."""
        n = features.shape[0]
        feat, thr, pol = self._node_arrays()
        node = np.zeros(n, dtype=np.int64)
        out = np.empty(n, dtype=np.int64)
        rows = np.arange(n)
        for _ in range(self.depth):
            vals = features[rows, feat[node]]
            out = pol[node] * np.where(vals > thr[node], 1, -1)
            node = 2 * node + 1 + (out > 0)
        return out, node - (2 ** self.depth - 1)

    def evaluate(self, features: np.ndarray) -> np.ndarray:
        return self.route(features)[0]


@dataclass
class ThresholdGrid:
    """Per-feature candidate thresholds; constant features carry a single degenerate cut."""

    thresholds: list[np.ndarray]
    n_tau: int


@dataclass
class WeightState:
    """Per-sample positive/negative class weights, shape (N, K) each."""

    w_plus: np.ndarray
    w_minus: np.ndarray


@dataclass
class SplitScores:
    """Aggregated class weights on the agree/disagree sides of a candidate learner."""

    s_plus: np.ndarray
    s_minus: np.ndarray


def build_grid(features: np.ndarray, n_tau: int) -> ThresholdGrid:
    """Evenly spaced interior thresholds per feature: min + (i/(n_tau+1))(max-min), i=1..n_tau."""
    if n_tau < 1:
        raise ValueError("n_tau must be >= 1")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise ValueError("features must be a non-empty (N, d) array")
    ticks = np.arange(1, n_tau + 1, dtype=np.float64) / (n_tau + 1)
    out = []
    for j in range(features.shape[1]):
        lo = float(features[:, j].min())
        hi = float(features[:, j].max())
        if lo == hi:
            out.append(np.array([lo]))
        else:
            out.append(lo + ticks * (hi - lo))
    return ThresholdGrid(thresholds=out, n_tau=n_tau)


def accumulate_split(outputs: np.ndarray, weights: WeightState) -> SplitScores:
    """Split scores of a candidate learner from its +-1 outputs.

    Samples the learner sends to +1 contribute w_plus to s_plus and w_minus
    to s_minus; samples sent to -1 contribute the swapped pair.  Normalized
    by 1/(2N).
    """
    pos = outputs > 0
    n = outputs.shape[0]
    s_plus = (weights.w_plus[pos].sum(axis=0) + weights.w_minus[~pos].sum(axis=0)) / (2.0 * n)
    s_minus = (weights.w_minus[pos].sum(axis=0) + weights.w_plus[~pos].sum(axis=0)) / (2.0 * n)
    return SplitScores(s_plus=s_plus, s_minus=s_minus)


def optimal_vector(scores: SplitScores, epsilon: float) -> tuple[np.ndarray, float]:
    """Closed-form output vector for fixed split scores, plus the selection criterion.

    The vector is smoothed: a_k = (ln(s_minus_k + eps) - ln(s_plus_k + eps)) / 2.
    The criterion 2 <sqrt(s_plus * s_minus), 1> is reported unsmoothed; adding
    the problem's loss floor and subtracting the mean per-sample balance
    constant turns it into the surrogate loss this learner would reach with
    the exact (unsmoothed) vector.
    """
    sp = scores.s_plus + epsilon
    sm = scores.s_minus + epsilon
    with np.errstate(divide="ignore", invalid="ignore"):
        a = 0.5 * (np.log(sm) - np.log(sp))
    a = np.where(np.isnan(a), 0.0, a)  # only hits 0/0 when epsilon = 0
    criterion = float(2.0 * np.sum(np.sqrt(scores.s_plus * scores.s_minus)))
    return a, criterion


def split_value(scores: SplitScores, vector: np.ndarray) -> float:
    """Loss (above floor, before the balance-constant correction) achieved by `vector`."""
    return float(scores.s_plus @ np.exp(vector) + scores.s_minus @ np.exp(-vector))


def _bucketize(values: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    # bucket = number of thresholds strictly below the value, so a sample sits
    # on the +1 side of threshold i exactly when i < bucket (x > tau strict,
    # ties route to -1)
    return np.searchsorted(thresholds, values, side="left")


# Candidates whose criterion sits within this fraction of the round's weight
# mass above the minimum count as tied and the earliest in scan order wins.
# Distinct splits can tie exactly in real arithmetic (say, a positive and a
# negative sample of equal weight swapping sides); prefix sums then differ
# only by summation noise, and a bitwise argmin would break such ties by
# noise instead of by scan order.
SELECTION_SLACK = 1e-9


def first_within_slack(values: np.ndarray, limit: float) -> int:
    """Index of the first entry <= limit, assuming one exists."""
    return int(np.nonzero(values <= limit)[0][0])


def stump_search(data: "Dataset", weights: WeightState, grid: ThresholdGrid,
                 epsilon: float) -> tuple[Stump, np.ndarray, float]:
    """Best root stump over the full grid with polarity fixed to +1.

    Orientation is absorbed by the output vector, so only (feature, threshold)
    is searched.  Ties break to the lowest feature index, then the lowest
    threshold, with the SELECTION_SLACK tolerance deciding what counts as a
    tie.  Returns the stump, its smoothed vector, and the unsmoothed
    criterion value.
    """
    X = data.features
    n = X.shape[0]
    wp, wm = weights.w_plus, weights.w_minus
    tot_p = wp.sum(axis=0)
    tot_m = wm.sum(axis=0)
    norm = 1.0 / (2.0 * n)
    mass = (tot_p.sum() + tot_m.sum()) * norm

    k = wp.shape[1]
    rows = []
    lowest = np.inf
    for j, thr in enumerate(grid.thresholds):
        m = thr.shape[0]
        bucket = _bucketize(X[:, j], thr)
        bp = np.empty((m + 1, k))
        bm = np.empty((m + 1, k))
        for c in range(k):
            bp[:, c] = np.bincount(bucket, weights=wp[:, c], minlength=m + 1)
            bm[:, c] = np.bincount(bucket, weights=wm[:, c], minlength=m + 1)
        below_p = np.cumsum(bp, axis=0)[:m]   # w_plus mass on the -1 side of each cut
        below_m = np.cumsum(bm, axis=0)[:m]
        # suffix sums, not total-minus-prefix: a side with no true mass must
        # score an exact zero or sqrt amplifies the cancellation residue past
        # the tie slack
        above_p = np.cumsum(bp[::-1], axis=0)[::-1][1:]
        above_m = np.cumsum(bm[::-1], axis=0)[::-1][1:]
        s_plus = (above_p + below_m) * norm
        s_minus = (above_m + below_p) * norm
        crit = 2.0 * np.sum(np.sqrt(s_plus * s_minus), axis=1)
        rows.append(crit)
        lowest = min(lowest, float(crit.min()))

    limit = lowest + SELECTION_SLACK * mass
    for j, crit in enumerate(rows):
        if crit.min() <= limit:
            i = first_within_slack(crit, limit)
            break

    stump = Stump(feature=j, threshold=float(grid.thresholds[j][i]), polarity=1)
    scores = accumulate_split(stump.evaluate(X), weights)
    vector, criterion = optimal_vector(scores, epsilon)
    return stump, vector, criterion


def grow_layer(tree: Tree, vector: np.ndarray, data: "Dataset", weights: WeightState,
               grid: ThresholdGrid, epsilon: float) -> tuple[Tree, np.ndarray, float]:
    """Deepen a tree by one level without ever increasing the training loss.

    Each leaf slot gets a stump initialized to its parent's parameters (a
    functional no-op), then is re-optimized over the full grid in both
    polarities while the output vector stays fixed; a leaf keeps its
    initialization unless some candidate strictly improves its routed
    objective.  Finally the vector is refitted to the deeper tree, keeping
    the old vector if smoothing would make the refit worse.
    """
    X = data.features
    exp_a = np.exp(vector)
    exp_na = np.exp(-vector)
    # u: cost of sending a sample to +1 under the fixed vector; v: to -1
    u = weights.w_plus @ exp_a + weights.w_minus @ exp_na
    v = weights.w_plus @ exp_na + weights.w_minus @ exp_a

    _, slots = tree.route(X)
    first_parent = 2 ** (tree.depth - 1) - 1
    new_nodes = []
    for slot in range(2 ** tree.depth):
        parent = tree.nodes[first_parent + slot // 2]
        sel = slots == slot
        stump = parent
        if np.any(sel):
            stump = _best_leaf_stump(X[sel], u[sel], v[sel], grid, parent)
        new_nodes.append(stump)

    grown = Tree(depth=tree.depth + 1, nodes=list(tree.nodes) + new_nodes)
    scores = accumulate_split(grown.evaluate(X), weights)
    refit, criterion = optimal_vector(scores, epsilon)
    if split_value(scores, refit) > split_value(scores, vector):
        refit = vector  # smoothing moved the refit past the old vector; keep monotone
    return grown, refit, criterion


def _best_leaf_stump(X: np.ndarray, u: np.ndarray, v: np.ndarray, grid: ThresholdGrid,
                     init: Stump) -> Stump:
    """Minimize sum(u on the +1 side) + sum(v on the -1 side) over (j, tau, rho)."""
    tot_u = u.sum()
    tot_v = v.sum()
    best_obj = np.inf
    best = None
    init_obj = None
    for j, thr in enumerate(grid.thresholds):
        m = thr.shape[0]
        bucket = _bucketize(X[:, j], thr)
        below_u = np.cumsum(np.bincount(bucket, weights=u, minlength=m + 1))[:m]
        below_v = np.cumsum(np.bincount(bucket, weights=v, minlength=m + 1))[:m]
        obj_plus = (tot_u - below_u) + below_v
        obj_minus = below_u + (tot_v - below_v)
        # candidate order: threshold ascending, +1 polarity before -1
        paired = np.empty(2 * m)
        paired[0::2] = obj_plus
        paired[1::2] = obj_minus
        i = int(np.argmin(paired))
        if paired[i] < best_obj:
            best_obj = float(paired[i])
            best = Stump(feature=j, threshold=float(thr[i // 2]), polarity=1 - 2 * (i % 2))
        if j == init.feature:
            pos = int(np.searchsorted(thr, init.threshold))
            if pos < m and thr[pos] == init.threshold:
                init_obj = float(obj_plus[pos] if init.polarity > 0 else obj_minus[pos])
    if init_obj is None:
        # inherited cut is off this grid; score it directly
        g = init.evaluate(X)
        init_obj = float(u[g > 0].sum() + v[g < 0].sum())
    if best is None or best_obj >= init_obj:
        return init
    return best
