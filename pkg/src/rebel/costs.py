"""Cost matrices and their additive decomposition into per-sample weight terms.

Every row of a K x K cost matrix splits into a uniform offset, a row maximum,
and per-class slacks below that maximum.  From those the trainer gets, per
sample, a pair of nonnegative class-weight vectors (c_plus, c_minus) whose
balance point determines both the unreachable part of the training loss and
the optimal score vector for that sample.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIAGONAL_TOL = 1e-12


@dataclass
class CostMatrix:
    """K x K misclassification costs; entries[y, k] is the cost of predicting k on true class y."""

    entries: np.ndarray
    k: int

    @classmethod
    def from_array(cls, entries) -> "CostMatrix":
        arr = np.asarray(entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"cost matrix must be square, got shape {arr.shape}")
        k = arr.shape[0]
        if k < 2:
            raise ValueError("cost matrix needs at least 2 classes")
        if not np.all(np.isfinite(arr)):
            raise ValueError("cost matrix has non-finite entries")
        diag = np.abs(np.diagonal(arr))
        if np.any(diag > DIAGONAL_TOL):
            raise ValueError("cost matrix diagonal must be zero")
        arr = arr.copy()
        np.fill_diagonal(arr, 0.0)
        if np.any(arr < 0):
            raise ValueError("cost matrix has negative entries")
        # diagonal is zero and entries are nonnegative, so the row max is the
        # off-diagonal max
        if np.any(arr.max(axis=1) <= 0):
            raise ValueError("every row needs a strictly positive off-diagonal entry")
        return cls(entries=arr, k=k)

    @classmethod
    def uniform(cls, k: int) -> "CostMatrix":
        """0-1 costs: every mistake costs 1."""
        return cls.from_array(np.ones((k, k)) - np.eye(k))

    def row(self, label: int) -> np.ndarray:
        """Cost row for true class `label` (1-based)."""
        return self.entries[label - 1]


@dataclass
class CostDecomposition:
    """Additive split of one cost row: row = beta * 1 + sum_k b[k] * (1 - e_k)."""

    beta: float
    b: np.ndarray
    phi: float


@dataclass
class SampleCostTerms:
    """Per-sample weight seeds derived from the sample's cost row."""

    c_plus: np.ndarray
    c_minus: np.ndarray
    c_star: float
    h_star: np.ndarray


def decompose_row(row: np.ndarray) -> CostDecomposition:
    """Split a cost row into uniform offset beta, slack vector b, and row max phi.

    b is nonnegative with a zero at the row's most expensive class, and the
    row reconstructs exactly as beta + b.sum() - b.
    """
    row = np.asarray(row, dtype=np.float64)
    k = row.shape[0]
    phi = float(row.max())
    beta = float(row.sum() - (k - 1) * phi)
    b = phi - row
    return CostDecomposition(beta=beta, b=b, phi=phi)


def sample_terms(costs: CostMatrix, label: int) -> SampleCostTerms:
    """Weight seeds (c_plus, c_minus), balance constant c_star, and the optimal score vector.

    c_plus = row - beta, c_minus = phi - row; c_star = 2 <sqrt(c_plus * c_minus), 1>
    is the lowest coupled exponential cost any score vector can reach for this
    row, attained at h_star = (ln c_minus - ln c_plus) / 2 (log of 0 is -inf).
    """
    dec = decompose_row(costs.row(label))
    row = costs.row(label)
    c_plus = row - dec.beta
    c_minus = dec.phi - row
    c_star = float(2.0 * np.sum(np.sqrt(c_plus * c_minus)))
    with np.errstate(divide="ignore"):
        h_star = 0.5 * (np.log(c_minus) - np.log(c_plus))
    return SampleCostTerms(c_plus=c_plus, c_minus=c_minus, c_star=c_star, h_star=h_star)


def dataset_terms(costs: CostMatrix, labels: np.ndarray):
    """Vectorized sample_terms for a label array.

    Returns (C_plus, C_minus, c_star, beta) where the first two are (N, K)
    and the last two are (N,) arrays indexed like `labels`.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("labels must be a non-empty 1-D array")
    if labels.min() < 1 or labels.max() > costs.k:
        raise ValueError("labels out of range for cost matrix")
    rows = costs.entries  # (K, K)
    phi = rows.max(axis=1)
    beta = rows.sum(axis=1) - (costs.k - 1) * phi
    cp = rows - beta[:, None]
    cm = phi[:, None] - rows
    cstar = 2.0 * np.sum(np.sqrt(cp * cm), axis=1)
    idx = labels - 1
    return cp[idx], cm[idx], cstar[idx], beta[idx]


def loss_floor(costs: CostMatrix, labels: np.ndarray) -> tuple[float, float]:
    """Unreachable loss floor and the certificate threshold for a labeled sample set.

    Returns (floor, certificate).  Any model's surrogate loss stays >= floor;
    dropping below certificate proves zero training risk.  The gap between
    them is the cheapest score tie between a sample's true class and any
    other, scaled by the per-sample normalization 1/(2N).  Strictly positive
    off-diagonal costs make certificate > floor; a zero off-diagonal cost
    collapses the gap for that class pair.
    """
    labels = np.asarray(labels)
    if costs.k < 2:
        raise ValueError("need at least 2 classes")
    cp_all, cm_all, cstar_all, beta_all = dataset_terms(costs, labels)
    n = labels.shape[0]
    floor = float(np.mean(beta_all + 0.5 * cstar_all))

    # tie gap depends only on (true class, other class); scan distinct labels
    rows = costs.entries
    phi = rows.max(axis=1)
    beta = rows.sum(axis=1) - (costs.k - 1) * phi
    best = np.inf
    for y in np.unique(labels):
        cp = rows[y - 1] - beta[y - 1]
        cm = phi[y - 1] - rows[y - 1]
        iy = y - 1
        for ik in range(costs.k):
            if ik == iy:
                continue
            gap = (2.0 * np.sqrt((cp[iy] + cp[ik]) * (cm[iy] + cm[ik]))
                   - 2.0 * np.sqrt(cp[iy] * cm[iy]) - 2.0 * np.sqrt(cp[ik] * cm[ik]))
            best = min(best, gap)
    certificate = floor + best / (2.0 * n)
    return floor, float(certificate)


def normalize_random_unit(costs: CostMatrix, labels: np.ndarray) -> CostMatrix:
    """Rescale costs so a uniform random guesser pays 1 on average over `labels`."""
    labels = np.asarray(labels)
    if labels.min() < 1 or labels.max() > costs.k:
        raise ValueError("labels out of range for cost matrix")
    expected = float(np.mean(costs.entries[labels - 1].mean(axis=1)))
    if expected <= 0:
        raise ValueError("expected random-guess cost is zero; cannot normalize")
    return CostMatrix.from_array(costs.entries / expected)


def load_cost_matrix(path) -> CostMatrix:
    """Read a K x K cost matrix from a headerless CSV file."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                rows.append((line_no, [float(c) for c in cells]))
            except ValueError as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: empty cost matrix file")
    width = len(rows[0][1])
    for line_no, r in rows:
        if len(r) != width:
            raise ValueError(f"{path}: line {line_no}: expected {width} cells, got {len(r)}")
    return CostMatrix.from_array(np.array([r for _, r in rows], dtype=np.float64))


def save_cost_matrix(costs: CostMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in costs.entries:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
