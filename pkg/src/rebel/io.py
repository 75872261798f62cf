"""Dataset loading and the versioned plain-text model format.

Model files serialize floats with repr (shortest round-trip form), so
save -> load -> save reproduces the original file byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boost import StrongClassifier
from .weak import Stump, Tree

MODEL_MAGIC = "rebel-model"
MODEL_VERSION = 1


class ModelParseError(ValueError):
    def __init__(self, message: str, byte_offset: int):
        self.byte_offset = byte_offset
        super().__init__(f"{message} (byte offset {byte_offset})")


@dataclass
class Dataset:
    """Feature matrix with 1-based integer labels; label_names records the raw-token mapping."""

    features: np.ndarray
    labels: np.ndarray
    k: int
    label_names: list[str] | None = None

    @classmethod
    def from_arrays(cls, features, labels, k: int | None = None) -> "Dataset":
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] == 0:
            raise ValueError("features must be a non-empty (N, d) array")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must be 1-D and aligned with features")
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain non-finite values")
        if k is None:
            k = int(labels.max())
        if labels.min() < 1 or labels.max() > k:
            raise ValueError(f"labels must lie in 1..{k}")
        return cls(features=features, labels=labels, k=k)


def _read_rows(path) -> list[list[str]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped:
                continue  # blank lines (trailing or otherwise) are ignored
            rows.append((line_no, stripped.split(",")))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0][1])
    for line_no, cells in rows:
        if len(cells) != width:
            raise ValueError(f"{path}: line {line_no}: expected {width} cells, got {len(cells)}")
    return rows


def _parse_feature(token: str, path, line_no: int, col: int) -> float:
    try:
        val = float(token)
    except ValueError as exc:
        raise ValueError(f"{path}: line {line_no}, column {col}: not a number: {token!r}") from exc
    if not np.isfinite(val):
        raise ValueError(f"{path}: line {line_no}, column {col}: non-finite value {token!r}")
    return val


def load_dataset(path, labels: str) -> Dataset:
    """Load a feature CSV plus labels from a column or a side file.

    `labels` is "col:IDX" (0-based, negatives count from the end), a bare
    integer meaning the same, or "file:PATH" pointing at one label token per
    line.  Raw label tokens are mapped to 1..K by sorted order and the order
    is kept in label_names.
    """
    rows = _read_rows(path)
    width = len(rows[0][1])

    if labels.startswith("file:"):
        label_path = labels[5:]
        with open(label_path, "r", encoding="utf-8") as fh:
            tokens = [ln.strip() for ln in fh if ln.strip()]
        if len(tokens) != len(rows):
            raise ValueError(f"{label_path}: {len(tokens)} labels for {len(rows)} data rows")
        feature_cols = list(range(width))
    else:
        spec = labels[4:] if labels.startswith("col:") else labels
        try:
            idx = int(spec)
        except ValueError as exc:
            raise ValueError(f"bad label spec {labels!r}; use col:IDX or file:PATH") from exc
        if not -width <= idx < width:
            raise ValueError(f"label column {idx} out of range for {width} columns")
        idx %= width
        tokens = [cells[idx] for _, cells in rows]
        feature_cols = [c for c in range(width) if c != idx]

    if not feature_cols:
        raise ValueError(f"{path}: no feature columns left")
    features = np.empty((len(rows), len(feature_cols)))
    for r, (line_no, cells) in enumerate(rows):
        for c, col in enumerate(feature_cols):
            features[r, c] = _parse_feature(cells[col], path, line_no, col)

    names = sorted(set(tokens))
    index = {name: i + 1 for i, name in enumerate(names)}
    mapped = np.array([index[t] for t in tokens], dtype=np.int64)
    data = Dataset.from_arrays(features, mapped, k=len(names))
    data.label_names = names
    return data


def load_features(path) -> np.ndarray:
    """Load an all-numeric CSV (no label column) as a feature matrix."""
    rows = _read_rows(path)
    features = np.empty((len(rows), len(rows[0][1])))
    for r, (line_no, cells) in enumerate(rows):
        for c, token in enumerate(cells):
            features[r, c] = _parse_feature(token, path, line_no, c)
    return features


def save_dataset(data: Dataset, path) -> None:
    """Write features plus a trailing label-token column."""
    names = data.label_names or [str(i) for i in range(1, data.k + 1)]
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(data.features, data.labels):
            cells = [repr(float(v)) for v in x] + [names[y - 1]]
            fh.write(",".join(cells) + "\n")


# --- model format ---------------------------------------------------------


def model_to_text(model: StrongClassifier) -> str:
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}",
             f"k {model.k}",
             f"d {model.d}",
             f"config {model.fingerprint}",
             "a0 " + " ".join(repr(float(v)) for v in model.a0),
             f"rounds {len(model.rounds)}"]
    for tree, vector in model.rounds:
        lines.append(f"tree {tree.depth}")
        for node in tree.nodes:
            lines.append(f"node {node.feature} {node.threshold!r} {node.polarity}")
        lines.append("a " + " ".join(repr(float(v)) for v in vector))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_model(model: StrongClassifier, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(model))


class _LineReader:
    def __init__(self, text: str):
        self.lines = text.split("\n")
        self.pos = 0
        self.offset = 0  # byte offset of the current line start

    def next(self, what: str) -> tuple[str, int]:
        if self.pos >= len(self.lines):
            raise ModelParseError(f"unexpected end of file, wanted {what}", self.offset)
        line = self.lines[self.pos]
        self.pos += 1
        start = self.offset
        self.offset += len(line.encode("utf-8")) + 1
        return line, start

    def done(self) -> None:
        while self.pos < len(self.lines):
            line, start = self.next("end of file")
            if line.strip():
                raise ModelParseError(f"trailing content {line!r} after end", start)


def _parse_floats(parts: list[str], count: int, what: str, offset: int) -> np.ndarray:
    if len(parts) != count:
        raise ModelParseError(f"{what}: expected {count} values, got {len(parts)}", offset)
    try:
        vals = np.array([float(p) for p in parts])
    except ValueError:
        raise ModelParseError(f"{what}: bad float", offset) from None
    if not np.all(np.isfinite(vals)):
        raise ModelParseError(f"{what}: non-finite value", offset)
    return vals


def model_from_text(text: str) -> StrongClassifier:
    rd = _LineReader(text)

    line, off = rd.next("header")
    parts = line.split()
    if len(parts) != 2 or parts[0] != MODEL_MAGIC:
        raise ModelParseError(f"not a model file (header {line!r})", off)
    if parts[1] != str(MODEL_VERSION):
        raise ModelParseError(f"unsupported model version {parts[1]}", off)

    def keyed_int(key: str) -> int:
        line, off = rd.next(key)
        parts = line.split()
        if len(parts) != 2 or parts[0] != key:
            raise ModelParseError(f"expected '{key} N', got {line!r}", off)
        try:
            return int(parts[1])
        except ValueError:
            raise ModelParseError(f"bad integer in {line!r}", off) from None

    k = keyed_int("k")
    d = keyed_int("d")
    if k < 2 or d < 1:
        raise ModelParseError(f"bad dimensions k={k} d={d}", 0)

    line, off = rd.next("config")
    if not line.startswith("config"):
        raise ModelParseError(f"expected config line, got {line!r}", off)
    fingerprint = line[7:] if len(line) > 7 else ""

    line, off = rd.next("a0")
    parts = line.split()
    if not parts or parts[0] != "a0":
        raise ModelParseError(f"expected a0 line, got {line!r}", off)
    a0 = _parse_floats(parts[1:], k, "a0", off)

    n_rounds = keyed_int("rounds")
    if n_rounds < 0:
        raise ModelParseError(f"negative round count {n_rounds}", 0)

    rounds = []
    for _ in range(n_rounds):
        depth = keyed_int("tree")
        if depth < 1:
            raise ModelParseError(f"bad tree depth {depth}", rd.offset)
        nodes = []
        for _ in range(2 ** depth - 1):
            line, off = rd.next("node")
            parts = line.split()
            if len(parts) != 4 or parts[0] != "node":
                raise ModelParseError(f"expected node line, got {line!r}", off)
            try:
                feature = int(parts[1])
                threshold = float(parts[2])
                polarity = int(parts[3])
            except ValueError:
                raise ModelParseError(f"bad node fields in {line!r}", off) from None
            if not 0 <= feature < d:
                raise ModelParseError(f"node feature {feature} out of range", off)
            if not np.isfinite(threshold):
                raise ModelParseError("non-finite node threshold", off)
            if polarity not in (1, -1):
                raise ModelParseError(f"node polarity must be +-1, got {polarity}", off)
            nodes.append(Stump(feature=feature, threshold=threshold, polarity=polarity))
        line, off = rd.next("a")
        parts = line.split()
        if not parts or parts[0] != "a":
            raise ModelParseError(f"expected a line, got {line!r}", off)
        vector = _parse_floats(parts[1:], k, "a", off)
        rounds.append((Tree(depth=depth, nodes=nodes), vector))

    line, off = rd.next("end")
    if line != "end":
        raise ModelParseError(f"expected end, got {line!r}", off)
    rd.done()
    return StrongClassifier(k=k, d=d, a0=a0, rounds=rounds, fingerprint=fingerprint)


def load_model(path) -> StrongClassifier:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())


def write_trace(trace, path) -> None:
    """Per-round training trace as CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("round,loss,loss_excess,gamma,phi,train_error,train_risk,learner\n")
        for r in trace.rounds:
            learner = f"d{r.depth}:f{r.feature}@{r.threshold!r}"
            fh.write(f"{r.index},{r.loss!r},{r.excess!r},{r.gamma!r},{r.phi!r},"
                     f"{r.train_error!r},{r.train_risk!r},{learner}\n")
