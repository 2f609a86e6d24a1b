"""Decision tree with exhaustive midpoint threshold search on gini gain.

Determinism rules: candidate thresholds are midpoints between consecutive
distinct sorted values; gain ties resolve to the lowest feature index, then
the lowest threshold; leaf votes resolve to the lowest class position.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ZeroTotalError


def gini_impurity(class_counts) -> float:
    """1 - sum((c_i / n)^2) over class counts; 0 for a pure node."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if (counts < 0).any():
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ZeroTotalError("gini impurity needs at least one sample")
    p = counts / total
    return float(1.0 - (p * p).sum())


@dataclass
class Node:
    feature: int = -1
    threshold: float = 0.0
    left: "Node | None" = None
    right: "Node | None" = None
    label: int = -1  # class position payload when feature < 0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    def to_doc(self) -> dict:
        if self.is_leaf:
            return {"label": int(self.label)}
        return {
            "feature": int(self.feature),
            "threshold": float(self.threshold),
            "left": self.left.to_doc(),
            "right": self.right.to_doc(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Node":
        if "label" in doc:
            return cls(label=int(doc["label"]))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=cls.from_doc(doc["left"]),
            right=cls.from_doc(doc["right"]),
        )


def _best_split_for_feature(col: np.ndarray, y: np.ndarray, n_classes: int, parent: float):
    """(gain, threshold) of the best midpoint split, or None if unsplittable."""
    order = np.argsort(col, kind="stable")
    v = col[order]
    lab = y[order]
    cut = np.nonzero(v[1:] != v[:-1])[0]
    if len(cut) == 0:
        return None
    n = len(v)
    cum = np.cumsum(lab[:, None] == np.arange(n_classes)[None, :], axis=0)
    left_counts = cum[cut].astype(np.float64)
    total = cum[-1].astype(np.float64)
    left_n = (cut + 1).astype(np.float64)
    right_n = n - left_n
    right_counts = total - left_counts
    gini_left = 1.0 - ((left_counts / left_n[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right_counts / right_n[:, None]) ** 2).sum(axis=1)
    child = (left_n * gini_left + right_n * gini_right) / n
    gain = parent - child
    best = int(np.argmax(gain))  # first max = lowest threshold
    return float(gain[best]), float((v[cut[best]] + v[cut[best] + 1]) / 2.0)


def _majority(y: np.ndarray, n_classes: int) -> int:
    return int(np.argmax(np.bincount(y, minlength=n_classes)))


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    depth: int,
    max_depth: int | None,
    min_samples_split: int,
    max_features: int | None,
    rng: np.random.Generator | None,
) -> Node:
    counts = np.bincount(y, minlength=n_classes)
    if (
        (counts > 0).sum() <= 1
        or len(y) < min_samples_split
        or (max_depth is not None and depth >= max_depth)
    ):
        return Node(label=_majority(y, n_classes))

    d = x.shape[1]
    if max_features is not None and max_features < d:
        assert rng is not None
        candidates = np.sort(rng.choice(d, size=max_features, replace=False))
    else:
        candidates = np.arange(d)

    parent = gini_impurity(counts)
    best_gain = 0.0
    best_feature = -1
    best_threshold = 0.0
    for f in candidates:
        found = _best_split_for_feature(x[:, f], y, n_classes, parent)
        if found is None:
            continue
        gain, threshold = found
        if gain > best_gain:  # strict: ties keep the lower feature index
            best_gain, best_feature, best_threshold = gain, int(f), threshold
    if best_feature < 0:
        return Node(label=_majority(y, n_classes))

    mask = x[:, best_feature] <= best_threshold
    left = _grow(x[mask], y[mask], n_classes, depth + 1, max_depth, min_samples_split, max_features, rng)
    right = _grow(x[~mask], y[~mask], n_classes, depth + 1, max_depth, min_samples_split, max_features, rng)
    return Node(feature=best_feature, threshold=best_threshold, left=left, right=right)


def _predict_into(node: Node, x: np.ndarray, out: np.ndarray, idx: np.ndarray) -> None:
    if len(idx) == 0:
        return
    if node.is_leaf:
        out[idx] = node.label
        return
    mask = x[idx, node.feature] <= node.threshold
    _predict_into(node.left, x, out, idx[mask])
    _predict_into(node.right, x, out, idx[~mask])


class DecisionTreeModel:
    """Fitted tree over class positions 0..C-1; the wrapper maps to task ids."""

    def __init__(self, root: Node, n_classes: int):
        self.root = root
        self.n_classes = n_classes

    def predict_positions(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(len(x), dtype=np.int64)
        _predict_into(self.root, x, out, np.arange(len(x)))
        return out

    def to_state(self) -> dict:
        return {"n_classes": self.n_classes, "root": self.root.to_doc()}

    @classmethod
    def from_state(cls, state: dict) -> "DecisionTreeModel":
        return cls(Node.from_doc(state["root"]), int(state["n_classes"]))


def fit_tree(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTreeModel:
    """Grow a tree on class positions; y must be ints in [0, n_classes)."""
    root = _grow(
        np.asarray(x, dtype=np.float64),
        np.asarray(y, dtype=np.int64),
        n_classes,
        depth=0,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        max_features=max_features,
        rng=rng,
    )
    return DecisionTreeModel(root, n_classes)
