"""Random forest: seeded bootstrap + per-node feature subsampling over trees.

Each tree gets its own generator derived from the training seed, so trees can
be fitted in any order (or in parallel) with bitwise-identical results; votes
merge in tree-index order and class ties resolve to the lowest position.
"""
from __future__ import annotations

import numpy as np

from ..core import derive_seed, rng_from_seed
from .tree import DecisionTreeModel, fit_tree


class ForestModel:
    def __init__(self, trees: list[DecisionTreeModel], n_classes: int):
        self.trees = trees
        self.n_classes = n_classes

    def predict_positions(self, x: np.ndarray) -> np.ndarray:
        votes = np.zeros((len(x), self.n_classes), dtype=np.int64)
        for tree in self.trees:
            pos = tree.predict_positions(x)
            votes[np.arange(len(x)), pos] += 1
        return votes.argmax(axis=1)

    def to_state(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "trees": [t.root.to_doc() for t in self.trees],
        }

    @classmethod
    def from_state(cls, state: dict) -> "ForestModel":
        from .tree import Node

        n_classes = int(state["n_classes"])
        trees = [DecisionTreeModel(Node.from_doc(doc), n_classes) for doc in state["trees"]]
        return cls(trees, n_classes)


def fit_forest(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_trees: int,
    max_features: int,
    bootstrap: bool,
    max_depth: int | None,
    min_samples_split: int,
    seed: int,
) -> ForestModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    trees = []
    for i in range(n_trees):
        rng = rng_from_seed(derive_seed(seed, "tree", i))
        if bootstrap:
            idx = rng.integers(0, n, size=n)
            xs, ys = x[idx], y[idx]
        else:
            xs, ys = x, y
        trees.append(
            fit_tree(
                xs,
                ys,
                n_classes,
                max_depth=max_depth,
                min_samples_split=min_samples_split,
                max_features=max_features if max_features < x.shape[1] else None,
                rng=rng,
            )
        )
    return ForestModel(trees, n_classes)
