"""Brute-force k-nearest-neighbors.

Neighbor order is (squared distance, training-row index) via a stable argsort;
vote ties go to the lowest class position. Exactly reproducible against a
naive all-pairs oracle.
"""
from __future__ import annotations

import numpy as np


class KnnModel:
    def __init__(self, train_x: np.ndarray, train_y: np.ndarray, k: int, n_classes: int):
        self.train_x = np.asarray(train_x, dtype=np.float64)
        self.train_y = np.asarray(train_y, dtype=np.int64)
        self.k = int(k)
        self.n_classes = int(n_classes)

    def predict_positions(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        k = min(self.k, len(self.train_y))
        out = np.empty(len(x), dtype=np.int64)
        for i in range(len(x)):
            d2 = ((self.train_x - x[i]) ** 2).sum(axis=1)
            neighbors = np.argsort(d2, kind="stable")[:k]
            votes = np.bincount(self.train_y[neighbors], minlength=self.n_classes)
            out[i] = votes.argmax()
        return out

    def to_state(self) -> dict:
        return {
            "k": self.k,
            "n_classes": self.n_classes,
            "train_x": self.train_x.tolist(),
            "train_y": self.train_y.tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "KnnModel":
        return cls(
            np.array(state["train_x"], dtype=np.float64),
            np.array(state["train_y"], dtype=np.int64),
            int(state["k"]),
            int(state["n_classes"]),
        )


def fit_knn(x: np.ndarray, y: np.ndarray, n_classes: int, k: int) -> KnnModel:
    return KnnModel(x, y, k, n_classes)
