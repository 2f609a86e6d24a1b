"""Multinomial logistic regression trained by full-batch gradient descent.

Loss = mean cross-entropy + (l2/2)*||W||^2 (bias unregularized). Weights start
at zero, so training needs no randomness and is fully deterministic. The
analytic gradient is exposed separately so tests can check it against central
finite differences.
"""
from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    y_pos: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """(loss, dW, db) for class positions y_pos in [0, C)."""
    n = len(x)
    p = softmax(x @ weights + bias)
    loss = float(-np.log(p[np.arange(n), y_pos]).mean() + 0.5 * l2 * (weights**2).sum())
    g = p.copy()
    g[np.arange(n), y_pos] -= 1.0
    g /= n
    return loss, x.T @ g + l2 * weights, g.sum(axis=0)


class LinearModel:
    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    def predict_positions(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(x @ self.weights + self.bias, axis=1)

    def to_state(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "LinearModel":
        return cls(np.array(state["weights"]), np.array(state["bias"]))


def fit_linear(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    learning_rate: float,
    epochs: int,
    l2: float,
) -> LinearModel:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    weights = np.zeros((x.shape[1], n_classes))
    bias = np.zeros(n_classes)
    for _ in range(epochs):
        _, dw, db = loss_and_grad(weights, bias, x, y, l2)
        weights = weights - learning_rate * dw
        bias = bias - learning_rate * db
    return LinearModel(weights, bias)
