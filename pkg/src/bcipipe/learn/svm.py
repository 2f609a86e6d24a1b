"""RBF-kernel SVM trained with sequential minimal optimization.

The solver sweeps the dataset looking for KKT violations beyond `tol`. For a
violating point it tries a seeded random partner, then the largest-|E_i - E_j|
partner, then a scan from a random start (a pair step can fail when the
feasible segment is degenerate). A sweep with no accepted update means every
point satisfies the KKT conditions within tol. Multiclass is one-vs-rest with
ties going to the lowest class position.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import derive_seed, rng_from_seed
from ..errors import SingleClassDataError

_MIN_STEP = 1e-5  # reject pair updates smaller than this


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2); 1.0 at zero distance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.exp(-gamma * ((x - y) ** 2).sum()))


def rbf_kernel_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


@dataclass
class SmoResult:
    alphas: np.ndarray
    bias: float
    converged: bool
    sweeps: int
    objective_trace: list[float] | None = None


def dual_objective(k: np.ndarray, y: np.ndarray, alphas: np.ndarray) -> float:
    v = alphas * y
    return float(alphas.sum() - 0.5 * v @ k @ v)


def kkt_violations(
    k: np.ndarray, y: np.ndarray, alphas: np.ndarray, bias: float, c: float
) -> np.ndarray:
    """Per-point KKT residuals of the soft-margin dual.

    alpha=0 wants margin >= 1, alpha=C wants margin <= 1, interior wants
    margin = 1; the residual is how far the margin is on the wrong side.
    """
    f = (alphas * y) @ k + bias
    margin = y * f
    eps = 1e-8 * max(c, 1.0)
    return np.where(
        alphas <= eps,
        np.maximum(0.0, 1.0 - margin),
        np.where(alphas >= c - eps, np.maximum(0.0, margin - 1.0), np.abs(margin - 1.0)),
    )


def _take_step(i, j, k, y, alphas, bias, errors, c):
    """Analytic two-variable update. Returns the new bias or None if no step."""
    if i == j:
        return None
    ai, aj = alphas[i], alphas[j]
    if y[i] != y[j]:
        low, high = max(0.0, aj - ai), min(c, c + aj - ai)
    else:
        low, high = max(0.0, ai + aj - c), min(c, ai + aj)
    if low >= high:
        return None
    eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
    if eta >= 0.0:
        return None
    aj_new = aj - y[j] * (errors[i] - errors[j]) / eta
    aj_new = min(high, max(low, aj_new))
    if abs(aj_new - aj) < _MIN_STEP:
        return None
    ai_new = ai + y[i] * y[j] * (aj - aj_new)
    di, dj = ai_new - ai, aj_new - aj
    b1 = bias - errors[i] - y[i] * di * k[i, i] - y[j] * dj * k[i, j]
    b2 = bias - errors[j] - y[i] * di * k[i, j] - y[j] * dj * k[j, j]
    if 0.0 < ai_new < c:
        b_new = b1
    elif 0.0 < aj_new < c:
        b_new = b2
    else:
        b_new = (b1 + b2) / 2.0
    errors += y[i] * di * k[:, i] + y[j] * dj * k[:, j] + (b_new - bias)
    alphas[i], alphas[j] = ai_new, aj_new
    return b_new


def smo_fit(
    x: np.ndarray,
    y: np.ndarray,
    c: float,
    gamma: float,
    tol: float,
    max_passes: int,
    seed: int,
    max_sweeps: int = 1000,
    track_objective: bool = False,
) -> SmoResult:
    """Solve the binary soft-margin dual for labels y in {-1, +1}."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not ((y > 0).any() and (y < 0).any()):
        raise SingleClassDataError("SMO needs both classes present")
    n = len(y)
    k = rbf_kernel_matrix(x, x, gamma)
    alphas = np.zeros(n)
    bias = 0.0
    errors = -y.copy()  # decision function starts at 0
    rng = rng_from_seed(seed)
    trace: list[float] | None = [] if track_objective else None

    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            r = y[i] * errors[i]
            if not ((r < -tol and alphas[i] < c) or (r > tol and alphas[i] > 0)):
                continue
            candidates: list[int] = []
            if n > 1:
                j = int(rng.integers(n - 1))
                candidates.append(j + 1 if j >= i else j)
            gaps = np.abs(errors - errors[i])
            gaps[i] = -1.0
            candidates.append(int(np.argmax(gaps)))
            start = int(rng.integers(n))
            candidates.extend((start + off) % n for off in range(n))
            for j in candidates:
                b_new = _take_step(i, j, k, y, alphas, bias, errors, c)
                if b_new is not None:
                    bias = b_new
                    changed += 1
                    if trace is not None:
                        trace.append(dual_objective(k, y, alphas))
                    break
        sweeps += 1
        passes = passes + 1 if changed == 0 else 0

    return SmoResult(
        alphas=alphas,
        bias=bias,
        converged=passes >= max_passes,
        sweeps=sweeps,
        objective_trace=trace,
    )


@dataclass
class _BinaryMachine:
    sv_x: np.ndarray
    sv_coef: np.ndarray  # alpha_i * y_i at the support vectors
    bias: float

    def scores(self, x: np.ndarray, gamma: float) -> np.ndarray:
        if len(self.sv_x) == 0:
            return np.full(len(x), self.bias)
        return rbf_kernel_matrix(x, self.sv_x, gamma) @ self.sv_coef + self.bias


class SvmModel:
    """One-vs-rest ensemble of binary RBF machines over class positions."""

    def __init__(self, machines: list[_BinaryMachine], gamma: float, n_classes: int):
        self.machines = machines
        self.gamma = gamma
        self.n_classes = n_classes

    def predict_positions(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        scores = np.column_stack([m.scores(x, self.gamma) for m in self.machines])
        return scores.argmax(axis=1)

    def to_state(self) -> dict:
        return {
            "gamma": self.gamma,
            "n_classes": self.n_classes,
            "machines": [
                {"sv_x": m.sv_x.tolist(), "sv_coef": m.sv_coef.tolist(), "bias": m.bias}
                for m in self.machines
            ],
        }

    @classmethod
    def from_state(cls, state: dict) -> "SvmModel":
        machines = [
            _BinaryMachine(
                sv_x=(
                    np.array(m["sv_x"], dtype=np.float64)
                    if m["sv_x"]
                    else np.empty((0, 0))
                ),
                sv_coef=np.array(m["sv_coef"], dtype=np.float64),
                bias=float(m["bias"]),
            )
            for m in state["machines"]
        ]
        return cls(machines, float(state["gamma"]), int(state["n_classes"]))


def fit_svm(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    c: float,
    gamma: float,
    tol: float,
    max_passes: int,
    seed: int,
) -> SvmModel:
    """Fit one binary machine per class position present in y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    machines = []
    for pos in range(n_classes):
        binary = np.where(y == pos, 1.0, -1.0)
        result = smo_fit(x, binary, c, gamma, tol, max_passes, derive_seed(seed, "ovr", pos))
        keep = result.alphas > 0.0
        machines.append(
            _BinaryMachine(
                sv_x=x[keep],
                sv_coef=result.alphas[keep] * binary[keep],
                bias=result.bias,
            )
        )
    return SvmModel(machines, gamma, n_classes)
