"""Time Majority Voting: temporal smoothing of per-window prediction streams.

The window sequence is cut into consecutive blocks of `block_windows` (the
final block may be shorter); every prediction in a block is replaced by the
block's majority label, ties going to the lowest label id. Fusing two models
pools both prediction streams per block before taking the majority.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError
from .features import FeatureMatrix
from .learn import TrainedModel

TRACES_CSV_HEADER = "session,window_start,raw_label,smoothed_label,source"
FUSED_SOURCE = "fused"


@dataclass(frozen=True)
class PredictionTrace:
    """One model's predictions over one session, raw and smoothed."""

    session_index: int
    window_start_seconds: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray
    source: str

    def __post_init__(self):
        t = np.array(self.window_start_seconds, dtype=np.float64)
        raw = np.array(self.raw, dtype=np.int64)
        smoothed = np.array(self.smoothed, dtype=np.int64)
        if not (len(t) == len(raw) == len(smoothed)):
            raise LengthMismatchError("trace arrays must have equal lengths")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("trace window times must be strictly increasing")
        for name, arr in (("window_start_seconds", t), ("raw", raw), ("smoothed", smoothed)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.raw)


def _block_majority(votes: np.ndarray, n_classes: int) -> int:
    return int(np.argmax(np.bincount(votes, minlength=n_classes)))


def time_majority_vote(raw, block_windows: int) -> np.ndarray:
    """Replace each prediction by its block's majority label."""
    if block_windows < 1:
        raise ValueError("block_windows must be >= 1")
    raw = np.asarray(raw, dtype=np.int64)
    if len(raw) == 0:
        return raw.copy()
    n_classes = int(raw.max()) + 1
    out = np.empty_like(raw)
    for start in range(0, len(raw), block_windows):
        block = raw[start : start + block_windows]
        out[start : start + len(block)] = _block_majority(block, n_classes)
    return out


def fuse_two(raw_a, raw_b, block_windows: int) -> np.ndarray:
    """Per block, pool both models' predictions (2x block votes) and take the
    majority; ties go to the lowest label id."""
    if block_windows < 1:
        raise ValueError("block_windows must be >= 1")
    a = np.asarray(raw_a, dtype=np.int64)
    b = np.asarray(raw_b, dtype=np.int64)
    if len(a) != len(b):
        raise LengthMismatchError(f"trace lengths differ: {len(a)} vs {len(b)}")
    if len(a) == 0:
        return a.copy()
    n_classes = int(max(a.max(), b.max())) + 1
    out = np.empty_like(a)
    for start in range(0, len(a), block_windows):
        stop = min(start + block_windows, len(a))
        pooled = np.concatenate([a[start:stop], b[start:stop]])
        out[start:stop] = _block_majority(pooled, n_classes)
    return out


def _pairwise_vote(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # elementwise two-model vote; disagreement goes to the lower label id
    return np.minimum(a, b)


def tmv_pipeline(
    model_a: TrainedModel,
    model_b: TrainedModel,
    session_matrices: list[FeatureMatrix],
    block_windows: int,
) -> list[PredictionTrace]:
    """Predict each session with both models and emit three traces per
    session: each model smoothed on its own, plus the pooled fusion of the
    two."""
    traces: list[PredictionTrace] = []
    for matrix in session_matrices:
        sessions = matrix.sessions()
        if len(sessions) != 1:
            raise ValueError("each matrix passed to tmv_pipeline must hold one session")
        session = sessions[0]
        t = matrix.window_start_seconds
        raw_a = model_a.predict(matrix.features)
        raw_b = model_b.predict(matrix.features)
        traces.append(
            PredictionTrace(
                session_index=session,
                window_start_seconds=t,
                raw=raw_a,
                smoothed=time_majority_vote(raw_a, block_windows),
                source=model_a.spec.name,
            )
        )
        traces.append(
            PredictionTrace(
                session_index=session,
                window_start_seconds=t,
                raw=raw_b,
                smoothed=time_majority_vote(raw_b, block_windows),
                source=model_b.spec.name,
            )
        )
        traces.append(
            PredictionTrace(
                session_index=session,
                window_start_seconds=t,
                raw=_pairwise_vote(raw_a, raw_b),
                smoothed=fuse_two(raw_a, raw_b, block_windows),
                source=FUSED_SOURCE,
            )
        )
    return traces


def block_accuracy(smoothed, designed, block_windows: int) -> float:
    """Fraction of blocks whose smoothed label matches the block's majority
    designed label."""
    smoothed = np.asarray(smoothed, dtype=np.int64)
    designed = np.asarray(designed, dtype=np.int64)
    if len(smoothed) != len(designed):
        raise LengthMismatchError("smoothed and designed lengths differ")
    if len(smoothed) == 0:
        return 0.0
    n_classes = int(max(smoothed.max(), designed.max())) + 1
    hits = 0
    blocks = 0
    for start in range(0, len(smoothed), block_windows):
        stop = min(start + block_windows, len(smoothed))
        want = _block_majority(designed[start:stop], n_classes)
        got = _block_majority(smoothed[start:stop], n_classes)
        hits += int(want == got)
        blocks += 1
    return hits / blocks


def traces_to_csv(traces: list[PredictionTrace]) -> str:
    lines = [TRACES_CSV_HEADER]
    for trace in traces:
        for i in range(len(trace)):
            lines.append(
                f"{trace.session_index},{repr(float(trace.window_start_seconds[i]))},"
                f"{int(trace.raw[i])},{int(trace.smoothed[i])},{trace.source}"
            )
    return "\n".join(lines) + "\n"


def traces_from_csv(text: str) -> list[PredictionTrace]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or [c.strip() for c in rows[0]] != TRACES_CSV_HEADER.split(","):
        raise ValueError(f"trace CSV header must be {TRACES_CSV_HEADER}")
    grouped: dict[tuple[int, str], list[tuple[float, int, int]]] = {}
    order: list[tuple[int, str]] = []
    for row in rows[1:]:
        if len(row) != 5:
            raise ValueError("trace CSV row has wrong cell count")
        key = (int(row[0]), row[4])
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append((float(row[1]), int(row[2]), int(row[3])))
    traces = []
    for session, source in order:
        entries = grouped[(session, source)]
        traces.append(
            PredictionTrace(
                session_index=session,
                window_start_seconds=np.array([e[0] for e in entries]),
                raw=np.array([e[1] for e in entries], dtype=np.int64),
                smoothed=np.array([e[2] for e in entries], dtype=np.int64),
                source=source,
            )
        )
    return traces
