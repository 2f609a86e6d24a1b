"""Windowed band-power features with designed-task labels.

A window is `window_rows` consecutive samples; its feature vector is the
per-column mean (optionally plus the per-column standard deviation) of the
absolute band powers, and its label is the manifest segment containing the
window's midpoint time. Windows whose midpoint falls outside every segment,
or that contain non-finite values (uncleaned rows), are dropped and tallied.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Recording, SessionManifest, TaskLabel
from .errors import NonMonotonicTimeError

FEATURE_CSV_PREFIX = ("session", "window_start", "label")


def _locked(a: np.ndarray, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureMatrix:
    """N windowed feature vectors with labels, window times, and session ids."""

    features: np.ndarray  # (N, D) float64, finite
    labels: np.ndarray  # (N,) int64 task ids
    window_start_seconds: np.ndarray  # (N,) float64
    session_index: np.ndarray  # (N,) int64
    task_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", _locked(self.features, np.float64))
        object.__setattr__(self, "labels", _locked(self.labels, np.int64))
        object.__setattr__(
            self, "window_start_seconds", _locked(self.window_start_seconds, np.float64)
        )
        object.__setattr__(self, "session_index", _locked(self.session_index, np.int64))
        n = len(self.features)
        if self.features.ndim != 2:
            raise ValueError("features must be 2-D")
        for name in ("labels", "window_start_seconds", "session_index"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match features")
        if not np.isfinite(self.features).all():
            raise ValueError("features must be finite")
        if n and self.labels.min() < 0:
            raise ValueError("labels must be non-negative task ids")
        for s in np.unique(self.session_index):
            starts = self.window_start_seconds[self.session_index == s]
            if len(starts) > 1 and not np.all(np.diff(starts) > 0):
                raise NonMonotonicTimeError(
                    f"window start times not strictly increasing in session {s}"
                )

    def __len__(self) -> int:
        return len(self.features)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.task_names is not None:
            return len(self.task_names)
        return int(self.labels.max()) + 1 if len(self) else 0

    def sessions(self) -> tuple[int, ...]:
        return tuple(int(s) for s in np.unique(self.session_index))

    def subset(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return FeatureMatrix(
            features=self.features[rows],
            labels=self.labels[rows],
            window_start_seconds=self.window_start_seconds[rows],
            session_index=self.session_index[rows],
            task_names=self.task_names,
        )

    def session_subset(self, session: int) -> "FeatureMatrix":
        return self.subset(np.nonzero(self.session_index == session)[0])


def concat_matrices(parts: list[FeatureMatrix]) -> FeatureMatrix:
    if not parts:
        raise ValueError("nothing to concatenate")
    names = parts[0].task_names
    return FeatureMatrix(
        features=np.concatenate([p.features for p in parts]),
        labels=np.concatenate([p.labels for p in parts]),
        window_start_seconds=np.concatenate([p.window_start_seconds for p in parts]),
        session_index=np.concatenate([p.session_index for p in parts]),
        task_names=names,
    )


@dataclass(frozen=True)
class WindowTally:
    """Windows dropped during extraction, by reason."""

    n_windows: int = 0
    dropped_unlabeled: int = 0
    dropped_nonfinite: int = 0


def window(recording: Recording, window_rows: int, overlap_rows: int = 0) -> list[tuple[int, int]]:
    """Row-index spans [start, stop) of full windows; the trailing partial one
    is discarded. Stride is window_rows - overlap_rows."""
    if window_rows < 1:
        raise ValueError("window_rows must be >= 1")
    if not (0 <= overlap_rows < window_rows):
        raise ValueError("overlap_rows must satisfy 0 <= overlap < window")
    stride = window_rows - overlap_rows
    n = len(recording)
    return [(s, s + window_rows) for s in range(0, n - window_rows + 1, stride)]


def extract_features(
    recording: Recording,
    spans: list[tuple[int, int]],
    manifest: SessionManifest,
    include_std: bool = False,
    task_names: tuple[str, ...] | None = None,
) -> tuple[FeatureMatrix, WindowTally]:
    """Featurize each span: per-column mean (and optionally std) of band power.

    The window label comes from the manifest segment containing the midpoint
    of the window's time span (half-open segments, so boundary windows land
    in the later segment only when the midpoint crosses it).
    """
    m = recording.band_matrix
    t = recording.timestamps
    rows_feat: list[np.ndarray] = []
    rows_label: list[int] = []
    rows_start: list[float] = []
    dropped_unlabeled = 0
    dropped_nonfinite = 0

    for start, stop in spans:
        block = m[start:stop]
        if not np.isfinite(block).all():
            dropped_nonfinite += 1
            continue
        midpoint = (t[start] + t[stop - 1]) / 2.0
        label = manifest.label_at(float(midpoint))
        if label is None:
            dropped_unlabeled += 1
            continue
        mean = block.mean(axis=0)
        vec = np.concatenate([mean, block.std(axis=0)]) if include_std else mean
        rows_feat.append(vec)
        rows_label.append(label.id)
        rows_start.append(float(t[start]))

    d = recording.schema.n_band_columns * (2 if include_std else 1)
    features = np.array(rows_feat) if rows_feat else np.empty((0, d))
    matrix = FeatureMatrix(
        features=features,
        labels=np.array(rows_label, dtype=np.int64),
        window_start_seconds=np.array(rows_start),
        session_index=np.full(len(rows_feat), recording.session_index, dtype=np.int64),
        task_names=task_names,
    )
    tally = WindowTally(
        n_windows=len(matrix),
        dropped_unlabeled=dropped_unlabeled,
        dropped_nonfinite=dropped_nonfinite,
    )
    return matrix, tally


def featurize_study(
    sessions: list[tuple[Recording, SessionManifest]],
    window_rows: int,
    overlap_rows: int = 0,
    include_std: bool = False,
    task_names: tuple[str, ...] | None = None,
) -> tuple[FeatureMatrix, WindowTally]:
    """Window + featurize every session and stack the results."""
    parts = []
    totals = WindowTally()
    for recording, manifest in sessions:
        spans = window(recording, window_rows, overlap_rows)
        part, tally = extract_features(
            recording, spans, manifest, include_std=include_std, task_names=task_names
        )
        parts.append(part)
        totals = WindowTally(
            n_windows=totals.n_windows + tally.n_windows,
            dropped_unlabeled=totals.dropped_unlabeled + tally.dropped_unlabeled,
            dropped_nonfinite=totals.dropped_nonfinite + tally.dropped_nonfinite,
        )
    return concat_matrices(parts), totals


# --- normalization -------------------------------------------------------------


@dataclass(frozen=True)
class Scaler:
    """Per-dimension z-score transform fitted on training rows only.

    Zero-variance dimensions are shifted to 0 but not divided.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Scaler":
        if len(features) == 0:
            raise ValueError("cannot fit a scaler on an empty matrix")
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        return cls(mean=_locked(mean, np.float64), std=_locked(std, np.float64))

    def transform(self, features: np.ndarray) -> np.ndarray:
        divisor = np.where(self.std == 0.0, 1.0, self.std)
        return (features - self.mean) / divisor

    def apply(self, matrix: FeatureMatrix) -> FeatureMatrix:
        return replace(matrix, features=self.transform(matrix.features))


def normalize(
    train: FeatureMatrix, others: list[FeatureMatrix] = ()
) -> tuple[FeatureMatrix, list[FeatureMatrix]]:
    """Z-score train and any held-out matrices using train statistics only."""
    scaler = Scaler.fit(train.features)
    return scaler.apply(train), [scaler.apply(o) for o in others]


# --- CSV form ------------------------------------------------------------------


def matrix_to_csv(matrix: FeatureMatrix) -> str:
    header = list(FEATURE_CSV_PREFIX) + [f"f{i}" for i in range(matrix.n_features)]
    lines = [",".join(header)]
    for i in range(len(matrix)):
        cells = [
            str(int(matrix.session_index[i])),
            repr(float(matrix.window_start_seconds[i])),
            str(int(matrix.labels[i])),
        ]
        cells.extend(repr(float(v)) for v in matrix.features[i])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def matrix_from_csv(text: str, task_names: tuple[str, ...] | None = None) -> FeatureMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ValueError("feature CSV has no header")
    header = [c.strip() for c in rows[0]]
    if tuple(header[:3]) != FEATURE_CSV_PREFIX:
        raise ValueError(f"feature CSV header must start with {','.join(FEATURE_CSV_PREFIX)}")
    d = len(header) - 3
    sessions, starts, labels, feats = [], [], [], []
    for row in rows[1:]:
        if len(row) != len(header):
            raise ValueError("feature CSV row has wrong cell count")
        sessions.append(int(row[0]))
        starts.append(float(row[1]))
        labels.append(int(row[2]))
        feats.append([float(c) for c in row[3:]])
    return FeatureMatrix(
        features=np.array(feats) if feats else np.empty((0, d)),
        labels=np.array(labels, dtype=np.int64),
        window_start_seconds=np.array(starts),
        session_index=np.array(sessions, dtype=np.int64),
        task_names=task_names,
    )


def labels_to_csv(vocabulary: tuple[TaskLabel, ...]) -> str:
    lines = ["id,name"]
    for t in vocabulary:
        lines.append(f"{t.id},{t.name}")
    return "\n".join(lines) + "\n"


def labels_from_csv(text: str) -> tuple[TaskLabel, ...]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or [c.strip().lower() for c in rows[0]] != ["id", "name"]:
        raise ValueError("label CSV header must be id,name")
    return tuple(TaskLabel(int(r[0]), r[1]) for r in rows[1:])
