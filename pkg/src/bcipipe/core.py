"""Core domain types shared by every pipeline stage.

A study is one subject's set of recording sessions. Each session is a
`Recording` (time-ordered band-power rows conforming to a `Schema`) plus a
`SessionManifest` giving the designed task per time segment. Task labels are
dense integers so confusion matrices can be plain T x T arrays.

All types here are immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

DEFAULT_ELECTRODES = ("TP9", "AF7", "AF8", "TP10")
DEFAULT_BANDS = ("delta", "theta", "alpha", "beta", "gamma")
DEFAULT_SAMPLE_RATE_HZ = 10.0

_U64 = 0xFFFFFFFFFFFFFFFF


def derive_seed(master_seed: int, purpose: str, index: int) -> int:
    """Derive a 64-bit seed from (master_seed, purpose, index).

    Pure and platform-independent: the triple is hashed with SHA-256 and the
    first 8 bytes are returned as an unsigned integer. Derived seeds may be
    used as masters for further derivation (e.g. one seed per forest tree).
    """
    payload = (
        struct.pack(">Q", master_seed & _U64)
        + purpose.encode("utf-8")
        + struct.pack(">Q", index & _U64)
    )
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def rng_from_seed(seed: int) -> np.random.Generator:
    """Generator seeded with a value from derive_seed."""
    return np.random.Generator(np.random.PCG64(seed & _U64))


@dataclass(frozen=True, order=True)
class TaskLabel:
    """One task class: dense id (0..T-1 within a study) plus display name."""

    id: int
    name: str

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"task id must be non-negative, got {self.id}")
        if not self.name:
            raise ValueError("task name must be non-empty")


@dataclass(frozen=True)
class Schema:
    """Column layout of a band-power recording.

    `electrodes` and `bands` are ordered; a recording row carries one value
    per (electrode, band) pair. Optional quality columns: a headband-on flag
    and one contact-quality (HSI) column per electrode.
    """

    electrodes: tuple[str, ...] = DEFAULT_ELECTRODES
    bands: tuple[str, ...] = DEFAULT_BANDS
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    headband_on_column: str | None = None
    hsi_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.electrodes) < 1:
            raise ValueError("schema needs at least one electrode")
        if len(self.bands) < 1:
            raise ValueError("schema needs at least one band")
        if len(set(self.electrodes)) != len(self.electrodes):
            raise ValueError("duplicate electrode names")
        if len(set(self.bands)) != len(self.bands):
            raise ValueError("duplicate band names")
        if not (self.sample_rate_hz > 0):
            raise ValueError("sample_rate_hz must be positive")

    @property
    def n_electrodes(self) -> int:
        return len(self.electrodes)

    @property
    def n_bands(self) -> int:
        return len(self.bands)

    @property
    def n_band_columns(self) -> int:
        return len(self.electrodes) * len(self.bands)

    def feature_names(self) -> tuple[str, ...]:
        """Flattened (electrode-major) names for the band-power dimensions."""
        return tuple(f"{b}_{e}" for e in self.electrodes for b in self.bands)


def _locked(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Sample:
    """One recording row: timestamp plus an (electrodes x bands) power matrix.

    `timestamp` is seconds since session start. Quality fields are None when
    the source file carries no quality columns; individual contact codes may
    be None when a cell was unreadable.
    """

    timestamp: float
    band_power: np.ndarray
    headband_on: bool | None = None
    contact_quality: tuple[int | None, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "band_power", _locked(self.band_power))
        if self.band_power.ndim != 2:
            raise ValueError("band_power must be a 2-D (electrodes x bands) matrix")
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")


@dataclass(frozen=True)
class Recording:
    """One session's samples under a fixed schema."""

    schema: Schema
    subject_id: str
    session_index: int
    samples: tuple[Sample, ...]

    def __post_init__(self):
        if self.session_index < 1:
            raise ValueError("session_index must be >= 1")
        shape = (self.schema.n_electrodes, self.schema.n_bands)
        for s in self.samples:
            if s.band_power.shape != shape:
                raise ValueError(
                    f"sample shape {s.band_power.shape} does not match schema {shape}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def timestamps(self) -> np.ndarray:
        t = np.array([s.timestamp for s in self.samples], dtype=np.float64)
        t.setflags(write=False)
        return t

    @cached_property
    def band_matrix(self) -> np.ndarray:
        """All samples flattened to (n_samples, electrodes*bands), electrode-major."""
        if not self.samples:
            m = np.empty((0, self.schema.n_band_columns), dtype=np.float64)
        else:
            m = np.stack([s.band_power.ravel() for s in self.samples])
        m.setflags(write=False)
        return m

    @property
    def duration_seconds(self) -> float:
        """Nominal span covered by the samples (last row spans one period)."""
        if not self.samples:
            return 0.0
        return float(self.samples[-1].timestamp) + 1.0 / self.schema.sample_rate_hz

    def check_invariants(self) -> list[str]:
        """Soft invariants: violations are reported, not raised.

        Ingest deliberately keeps out-of-order rows (with a warning), so
        monotonicity is a validator rather than a constructor check.
        """
        problems = []
        t = self.timestamps
        if len(t) > 1 and np.any(np.diff(t) < 0):
            problems.append("timestamps not non-decreasing")
        return problems


@dataclass(frozen=True)
class Segment:
    """One designed-task span: [start_seconds, end_seconds)."""

    label: TaskLabel
    start_seconds: float
    end_seconds: float

    def __post_init__(self):
        if not (self.start_seconds < self.end_seconds):
            raise ValueError("segment start must be < end")
        if self.start_seconds < 0:
            raise ValueError("segment start must be >= 0")

    def contains(self, t: float) -> bool:
        return self.start_seconds <= t < self.end_seconds


@dataclass(frozen=True)
class SessionManifest:
    """Ordered designed-task segments for one session."""

    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        prev_end = None
        for seg in self.segments:
            if prev_end is not None and seg.start_seconds < prev_end:
                raise ValueError("manifest segments must be non-overlapping and increasing")
            prev_end = seg.end_seconds

    def label_at(self, t: float) -> TaskLabel | None:
        for seg in self.segments:
            if seg.contains(t):
                return seg.label
        return None

    @property
    def end_seconds(self) -> float:
        return self.segments[-1].end_seconds if self.segments else 0.0

    def task_labels(self) -> tuple[TaskLabel, ...]:
        seen: dict[int, TaskLabel] = {}
        for seg in self.segments:
            seen.setdefault(seg.label.id, seg.label)
        return tuple(seen[i] for i in sorted(seen))


def task_vocabulary(manifests: list[SessionManifest]) -> tuple[TaskLabel, ...]:
    """Union of task labels across manifests, ordered by id (dense 0..T-1)."""
    seen: dict[int, TaskLabel] = {}
    for m in manifests:
        for lab in m.task_labels():
            prev = seen.setdefault(lab.id, lab)
            if prev.name != lab.name:
                raise ValueError(f"task id {lab.id} has two names: {prev.name!r}, {lab.name!r}")
    labels = tuple(seen[i] for i in sorted(seen))
    if labels and [l.id for l in labels] != list(range(len(labels))):
        raise ValueError("task ids must be dense 0..T-1")
    return labels
