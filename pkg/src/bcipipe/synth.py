"""Deterministic synthetic studies for tests and acceptance runs.

Each session cycles once through T tasks in fixed segments. Task t shifts the
band-power mean by +delta/2 in its own subset of dimensions (dimension d
belongs to task d mod T) and -delta/2 elsewhere, with seeded Gaussian noise
on top, so class separability is controlled by delta/noise. Artifacts can be
injected afterwards with their exact row positions returned for recall tests.
"""
from __future__ import annotations

import numpy as np

from .core import (
    Recording,
    Sample,
    Schema,
    Segment,
    SessionManifest,
    TaskLabel,
    derive_seed,
    rng_from_seed,
)

ARTIFACT_FLATLINE = "flatline"
ARTIFACT_OUT_OF_RANGE = "out_of_range"
ARTIFACT_DROPOUT = "dropout"
ALL_ARTIFACTS = (ARTIFACT_FLATLINE, ARTIFACT_OUT_OF_RANGE, ARTIFACT_DROPOUT)


def synth_schema() -> Schema:
    """Default generator schema: quality columns present and always clean."""
    base = Schema()
    return Schema(
        electrodes=base.electrodes,
        bands=base.bands,
        sample_rate_hz=base.sample_rate_hz,
        headband_on_column="HeadBandOn",
        hsi_columns=tuple(f"HSI_{e}" for e in base.electrodes),
    )


def task_mean_matrix(n_tasks: int, n_dims: int, delta: float) -> np.ndarray:
    """(n_tasks, n_dims) per-task band-power means, separated by delta."""
    means = np.full((n_tasks, n_dims), -delta / 2.0)
    for d in range(n_dims):
        means[d % n_tasks, d] = delta / 2.0
    return means


def generate_study(
    n_tasks: int = 4,
    n_sessions: int = 6,
    segment_seconds: float = 30.0,
    schema: Schema | None = None,
    delta: float = 3.5,
    noise: float = 0.35,
    seed: int = 0,
    subject_id: str = "1",
) -> list[tuple[Recording, SessionManifest]]:
    """Generate a study of `n_sessions` recordings with ground-truth manifests.

    delta=0 makes every task statistically identical; delta >> noise makes
    them trivially separable. Deterministic given the seed.
    """
    if n_tasks < 2:
        raise ValueError("need at least 2 tasks")
    if n_sessions < 1:
        raise ValueError("need at least 1 session")
    if delta < 0 or noise < 0:
        raise ValueError("delta and noise must be non-negative")
    schema = schema if schema is not None else synth_schema()
    rate = schema.sample_rate_hz
    rows_per_segment = int(round(segment_seconds * rate))
    if rows_per_segment < 1:
        raise ValueError("segment_seconds too small for the sample rate")
    n_dims = schema.n_band_columns
    means = task_mean_matrix(n_tasks, n_dims, delta)
    labels = tuple(TaskLabel(t, f"task{t + 1}") for t in range(n_tasks))
    has_quality = schema.headband_on_column is not None
    hsi = tuple(1 for _ in schema.electrodes) if schema.hsi_columns else None

    sessions = []
    for s in range(n_sessions):
        rng = rng_from_seed(derive_seed(seed, "synth-session", s))
        samples = []
        segments = []
        row = 0
        for t in range(n_tasks):
            start = t * rows_per_segment / rate
            end = (t + 1) * rows_per_segment / rate
            segments.append(Segment(labels[t], start, end))
            block = means[t] + noise * rng.standard_normal((rows_per_segment, n_dims))
            for k in range(rows_per_segment):
                samples.append(
                    Sample(
                        timestamp=row / rate,
                        band_power=block[k].reshape(schema.n_electrodes, schema.n_bands),
                        headband_on=True if has_quality else None,
                        contact_quality=hsi,
                    )
                )
                row += 1
        sessions.append(
            (
                Recording(
                    schema=schema,
                    subject_id=subject_id,
                    session_index=s + 1,
                    samples=tuple(samples),
                ),
                SessionManifest(segments=tuple(segments)),
            )
        )
    return sessions


def inject_artifacts(
    recording: Recording,
    kinds=ALL_ARTIFACTS,
    rate: float = 0.02,
    seed: int = 0,
    run_length: int = 20,
    out_of_range_value: float = 10.0,
) -> tuple[Recording, dict[str, tuple[int, ...]]]:
    """Corrupt ~rate of the rows per requested kind at seeded positions.

    Kinds: flatline (a run of `run_length` identical in-range values in one
    band column), out_of_range (one cell pushed past the clean range), dropout
    (one cell set to NaN). Injected regions never overlap, and the exact row
    indices are returned per kind so cleaning recall can be verified.
    """
    if not (0.0 <= rate <= 1.0):
        raise ValueError("rate must be in [0, 1]")
    unknown = set(kinds) - set(ALL_ARTIFACTS)
    if unknown:
        raise ValueError(f"unknown artifact kinds: {sorted(unknown)}")
    n = len(recording)
    injected: dict[str, tuple[int, ...]] = {kind: () for kind in kinds}
    if rate == 0.0 or n == 0 or not kinds:
        return recording, injected

    rng = rng_from_seed(derive_seed(seed, "artifacts", 0))
    matrix = np.array(recording.band_matrix, copy=True)
    n_dims = matrix.shape[1]
    used = np.zeros(n, dtype=bool)
    budget = max(1, round(rate * n))

    def claim_run(length: int) -> int | None:
        for start in rng.permutation(max(n - length + 1, 0)):
            if not used[start : start + length].any():
                used[start : start + length] = True
                return int(start)
        return None

    for kind in ALL_ARTIFACTS:  # fixed order keeps the layout seed-stable
        if kind not in kinds:
            continue
        rows: list[int] = []
        if kind == ARTIFACT_FLATLINE:
            remaining = budget
            while remaining > 0:
                # always a full run: shorter ones would not count as flatline
                length = run_length
                start = claim_run(length)
                if start is None:
                    break
                col = int(rng.integers(n_dims))
                matrix[start : start + length, col] = matrix[start, col]
                rows.extend(range(start, start + length))
                remaining -= length
        else:
            for _ in range(budget):
                start = claim_run(1)
                if start is None:
                    break
                col = int(rng.integers(n_dims))
                if kind == ARTIFACT_OUT_OF_RANGE:
                    matrix[start, col] = out_of_range_value
                else:
                    matrix[start, col] = np.nan
                rows.append(start)
        injected[kind] = tuple(sorted(rows))

    shape = (recording.schema.n_electrodes, recording.schema.n_bands)
    samples = []
    for i, s in enumerate(recording.samples):
        samples.append(
            Sample(
                timestamp=s.timestamp,
                band_power=matrix[i].reshape(shape),
                headband_on=s.headband_on,
                contact_quality=s.contact_quality,
            )
        )
    out = Recording(
        schema=recording.schema,
        subject_id=recording.subject_id,
        session_index=recording.session_index,
        samples=tuple(samples),
    )
    return out, injected
