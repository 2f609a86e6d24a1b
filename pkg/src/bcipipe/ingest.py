"""Parse exported band-power recordings and designed-task manifests.

Input grammar (see docs/formats.md): UTF-8 CSV, first row header, columns
`TimeStamp` + `<Band>_<Electrode>` + optional `HeadBandOn` / `HSI_<Electrode>`.
The timestamp column accepts ISO-8601 datetimes or raw seconds; both are
re-based so the first kept row starts at 0. Parsing is total: malformed rows
become warnings, never crashes, and cleaning decides exclusion later.
"""
from __future__ import annotations

import csv
import io
import logging
import re
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .core import (
    DEFAULT_BANDS,
    Recording,
    Sample,
    Schema,
    Segment,
    SessionManifest,
    TaskLabel,
)
from .errors import (
    DuplicateColumnError,
    DuplicateSessionError,
    ManifestFormatError,
    ManifestOutOfRangeError,
    MissingHeaderError,
    MissingTimestampError,
    NoBandColumnsError,
    SchemaMismatchError,
    UnpairedFileError,
)

log = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.csv"

WARN_ROW_ARITY = "row_arity"
WARN_NON_NUMERIC = "non_numeric_cell"
WARN_BAD_TIMESTAMP = "bad_timestamp"
WARN_OUT_OF_ORDER = "out_of_order_timestamp"
WARN_BAD_QUALITY = "bad_quality_cell"


@dataclass(frozen=True)
class RawRow:
    """One data line as split from the file (line 1 is the header)."""

    line_number: int
    cells: tuple[str, ...]

    def __post_init__(self):
        if self.line_number < 2:
            raise ValueError("data rows start at line 2")


@dataclass(frozen=True)
class ParseWarning:
    line_number: int
    kind: str
    message: str


@dataclass(frozen=True)
class _Layout:
    """Resolved column positions for one header."""

    schema: Schema
    timestamp_col: int
    band_cols: tuple[tuple[int, int, int], ...]  # (column, electrode idx, band idx)
    headband_col: int | None
    hsi_cols: tuple[tuple[int, int], ...]  # (column, electrode idx)


def _split_header(header_line: str) -> list[str]:
    reader = csv.reader(io.StringIO(header_line))
    row = next(reader, None)
    if row is None:
        raise MissingHeaderError("empty header line")
    return [c.strip() for c in row]


def _resolve_layout(cells: list[str], schema: Schema | None) -> _Layout:
    """Map header cells to schema positions, inferring the schema if needed.

    Band columns are `<Band>_<Electrode>` matched case-insensitively against
    the canonical band vocabulary (or the given schema's). Unrecognized
    columns are ignored.
    """
    band_vocab = {b.lower() for b in (schema.bands if schema else DEFAULT_BANDS)}
    timestamp_col = None
    headband_col = None
    headband_name = None
    band_hits: dict[tuple[str, str], int] = {}  # (band lower, electrode lower) -> column
    band_order: list[tuple[str, str]] = []  # (band lower, electrode as written)
    hsi_hits: dict[str, tuple[int, str]] = {}  # electrode lower -> (column, name)
    electrodes: list[str] = []
    bands: list[str] = []

    for col, cell in enumerate(cells):
        low = cell.lower()
        if low == "timestamp":
            if timestamp_col is not None:
                raise DuplicateColumnError(f"duplicate timestamp column at {col + 1}")
            timestamp_col = col
        elif low == "headbandon":
            if headband_col is not None:
                raise DuplicateColumnError(f"duplicate HeadBandOn column at {col + 1}")
            headband_col = col
            headband_name = cell
        elif low.startswith("hsi_"):
            elec = cell[4:]
            if elec.lower() in hsi_hits:
                raise DuplicateColumnError(f"duplicate contact-quality column {cell}")
            hsi_hits[elec.lower()] = (col, cell)
        elif "_" in cell:
            band_part, elec_part = cell.split("_", 1)
            if band_part.lower() in band_vocab and elec_part:
                key = (band_part.lower(), elec_part.lower())
                if key in band_hits:
                    raise DuplicateColumnError(f"duplicate band column {cell}")
                band_hits[key] = col
                band_order.append((band_part.lower(), elec_part))
                if band_part.lower() not in bands:
                    bands.append(band_part.lower())
                if elec_part.lower() not in (e.lower() for e in electrodes):
                    electrodes.append(elec_part)

    if timestamp_col is None:
        raise MissingTimestampError("header has no timestamp column")
    if not band_hits:
        raise NoBandColumnsError("header has no <Band>_<Electrode> columns")

    if schema is None:
        hsi_names = tuple(
            hsi_hits[e.lower()][1] for e in electrodes if e.lower() in hsi_hits
        )
        schema = Schema(
            electrodes=tuple(electrodes),
            bands=tuple(bands),
            headband_on_column=headband_name,
            hsi_columns=hsi_names,
        )
    else:
        wanted = {
            (b.lower(), e.lower()) for e in schema.electrodes for b in schema.bands
        }
        missing = wanted - set(band_hits)
        if missing:
            raise SchemaMismatchError(
                f"header lacks {len(missing)} band column(s) required by schema, "
                f"e.g. {sorted(missing)[0][0]}_{sorted(missing)[0][1]}"
            )

    elec_pos = {e.lower(): i for i, e in enumerate(schema.electrodes)}
    band_pos = {b.lower(): i for i, b in enumerate(schema.bands)}
    band_cols = tuple(
        (col, elec_pos[e], band_pos[b])
        for (b, e), col in band_hits.items()
        if b in band_pos and e in elec_pos
    )
    hsi_cols = tuple(
        (col, elec_pos[e]) for e, (col, _) in hsi_hits.items() if e in elec_pos
    )
    return _Layout(
        schema=schema,
        timestamp_col=timestamp_col,
        band_cols=band_cols,
        headband_col=headband_col,
        hsi_cols=hsi_cols,
    )


def infer_schema(header_line: str) -> Schema:
    """Schema implied by a header line, electrodes and bands in header order."""
    return _resolve_layout(_split_header(header_line), None).schema


def _parse_timestamp_cell(cell: str):
    """float seconds, datetime, or None when unreadable."""
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
        return value if np.isfinite(value) else None
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(cell)
    except ValueError:
        return None


def _as_text(data) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    if isinstance(data, str):
        return data
    read = data.read()
    return read.decode("utf-8") if isinstance(read, bytes) else read


def parse_recording(
    data,
    schema: Schema | None = None,
    subject_id: str = "",
    session_index: int = 1,
) -> tuple[Recording, list[ParseWarning]]:
    """Parse a recording export into (Recording, warnings).

    `data` may be bytes, text, or a file-like object. Pass `schema=None` to
    infer the layout from the header. Unreadable band cells become NaN with a
    warning; rows with the wrong cell count or an unreadable timestamp are
    skipped with a warning; out-of-order timestamps are kept in file order
    with a warning.
    """
    text = _as_text(data)
    rows = [row for row in csv.reader(io.StringIO(text))]
    if not rows or not any(rows):
        raise MissingHeaderError("input has no header row")
    header = [c.strip() for c in rows[0]]
    layout = _resolve_layout(header, schema)
    schema = layout.schema

    warnings: list[ParseWarning] = []
    kept: list[tuple] = []  # (ts float|datetime, matrix, headband, contact)
    n_cols = len(header)
    first_kind: type | None = None

    for offset, row in enumerate(rows[1:]):
        line_number = offset + 2
        if not row:
            continue  # blank line
        if len(row) != n_cols:
            warnings.append(
                ParseWarning(
                    line_number,
                    WARN_ROW_ARITY,
                    f"expected {n_cols} cells, got {len(row)}; row skipped",
                )
            )
            continue
        ts = _parse_timestamp_cell(row[layout.timestamp_col])
        if ts is None or (first_kind is not None and not isinstance(ts, first_kind)):
            warnings.append(
                ParseWarning(
                    line_number,
                    WARN_BAD_TIMESTAMP,
                    f"unreadable timestamp {row[layout.timestamp_col]!r}; row skipped",
                )
            )
            continue
        if first_kind is None:
            first_kind = float if isinstance(ts, float) else datetime

        matrix = np.full((schema.n_electrodes, schema.n_bands), np.nan)
        for col, e, b in layout.band_cols:
            cell = row[col].strip()
            try:
                value = float(cell)
            except ValueError:
                value = np.nan
            if not np.isfinite(value):
                warnings.append(
                    ParseWarning(
                        line_number,
                        WARN_NON_NUMERIC,
                        f"column {header[col]}: non-numeric cell {cell!r}",
                    )
                )
                value = value if cell else np.nan
            matrix[e, b] = value

        headband = None
        if layout.headband_col is not None:
            cell = row[layout.headband_col].strip().lower()
            if cell in ("1", "true"):
                headband = True
            elif cell in ("0", "false"):
                headband = False
            elif cell:
                try:
                    headband = float(cell) != 0.0
                except ValueError:
                    warnings.append(
                        ParseWarning(
                            line_number, WARN_BAD_QUALITY, f"unreadable HeadBandOn cell {cell!r}"
                        )
                    )

        contact = None
        if layout.hsi_cols:
            codes: list[int | None] = [None] * schema.n_electrodes
            for col, e in layout.hsi_cols:
                cell = row[col].strip()
                if not cell:
                    continue
                try:
                    codes[e] = int(float(cell))
                except ValueError:
                    warnings.append(
                        ParseWarning(
                            line_number,
                            WARN_BAD_QUALITY,
                            f"column {header[col]}: unreadable contact code {cell!r}",
                        )
                    )
            contact = tuple(codes)

        kept.append((line_number, ts, matrix, headband, contact))

    samples = []
    if kept:
        t0 = kept[0][1]
        prev = None
        for line_number, ts, matrix, headband, contact in kept:
            seconds = (ts - t0).total_seconds() if isinstance(ts, datetime) else ts - t0
            if prev is not None and seconds < prev:
                warnings.append(
                    ParseWarning(
                        line_number,
                        WARN_OUT_OF_ORDER,
                        f"timestamp goes backwards ({seconds:.6f}s < {prev:.6f}s); kept in file order",
                    )
                )
            prev = seconds
            samples.append(
                Sample(
                    timestamp=max(seconds, 0.0),
                    band_power=matrix,
                    headband_on=headband,
                    contact_quality=contact,
                )
            )

    recording = Recording(
        schema=schema,
        subject_id=subject_id,
        session_index=session_index,
        samples=tuple(samples),
    )
    return recording, warnings


def _format_float(value: float) -> str:
    return repr(float(value)) if np.isfinite(value) else ""


def serialize_recording(recording: Recording) -> bytes:
    """Canonical CSV bytes: band-major columns, shortest round-trip decimals.

    Non-finite values serialize as empty cells (which parse back to NaN), so
    `parse_recording(serialize_recording(r))` reproduces every finite value
    bit-exactly.
    """
    schema = recording.schema
    header = ["TimeStamp"]
    for b in schema.bands:
        for e in schema.electrodes:
            header.append(f"{b.capitalize()}_{e}")
    has_headband = schema.headband_on_column is not None
    if has_headband:
        header.append(schema.headband_on_column)
    hsi_electrodes: list[int] = []
    for name in schema.hsi_columns:
        suffix = name[4:].lower() if name.lower().startswith("hsi_") else name.lower()
        for i, e in enumerate(schema.electrodes):
            if e.lower() == suffix:
                hsi_electrodes.append(i)
                header.append(name)
                break

    lines = [",".join(header)]
    for s in recording.samples:
        cells = [_format_float(s.timestamp)]
        for b in range(schema.n_bands):
            for e in range(schema.n_electrodes):
                cells.append(_format_float(s.band_power[e, b]))
        if has_headband:
            cells.append("" if s.headband_on is None else ("1" if s.headband_on else "0"))
        for e in hsi_electrodes:
            code = None if s.contact_quality is None else s.contact_quality[e]
            cells.append("" if code is None else str(code))
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


# --- manifests ----------------------------------------------------------------


def parse_manifest_rows(data) -> list[tuple[str, float, float]]:
    """Raw (task, start_seconds, end_seconds) rows from a manifest CSV."""
    text = _as_text(data)
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        raise ManifestFormatError("manifest has no header row")
    header = [c.strip().lower() for c in rows[0]]
    if header != ["task", "start_seconds", "end_seconds"]:
        raise ManifestFormatError(
            f"manifest header must be task,start_seconds,end_seconds; got {','.join(header)}"
        )
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ManifestFormatError(f"manifest line {i}: expected 3 cells")
        try:
            out.append((row[0].strip(), float(row[1]), float(row[2])))
        except ValueError:
            raise ManifestFormatError(f"manifest line {i}: unreadable segment bounds")
    return out


def build_manifests(
    per_session_rows: list[list[tuple[str, float, float]]],
) -> tuple[list[SessionManifest], tuple[TaskLabel, ...]]:
    """Assign dense task ids (order of first appearance) and build manifests."""
    names: list[str] = []
    for rows in per_session_rows:
        for name, _, _ in rows:
            if name not in names:
                names.append(name)
    vocabulary = tuple(TaskLabel(i, name) for i, name in enumerate(names))
    by_name = {t.name: t for t in vocabulary}
    manifests = [
        SessionManifest(
            segments=tuple(Segment(by_name[name], start, end) for name, start, end in rows)
        )
        for rows in per_session_rows
    ]
    return manifests, vocabulary


def serialize_manifest(manifest: SessionManifest) -> bytes:
    lines = ["task,start_seconds,end_seconds"]
    for seg in manifest.segments:
        lines.append(f"{seg.label.name},{_format_float(seg.start_seconds)},{_format_float(seg.end_seconds)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _session_index_for(stem: str, position: int) -> int:
    m = re.search(r"(\d+)$", stem)
    return int(m.group(1)) if m else position + 1


def load_session_set(
    directory: str | Path,
    schema: Schema | None = None,
    subject_id: str | None = None,
) -> list[tuple[Recording, SessionManifest]]:
    """Load all (recording, manifest) pairs under `directory`.

    Recording `NAME.csv` pairs with manifest `NAME.manifest.csv`. The session
    index is the trailing integer of NAME when present, else the position in
    sorted order. Manifest segment bounds are validated against the nominal
    recording duration.
    """
    directory = Path(directory)
    subject = subject_id if subject_id is not None else directory.name
    recording_paths: dict[str, Path] = {}
    manifest_paths: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file() or not path.name.endswith(".csv"):
            continue
        if path.name.endswith(MANIFEST_SUFFIX):
            manifest_paths[path.name[: -len(MANIFEST_SUFFIX)]] = path
        else:
            recording_paths[path.name[: -len(".csv")]] = path

    missing = sorted(set(recording_paths) - set(manifest_paths))
    if missing:
        raise UnpairedFileError(f"recording {missing[0]}.csv has no manifest")
    stray = sorted(set(manifest_paths) - set(recording_paths))
    if stray:
        raise UnpairedFileError(f"manifest {stray[0]}{MANIFEST_SUFFIX} has no recording")
    if not recording_paths:
        raise UnpairedFileError(f"no recording files under {directory}")

    stems = sorted(recording_paths)
    indices = [_session_index_for(stem, i) for i, stem in enumerate(stems)]
    if len(set(indices)) != len(indices):
        raise DuplicateSessionError(f"duplicate session indices in {directory}")

    ordered = sorted(zip(indices, stems))
    recordings: list[Recording] = []
    manifest_rows: list[list[tuple[str, float, float]]] = []
    for index, stem in ordered:
        recording, warnings = parse_recording(
            recording_paths[stem].read_bytes(),
            schema=schema,
            subject_id=subject,
            session_index=index,
        )
        for w in warnings:
            log.info("%s line %d: %s", recording_paths[stem].name, w.line_number, w.message)
        recordings.append(recording)
        manifest_rows.append(parse_manifest_rows(manifest_paths[stem].read_bytes()))

    manifests, _ = build_manifests(manifest_rows)
    for (index, stem), recording, manifest in zip(ordered, recordings, manifests):
        duration = recording.duration_seconds
        for seg in manifest.segments:
            if seg.end_seconds > duration:
                raise ManifestOutOfRangeError(
                    f"{stem}{MANIFEST_SUFFIX}: segment {seg.label.name} ends at "
                    f"{seg.end_seconds}s but the recording covers {duration}s"
                )
    return list(zip(recordings, manifests))
