"""Noise identification and row exclusion.

Flagging is rule-based and pure: a row is flagged iff it violates at least
one rule (non-finite value, band power out of range, flatline run, headband
off, bad contact code). Exclusion drops flagged rows and never interpolates;
timestamps are kept unchanged so gaps stay visible downstream.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Recording
from .errors import ReportMismatchError

RULE_NONFINITE = "nonfinite"
RULE_RANGE = "range"
RULE_FLATLINE = "flatline"
RULE_HEADBAND = "headband"
RULE_CONTACT = "contact"

ALL_RULES = (RULE_NONFINITE, RULE_RANGE, RULE_FLATLINE, RULE_HEADBAND, RULE_CONTACT)


@dataclass(frozen=True)
class CleanRules:
    """Thresholds for the noise rules.

    Band-power bounds are in the device's log-power units. `flatline_run` is
    the number of identical consecutive values in any single band column that
    marks a stuck sensor. `max_contact_quality_code` follows the consumer
    headset convention 1=good, 2=ok, 4=no contact: anything above the
    threshold flags the row.
    """

    band_power_min: float = -5.0
    band_power_max: float = 5.0
    flatline_run: int = 20
    require_headband_on: bool = True
    max_contact_quality_code: int = 2

    def validate(self) -> list[str]:
        problems = []
        if not (self.band_power_min < self.band_power_max):
            problems.append("clean.band_power_min must be < clean.band_power_max")
        if self.flatline_run < 2:
            problems.append("clean.flatline_run must be >= 2")
        return problems


@dataclass(frozen=True)
class CleanReport:
    """Which rows were flagged, by which rule(s), and what survived."""

    rows_in: int
    flags: tuple[tuple[int, tuple[str, ...]], ...]  # (row index, rules), sorted by row

    @property
    def flagged_rows(self) -> tuple[int, ...]:
        return tuple(row for row, _ in self.flags)

    @property
    def rows_out(self) -> int:
        return self.rows_in - len(self.flags)

    def rule_counts(self) -> dict[str, int]:
        counts = {rule: 0 for rule in ALL_RULES}
        for _, rules in self.flags:
            for rule in rules:
                counts[rule] += 1
        return counts

    def to_csv(self) -> str:
        lines = ["row,rule"]
        for row, rules in self.flags:
            for rule in rules:
                lines.append(f"{row},{rule}")
        return "\n".join(lines) + "\n"

    def summary_text(self) -> str:
        counts = self.rule_counts()
        lines = [
            f"rows in:      {self.rows_in}",
            f"rows flagged: {len(self.flags)}",
            f"rows out:     {self.rows_out}",
            "per-rule flagged rows:",
        ]
        for rule in ALL_RULES:
            lines.append(f"  {rule:<10} {counts[rule]}")
        return "\n".join(lines) + "\n"


def _flatline_rows(column: np.ndarray, min_run: int) -> np.ndarray:
    """Row indices that belong to a run of >= min_run identical values.

    NaN never equals NaN, so non-finite stretches break runs by themselves.
    """
    n = len(column)
    if n < min_run:
        return np.empty(0, dtype=np.intp)
    same = column[1:] == column[:-1]
    run_id = np.concatenate(([0], np.cumsum(~same)))
    lengths = np.bincount(run_id)
    return np.nonzero(lengths[run_id] >= min_run)[0]


def flag_noise(recording: Recording, rules: CleanRules) -> CleanReport:
    """Apply every rule to every row; rows may be flagged by several rules."""
    m = recording.band_matrix
    n = len(recording)
    hits: dict[str, np.ndarray] = {}

    hits[RULE_NONFINITE] = np.nonzero(~np.isfinite(m).all(axis=1))[0]
    out = (m < rules.band_power_min) | (m > rules.band_power_max)
    hits[RULE_RANGE] = np.nonzero(out.any(axis=1))[0]

    flat = np.zeros(n, dtype=bool)
    for d in range(m.shape[1]):
        flat[_flatline_rows(m[:, d], rules.flatline_run)] = True
    hits[RULE_FLATLINE] = np.nonzero(flat)[0]

    if rules.require_headband_on:
        hits[RULE_HEADBAND] = np.array(
            [i for i, s in enumerate(recording.samples) if s.headband_on is False],
            dtype=np.intp,
        )
    else:
        hits[RULE_HEADBAND] = np.empty(0, dtype=np.intp)

    contact = []
    for i, s in enumerate(recording.samples):
        if s.contact_quality is None:
            continue
        if any(c is not None and c > rules.max_contact_quality_code for c in s.contact_quality):
            contact.append(i)
    hits[RULE_CONTACT] = np.array(contact, dtype=np.intp)

    by_row: dict[int, list[str]] = {}
    for rule in ALL_RULES:
        for row in hits[rule]:
            by_row.setdefault(int(row), []).append(rule)
    flags = tuple((row, tuple(by_row[row])) for row in sorted(by_row))
    return CleanReport(rows_in=n, flags=flags)


def apply_exclusions(recording: Recording, report: CleanReport) -> Recording:
    """Return the recording minus flagged rows, order and timestamps preserved."""
    if report.rows_in != len(recording):
        raise ReportMismatchError(
            f"report covers {report.rows_in} rows, recording has {len(recording)}"
        )
    if report.flags and report.flags[-1][0] >= len(recording):
        raise ReportMismatchError(
            f"report flags row {report.flags[-1][0]} beyond recording length {len(recording)}"
        )
    drop = set(report.flagged_rows)
    kept = tuple(s for i, s in enumerate(recording.samples) if i not in drop)
    return Recording(
        schema=recording.schema,
        subject_id=recording.subject_id,
        session_index=recording.session_index,
        samples=kept,
    )
