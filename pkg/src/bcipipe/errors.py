"""Structured errors raised by the pipeline stages.

Every error a caller may want to catch and report has its own class; the CLI
maps any PipelineError to a one-line diagnostic and a nonzero exit code.
"""


class PipelineError(Exception):
    """Base class for all structured pipeline errors."""


# --- ingest ---

class MissingHeaderError(PipelineError):
    pass


class MissingTimestampError(PipelineError):
    pass


class NoBandColumnsError(PipelineError):
    pass


class DuplicateColumnError(PipelineError):
    pass


class SchemaMismatchError(PipelineError):
    pass


class UnpairedFileError(PipelineError):
    pass


class DuplicateSessionError(PipelineError):
    pass


class ManifestOutOfRangeError(PipelineError):
    pass


class ManifestFormatError(PipelineError):
    pass


# --- clean ---

class ReportMismatchError(PipelineError):
    pass


# --- features ---

class NonMonotonicTimeError(PipelineError):
    pass


# --- learn ---

class EmptyDataError(PipelineError):
    pass


class SingleClassDataError(PipelineError):
    pass


class DimensionMismatchError(PipelineError):
    pass


class ZeroTotalError(PipelineError):
    pass


class UnknownFamilyError(PipelineError):
    pass


class InvalidHyperparameterError(PipelineError):
    pass


class ModelFormatError(PipelineError):
    pass


# --- eval / tmv / report ---

class TooFewSessionsError(PipelineError):
    pass


class BadKError(PipelineError):
    pass


class TooFewModelsError(PipelineError):
    pass


class LengthMismatchError(PipelineError):
    pass


class EmptyTracesError(PipelineError):
    pass


# --- config ---

class ConfigError(PipelineError):
    pass
