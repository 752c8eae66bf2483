"""Exception hierarchy for the engine.

Every error the engine raises deliberately derives from MirageError so
callers (CLI, HTTP layer) can map them to exit codes / status codes in one
place. OS-level failures (unreadable files, full disks) propagate as plain
OSError.
"""

from __future__ import annotations


class MirageError(Exception):
    """Base class for all engine errors."""


# --- vector math -----------------------------------------------------------

class ZeroVector(MirageError):
    """Vector norm too small to define a direction."""


class DimensionMismatch(MirageError):
    """Vector dimension differs from the expected dimension."""


class NonFiniteInput(MirageError):
    """Input contains NaN or Inf."""


# --- store -----------------------------------------------------------------

class DuplicateId(MirageError):
    """Entry id already present (store) or repeated (catalog)."""

    def __init__(self, entry_id: str, message: str | None = None):
        super().__init__(message or f"duplicate id: {entry_id!r}")
        self.entry_id = entry_id


class EmptyStore(MirageError):
    """Search requested against a store with no entries."""


class InvalidK(MirageError):
    """k must be a positive integer."""


class EntryNotFound(MirageError):
    """No entry with the requested id."""


class StoreFormatError(MirageError):
    """Base class for persistent-store format violations."""


class BadMagic(StoreFormatError):
    """Vector file does not start with the expected magic bytes."""


class VersionUnsupported(StoreFormatError):
    """Vector file declares a format version this build cannot read."""


class KindMismatch(StoreFormatError):
    """Vector file kind byte does not match the expected embedding kind."""


class CorruptLength(StoreFormatError):
    """Declared count/dim inconsistent with the actual file size."""


class MetaVecMismatch(StoreFormatError):
    """Metadata row count differs from vector row count."""


# --- query algebra ---------------------------------------------------------

class DegenerateQuery(MirageError):
    """Concept arithmetic cancelled out; no meaningful direction remains."""


class MissingTerms(MirageError):
    """Operation requires both subtract and add terms."""


# --- backends --------------------------------------------------------------

class BackendUnreachable(MirageError):
    """Backend did not respond (connection refused, DNS, timeout)."""


class BackendError(MirageError):
    """Backend responded with an error or an unusable payload."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class EmptyText(MirageError):
    """Text input empty after trimming (or produced no tokens)."""


class EmptyBlob(MirageError):
    """Byte input has zero length."""


class EmptyResponse(MirageError):
    """Backend returned an empty caption or image."""


# --- pipeline --------------------------------------------------------------

class StageError(MirageError):
    """Wraps an error with the pipeline stage it occurred in.

    ``stage`` is one of: encode_query, stage1, enrich, encode_enriched,
    stage2, synthesize.
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class BlobNotFound(MirageError):
    """No blob stored under the requested id."""


# --- evaluation / ingestion ------------------------------------------------

class DegenerateLabels(MirageError):
    """A pair set is missing one of the two labels."""


class ParseError(MirageError):
    """Input file failed to parse; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingField(ParseError):
    """A required catalog/pair field is absent or empty."""


class AllRecordsSkipped(MirageError):
    """Every catalog record was skipped; nothing to build."""


class IngestAborted(MirageError):
    """Ingestion stopped early; carries the partial build report."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


# --- config ----------------------------------------------------------------

class ConfigError(MirageError):
    """Service configuration file invalid or inconsistent."""
