"""Shared exception types for the crashqc pipeline.

Backend-facing failures are normalized into four categories so the ensemble
and the batch runner can react uniformly no matter which backend produced
them: ``transport`` (network/HTTP), ``parse`` (unusable response text),
``model`` (endpoint answered but the payload is not a classification), and
``config`` (the backend was assembled wrong).
"""

from __future__ import annotations


class CrashQCError(Exception):
    """Base class for all crashqc errors."""


class IngestError(CrashQCError):
    """Source file or column mapping cannot be used at all."""


class UnknownRecordError(CrashQCError):
    """An operation referenced a record_id absent from the corpus."""


class VocabularyMismatchError(CrashQCError):
    """Model and vocabulary were built from different fits."""


class DivergenceError(CrashQCError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, learning_rate: float):
        super().__init__(message)
        self.learning_rate = learning_rate


class PolicyError(CrashQCError):
    """Ensemble policy is inconsistent with the verdicts it was given."""


class DuplicatePendingError(CrashQCError):
    """A review item for this record is already awaiting adjudication."""


class AlreadyResolvedError(CrashQCError):
    """The review item was adjudicated previously (maps to HTTP 409)."""


class BatchLockedError(CrashQCError):
    """Another live process holds the batch lock."""


# ── Backend error taxonomy ──────────────────────────────────────────────

TRANSPORT = "transport"
PARSE = "parse"
MODEL = "model"
CONFIG = "config"

BACKEND_ERROR_CATEGORIES = (TRANSPORT, PARSE, MODEL, CONFIG)


class BackendError(CrashQCError):
    """A classification attempt failed; ``category`` says how."""

    category: str = MODEL

    def __init__(self, message: str, *, category: str | None = None):
        super().__init__(message)
        if category is not None:
            self.category = category
        if self.category not in BACKEND_ERROR_CATEGORIES:
            raise ValueError(f"unknown backend error category: {self.category!r}")


class TransportError(BackendError):
    """Endpoint unreachable, timed out, or kept returning non-2xx."""

    category = TRANSPORT

    def __init__(self, message: str, *, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ModelError(BackendError):
    """Endpoint responded, but not with anything resembling a classification."""

    category = MODEL


class ConfigError(BackendError):
    """Backend construction or wiring is invalid."""

    category = CONFIG


class VerdictParseError(BackendError):
    """Raw response text could not be turned into a Verdict.

    ``kind`` is one of: no_json, missing_field, bad_answer, bad_probability,
    bad_explanation. ``raw`` carries the offending text for the audit log.
    """

    category = PARSE

    def __init__(self, message: str, *, kind: str, raw: str):
        super().__init__(message)
        self.kind = kind
        self.raw = raw
