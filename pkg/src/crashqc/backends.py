"""Classifier backends behind one interface.

Three kinds exist: the native TF-IDF + logistic regression model, a
prompted LLM spoken to over HTTP, and an opaque remote classifier that
answers ``POST {record_id, narrative}`` with
``{answer, probability, explanation?}``. All of them produce the same
Verdict shape, and all failures surface through the shared backend error
taxonomy, so the ensemble never needs to know which kind it is talking to.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .corpus import CrashRecord
from .errors import BackendError, ConfigError, ModelError, VerdictParseError
from .llm import (
    AuditLog,
    LLMEndpointConfig,
    PromptTemplate,
    Verdict,
    build_prompt,
    classify_remote,
    normalize_answer,
    normalize_probability,
    parse_verdict,
    post_with_retries,
)
from .logreg import LogRegModel, predict_proba
from .textfeat import vectorize


class BackendKind(str, Enum):
    NATIVE_LOGREG = "NativeLogReg"
    PROMPT_LLM = "PromptLLM"
    REMOTE_CLASSIFIER = "RemoteClassifier"


@dataclass(frozen=True)
class BackendFailure:
    """A classification attempt that produced no verdict."""

    backend_id: str
    record_id: str
    category: str
    message: str

    def to_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "record_id": self.record_id,
            "category": self.category,
            "message": self.message,
            "error": True,
        }

    @classmethod
    def from_dict(cls, d) -> "BackendFailure":
        return cls(
            backend_id=d["backend_id"],
            record_id=d["record_id"],
            category=d["category"],
            message=d["message"],
        )


class ClassifierBackend:
    """Interface: a backend has an id, a kind, and classifies one record."""

    backend_id: str
    kind: BackendKind

    def classify(self, record: CrashRecord) -> Verdict:
        raise NotImplementedError


class NativeLogRegBackend(ClassifierBackend):
    kind = BackendKind.NATIVE_LOGREG

    def __init__(self, backend_id: str, model: LogRegModel):
        self.backend_id = backend_id
        self.model = model

    def _explain(self, record: CrashRecord) -> str:
        """Name the document's strongest signed term contributions."""
        x = vectorize(record.narrative, self.model.vocab)
        if x.nnz == 0:
            return "no in-vocabulary terms in the narrative"
        terms = self.model.vocab.terms
        contribs = sorted(
            ((terms[i], float(self.model.weights[i]) * v) for i, v in x.items()),
            key=lambda tc: (-abs(tc[1]), tc[0]),
        )[:5]
        parts = ", ".join(f"{t} ({c:+.3f})" for t, c in contribs)
        return f"top term contributions: {parts}"

    def classify(self, record: CrashRecord) -> Verdict:
        started = time.perf_counter()
        x = vectorize(record.narrative, self.model.vocab)
        p = predict_proba(self.model, x)
        answer = "YES" if p >= self.model.decision_threshold else "NO"
        explanation = self._explain(record)
        latency_ms = int((time.perf_counter() - started) * 1000)
        return Verdict(
            backend_id=self.backend_id,
            record_id=record.record_id,
            answer=answer,
            probability=p,
            explanation=explanation,
            latency_ms=latency_ms,
        )


class PromptLLMBackend(ClassifierBackend):
    kind = BackendKind.PROMPT_LLM

    def __init__(
        self,
        backend_id: str,
        endpoint: LLMEndpointConfig,
        template: PromptTemplate,
        audit_log: AuditLog | None = None,
    ):
        self.backend_id = backend_id
        self.endpoint = endpoint
        self.template = template
        self.audit_log = audit_log

    def classify(self, record: CrashRecord) -> Verdict:
        try:
            messages = build_prompt(self.template, record.narrative)
        except ValueError as exc:
            raise ModelError(f"cannot prompt for {record.record_id}: {exc}") from exc
        raw, latency_ms = classify_remote(self.endpoint, messages)
        try:
            verdict = parse_verdict(
                raw,
                backend_id=self.backend_id,
                record_id=record.record_id,
                prompt_version=self.template.version,
                latency_ms=latency_ms,
            )
        except VerdictParseError as exc:
            self._audit(record.record_id, raw, f"parse_error:{exc.kind}", latency_ms)
            raise
        self._audit(record.record_id, raw, "ok", latency_ms)
        return verdict

    def _audit(self, record_id: str, raw: str, outcome: str, latency_ms: int) -> None:
        if self.audit_log is not None:
            self.audit_log.write(
                record_id=record_id,
                backend_id=self.backend_id,
                prompt_version=self.template.version,
                raw_response=raw,
                outcome=outcome,
                latency_ms=latency_ms,
            )


@dataclass(frozen=True)
class RemoteEndpointConfig:
    endpoint_url: str
    timeout_s: float = 30.0
    max_retries: int = 2
    backoff_base_s: float = 0.5


MISSING_EXPLANATION = "(none provided)"


class RemoteClassifierBackend(ClassifierBackend):
    kind = BackendKind.REMOTE_CLASSIFIER

    def __init__(self, backend_id: str, endpoint: RemoteEndpointConfig):
        self.backend_id = backend_id
        self.endpoint = endpoint

    def classify(self, record: CrashRecord) -> Verdict:
        data, latency_ms = post_with_retries(
            self.endpoint.endpoint_url,
            {"record_id": record.record_id, "narrative": record.narrative},
            timeout_s=self.endpoint.timeout_s,
            max_retries=self.endpoint.max_retries,
            backoff_base_s=self.endpoint.backoff_base_s,
        )
        raw = json.dumps(data, ensure_ascii=False)
        missing = [k for k in ("answer", "probability") if k not in data]
        if missing:
            raise VerdictParseError(
                f"remote response missing fields: {missing}",
                kind="missing_field",
                raw=raw,
            )
        answer = normalize_answer(data["answer"])
        if answer is None:
            raise VerdictParseError(
                f"remote answer is not YES/NO: {data['answer']!r}",
                kind="bad_answer",
                raw=raw,
            )
        probability = normalize_probability(data["probability"])
        if probability is None:
            raise VerdictParseError(
                f"remote probability is not a number in [0,1]: {data['probability']!r}",
                kind="bad_probability",
                raw=raw,
            )
        explanation = data.get("explanation")
        if not isinstance(explanation, str) or not explanation.strip():
            explanation = MISSING_EXPLANATION
        return Verdict(
            backend_id=self.backend_id,
            record_id=record.record_id,
            answer=answer,
            probability=probability,
            explanation=explanation,
            latency_ms=latency_ms,
            raw_response=raw,
        )


def classify_with_failures(
    backend: ClassifierBackend, record: CrashRecord
) -> Verdict | BackendFailure:
    """Run one classification, converting taxonomy errors into values.

    Anything outside the backend error taxonomy propagates: those are
    bugs, not classification failures.
    """
    try:
        return backend.classify(record)
    except BackendError as exc:
        return BackendFailure(
            backend_id=backend.backend_id,
            record_id=record.record_id,
            category=exc.category,
            message=str(exc),
        )


def classify_batch(
    backend: ClassifierBackend,
    records: Sequence[CrashRecord],
    concurrency: int = 1,
) -> list[Verdict | BackendFailure]:
    """Classify records with bounded concurrency; results in input order."""
    if concurrency < 1:
        raise ConfigError("concurrency must be >= 1")
    if concurrency == 1 or len(records) <= 1:
        return [classify_with_failures(backend, rec) for rec in records]
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        return list(pool.map(lambda rec: classify_with_failures(backend, rec), records))
