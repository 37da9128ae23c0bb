"""Verdict aggregation and the human review queue.

Aggregation looks only at answers, never probabilities: a decision is
automatic exactly when the policy's agreement bar is met, and any backend
failure forces the record to a human. The queue is an append-only journal
of enqueue/resolve/skip events; resolving writes the label through the
label store (the single mutation path) and feeds per-backend
agreement-with-human statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .backends import BackendFailure
from .corpus import JournalWriter, LabelSource, LabelStore, read_journal
from .errors import AlreadyResolvedError, DuplicatePendingError, PolicyError
from .llm import Verdict


class PolicyMode(str, Enum):
    PRIMARY_WITH_VERIFIERS = "PrimaryWithVerifiers"
    MAJORITY = "Majority"
    UNANIMOUS = "Unanimous"


class Outcome(str, Enum):
    AUTO_YES = "AutoYes"
    AUTO_NO = "AutoNo"
    FLAGGED = "Flagged"


class ReviewStatus(str, Enum):
    PENDING = "Pending"
    RESOLVED = "Resolved"
    SKIPPED = "Skipped"


@dataclass(frozen=True)
class EnsemblePolicy:
    mode: PolicyMode = PolicyMode.PRIMARY_WITH_VERIFIERS
    primary_backend_id: str | None = None
    quorum: int | None = None

    def __post_init__(self) -> None:
        if self.mode is PolicyMode.PRIMARY_WITH_VERIFIERS and not self.primary_backend_id:
            raise ValueError("PrimaryWithVerifiers needs primary_backend_id")
        if self.mode is PolicyMode.MAJORITY:
            if self.quorum is None or self.quorum < 1:
                raise ValueError("Majority needs quorum >= 1")


@dataclass(frozen=True)
class EnsembleDecision:
    record_id: str
    verdicts: tuple
    outcome: Outcome
    reason: str

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "outcome": self.outcome.value,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EnsembleDecision":
        verdicts = tuple(
            BackendFailure.from_dict(v) if v.get("error") else Verdict.from_dict(v)
            for v in d["verdicts"]
        )
        return cls(
            record_id=d["record_id"],
            verdicts=verdicts,
            outcome=Outcome(d["outcome"]),
            reason=d["reason"],
        )


def _auto(answer: str) -> Outcome:
    return Outcome.AUTO_YES if answer == "YES" else Outcome.AUTO_NO


def aggregate(
    verdicts: Sequence["Verdict | BackendFailure"], policy: EnsemblePolicy
) -> EnsembleDecision:
    """Combine one record's verdicts under the policy.

    Deterministic and order-independent: reasons name backends in sorted
    order. At least one verdict is required, and all must describe the
    same record.
    """
    if not verdicts:
        raise PolicyError("aggregate needs at least one verdict")
    record_ids = {v.record_id for v in verdicts}
    if len(record_ids) != 1:
        raise PolicyError(f"verdicts span multiple records: {sorted(record_ids)}")
    record_id = next(iter(record_ids))

    failures = sorted(
        (v for v in verdicts if isinstance(v, BackendFailure)), key=lambda f: f.backend_id
    )
    if failures:
        names = ", ".join(f"{f.backend_id} ({f.category})" for f in failures)
        return EnsembleDecision(
            record_id=record_id,
            verdicts=tuple(verdicts),
            outcome=Outcome.FLAGGED,
            reason=f"backend error: {names}",
        )

    answers: dict[str, str] = {v.backend_id: v.answer for v in verdicts}

    if policy.mode is PolicyMode.PRIMARY_WITH_VERIFIERS:
        primary_id = policy.primary_backend_id
        if primary_id not in answers:
            raise PolicyError(f"policy names missing primary backend {primary_id!r}")
        primary_answer = answers[primary_id]
        dissenters = sorted(
            bid for bid, ans in answers.items() if bid != primary_id and ans != primary_answer
        )
        if dissenters:
            return EnsembleDecision(
                record_id=record_id,
                verdicts=tuple(verdicts),
                outcome=Outcome.FLAGGED,
                reason=(
                    f"disagreement with primary {primary_id} ({primary_answer}): "
                    + ", ".join(dissenters)
                ),
            )
        return EnsembleDecision(
            record_id=record_id,
            verdicts=tuple(verdicts),
            outcome=_auto(primary_answer),
            reason=f"all verifiers agree with primary {primary_id}",
        )

    yes = sorted(bid for bid, ans in answers.items() if ans == "YES")
    no = sorted(bid for bid, ans in answers.items() if ans == "NO")

    if policy.mode is PolicyMode.MAJORITY:
        quorum = policy.quorum or 1
        if quorum > len(verdicts):
            raise PolicyError(
                f"quorum {quorum} exceeds panel size {len(verdicts)}"
            )
        yes_hit = len(yes) >= quorum
        no_hit = len(no) >= quorum
        if yes_hit and no_hit:
            return EnsembleDecision(
                record_id=record_id,
                verdicts=tuple(verdicts),
                outcome=Outcome.FLAGGED,
                reason=f"ambiguous quorum: {len(yes)} YES vs {len(no)} NO at quorum {quorum}",
            )
        if yes_hit or no_hit:
            answer = "YES" if yes_hit else "NO"
            count = len(yes) if yes_hit else len(no)
            return EnsembleDecision(
                record_id=record_id,
                verdicts=tuple(verdicts),
                outcome=_auto(answer),
                reason=f"{count} of {len(verdicts)} answered {answer} (quorum {quorum})",
            )
        return EnsembleDecision(
            record_id=record_id,
            verdicts=tuple(verdicts),
            outcome=Outcome.FLAGGED,
            reason=f"quorum not reached: {len(yes)} YES vs {len(no)} NO at quorum {quorum}",
        )

    # Unanimous
    if yes and no:
        return EnsembleDecision(
            record_id=record_id,
            verdicts=tuple(verdicts),
            outcome=Outcome.FLAGGED,
            reason=f"split panel: YES from {', '.join(yes)}; NO from {', '.join(no)}",
        )
    answer = "YES" if yes else "NO"
    return EnsembleDecision(
        record_id=record_id,
        verdicts=tuple(verdicts),
        outcome=_auto(answer),
        reason=f"unanimous {answer}",
    )


# ── review queue ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Resolution:
    is_secondary: bool
    analyst: str
    note: str | None
    resolved_at: datetime

    def to_dict(self) -> dict:
        return {
            "is_secondary": self.is_secondary,
            "analyst": self.analyst,
            "note": self.note,
            "resolved_at": self.resolved_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Resolution":
        return cls(
            is_secondary=bool(d["is_secondary"]),
            analyst=d["analyst"],
            note=d.get("note"),
            resolved_at=datetime.fromisoformat(d["resolved_at"]),
        )


@dataclass
class ReviewItem:
    record_id: str
    decision: EnsembleDecision
    status: ReviewStatus
    enqueued_at: datetime
    resolution: Resolution | None = None

    @property
    def answer_split(self) -> dict[str, int]:
        split = {"YES": 0, "NO": 0, "error": 0}
        for v in self.decision.verdicts:
            if isinstance(v, BackendFailure):
                split["error"] += 1
            else:
                split[v.answer] += 1
        return split

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "decision": self.decision.to_dict(),
            "status": self.status.value,
            "enqueued_at": self.enqueued_at.isoformat(),
            "resolution": self.resolution.to_dict() if self.resolution else None,
        }


class ReviewQueue:
    """Persistent queue of flagged records awaiting human adjudication.

    Backed by an event journal; replaying it reconstructs the current
    state, so pending items survive restarts. A record has at most one
    live item; re-enqueueing after a resolution opens a fresh item, and
    resolving writes the human label through the label store.
    """

    def __init__(
        self,
        path: str | Path,
        label_store: LabelStore | None = None,
        now_fn: Callable[[], datetime] = datetime.now,
    ):
        self.path = Path(path)
        self.label_store = label_store
        self._now = now_fn
        self._items: dict[str, ReviewItem] = {}
        self._resolved_log: list[ReviewItem] = []
        for event in read_journal(self.path):
            self._apply(event)
        self._writer = JournalWriter(self.path)

    def _apply(self, event: Mapping) -> None:
        kind = event["event"]
        record_id = event["record_id"]
        if kind == "enqueue":
            self._items[record_id] = ReviewItem(
                record_id=record_id,
                decision=EnsembleDecision.from_dict(event["decision"]),
                status=ReviewStatus.PENDING,
                enqueued_at=datetime.fromisoformat(event["enqueued_at"]),
            )
        elif kind == "skip":
            item = self._items.get(record_id)
            if item is not None:
                item.status = ReviewStatus.SKIPPED
        elif kind == "resolve":
            item = self._items.get(record_id)
            if item is not None:
                item.status = ReviewStatus.RESOLVED
                item.resolution = Resolution.from_dict(event["resolution"])
                self._resolved_log.append(item)

    def enqueue(self, decision: EnsembleDecision) -> ReviewItem:
        existing = self._items.get(decision.record_id)
        if existing is not None and existing.status in (
            ReviewStatus.PENDING,
            ReviewStatus.SKIPPED,
        ):
            raise DuplicatePendingError(
                f"record {decision.record_id!r} already awaits review"
            )
        enqueued_at = self._now()
        self._writer.append(
            {
                "event": "enqueue",
                "record_id": decision.record_id,
                "decision": decision.to_dict(),
                "enqueued_at": enqueued_at.isoformat(),
            }
        )
        item = ReviewItem(
            record_id=decision.record_id,
            decision=decision,
            status=ReviewStatus.PENDING,
            enqueued_at=enqueued_at,
        )
        self._items[decision.record_id] = item
        return item

    def enqueue_or_keep(self, decision: EnsembleDecision) -> ReviewItem:
        """Idempotent enqueue for crash recovery: keep a live item as is."""
        try:
            return self.enqueue(decision)
        except DuplicatePendingError:
            return self._items[decision.record_id]

    def get(self, record_id: str) -> ReviewItem | None:
        return self._items.get(record_id)

    def items(self, status: ReviewStatus | None = None) -> list[ReviewItem]:
        """Items oldest-first; optionally only one status."""
        selected = [
            item
            for item in self._items.values()
            if status is None or item.status is status
        ]
        selected.sort(key=lambda it: (it.enqueued_at, it.record_id))
        return selected

    def pending(self) -> list[ReviewItem]:
        return self.items(ReviewStatus.PENDING)

    def resolve(
        self,
        record_id: str,
        is_secondary: bool,
        analyst: str,
        note: str | None = None,
    ) -> ReviewItem:
        """Adjudicate a pending (or deferred) item and write the label."""
        item = self._items.get(record_id)
        if item is None:
            raise KeyError(f"no review item for record {record_id!r}")
        if item.status is ReviewStatus.RESOLVED:
            raise AlreadyResolvedError(f"record {record_id!r} was already resolved")
        if not analyst.strip():
            raise ValueError("analyst must be non-empty")
        resolution = Resolution(
            is_secondary=is_secondary,
            analyst=analyst,
            note=note,
            resolved_at=self._now(),
        )
        if self.label_store is not None:
            self.label_store.upsert(
                record_id,
                is_secondary,
                source=LabelSource.ANALYST_UI,
                note=note,
                labeled_at=resolution.resolved_at,
            )
        self._writer.append(
            {
                "event": "resolve",
                "record_id": record_id,
                "resolution": resolution.to_dict(),
            }
        )
        item.status = ReviewStatus.RESOLVED
        item.resolution = resolution
        self._resolved_log.append(item)
        return item

    def skip(self, record_id: str) -> ReviewItem:
        """Defer an item; it moves out of the pending list but stays live."""
        item = self._items.get(record_id)
        if item is None:
            raise KeyError(f"no review item for record {record_id!r}")
        if item.status is ReviewStatus.RESOLVED:
            raise AlreadyResolvedError(f"record {record_id!r} was already resolved")
        self._writer.append({"event": "skip", "record_id": record_id})
        item.status = ReviewStatus.SKIPPED
        return item

    def agreement(self) -> dict[str, dict[str, int]]:
        """Per-backend agreement with human resolutions.

        Skipped items never count; each resolution compares every
        non-error verdict's answer against the human label.
        """
        stats: dict[str, dict[str, int]] = {}
        for item in self._resolved_log:
            assert item.resolution is not None
            human_yes = item.resolution.is_secondary
            for v in item.decision.verdicts:
                if isinstance(v, BackendFailure):
                    continue
                entry = stats.setdefault(
                    v.backend_id, {"agree": 0, "disagree": 0, "total": 0}
                )
                agrees = v.is_yes == human_yes
                entry["agree" if agrees else "disagree"] += 1
                entry["total"] += 1
        return stats

    def close(self) -> None:
        self._writer.close()
