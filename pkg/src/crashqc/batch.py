"""Incremental batch classification with crash-safe bookkeeping.

A batch selects records not yet processed under the current *identity*
(hash of the backend roster and prompt version; reconfiguring the panel
legitimately reopens old records), routes them through spatial pairing
and keyword triage, classifies survivors with every rostered backend,
aggregates, and records one disposition per record.

Crash safety comes from write ordering, not transactions: per record the
decision journal line is appended first, then the queue enqueue (when
flagged), and the batch-state marker last. A crash in between re-runs the
record on the next batch; both side effects absorb the replay (the
decision log keeps the latest entry per record, the queue keeps its live
item), so no record is double-counted and none is lost. Every journal
flushes per line and tolerates a torn final line.

Stage conservation holds for every summary:
``records_in == auto_decided + flagged + filtered_out + errored``.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .backends import BackendFailure, ClassifierBackend
from .corpus import CrashRecord, JournalWriter, read_journal
from .ensemble import EnsembleDecision, EnsemblePolicy, Outcome, ReviewQueue, aggregate
from .errors import BackendError, BatchLockedError, TransportError
from .indicators import IndicatorRuleSet, passes_indicator
from .llm import Verdict
from .pairing import ThresholdConfig, pair_candidates


def roster_identity(backend_ids: Sequence[str], prompt_version: str) -> str:
    """Stable identity for 'which panel processed this record'."""
    canon = "\x1f".join(sorted(backend_ids)) + "\x1e" + prompt_version
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


class BatchState:
    """Journal of per-record dispositions, keyed by roster identity."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._processed: dict[str, dict[str, str]] = {}
        for entry in read_journal(self.path):
            self._processed.setdefault(entry["identity"], {})[entry["record_id"]] = entry[
                "disposition"
            ]
        self._writer = JournalWriter(self.path)

    def processed(self, identity: str) -> dict[str, str]:
        return dict(self._processed.get(identity, {}))

    def is_processed(self, identity: str, record_id: str) -> bool:
        return record_id in self._processed.get(identity, {})

    def mark(self, identity: str, record_id: str, disposition: str) -> None:
        self._writer.append(
            {"identity": identity, "record_id": record_id, "disposition": disposition}
        )
        self._processed.setdefault(identity, {})[record_id] = disposition

    def close(self) -> None:
        self._writer.close()


class DecisionLog:
    """Latest ensemble decision per record, journal-backed."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._decisions: dict[str, EnsembleDecision] = {}
        for entry in read_journal(self.path):
            decision = EnsembleDecision.from_dict(entry)
            self._decisions[decision.record_id] = decision
        self._writer = JournalWriter(self.path)

    def record(self, decision: EnsembleDecision) -> None:
        self._writer.append(decision.to_dict())
        self._decisions[decision.record_id] = decision

    def get(self, record_id: str) -> EnsembleDecision | None:
        return self._decisions.get(record_id)

    def all(self) -> dict[str, EnsembleDecision]:
        return dict(self._decisions)

    def close(self) -> None:
        self._writer.close()


class BatchLock:
    """Single-runner lock; steals locks whose owner process is gone."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._held = False

    @staticmethod
    def _alive(pid: int) -> bool:
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return False
        except PermissionError:
            return True
        return True

    def acquire(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        for _ in range(2):
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                try:
                    owner = int(self.path.read_text().strip() or "0")
                except (OSError, ValueError):
                    owner = 0
                if owner and self._alive(owner) and owner != os.getpid():
                    raise BatchLockedError(
                        f"batch already running (pid {owner}); lock: {self.path}"
                    ) from None
                # stale lock from a dead run: remove and retry once
                self.path.unlink(missing_ok=True)
                continue
            with os.fdopen(fd, "w") as fh:
                fh.write(str(os.getpid()))
            self._held = True
            return
        raise BatchLockedError(f"could not acquire batch lock {self.path}")

    def release(self) -> None:
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False

    def __enter__(self) -> "BatchLock":
        self.acquire()
        return self

    def __exit__(self, *exc) -> None:
        self.release()


# dispositions recorded in the batch state
AUTO_YES = "auto_yes"
AUTO_NO = "auto_no"
FLAGGED = "flagged"
FILTERED_SPATIAL = "filtered_out_spatial"
FILTERED_KEYWORD = "filtered_out_keyword"


@dataclass
class BatchSummary:
    identity: str
    prompt_version: str
    backend_ids: tuple[str, ...]
    records_in: int = 0
    auto_yes: int = 0
    auto_no: int = 0
    flagged: int = 0
    filtered_out_spatial: int = 0
    filtered_out_keyword: int = 0
    errored: int = 0
    errored_ids: list[str] = field(default_factory=list)
    backend_seconds: dict[str, float] = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    @property
    def auto_decided(self) -> int:
        return self.auto_yes + self.auto_no

    @property
    def filtered_out(self) -> int:
        return self.filtered_out_spatial + self.filtered_out_keyword

    def conserves(self) -> bool:
        return self.records_in == (
            self.auto_decided + self.flagged + self.filtered_out + self.errored
        )

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "identity": self.identity,
            "prompt_version": self.prompt_version,
            "backend_ids": list(self.backend_ids),
            "records_in": self.records_in,
            "auto_yes": self.auto_yes,
            "auto_no": self.auto_no,
            "auto_decided": self.auto_decided,
            "flagged": self.flagged,
            "filtered_out_spatial": self.filtered_out_spatial,
            "filtered_out_keyword": self.filtered_out_keyword,
            "filtered_out": self.filtered_out,
            "errored": self.errored,
            "errored_ids": list(self.errored_ids),
        }
        if include_timing:
            d["backend_seconds"] = dict(self.backend_seconds)
            d["started_at"] = self.started_at
            d["finished_at"] = self.finished_at
        return d

    def summary(self) -> str:
        check = "ok" if self.conserves() else "VIOLATED"
        return (
            f"batch {self.identity}: in={self.records_in} "
            f"auto_yes={self.auto_yes} auto_no={self.auto_no} "
            f"flagged={self.flagged} filtered={self.filtered_out} "
            f"(spatial={self.filtered_out_spatial}, keyword={self.filtered_out_keyword}) "
            f"errored={self.errored} [conservation {check}]"
        )


def run_batch(
    records: Sequence[CrashRecord],
    backends: Sequence[ClassifierBackend],
    policy: EnsemblePolicy,
    state: BatchState,
    queue: ReviewQueue,
    decisions: DecisionLog,
    thresholds: ThresholdConfig | None = None,
    rules: IndicatorRuleSet | None = None,
    prompt_version: str = "",
    batch_size: int | None = None,
    reprocess: bool = False,
    lock: BatchLock | None = None,
    now_fn: Callable[[], datetime] = datetime.now,
) -> BatchSummary:
    """Process unhandled records once, under a single-runner lock.

    ``reprocess`` ignores existing markers (records get fresh decisions).
    Records whose classification dies on an unreachable backend stay
    unprocessed and are counted in ``errored`` for this run.
    """
    if not backends:
        raise ValueError("batch needs at least one backend")
    thresholds = thresholds or ThresholdConfig()
    rules = rules or IndicatorRuleSet()
    backend_ids = tuple(b.backend_id for b in backends)
    identity = roster_identity(backend_ids, prompt_version)

    own_lock = lock or BatchLock(state.path.with_suffix(".lock"))
    with own_lock:
        summary = BatchSummary(
            identity=identity,
            prompt_version=prompt_version,
            backend_ids=backend_ids,
            started_at=now_fn().isoformat(),
        )

        done = set() if reprocess else set(state.processed(identity))
        todo = [r for r in records if r.record_id not in done]
        todo.sort(key=lambda r: (r.occurred_at, r.record_id))
        if batch_size is not None:
            todo = todo[:batch_size]
        summary.records_in = len(todo)
        todo_ids = {r.record_id for r in todo}

        # pairing runs over the whole corpus: a new record may be secondary
        # to a long-processed primary
        pairs = pair_candidates(records, thresholds)
        paired_secondaries = {p.secondary_id for p in pairs}

        classifiable: list[CrashRecord] = []
        for rec in todo:
            if rec.filterable and rec.record_id not in paired_secondaries:
                state.mark(identity, rec.record_id, FILTERED_SPATIAL)
                summary.filtered_out_spatial += 1
                continue
            # unfilterable records skip the spatial stage entirely
            ok, _ = passes_indicator(rec.narrative, rules)
            if not ok:
                state.mark(identity, rec.record_id, FILTERED_KEYWORD)
                summary.filtered_out_keyword += 1
                continue
            classifiable.append(rec)

        for rec in classifiable:
            results: list[Verdict | BackendFailure] = []
            unreachable = False
            for backend in backends:
                started = time.perf_counter()
                try:
                    results.append(backend.classify(rec))
                except TransportError:
                    # endpoint down: leave the record unprocessed so the
                    # next batch retries it
                    unreachable = True
                    break
                except BackendError as exc:
                    results.append(
                        BackendFailure(
                            backend_id=backend.backend_id,
                            record_id=rec.record_id,
                            category=exc.category,
                            message=str(exc),
                        )
                    )
                finally:
                    summary.backend_seconds[backend.backend_id] = summary.backend_seconds.get(
                        backend.backend_id, 0.0
                    ) + (time.perf_counter() - started)
            if unreachable:
                summary.errored += 1
                summary.errored_ids.append(rec.record_id)
                continue

            decision = aggregate(results, policy)
            decisions.record(decision)
            if decision.outcome is Outcome.FLAGGED:
                queue.enqueue_or_keep(decision)
                state.mark(identity, rec.record_id, FLAGGED)
                summary.flagged += 1
            elif decision.outcome is Outcome.AUTO_YES:
                state.mark(identity, rec.record_id, AUTO_YES)
                summary.auto_yes += 1
            else:
                state.mark(identity, rec.record_id, AUTO_NO)
                summary.auto_no += 1

        summary.finished_at = now_fn().isoformat()
        if not summary.conserves():
            raise AssertionError(
                f"stage conservation violated: {summary.to_dict(include_timing=False)}"
            )
        return summary
