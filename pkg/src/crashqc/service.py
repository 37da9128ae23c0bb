"""Review service: a small HTTP API over the queue, records, and metrics.

Read endpoints are open; mutations (resolve, skip) require a bearer
token whenever one is configured. An empty token leaves mutations open,
which is only acceptable bound to localhost; ``run_service`` refuses any
other combination.

Routes:

========  ==============================  =======================================
GET       /health                          liveness and queue counts
GET       /review/queue                    paginated items (?status=&page=&page_size=)
GET       /records/{record_id}             record, latest decision, indicator hits
POST      /review/{record_id}/resolve      adjudicate; writes the label
POST      /review/{record_id}/skip         defer without adjudicating
GET       /metrics                         evaluation rows + per-backend agreement
==========================================================================

Status mapping: 401 bad or missing token, 404 unknown record or item,
409 item already resolved, 422 malformed body.
"""

from __future__ import annotations

import hmac
import json
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .corpus import CrashRecord, LabelStore
from .ensemble import ReviewQueue, ReviewStatus
from .errors import AlreadyResolvedError
from .evalkit import EvalResult
from .indicators import IndicatorRuleSet, passes_indicator

try:  # uvicorn is only needed when actually serving
    import uvicorn
except ImportError:  # pragma: no cover
    uvicorn = None


def record_to_dict(record: CrashRecord) -> dict:
    return {
        "record_id": record.record_id,
        "occurred_at": record.occurred_at.isoformat(),
        "route_id": record.route_id,
        "milepoint": record.milepoint,
        "latitude": record.latitude,
        "longitude": record.longitude,
        "roadway_class": record.roadway_class.value,
        "direction": record.direction.value,
        "narrative": record.narrative,
        "coded_secondary": record.coded_secondary,
    }


@dataclass
class ServiceState:
    """Everything the routes need, assembled once at startup."""

    records: dict[str, CrashRecord]
    queue: ReviewQueue
    rules: IndicatorRuleSet = field(default_factory=IndicatorRuleSet)
    eval_results: list[EvalResult] = field(default_factory=list)
    label_store: LabelStore | None = None
    auth_token: str = ""
    frontend_dir: Path | None = None


def load_eval_results(path: Path) -> list[EvalResult]:
    """Read evaluation rows exported by the evaluate command."""
    rows = json.loads(path.read_text(encoding="utf-8"))
    return [EvalResult.from_dict(r) for r in rows]


_STATUS_BY_NAME = {s.value.lower(): s for s in ReviewStatus}


def _queue_counts(queue: ReviewQueue) -> dict[str, int]:
    return {s.value.lower(): len(queue.items(s)) for s in ReviewStatus}


class ResolveRequest(BaseModel):
    is_secondary: bool
    analyst: str
    note: str | None = None


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="crashqc review service", docs_url=None, redoc_url=None)

    def require_auth(authorization: str | None = Header(default=None)) -> None:
        if not state.auth_token:
            return
        expected = f"Bearer {state.auth_token}"
        if authorization is None or not hmac.compare_digest(authorization, expected):
            raise HTTPException(
                status_code=401,
                detail="missing or invalid bearer token",
                headers={"WWW-Authenticate": "Bearer"},
            )

    def item_payload(item) -> dict:
        d = item.to_dict()
        d["answer_split"] = item.answer_split
        record = state.records.get(item.record_id)
        if record is not None:
            d["narrative"] = record.narrative
            _, matches = passes_indicator(record.narrative, state.rules)
            d["indicator_matches"] = matches
        else:
            d["narrative"] = None
            d["indicator_matches"] = []
        return d

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "records": len(state.records),
            "queue": _queue_counts(state.queue),
        }

    @app.get("/review/queue")
    def review_queue(
        status: str = Query(default="pending"),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ) -> dict:
        key = status.strip().lower()
        if key == "all":
            wanted = None
        elif key in _STATUS_BY_NAME:
            wanted = _STATUS_BY_NAME[key]
        else:
            valid = ", ".join(sorted(_STATUS_BY_NAME))
            raise HTTPException(
                status_code=422, detail=f"unknown status {status!r} (expected all, {valid})"
            )
        items = state.queue.items(wanted)
        total = len(items)
        start = (page - 1) * page_size
        page_items = items[start : start + page_size]
        return {
            "items": [item_payload(i) for i in page_items],
            "page": page,
            "page_size": page_size,
            "total": total,
            "total_pages": max(1, -(-total // page_size)),
        }

    @app.get("/records/{record_id}")
    def get_record(record_id: str) -> dict:
        record = state.records.get(record_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown record {record_id!r}")
        _, matches = passes_indicator(record.narrative, state.rules)
        item = state.queue.get(record_id)
        label = None
        if state.label_store is not None:
            active = state.label_store.active(record_id)
            if active is not None:
                label = active.to_dict()
        return {
            "record": record_to_dict(record),
            "indicator_matches": matches,
            "review_item": item.to_dict() if item else None,
            "label": label,
        }

    @app.post("/review/{record_id}/resolve", dependencies=[Depends(require_auth)])
    def resolve(record_id: str, body: ResolveRequest) -> dict:
        try:
            item = state.queue.resolve(
                record_id,
                is_secondary=body.is_secondary,
                analyst=body.analyst,
                note=body.note,
            )
        except KeyError:
            raise HTTPException(
                status_code=404, detail=f"no review item for record {record_id!r}"
            ) from None
        except AlreadyResolvedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return item_payload(item)

    @app.post("/review/{record_id}/skip", dependencies=[Depends(require_auth)])
    def skip(record_id: str) -> dict:
        try:
            item = state.queue.skip(record_id)
        except KeyError:
            raise HTTPException(
                status_code=404, detail=f"no review item for record {record_id!r}"
            ) from None
        except AlreadyResolvedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        return item_payload(item)

    @app.get("/metrics")
    def metrics_route() -> dict:
        return {
            "evaluation": [r.to_dict() for r in state.eval_results],
            "agreement": state.queue.agreement(),
            "queue": _queue_counts(state.queue),
        }

    if state.frontend_dir is not None and state.frontend_dir.is_dir():
        app.mount("/", StaticFiles(directory=state.frontend_dir, html=True), name="ui")

    return app


_LOCAL_HOSTS = ("127.0.0.1", "localhost", "::1")


def run_service(state: ServiceState, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Serve the app; non-local binds require a configured token."""
    if host not in _LOCAL_HOSTS and not state.auth_token:
        raise ValueError(
            f"refusing to bind {host} without an auth token; "
            "set service.auth_token or CRASHQC_AUTH_TOKEN"
        )
    if uvicorn is None:  # pragma: no cover
        raise RuntimeError("uvicorn is not installed")
    uvicorn.run(create_app(state), host=host, port=port, log_level="info")
