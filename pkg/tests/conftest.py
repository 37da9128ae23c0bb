"""Shared fixtures: record factory and a scriptable local HTTP stub."""

from __future__ import annotations

import json
import threading
from datetime import datetime
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from crashqc.corpus import CrashRecord, Direction, RoadwayClass


def make_record(record_id: str = "R1", **overrides) -> CrashRecord:
    fields = {
        "record_id": record_id,
        "occurred_at": datetime(2021, 6, 1, 12, 0),
        "route_id": "I-75",
        "milepoint": 10.0,
        "latitude": None,
        "longitude": None,
        "roadway_class": RoadwayClass.ACCESS_CONTROLLED,
        "direction": Direction.N,
        "coded_secondary": False,
        "narrative": "vehicle struck debris from an earlier crash",
    }
    fields.update(overrides)
    return CrashRecord(**fields)


@pytest.fixture
def record_factory():
    return make_record


class StubServer:
    """Local HTTP server that replays a scripted list of responses.

    Each script entry is ``(status, body)`` where body is a dict (sent as
    JSON) or raw bytes. When the script runs out the last entry repeats.
    Received request bodies are collected for assertions.
    """

    def __init__(self, script):
        self.script = list(script)
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        self._count = 0

        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                with stub._lock:
                    idx = min(stub._count, len(stub.script) - 1)
                    stub._count += 1
                    status, body = stub.script[idx]
                    try:
                        parsed = json.loads(raw)
                    except ValueError:
                        parsed = {"_raw": raw.decode("utf-8", "replace")}
                    stub.requests.append({"path": self.path, "body": parsed})
                payload = body if isinstance(body, bytes) else json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        # small poll interval keeps shutdown() from stalling each test ~0.5s
        self._thread = threading.Thread(
            target=lambda: self._server.serve_forever(poll_interval=0.01), daemon=True
        )

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    @property
    def request_count(self) -> int:
        with self._lock:
            return self._count

    def __enter__(self) -> "StubServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()


def chat_reply(text: str) -> dict:
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def generate_reply(text: str) -> dict:
    return {"response": text}


def verdict_json(answer: str = "YES", probability: float = 0.9, explanation: str = "queue impact") -> str:
    return json.dumps({"answer": answer, "probability": probability, "explanation": explanation})


# Every acceptance test gets one PASS/FAIL line at the end of the run,
# whatever the verbosity.
_ACCEPTANCE: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _ACCEPTANCE.append((name, report.passed))
    elif report.failed:  # setup or teardown error
        _ACCEPTANCE.append((name, False))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")
