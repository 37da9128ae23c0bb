#!/usr/bin/env python3
"""Local stand-in for the LLM and remote-classifier endpoints.

Serves three routes from one process so the full pipeline can run
offline:

    POST /api/chat      chat-style completion
    POST /api/generate  prompt-style completion
    POST /classify      remote classifier wire format

Answers are produced by the synthetic-corpus cue heuristic, so against a
`crashqc synth` corpus this behaves like a perfect model; against real
narratives it is only a wiring check. The narrative is taken from the
last chat message (or the text after the final blank line of a prompt).

Usage:
    python3 scripts/stub_llm_server.py --port 11434
"""

from __future__ import annotations

import argparse
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from crashqc.synth import cue_classifier


def verdict_for(narrative: str) -> dict:
    answer, probability = cue_classifier(narrative)
    return {
        "answer": answer,
        "probability": probability,
        "explanation": "matched a known secondary-crash cue"
        if answer == "YES"
        else "no secondary-crash cue present",
    }


class Handler(BaseHTTPRequestHandler):
    def do_POST(self) -> None:
        length = int(self.headers.get("Content-Length", 0))
        try:
            data = json.loads(self.rfile.read(length))
        except ValueError:
            self._reply(400, {"error": "request body is not JSON"})
            return

        if self.path == "/api/chat":
            narrative = data["messages"][-1]["content"]
            content = json.dumps(verdict_for(narrative))
            self._reply(200, {"choices": [{"message": {"role": "assistant", "content": content}}]})
        elif self.path == "/api/generate":
            narrative = data.get("prompt", "").rsplit("\n\n", 1)[-1]
            self._reply(200, {"response": json.dumps(verdict_for(narrative))})
        elif self.path == "/classify":
            self._reply(200, verdict_for(data.get("narrative", "")))
        else:
            self._reply(404, {"error": f"unknown path {self.path}"})

    def _reply(self, status: int, body: dict) -> None:
        payload = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt: str, *args) -> None:
        print(f"{self.address_string()} {fmt % args}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=11434)
    args = parser.parse_args()

    server = ThreadingHTTPServer((args.host, args.port), Handler)
    print(f"stub model endpoints on http://{args.host}:{args.port} "
          "(/api/chat, /api/generate, /classify); Ctrl-C stops")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
