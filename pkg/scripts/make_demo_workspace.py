#!/usr/bin/env python3
"""Build a ready-to-serve demo workspace in one command.

Creates a directory containing a labeled synthetic corpus, a trained
native model, a pipeline config, and populated journals from one batch
run, so that

    crashqc serve --config <dir>/pipeline.yaml --records <dir>/corpus.csv

works immediately afterwards. With --with-stubs the config also gets an
LLM backend and a remote-classifier backend wired to a local stub
server, which this script starts just for the batch run.

Usage:
    python3 scripts/make_demo_workspace.py demo/
    python3 scripts/make_demo_workspace.py demo/ --with-stubs --n 500
"""

from __future__ import annotations

import argparse
import socket
import subprocess
import sys
import time
from pathlib import Path

from crashqc.cli import main as crashqc


def wait_for_port(port: int, timeout_s: float = 10.0) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                return
        except OSError:
            time.sleep(0.05)
    raise RuntimeError(f"stub server did not come up on port {port}")


def pipeline_yaml(with_stubs: bool, stub_port: int) -> str:
    backends = [
        "  - kind: native\n"
        "    id: tfidf-logreg\n"
        "    model_path: model.json\n"
        "    vocab_path: model.vocab.json\n"
    ]
    policy = "  mode: majority\n  quorum: 1\n"
    if with_stubs:
        backends.append(
            "  - kind: llm\n"
            "    id: stub-llm\n"
            f"    url: http://127.0.0.1:{stub_port}/api/chat\n"
            "    model: stub\n"
            "    prompt_version: v3\n"
        )
        backends.append(
            "  - kind: remote\n"
            "    id: stub-remote\n"
            f"    url: http://127.0.0.1:{stub_port}/classify\n"
        )
        policy = "  mode: majority\n  quorum: 2\n"
    return (
        "workspace: .\n"
        "backends:\n" + "".join(backends) +
        "policy:\n" + policy +
        "service:\n  host: 127.0.0.1\n  port: 8000\n"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("dir", type=Path, help="workspace directory to create")
    parser.add_argument("--n", type=int, default=300, help="corpus size")
    parser.add_argument("--positive-fraction", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--with-stubs", action="store_true",
                        help="add LLM and remote backends served by the local stub")
    parser.add_argument("--stub-port", type=int, default=11434)
    args = parser.parse_args()

    work = args.dir
    work.mkdir(parents=True, exist_ok=True)
    corpus = work / "corpus.csv"
    config = work / "pipeline.yaml"

    step = lambda argv: sys.exit(f"step failed: crashqc {' '.join(argv)}") \
        if crashqc(argv) != 0 else None

    step(["synth", "--n", str(args.n),
          "--positive-fraction", str(args.positive_fraction),
          "--seed", str(args.seed), "--out", str(corpus)])
    step(["train", str(corpus), "--out", str(work / "model.json"), "--min-df", "1"])
    config.write_text(pipeline_yaml(args.with_stubs, args.stub_port), encoding="utf-8")

    stub = None
    if args.with_stubs:
        stub_script = Path(__file__).with_name("stub_llm_server.py")
        stub = subprocess.Popen(
            [sys.executable, str(stub_script), "--port", str(args.stub_port)],
            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
        )
        wait_for_port(args.stub_port)
    try:
        step(["batch", "--config", str(config), "--records", str(corpus)])
    finally:
        if stub is not None:
            stub.terminate()
            stub.wait(timeout=5)

    step(["evaluate", str(corpus),
          "--decisions", str(work / "decisions.jsonl"),
          "--out", str(work / "eval_results.json")])

    print()
    print(f"demo workspace ready in {work}/")
    print("next:")
    print(f"  crashqc serve --config {config} --records {corpus}")
    if args.with_stubs:
        print(f"  (restart scripts/stub_llm_server.py --port {args.stub_port} "
              "before any further batch runs)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
