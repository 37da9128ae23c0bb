"""Command-line entry points.

Every verb reads and writes plain files so runs can be scripted and
inspected. ``crashqc <verb> --help`` shows the options.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import batch as batchmod
from . import evalkit
from .backends import NativeLogRegBackend
from .config import PipelineConfig, build_backends, load_config, prompt_version_of
from .corpus import (
    ColumnMapping,
    LabelStore,
    export,
    ingest,
    records_by_id,
    split_by_year,
)
from .backends import classify_with_failures
from .ensemble import EnsembleDecision, ReviewQueue, aggregate
from .errors import CrashQCError
from .evalkit import EvalResult, RuntimeSplit
from .indicators import filter_pairs, passes_indicator
from .llm import Verdict
from .logreg import HyperParams, save_model, top_features, train, tune
from .pairing import pair_candidates, partition_filterable, read_pairs_csv, write_pairs_csv
from .service import ServiceState, load_eval_results, run_service
from .synth import generate_synthetic_corpus
from .textfeat import build_vocabulary, tokenize, vectorize


def _load_corpus(path: str, mapping: str | None, fmt: str | None):
    m = ColumnMapping.from_file(mapping) if mapping else None
    return ingest(path, mapping=m, fmt=fmt)


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="corpus file (CSV or JSONL)")
    p.add_argument("--mapping", help="JSON file mapping source columns to fields")
    p.add_argument("--format", dest="fmt", choices=("csv", "jsonl"), help="override detection")


def cmd_ingest(args) -> int:
    result = _load_corpus(args.input, args.mapping, args.fmt)
    print(result.report.summary())
    for rej in result.report.rejected[:20]:
        print(f"  rejected row {rej.row_number}: {rej.reason}", file=sys.stderr)
    if len(result.report.rejected) > 20:
        print(f"  ... {len(result.report.rejected) - 20} more", file=sys.stderr)
    if args.out:
        labels = result.label_map()
        export(result.records, args.out, labels=labels or None)
        print(f"wrote {len(result.records)} records to {args.out}")
    return 0 if not result.report.rejected or not args.strict else 1


def cmd_synth(args) -> int:
    records, labels = generate_synthetic_corpus(
        n=args.n, positive_fraction=args.positive_fraction, seed=args.seed
    )
    label_map = {lab.record_id: lab.is_secondary for lab in labels}
    export(records, args.out, labels=label_map)
    positives = sum(label_map.values())
    print(f"wrote {len(records)} synthetic records to {args.out} ({positives} positives)")
    return 0


def cmd_pair(args) -> int:
    result = _load_corpus(args.input, args.mapping, args.fmt)
    filterable, skipped = partition_filterable(result.records)
    pairs = pair_candidates(filterable)
    write_pairs_csv(pairs, args.out)
    print(
        f"{len(pairs)} candidate pairs from {len(filterable)} locatable records "
        f"({len(skipped)} without usable location) -> {args.out}"
    )
    return 0


def cmd_filter(args) -> int:
    result = _load_corpus(args.input, args.mapping, args.fmt)
    pairs = read_pairs_csv(args.pairs)
    kept, report = filter_pairs(pairs, result.records)
    write_pairs_csv(kept, args.out)
    print(report.summary())
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
        print(f"wrote report to {args.report}")
    return 0


def cmd_train(args) -> int:
    result = _load_corpus(args.input, args.mapping, args.fmt)
    if not result.labels:
        print("error: training needs a labeled corpus", file=sys.stderr)
        return 2
    if args.cutoff_year is not None:
        split = split_by_year(result.records, args.cutoff_year)
        train_records = [r for r in result.records if r.record_id in split.train_ids]
        print(split.summary())
    else:
        train_records = result.records
    label_map = result.label_map()
    labeled = [r for r in train_records if r.record_id in label_map]
    texts = [r.narrative for r in labeled]
    y = [label_map[r.record_id] for r in labeled]
    vocab = build_vocabulary(
        [tokenize(t) for t in texts], min_df=args.min_df, use_bigrams=args.bigrams
    )
    X = [vectorize(t, vocab) for t in texts]
    if args.tune:
        hp, grid = tune(X, y, vocab, seed=args.seed)
        print("grid search (mean fold F1):")
        for row in grid:
            print(
                f"  lr={row['learning_rate']:<6} l2={row['l2_lambda']:<8} "
                f"f1={row['mean_f1']:.4f}"
            )
        hp = HyperParams(
            learning_rate=hp.learning_rate,
            l2_lambda=hp.l2_lambda,
            epochs=args.epochs,
            positive_weight=args.positive_weight,
            seed=args.seed,
        )
    else:
        hp = HyperParams(
            learning_rate=args.lr,
            l2_lambda=args.l2,
            epochs=args.epochs,
            positive_weight=args.positive_weight,
            seed=args.seed,
        )
    model, log = train(X, y, vocab, hp)
    save_model(model, args.out)
    vocab_out = args.vocab_out or str(Path(args.out).with_suffix(".vocab.json"))
    vocab.save(vocab_out)
    print(
        f"trained on {len(labeled)} narratives, {len(vocab.terms)} features, "
        f"{hp.epochs} epochs in {model.train_seconds:.2f}s "
        f"(final loss {log.losses[-1]:.4f}) -> {args.out} (+ {vocab_out})"
    )
    pos, neg = top_features(model, 10)
    print("top positive terms: " + ", ".join(f"{t} ({w:+.3f})" for t, w in pos))
    print("top negative terms: " + ", ".join(f"{t} ({w:+.3f})" for t, w in neg))
    return 0


def cmd_classify(args) -> int:
    config = load_config(args.config)
    result = _load_corpus(args.input, args.mapping, args.fmt)
    backends = build_backends(config)
    records = result.records

    filterable, unfilterable = partition_filterable(records)
    pairs = pair_candidates(filterable, config.thresholds)
    kept_pairs, _ = filter_pairs(pairs, records, config.indicators)
    kept_ids = {p.secondary_id for p in kept_pairs}
    survivors = [r for r in records if r.record_id in kept_ids]
    # records without a usable location skip pairing, not the keyword stage
    for r in unfilterable:
        ok, _ = passes_indicator(r.narrative, config.indicators)
        if ok:
            survivors.append(r)
    survivors.sort(key=lambda r: (r.occurred_at, r.record_id))

    print(
        f"{len(records)} records -> {len(pairs)} spatial pairs -> "
        f"{len(survivors)} candidates after keyword triage"
    )
    counts = {"AutoYes": 0, "AutoNo": 0, "Flagged": 0}
    out = open(args.out, "w", encoding="utf-8") if args.out else None
    try:
        for rec in survivors:
            results = [classify_with_failures(b, rec) for b in backends]
            decision = aggregate(results, config.policy)
            counts[decision.outcome.value] += 1
            if out:
                out.write(json.dumps(decision.to_dict(), ensure_ascii=False) + "\n")
    finally:
        if out:
            out.close()
    print(
        f"decided: {counts['AutoYes']} secondary, {counts['AutoNo']} not secondary, "
        f"{counts['Flagged']} flagged for review"
    )
    if args.out:
        print(f"wrote decisions to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    result = _load_corpus(args.input, args.mapping, args.fmt)
    if not result.labels:
        print("error: evaluation needs a labeled corpus", file=sys.stderr)
        return 2
    truth = result.label_map()

    per_backend: dict[str, dict[str, bool]] = {}
    timings: dict[str, float] = {}
    with open(args.decisions, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            decision = EnsembleDecision.from_dict(json.loads(line))
            for v in decision.verdicts:
                if isinstance(v, Verdict):
                    per_backend.setdefault(v.backend_id, {})[decision.record_id] = v.is_yes
                    timings[v.backend_id] = timings.get(v.backend_id, 0.0) + (
                        (v.latency_ms or 0.0) / 1000.0
                    )

    results = []
    for backend_id in sorted(per_backend):
        preds = per_backend[backend_id]
        scoreable = {rid: p for rid, p in preds.items() if rid in truth}
        if not scoreable:
            continue
        cm = evalkit.confusion(scoreable.items(), truth)
        results.append(
            EvalResult(
                backend_id=backend_id,
                cm=cm,
                runtime=RuntimeSplit(test_s=timings.get(backend_id)),
            )
        )
    if not results:
        print("error: no decisions overlap the labeled corpus", file=sys.stderr)
        return 2
    text, csv_text = evalkit.comparison_report(results)
    print(text)
    if args.out:
        Path(args.out).write_text(
            json.dumps([r.to_dict() for r in results], indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote evaluation rows to {args.out}")
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
        print(f"wrote CSV to {args.csv}")
    return 0


def cmd_validate_golden(args) -> int:
    fixtures = evalkit.load_golden_fixtures(args.path)
    report = evalkit.validate_golden(fixtures)
    print(report.summary())
    if args.out:
        results = evalkit.results_from_golden(fixtures)
        Path(args.out).write_text(
            json.dumps([r.to_dict() for r in results], indent=2) + "\n", encoding="utf-8"
        )
        print(f"wrote evaluation rows to {args.out}")
    return 0 if report.ok else 1


def cmd_batch(args) -> int:
    config = load_config(args.config)
    config.workspace.mkdir(parents=True, exist_ok=True)
    result = _load_corpus(args.records, args.mapping, args.fmt)
    backends = build_backends(config)

    label_store = LabelStore(
        config.label_store_path, known_ids={r.record_id for r in result.records}
    )
    state = batchmod.BatchState(config.batch_state_path)
    decisions = batchmod.DecisionLog(config.decision_log_path)
    queue = ReviewQueue(config.queue_journal_path, label_store=label_store)
    try:
        summary = batchmod.run_batch(
            result.records,
            backends,
            config.policy,
            state=state,
            queue=queue,
            decisions=decisions,
            thresholds=config.thresholds,
            rules=config.indicators,
            prompt_version=prompt_version_of(config),
            batch_size=args.size if args.size is not None else config.batch_size,
            reprocess=args.reprocess,
            lock=batchmod.BatchLock(config.lock_path),
        )
    finally:
        queue.close()
        decisions.close()
        state.close()
        label_store.close()
    print(summary.summary())
    if args.summary_out:
        Path(args.summary_out).write_text(
            json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def _service_state(config: PipelineConfig, args) -> ServiceState:
    result = _load_corpus(args.records, args.mapping, args.fmt)
    config.workspace.mkdir(parents=True, exist_ok=True)
    label_store = LabelStore(
        config.label_store_path, known_ids={r.record_id for r in result.records}
    )
    queue = ReviewQueue(config.queue_journal_path, label_store=label_store)
    eval_results = []
    eval_path = Path(args.eval) if args.eval else config.workspace / "eval_results.json"
    if eval_path.exists():
        eval_results = load_eval_results(eval_path)
    frontend = Path(args.frontend) if args.frontend else None
    return ServiceState(
        records=records_by_id(result.records),
        queue=queue,
        rules=config.indicators,
        eval_results=eval_results,
        label_store=label_store,
        auth_token=config.service.resolved_token(),
        frontend_dir=frontend,
    )


def cmd_serve(args) -> int:
    config = load_config(args.config)
    state = _service_state(config, args)
    host = args.host or config.service.host
    port = args.port or config.service.port
    run_service(state, host=host, port=port)
    return 0


def cmd_export(args) -> int:
    result = _load_corpus(args.input, args.mapping, args.fmt)
    labels = result.label_map()
    if args.label_store:
        store = LabelStore(args.label_store)
        labels.update(store.active_map())
        store.close()
    export(result.records, args.out, labels=labels or None)
    print(f"wrote {len(result.records)} records ({len(labels)} labeled) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crashqc",
        description="Secondary-crash identification pipeline over crash narratives.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="validate a corpus file and report rejects")
    _add_corpus_args(p)
    p.add_argument("--out", help="write the accepted records back out (canonical form)")
    p.add_argument("--strict", action="store_true", help="exit nonzero if any row was rejected")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--n", type=int, default=1000, help="number of records")
    p.add_argument("--positive-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("pair", help="find spatiotemporal candidate pairs")
    _add_corpus_args(p)
    p.add_argument("--out", required=True, help="output pairs CSV")
    p.set_defaults(fn=cmd_pair)

    p = sub.add_parser("filter", help="keyword triage over candidate pairs")
    _add_corpus_args(p)
    p.add_argument("--pairs", required=True, help="pairs CSV from the pair verb")
    p.add_argument("--out", required=True, help="output CSV of surviving pairs")
    p.add_argument("--report", help="write a JSON filter report")
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("train", help="fit the native tf-idf + logistic model")
    _add_corpus_args(p)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--vocab-out", help="vocabulary JSON path (default: model path .vocab.json)")
    p.add_argument("--min-df", type=int, default=2)
    p.add_argument("--bigrams", action="store_true")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--positive-weight", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tune", action="store_true", help="grid-search lr and l2 first")
    p.add_argument("--cutoff-year", type=int, help="train on years <= cutoff only")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("classify", help="one-shot pipeline run without batch state")
    _add_corpus_args(p)
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write decisions JSONL")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("evaluate", help="score decision files against labels")
    _add_corpus_args(p)
    p.add_argument("--decisions", required=True, help="decisions JSONL")
    p.add_argument("--out", help="write evaluation rows JSON (for the dashboard)")
    p.add_argument("--csv", help="write the comparison CSV")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("validate-golden", help="check bundled benchmark matrices")
    p.add_argument("--path", help="fixture file (defaults to the bundled set)")
    p.add_argument("--out", help="write evaluation rows JSON (for the dashboard)")
    p.set_defaults(fn=cmd_validate_golden)

    p = sub.add_parser("batch", help="incremental stateful pipeline run")
    p.add_argument("--config", required=True)
    p.add_argument("--records", required=True, help="corpus file")
    p.add_argument("--mapping")
    p.add_argument("--format", dest="fmt", choices=("csv", "jsonl"))
    p.add_argument("--size", type=int, help="cap records this run")
    p.add_argument("--reprocess", action="store_true", help="ignore previous dispositions")
    p.add_argument("--summary-out", help="write the batch summary JSON")
    p.set_defaults(fn=cmd_batch)

    p = sub.add_parser("serve", help="start the review API")
    p.add_argument("--config", required=True)
    p.add_argument("--records", required=True, help="corpus file")
    p.add_argument("--mapping")
    p.add_argument("--format", dest="fmt", choices=("csv", "jsonl"))
    p.add_argument("--eval", help="evaluation rows JSON for the dashboard")
    p.add_argument("--frontend", help="static frontend directory to mount")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("export", help="write a corpus with current labels applied")
    _add_corpus_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--label-store", help="labels journal to merge in")
    p.set_defaults(fn=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CrashQCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
