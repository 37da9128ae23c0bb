#!/usr/bin/env python3
"""Train and score the native classifier, then rank it against the
frozen benchmark results.

Everything runs on a synthetic corpus in a few seconds: generate
records, split chronologically, fit the tf-idf logistic model on the
earlier years, score the later ones, and print a quality-vs-runtime
comparison that includes the golden fixture rows.

Usage:
    python3 scripts/run_desk_benchmark.py --n 2000 --seed 42
    python3 scripts/run_desk_benchmark.py --out-csv bench.csv
"""

from __future__ import annotations

import argparse
import json
import time
from pathlib import Path

from crashqc.corpus import split_by_year
from crashqc.evalkit import (
    EvalResult,
    RuntimeSplit,
    comparison_report,
    confusion,
    load_golden_fixtures,
    metrics,
    results_from_golden,
)
from crashqc.logreg import HyperParams, predict, train
from crashqc.synth import generate_synthetic_corpus
from crashqc.textfeat import build_vocabulary, tokenize, vectorize


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000, help="corpus size")
    parser.add_argument("--positive-fraction", type=float, default=0.228)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--cutoff-year", type=int, default=2020,
                        help="last year that goes into the training split")
    parser.add_argument("--min-df", type=int, default=2)
    parser.add_argument("--epochs", type=int, default=300)
    parser.add_argument("--out-csv", type=Path, help="write the comparison table as CSV")
    parser.add_argument("--out-json", type=Path, help="write per-backend metrics as JSON")
    args = parser.parse_args()

    records, labels = generate_synthetic_corpus(
        n=args.n, positive_fraction=args.positive_fraction, seed=args.seed
    )
    label_map = {lb.record_id: lb.is_secondary for lb in labels}
    by_id = {r.record_id: r for r in records}

    split = split_by_year(records, cutoff_year=args.cutoff_year)
    train_recs = [by_id[rid] for rid in split.train_ids]
    test_recs = [by_id[rid] for rid in split.test_ids]
    print(f"corpus: {len(records)} records "
          f"({sum(label_map.values())} secondary), "
          f"train {len(train_recs)} / test {len(test_recs)} "
          f"at cutoff {args.cutoff_year}")

    t0 = time.perf_counter()
    vocab = build_vocabulary([tokenize(r.narrative) for r in train_recs], min_df=args.min_df)
    X = [vectorize(r.narrative, vocab) for r in train_recs]
    y = [label_map[r.record_id] for r in train_recs]
    model, log = train(X, y, vocab, HyperParams(epochs=args.epochs))
    train_s = time.perf_counter() - t0
    print(f"trained on {len(X)} docs, |V|={len(vocab)}, "
          f"final loss {log.losses[-1]:.4f}, {train_s:.2f}s")

    t0 = time.perf_counter()
    preds = [(r.record_id, predict(model, vectorize(r.narrative, vocab))) for r in test_recs]
    test_s = time.perf_counter() - t0
    cm = confusion(preds, label_map)
    mine = EvalResult("logreg-tfidf-desk", cm, RuntimeSplit(train_s=train_s, test_s=test_s))

    rows = [mine] + results_from_golden(load_golden_fixtures())
    rows.sort(key=lambda r: metrics(r.cm).f1 or 0.0, reverse=True)
    table, csv_text = comparison_report(rows)
    print()
    print(table)

    if args.out_csv:
        args.out_csv.write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out_csv}")
    if args.out_json:
        payload = []
        for row in rows:
            m = metrics(row.cm)
            payload.append({
                "backend_id": row.backend_id,
                "tp": row.cm.tp, "fp": row.cm.fp, "fn": row.cm.fn, "tn": row.cm.tn,
                "precision": m.precision, "recall": m.recall,
                "f1": m.f1, "accuracy": m.accuracy,
                "train_s": row.runtime.train_s, "test_s": row.runtime.test_s,
            })
        args.out_json.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {args.out_json}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
