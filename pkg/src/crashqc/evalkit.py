"""Evaluation: confusion matrices, guarded metrics, golden validation.

Zero-denominator metrics are undefined (None), never 0 or NaN; display
layers render them as a dash. The golden fixture file pins the published
benchmark results for the reference classifier suite; ``validate_golden``
recomputes every derived metric from the raw counts with half-up
two-decimal rounding and treats any mismatch as a hard failure, which
keeps this module's arithmetic honest.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import UnknownRecordError

GOLDEN_SCHEMA = "crashqc-golden-1"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def sum_of_falses(self) -> int:
        return self.fp + self.fn

    def inverted(self) -> "ConfusionMatrix":
        """The matrix with the positive class flipped."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class Metrics:
    precision: float | None
    recall: float | None
    f1: float | None
    accuracy: float | None


def confusion(
    predictions: Iterable[tuple[str, bool]], labels: Mapping[str, bool]
) -> ConfusionMatrix:
    """Tally predictions against ground truth; unlabeled records error."""
    tp = fp = fn = tn = 0
    for record_id, predicted in predictions:
        if record_id not in labels:
            raise UnknownRecordError(f"record {record_id!r} has no label")
        actual = labels[record_id]
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise ValueError("cannot compute metrics for an empty matrix")
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else None
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    accuracy = (cm.tp + cm.tn) / cm.total
    return Metrics(precision=precision, recall=recall, f1=f1, accuracy=accuracy)


def round_half_up(value: float, places: int = 2) -> float:
    """Decimal half-up rounding (0.005 → 0.01), unlike bankers' round()."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class RuntimeSplit:
    train_s: float | None = None
    test_s: float | None = None


@dataclass
class EvalResult:
    backend_id: str
    cm: ConfusionMatrix
    runtime: RuntimeSplit = RuntimeSplit()

    @property
    def metrics(self) -> Metrics:
        return metrics(self.cm)

    def to_dict(self) -> dict:
        m = self.metrics
        return {
            "backend_id": self.backend_id,
            "tn": self.cm.tn,
            "fp": self.cm.fp,
            "fn": self.cm.fn,
            "tp": self.cm.tp,
            "sum_of_falses": self.cm.sum_of_falses,
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
            "accuracy": m.accuracy,
            "train_s": self.runtime.train_s,
            "test_s": self.runtime.test_s,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvalResult":
        return cls(
            backend_id=d["backend_id"],
            cm=ConfusionMatrix(tp=d["tp"], fp=d["fp"], fn=d["fn"], tn=d["tn"]),
            runtime=RuntimeSplit(train_s=d.get("train_s"), test_s=d.get("test_s")),
        )


# ── golden fixtures ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class GoldenFixture:
    name: str
    table: str
    cm: ConfusionMatrix
    expected: Mapping[str, float]
    runtime: RuntimeSplit
    expected_total: int


def load_golden_fixtures(path: str | Path | None = None) -> list[GoldenFixture]:
    if path is None:
        text = resources.files(__package__).joinpath("data/golden_matrices.json").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    if data.get("schema") != GOLDEN_SCHEMA:
        raise ValueError("not a golden fixture file")
    expected_total = int(data["expected_total"])
    fixtures = []
    for row in data["fixtures"]:
        fixtures.append(
            GoldenFixture(
                name=row["name"],
                table=row["table"],
                cm=ConfusionMatrix(
                    tp=row["tp"], fp=row["fp"], fn=row["fn"], tn=row["tn"]
                ),
                expected=dict(row["expected"]),
                runtime=RuntimeSplit(
                    train_s=row["runtime"].get("train_s"),
                    test_s=row["runtime"].get("test_s"),
                ),
                expected_total=expected_total,
            )
        )
    return fixtures


@dataclass
class GoldenEntryResult:
    name: str
    ok: bool
    mismatches: list[str]


@dataclass
class GoldenReport:
    entries: list[GoldenEntryResult]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            status = "PASS" if e.ok else "FAIL"
            lines.append(f"{status}  {e.name}")
            for m in e.mismatches:
                lines.append(f"      {m}")
        lines.append(
            f"{sum(e.ok for e in self.entries)}/{len(self.entries)} golden fixtures validated"
        )
        return "\n".join(lines)


def validate_golden(fixtures: Sequence[GoldenFixture] | None = None) -> GoldenReport:
    """Recompute every derived figure; any mismatch is a hard failure."""
    fixtures = load_golden_fixtures() if fixtures is None else fixtures
    entries: list[GoldenEntryResult] = []
    for fx in fixtures:
        mismatches: list[str] = []
        if fx.cm.total != fx.expected_total:
            mismatches.append(
                f"column sum: expected {fx.expected_total}, computed {fx.cm.total}"
            )
        m = metrics(fx.cm)
        computed = {
            "sum_of_falses": float(fx.cm.sum_of_falses),
            "f1": None if m.f1 is None else round_half_up(m.f1),
            "recall": None if m.recall is None else round_half_up(m.recall),
            "precision": None if m.precision is None else round_half_up(m.precision),
            "accuracy": None if m.accuracy is None else round_half_up(m.accuracy),
        }
        for key, expected_value in fx.expected.items():
            got = computed.get(key)
            if got is None or abs(got - float(expected_value)) > 1e-12:
                mismatches.append(f"{key}: expected {expected_value}, computed {got}")
        entries.append(GoldenEntryResult(name=fx.name, ok=not mismatches, mismatches=mismatches))
    return GoldenReport(entries=entries)


def results_from_golden(
    fixtures: Sequence[GoldenFixture] | None = None,
) -> list[EvalResult]:
    """Replay fixtures as EvalResults (for the comparison report)."""
    fixtures = load_golden_fixtures() if fixtures is None else fixtures
    return [
        EvalResult(backend_id=fx.name, cm=fx.cm, runtime=fx.runtime) for fx in fixtures
    ]


# ── comparison report ───────────────────────────────────────────────────

DASH = "—"

_ROWS = (
    ("TN", lambda r, m: str(r.cm.tn)),
    ("FP", lambda r, m: str(r.cm.fp)),
    ("FN", lambda r, m: str(r.cm.fn)),
    ("TP", lambda r, m: str(r.cm.tp)),
    ("Sum of falses", lambda r, m: str(r.cm.sum_of_falses)),
    ("F1", lambda r, m: _fmt(m.f1)),
    ("Recall", lambda r, m: _fmt(m.recall)),
    ("Precision", lambda r, m: _fmt(m.precision)),
    ("Accuracy", lambda r, m: _fmt(m.accuracy)),
    ("Train time", lambda r, m: _fmt_duration(r.runtime.train_s)),
    ("Test time", lambda r, m: _fmt_duration(r.runtime.test_s)),
)


def _fmt(value: float | None) -> str:
    return DASH if value is None else f"{round_half_up(value):.2f}"


def _fmt_duration(seconds: float | None) -> str:
    if seconds is None:
        return DASH
    if seconds >= 90:
        minutes = seconds / 60.0
        return f"{minutes:g} min"
    return f"{seconds:g} s"


def comparison_table(results: Sequence[EvalResult]) -> str:
    """Fixed-width text table, one column per backend."""
    if not results:
        return "(no results)"
    headers = [r.backend_id for r in results]
    metric_objs = [r.metrics for r in results]
    label_width = max(len(label) for label, _ in _ROWS)
    widths = [max(len(h), 9) for h in headers]
    lines = [
        " " * label_width
        + "  "
        + "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    ]
    for label, cell in _ROWS:
        row = [cell(r, m) for r, m in zip(results, metric_objs)]
        lines.append(
            label.ljust(label_width)
            + "  "
            + "  ".join(v.rjust(w) for v, w in zip(row, widths))
        )
    return "\n".join(lines)


def comparison_csv(results: Sequence[EvalResult]) -> str:
    """CSV of (backend_id, f1, test_runtime_s, test_runtime_min) for
    runtime-vs-quality plots (runtime axis is log scale, so zeros stay
    empty rather than clamped)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["backend_id", "f1", "test_runtime_s", "test_runtime_min"])
    for r in results:
        m = r.metrics
        f1 = "" if m.f1 is None else f"{round_half_up(m.f1):.2f}"
        test_s = r.runtime.test_s
        plottable = test_s is not None and test_s > 0
        writer.writerow(
            [
                r.backend_id,
                f1,
                f"{test_s:g}" if plottable else "",
                f"{test_s / 60.0:g}" if plottable else "",
            ]
        )
    return buf.getvalue()


def comparison_report(results: Sequence[EvalResult]) -> tuple[str, str]:
    return comparison_table(results), comparison_csv(results)
