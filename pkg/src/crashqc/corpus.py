"""Crash record corpus: ingestion, label history, and year-based splits.

A corpus is a flat file of one row per crash (CSV with a header, or JSON
lines) plus an append-only label journal. Ingestion is strict: malformed
rows are rejected with a row number and a reason, never silently dropped.
Ground-truth labels may ride along in the corpus file under a mapped
column; the label journal is the source of truth afterward.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
from dataclasses import dataclass, field, fields, replace
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TextIO

from .errors import IngestError, UnknownRecordError


class RoadwayClass(str, Enum):
    ACCESS_CONTROLLED = "AccessControlled"
    OTHER = "Other"


class Direction(str, Enum):
    N = "N"
    S = "S"
    E = "E"
    W = "W"
    UNKNOWN = "Unknown"


class LabelSource(str, Enum):
    MANUAL_REVIEW = "ManualReview"
    ANALYST_UI = "AnalystUI"
    IMPORT = "Import"


@dataclass(frozen=True)
class CrashRecord:
    """One police-reported crash.

    ``milepoint`` is decimal miles along ``route_id``; records may carry a
    milepoint, a lat/lon pair, both, or neither. Records with neither are
    kept but cannot take part in spatial pairing (``filterable`` is False).
    """

    record_id: str
    occurred_at: datetime
    route_id: str
    milepoint: float | None
    latitude: float | None
    longitude: float | None
    roadway_class: RoadwayClass
    direction: Direction
    coded_secondary: bool
    narrative: str

    def __post_init__(self) -> None:
        if not self.record_id:
            raise ValueError("record_id must be non-empty")
        if (self.latitude is None) != (self.longitude is None):
            raise ValueError("latitude and longitude must be provided together")
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            raise ValueError("latitude out of range")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            raise ValueError("longitude out of range")
        if self.milepoint is not None and (
            not math.isfinite(self.milepoint) or self.milepoint < 0
        ):
            raise ValueError("milepoint out of range")

    @property
    def year(self) -> int:
        return self.occurred_at.year

    @property
    def has_latlon(self) -> bool:
        return self.latitude is not None

    @property
    def filterable(self) -> bool:
        """True when the record can be located for spatial pairing."""
        return self.milepoint is not None or self.has_latlon


@dataclass(frozen=True)
class Label:
    record_id: str
    is_secondary: bool
    source: LabelSource
    note: str | None = None
    labeled_at: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "is_secondary": self.is_secondary,
            "source": self.source.value,
            "note": self.note,
            "labeled_at": self.labeled_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Label":
        return cls(
            record_id=d["record_id"],
            is_secondary=bool(d["is_secondary"]),
            source=LabelSource(d["source"]),
            note=d.get("note"),
            labeled_at=datetime.fromisoformat(d["labeled_at"]),
        )


# ── Column mapping and ingestion ────────────────────────────────────────

RECORD_FIELDS = (
    "record_id",
    "occurred_at",
    "route_id",
    "milepoint",
    "latitude",
    "longitude",
    "roadway_class",
    "direction",
    "coded_secondary",
    "narrative",
)

#: Fields whose columns may be absent from the source entirely.
OPTIONAL_FIELDS = ("milepoint", "latitude", "longitude")


@dataclass(frozen=True)
class ColumnMapping:
    """Names the source column carrying each record field.

    ``label`` points at an optional ground-truth column; when the column is
    absent under the default name the corpus is simply treated as
    unlabeled, but an explicitly remapped column must exist.
    """

    record_id: str = "record_id"
    occurred_at: str = "occurred_at"
    route_id: str = "route_id"
    milepoint: str = "milepoint"
    latitude: str = "latitude"
    longitude: str = "longitude"
    roadway_class: str = "roadway_class"
    direction: str = "direction"
    coded_secondary: str = "coded_secondary"
    narrative: str = "narrative"
    label: str = "is_secondary"

    def column_for(self, field_name: str) -> str:
        return getattr(self, field_name)

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> "ColumnMapping":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise IngestError(f"mapping names unknown fields: {sorted(unknown)}")
        return cls(**dict(d))

    @classmethod
    def from_file(cls, path: str | Path) -> "ColumnMapping":
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            import yaml

            data = yaml.safe_load(text)
        if not isinstance(data, dict):
            raise IngestError(f"mapping file {path} must hold a flat object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class RejectedRow:
    row_number: int
    reason: str


@dataclass
class IngestReport:
    rows_read: int = 0
    accepted: int = 0
    rejected: list[RejectedRow] = field(default_factory=list)
    unfilterable: int = 0
    labeled_rows: int = 0
    positive_labels: int = 0

    @property
    def prevalence(self) -> float | None:
        """Share of labeled rows marked positive, or None when unlabeled."""
        if self.labeled_rows == 0:
            return None
        return self.positive_labels / self.labeled_rows

    def summary(self) -> str:
        lines = [
            f"rows read:      {self.rows_read}",
            f"accepted:       {self.accepted}",
            f"rejected:       {len(self.rejected)}",
            f"unfilterable:   {self.unfilterable}",
        ]
        if self.labeled_rows:
            pct = 100.0 * (self.prevalence or 0.0)
            lines.append(
                f"labeled:        {self.labeled_rows} "
                f"({self.positive_labels} positive, {pct:.1f}%)"
            )
        for rej in self.rejected[:20]:
            lines.append(f"  row {rej.row_number}: {rej.reason}")
        if len(self.rejected) > 20:
            lines.append(f"  ... {len(self.rejected) - 20} more")
        return "\n".join(lines)


@dataclass
class IngestResult:
    records: list[CrashRecord]
    labels: list[Label]
    report: IngestReport

    def label_map(self) -> dict[str, bool]:
        return {lab.record_id: lab.is_secondary for lab in self.labels}


_TRUE_WORDS = {"true", "1", "yes", "y", "t"}
_FALSE_WORDS = {"false", "0", "no", "n", "f", ""}

_ROADWAY_ALIASES = {
    "accesscontrolled": RoadwayClass.ACCESS_CONTROLLED,
    "access_controlled": RoadwayClass.ACCESS_CONTROLLED,
    "access-controlled": RoadwayClass.ACCESS_CONTROLLED,
    "other": RoadwayClass.OTHER,
}


def _parse_bool(raw: object, *, empty_is_false: bool) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower() if raw is not None else ""
    if text in _TRUE_WORDS:
        return True
    if text in _FALSE_WORDS:
        if text == "" and not empty_is_false:
            raise ValueError("empty boolean")
        return False
    raise ValueError(f"invalid boolean {raw!r}")


def _parse_float(raw: object, what: str) -> float | None:
    if raw is None:
        return None
    text = str(raw).strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"invalid {what} {raw!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"invalid {what} {raw!r}")
    return value


def _parse_datetime(raw: object) -> datetime:
    if isinstance(raw, datetime):
        dt = raw
    else:
        text = str(raw).strip() if raw is not None else ""
        if not text:
            raise ValueError("missing occurred_at")
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise ValueError(f"invalid occurred_at {raw!r}") from None
    if dt.tzinfo is not None:
        raise ValueError("occurred_at must be a local time without timezone offset")
    return dt


def _row_to_record(
    row: Mapping[str, object], mapping: ColumnMapping, columns_present: set[str]
) -> tuple[CrashRecord, bool | None]:
    """Returns (record, label_or_None); raises ValueError with a reason."""

    def cell(field_name: str) -> object:
        col = mapping.column_for(field_name)
        return row.get(col) if col in columns_present else None

    record_id = str(cell("record_id") or "").strip()
    if not record_id:
        raise ValueError("missing record_id")

    occurred_at = _parse_datetime(cell("occurred_at"))

    route_id = str(cell("route_id") or "").strip()
    if not route_id:
        raise ValueError("missing route_id")

    milepoint = _parse_float(cell("milepoint"), "milepoint")
    if milepoint is not None and milepoint < 0:
        raise ValueError("milepoint out of range")
    latitude = _parse_float(cell("latitude"), "latitude")
    longitude = _parse_float(cell("longitude"), "longitude")
    if (latitude is None) != (longitude is None):
        raise ValueError("latitude and longitude must be provided together")
    if latitude is not None and not -90.0 <= latitude <= 90.0:
        raise ValueError("latitude out of range")
    if longitude is not None and not -180.0 <= longitude <= 180.0:
        raise ValueError("longitude out of range")

    rc_raw = str(cell("roadway_class") or "").strip().lower()
    roadway_class = _ROADWAY_ALIASES.get(rc_raw)
    if roadway_class is None:
        raise ValueError(f"unknown roadway_class {cell('roadway_class')!r}")

    dir_raw = str(cell("direction") or "").strip()
    if dir_raw == "":
        direction = Direction.UNKNOWN
    else:
        try:
            direction = Direction(dir_raw.upper() if len(dir_raw) == 1 else dir_raw.capitalize())
        except ValueError:
            raise ValueError(f"unknown direction {cell('direction')!r}") from None

    try:
        coded_secondary = _parse_bool(cell("coded_secondary"), empty_is_false=True)
    except ValueError:
        raise ValueError(f"invalid coded_secondary {cell('coded_secondary')!r}") from None

    narr_cell = cell("narrative")
    narrative = "" if narr_cell is None else str(narr_cell)

    record = CrashRecord(
        record_id=record_id,
        occurred_at=occurred_at,
        route_id=route_id,
        milepoint=milepoint,
        latitude=latitude,
        longitude=longitude,
        roadway_class=roadway_class,
        direction=direction,
        coded_secondary=coded_secondary,
        narrative=narrative,
    )

    label: bool | None = None
    if mapping.label in columns_present:
        raw_label = row.get(mapping.label)
        if raw_label is not None and str(raw_label).strip() != "":
            try:
                label = _parse_bool(raw_label, empty_is_false=False)
            except ValueError:
                raise ValueError(f"invalid label {raw_label!r}") from None
    return record, label


def _iter_csv(stream: TextIO) -> tuple[list[str], Iterator[tuple[int, dict]]]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise IngestError("source has no header row")
    header = list(reader.fieldnames)

    def rows() -> Iterator[tuple[int, dict]]:
        # line_num tracks physical lines, so quoted multi-line cells count
        while True:
            try:
                row = next(reader)
            except StopIteration:
                return
            except csv.Error as exc:
                yield reader.line_num, {"__malformed__": f"unparseable CSV row: {exc}"}
                continue
            yield reader.line_num, row

    return header, rows()


def _iter_jsonl(stream: TextIO) -> tuple[list[str], Iterator[tuple[int, dict]]]:
    lines = stream.readlines()
    parsed: list[tuple[int, dict]] = []
    keys: set[str] = set()
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            parsed.append((i, {"__malformed__": "invalid JSON object"}))
            continue
        if not isinstance(obj, dict):
            parsed.append((i, {"__malformed__": "invalid JSON object"}))
            continue
        keys.update(obj)
        parsed.append((i, obj))
    return sorted(keys), iter(parsed)


def _detect_format(source: str | Path | TextIO, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "jsonl"):
            raise IngestError(f"unknown format {fmt!r}")
        return fmt
    if isinstance(source, (str, Path)):
        suffix = Path(source).suffix.lower()
        if suffix in (".jsonl", ".ndjson", ".json"):
            return "jsonl"
    return "csv"


def ingest(
    source: str | Path | TextIO,
    mapping: ColumnMapping | None = None,
    fmt: str | None = None,
) -> IngestResult:
    """Read a corpus file, validating every row.

    Rows failing validation are reported with their physical line number
    and a reason; a duplicate record_id rejects the later row. Labels from
    the mapped label column are returned alongside the records.
    """
    mapping = mapping or ColumnMapping()
    fmt = _detect_format(source, fmt)

    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise IngestError(f"source file not found: {path}")
        stream: TextIO = path.open("r", encoding="utf-8", newline="")
        close = True
    else:
        stream = source
        close = False

    try:
        header, rows = _iter_csv(stream) if fmt == "csv" else _iter_jsonl(stream)
    except csv.Error as exc:
        if close:
            stream.close()
        raise IngestError(f"unreadable source: {exc}") from exc

    columns_present = set(header)
    missing = []
    for field_name in RECORD_FIELDS:
        col = mapping.column_for(field_name)
        if col not in columns_present and field_name not in OPTIONAL_FIELDS:
            missing.append(col)
    if missing and fmt == "csv":
        if close:
            stream.close()
        raise IngestError(f"mapping references missing columns: {missing}")
    # JSON lines: keys may vary per row, so required-field absence is a
    # per-row rejection rather than a file-level error.

    report = IngestReport()
    records: list[CrashRecord] = []
    labels: list[Label] = []
    seen: set[str] = set()
    try:
        for row_number, row in rows:
            report.rows_read += 1
            if "__malformed__" in row:
                report.rejected.append(RejectedRow(row_number, str(row["__malformed__"])))
                continue
            present = columns_present if fmt == "csv" else set(row)
            try:
                record, label = _row_to_record(row, mapping, present)
            except ValueError as exc:
                report.rejected.append(RejectedRow(row_number, str(exc)))
                continue
            if record.record_id in seen:
                report.rejected.append(
                    RejectedRow(row_number, f"duplicate record_id {record.record_id!r}")
                )
                continue
            seen.add(record.record_id)
            records.append(record)
            report.accepted += 1
            if not record.filterable:
                report.unfilterable += 1
            if label is not None:
                report.labeled_rows += 1
                if label:
                    report.positive_labels += 1
                labels.append(
                    Label(
                        record_id=record.record_id,
                        is_secondary=label,
                        source=LabelSource.IMPORT,
                        labeled_at=record.occurred_at,
                    )
                )
    finally:
        if close:
            stream.close()
    return IngestResult(records=records, labels=labels, report=report)


# ── Export ──────────────────────────────────────────────────────────────


def _format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, datetime):
        return value.isoformat()
    if isinstance(value, Enum):
        return value.value
    return str(value)


def export(
    records: Sequence[CrashRecord],
    destination: str | Path | TextIO,
    labels: Mapping[str, bool] | None = None,
    fmt: str | None = None,
) -> None:
    """Write records (and optional labels) in the same shape ingest reads.

    ``ingest(export(ingest(f)))`` is a fixed point: field order, value
    formatting, and the label column are all canonical.
    """
    fmt = _detect_format(destination, fmt)
    if isinstance(destination, (str, Path)):
        stream: TextIO = Path(destination).open("w", encoding="utf-8", newline="")
        close = True
    else:
        stream = destination
        close = False
    try:
        if fmt == "csv":
            columns = list(RECORD_FIELDS)
            if labels is not None:
                columns.append("is_secondary")
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                row = [
                    _format_cell(getattr(rec, field_name)) for field_name in RECORD_FIELDS
                ]
                if labels is not None:
                    val = labels.get(rec.record_id)
                    row.append("" if val is None else _format_cell(val))
                writer.writerow(row)
        else:
            for rec in records:
                obj: dict[str, object] = {}
                for field_name in RECORD_FIELDS:
                    value = getattr(rec, field_name)
                    if isinstance(value, datetime):
                        value = value.isoformat()
                    elif isinstance(value, Enum):
                        value = value.value
                    obj[field_name] = value
                if labels is not None and rec.record_id in labels:
                    obj["is_secondary"] = labels[rec.record_id]
                stream.write(json.dumps(obj, ensure_ascii=False) + "\n")
    finally:
        if close:
            stream.close()


# ── Year split ──────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DatasetSplit:
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    cutoff_year: int

    @property
    def train_count(self) -> int:
        return len(self.train_ids)

    @property
    def test_count(self) -> int:
        return len(self.test_ids)

    def summary(self) -> str:
        return (
            f"train (year <= {self.cutoff_year}): {self.train_count}  |  "
            f"test (year > {self.cutoff_year}): {self.test_count}"
        )


def split_by_year(records: Iterable[CrashRecord], cutoff_year: int) -> DatasetSplit:
    """Train = records up to and including cutoff_year, test = later years."""
    train: set[str] = set()
    test: set[str] = set()
    for rec in records:
        (train if rec.year <= cutoff_year else test).add(rec.record_id)
    if not train or not test:
        import logging

        logging.getLogger(__name__).warning(
            "split_by_year(%d) left a partition empty (train=%d, test=%d)",
            cutoff_year,
            len(train),
            len(test),
        )
    return DatasetSplit(frozenset(train), frozenset(test), cutoff_year)


# ── Label store ─────────────────────────────────────────────────────────


def read_journal(path: Path) -> Iterator[dict]:
    """Yield parsed JSON-lines entries, tolerating a torn final line.

    A malformed line anywhere but the end means the journal is corrupt and
    raises; a torn last line is the signature of a crash mid-append and is
    skipped.
    """
    if not path.exists():
        return
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            yield json.loads(stripped)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                return
            raise IngestError(f"corrupt journal {path} at line {i + 1}") from None


def _repair_torn_tail(path: Path) -> None:
    """Make a journal safe to append to after a crash mid-write.

    A file not ending in a newline either holds a torn partial line
    (discard it, matching what readers skip) or a complete entry whose
    terminator never made it to disk (finish it).
    """
    if not path.exists():
        return
    data = path.read_bytes()
    if not data or data.endswith(b"\n"):
        return
    tail = data[data.rfind(b"\n") + 1 :]
    try:
        json.loads(tail.decode("utf-8"))
    except (ValueError, UnicodeDecodeError):
        with path.open("r+b") as fh:
            fh.truncate(len(data) - len(tail))
    else:
        with path.open("ab") as fh:
            fh.write(b"\n")


class JournalWriter:
    """Append-only JSON-lines file with flush-per-line appends."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        _repair_torn_tail(self.path)
        self._fh = self.path.open("a", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, entry: Mapping) -> None:
        line = json.dumps(entry, ensure_ascii=False)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class LabelStore:
    """Append-only label history; the active label is the latest write.

    One writer, many readers: appends are serialized by a lock, reads see
    a consistent in-memory view replayed from the journal at open.
    """

    def __init__(
        self,
        path: str | Path,
        known_ids: set[str] | None = None,
        now_fn: Callable[[], datetime] = datetime.now,
    ):
        self.path = Path(path)
        self.known_ids = known_ids
        self._now = now_fn
        self._lock = threading.Lock()
        self._history: dict[str, list[Label]] = {}
        for entry in read_journal(self.path):
            label = Label.from_dict(entry)
            self._history.setdefault(label.record_id, []).append(label)
        self._writer = JournalWriter(self.path)

    def upsert(
        self,
        record_id: str,
        is_secondary: bool,
        source: LabelSource,
        note: str | None = None,
        labeled_at: datetime | None = None,
    ) -> Label:
        if self.known_ids is not None and record_id not in self.known_ids:
            raise UnknownRecordError(f"unknown record_id {record_id!r}")
        label = Label(
            record_id=record_id,
            is_secondary=is_secondary,
            source=source,
            note=note,
            labeled_at=labeled_at or self._now(),
        )
        with self._lock:
            self._writer.append(label.to_dict())
            self._history.setdefault(record_id, []).append(label)
        return label

    def active(self, record_id: str) -> Label | None:
        history = self._history.get(record_id)
        return history[-1] if history else None

    def history(self, record_id: str) -> list[Label]:
        return list(self._history.get(record_id, []))

    def active_map(self) -> dict[str, bool]:
        return {rid: hist[-1].is_secondary for rid, hist in self._history.items() if hist}

    def __len__(self) -> int:
        return len(self._history)

    def close(self) -> None:
        self._writer.close()


def records_by_id(records: Iterable[CrashRecord]) -> dict[str, CrashRecord]:
    return {rec.record_id: rec for rec in records}
