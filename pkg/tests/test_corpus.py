"""Ingestion, export round trips, journals, label store, and year splits."""

import io
import json
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashqc.corpus import (
    ColumnMapping,
    CrashRecord,
    Direction,
    JournalWriter,
    Label,
    LabelSource,
    LabelStore,
    RECORD_FIELDS,
    RoadwayClass,
    export,
    ingest,
    read_journal,
    records_by_id,
    split_by_year,
)
from crashqc.errors import IngestError, UnknownRecordError


HEADER = ",".join(RECORD_FIELDS)

GOOD_ROW = "C1,2021-03-04T10:30:00,I-75,12.4,,,AccessControlled,N,false,unit 1 struck unit 2"


def csv_text(*rows: str, header: str = HEADER) -> io.StringIO:
    return io.StringIO("\n".join([header, *rows]) + "\n")


# ── CrashRecord validation ──────────────────────────────────────────────


class TestCrashRecord:
    def test_valid(self, record_factory):
        rec = record_factory()
        assert rec.filterable
        assert rec.year == 2021

    def test_empty_id_rejected(self, record_factory):
        with pytest.raises(ValueError, match="record_id"):
            record_factory(record_id="")

    def test_latlon_must_come_together(self, record_factory):
        with pytest.raises(ValueError, match="together"):
            record_factory(latitude=40.0, longitude=None)
        with pytest.raises(ValueError, match="together"):
            record_factory(latitude=None, longitude=-83.0)

    def test_latlon_ranges(self, record_factory):
        with pytest.raises(ValueError, match="latitude"):
            record_factory(latitude=91.0, longitude=0.0)
        with pytest.raises(ValueError, match="longitude"):
            record_factory(latitude=0.0, longitude=180.5)

    def test_milepoint_range(self, record_factory):
        with pytest.raises(ValueError, match="milepoint"):
            record_factory(milepoint=-0.1)
        with pytest.raises(ValueError, match="milepoint"):
            record_factory(milepoint=float("nan"))

    def test_filterable_means_locatable(self, record_factory):
        assert record_factory(milepoint=3.0, latitude=None, longitude=None).filterable
        assert record_factory(milepoint=None, latitude=40.0, longitude=-83.0).filterable
        rec = record_factory(milepoint=None, latitude=None, longitude=None)
        assert not rec.filterable
        assert not rec.has_latlon


# ── CSV ingestion ───────────────────────────────────────────────────────


class TestIngestCsv:
    def test_happy_path(self):
        result = ingest(csv_text(GOOD_ROW), fmt="csv")
        assert result.report.accepted == 1
        assert result.report.rejected == []
        rec = result.records[0]
        assert rec.record_id == "C1"
        assert rec.occurred_at == datetime(2021, 3, 4, 10, 30)
        assert rec.milepoint == 12.4
        assert rec.latitude is None
        assert rec.roadway_class is RoadwayClass.ACCESS_CONTROLLED
        assert rec.direction is Direction.N
        assert rec.coded_secondary is False
        assert rec.narrative == "unit 1 struck unit 2"

    @pytest.mark.parametrize(
        "row,reason",
        [
            (",2021-03-04T10:30:00,I-75,12.4,,,Other,N,false,x", "missing record_id"),
            ("C1,,I-75,12.4,,,Other,N,false,x", "missing occurred_at"),
            ("C1,not-a-date,I-75,12.4,,,Other,N,false,x", "invalid occurred_at"),
            ("C1,2021-03-04T10:30:00+00:00,I-75,12.4,,,Other,N,false,x", "timezone"),
            ("C1,2021-03-04T10:30:00,,12.4,,,Other,N,false,x", "missing route_id"),
            ("C1,2021-03-04T10:30:00,I-75,abc,,,Other,N,false,x", "invalid milepoint"),
            ("C1,2021-03-04T10:30:00,I-75,-2.0,,,Other,N,false,x", "milepoint out of range"),
            ("C1,2021-03-04T10:30:00,I-75,,40.0,,Other,N,false,x", "together"),
            ("C1,2021-03-04T10:30:00,I-75,,95.0,-83.0,Other,N,false,x", "latitude out of range"),
            ("C1,2021-03-04T10:30:00,I-75,,40.0,-190.0,Other,N,false,x", "longitude out of range"),
            ("C1,2021-03-04T10:30:00,I-75,12.4,,,Freeway,N,false,x", "roadway_class"),
            ("C1,2021-03-04T10:30:00,I-75,12.4,,,Other,Q,false,x", "direction"),
            ("C1,2021-03-04T10:30:00,I-75,12.4,,,Other,N,maybe,x", "coded_secondary"),
        ],
    )
    def test_rejection_reasons(self, row, reason):
        result = ingest(csv_text(row), fmt="csv")
        assert result.report.accepted == 0
        assert len(result.report.rejected) == 1
        assert reason in result.report.rejected[0].reason

    def test_rejected_rows_carry_physical_line_numbers(self):
        bad = "C2,not-a-date,I-75,1.0,,,Other,N,false,x"
        result = ingest(csv_text(GOOD_ROW, bad), fmt="csv")
        assert result.report.rejected[0].row_number == 3

    def test_duplicate_id_rejects_later_row(self):
        result = ingest(csv_text(GOOD_ROW, GOOD_ROW), fmt="csv")
        assert result.report.accepted == 1
        assert "duplicate record_id" in result.report.rejected[0].reason
        assert result.report.rejected[0].row_number == 3

    def test_rejections_never_silently_drop(self):
        rows = [GOOD_ROW, "C2,bad,I-75,1.0,,,Other,N,false,x", GOOD_ROW.replace("C1", "C3")]
        result = ingest(csv_text(*rows), fmt="csv")
        assert result.report.rows_read == 3
        assert result.report.accepted + len(result.report.rejected) == 3

    def test_missing_required_column_is_file_level_error(self):
        header = HEADER.replace("route_id,", "")
        row = "C1,2021-03-04T10:30:00,12.4,,,Other,N,false,x"
        with pytest.raises(IngestError, match="route_id"):
            ingest(csv_text(row, header=header), fmt="csv")

    def test_optional_location_columns_may_be_absent(self):
        header = "record_id,occurred_at,route_id,roadway_class,direction,coded_secondary,narrative"
        row = "C1,2021-03-04T10:30:00,I-75,Other,N,false,x"
        result = ingest(csv_text(row, header=header), fmt="csv")
        assert result.report.accepted == 1
        assert result.records[0].milepoint is None
        assert result.report.unfilterable == 1

    def test_empty_source_rejected(self):
        with pytest.raises(IngestError, match="header"):
            ingest(io.StringIO(""), fmt="csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError, match="not found"):
            ingest(tmp_path / "nope.csv")

    def test_direction_defaults_to_unknown_when_blank(self):
        row = GOOD_ROW.replace(",N,false,", ",,false,")
        result = ingest(csv_text(row), fmt="csv")
        assert result.records[0].direction is Direction.UNKNOWN

    def test_roadway_class_aliases(self):
        for alias in ("AccessControlled", "access_controlled", "ACCESS-CONTROLLED"):
            row = GOOD_ROW.replace("AccessControlled", alias)
            result = ingest(csv_text(row), fmt="csv")
            assert result.records[0].roadway_class is RoadwayClass.ACCESS_CONTROLLED

    def test_nul_byte_rejects_row_not_file(self):
        result = ingest(csv_text(GOOD_ROW, "C2,\x00junk", GOOD_ROW.replace("C1", "C3")), fmt="csv")
        assert result.report.accepted == 2
        assert len(result.report.rejected) == 1
        assert "CSV" in result.report.rejected[0].reason


class TestIngestLabels:
    def test_label_column_parsed(self):
        rows = [GOOD_ROW + ",true", GOOD_ROW.replace("C1", "C2") + ",false"]
        result = ingest(csv_text(*rows, header=HEADER + ",is_secondary"), fmt="csv")
        assert result.report.labeled_rows == 2
        assert result.report.positive_labels == 1
        assert result.report.prevalence == 0.5
        assert result.label_map() == {"C1": True, "C2": False}
        assert all(lab.source is LabelSource.IMPORT for lab in result.labels)

    def test_blank_label_cell_means_unlabeled(self):
        rows = [GOOD_ROW + ",true", GOOD_ROW.replace("C1", "C2") + ","]
        result = ingest(csv_text(*rows, header=HEADER + ",is_secondary"), fmt="csv")
        assert result.report.accepted == 2
        assert result.report.labeled_rows == 1
        assert "C2" not in result.label_map()

    def test_invalid_label_rejects_row(self):
        rows = [GOOD_ROW + ",perhaps"]
        result = ingest(csv_text(*rows, header=HEADER + ",is_secondary"), fmt="csv")
        assert result.report.accepted == 0
        assert "invalid label" in result.report.rejected[0].reason

    def test_unlabeled_corpus_has_no_prevalence(self):
        result = ingest(csv_text(GOOD_ROW), fmt="csv")
        assert result.report.prevalence is None


class TestColumnMapping:
    def test_remapped_columns(self):
        mapping = ColumnMapping(record_id="crash_no", narrative="officer_text")
        header = HEADER.replace("record_id", "crash_no").replace("narrative", "officer_text")
        result = ingest(csv_text(GOOD_ROW, header=header), mapping=mapping, fmt="csv")
        assert result.records[0].record_id == "C1"
        assert result.records[0].narrative == "unit 1 struck unit 2"

    def test_unknown_field_rejected(self):
        with pytest.raises(IngestError, match="unknown fields"):
            ColumnMapping.from_dict({"recordid": "x"})

    def test_from_json_file(self, tmp_path):
        p = tmp_path / "map.json"
        p.write_text(json.dumps({"record_id": "crash_no"}))
        assert ColumnMapping.from_file(p).record_id == "crash_no"

    def test_from_yaml_file(self, tmp_path):
        p = tmp_path / "map.yaml"
        p.write_text("record_id: crash_no\nnarrative: officer_text\n")
        mapping = ColumnMapping.from_file(p)
        assert mapping.record_id == "crash_no"
        assert mapping.narrative == "officer_text"


# ── JSON lines ingestion ────────────────────────────────────────────────


def jsonl_obj(**overrides) -> dict:
    base = {
        "record_id": "J1",
        "occurred_at": "2021-03-04T10:30:00",
        "route_id": "I-75",
        "milepoint": 12.4,
        "latitude": None,
        "longitude": None,
        "roadway_class": "AccessControlled",
        "direction": "N",
        "coded_secondary": False,
        "narrative": "unit 1 struck unit 2",
    }
    base.update(overrides)
    return base


class TestIngestJsonl:
    def test_happy_path(self):
        stream = io.StringIO(json.dumps(jsonl_obj()) + "\n")
        result = ingest(stream, fmt="jsonl")
        assert result.report.accepted == 1
        assert result.records[0].milepoint == 12.4

    def test_malformed_line_rejected_with_line_number(self):
        stream = io.StringIO(json.dumps(jsonl_obj()) + "\n{not json\n")
        result = ingest(stream, fmt="jsonl")
        assert result.report.accepted == 1
        assert result.report.rejected[0].row_number == 2
        assert "invalid JSON" in result.report.rejected[0].reason

    def test_non_object_line_rejected(self):
        stream = io.StringIO('[1, 2]\n')
        result = ingest(stream, fmt="jsonl")
        assert "invalid JSON" in result.report.rejected[0].reason

    def test_missing_key_is_per_row(self):
        obj = jsonl_obj()
        del obj["occurred_at"]
        stream = io.StringIO(json.dumps(obj) + "\n" + json.dumps(jsonl_obj(record_id="J2")) + "\n")
        result = ingest(stream, fmt="jsonl")
        assert result.report.accepted == 1
        assert "occurred_at" in result.report.rejected[0].reason

    def test_format_detected_from_suffix(self, tmp_path):
        p = tmp_path / "corpus.jsonl"
        p.write_text(json.dumps(jsonl_obj()) + "\n")
        assert ingest(p).report.accepted == 1

    def test_unknown_format_rejected(self):
        with pytest.raises(IngestError, match="format"):
            ingest(io.StringIO(""), fmt="parquet")


# ── Export round trips ──────────────────────────────────────────────────


def roundtrip(records, labels=None, fmt="csv"):
    buf = io.StringIO()
    export(records, buf, labels=labels, fmt=fmt)
    first = buf.getvalue()
    result = ingest(io.StringIO(first), fmt=fmt)
    buf2 = io.StringIO()
    export(result.records, buf2, labels=result.label_map() if labels is not None else None, fmt=fmt)
    return first, buf2.getvalue(), result


class TestExport:
    def test_csv_fixed_point(self, record_factory):
        records = [
            record_factory(record_id="A", narrative='said "stop", then hit\nsecond line'),
            record_factory(record_id="B", milepoint=None, latitude=40.5, longitude=-83.25),
            record_factory(record_id="C", milepoint=None, latitude=None, longitude=None),
        ]
        first, second, result = roundtrip(records)
        assert first == second
        assert result.records == records

    def test_csv_fixed_point_with_labels(self, record_factory):
        records = [record_factory(record_id="A"), record_factory(record_id="B")]
        labels = {"A": True}
        first, second, result = roundtrip(records, labels=labels)
        assert first == second
        assert result.label_map() == labels

    def test_jsonl_fixed_point(self, record_factory):
        records = [record_factory(record_id="A"), record_factory(record_id="B", milepoint=0.0)]
        first, second, result = roundtrip(records, labels={"B": False}, fmt="jsonl")
        assert first == second
        assert result.records == records

    def test_export_to_file_reingests(self, tmp_path, record_factory):
        p = tmp_path / "out.csv"
        export([record_factory()], p)
        assert ingest(p).report.accepted == 1


# \r falls to csv newline translation and \x00 cannot ride in CSV at all
_narratives = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\x00"),
    max_size=60,
)


@st.composite
def record_lists(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    records = []
    for i in range(n):
        has_ll = draw(st.booleans())
        records.append(
            CrashRecord(
                record_id=f"R{i}",
                occurred_at=draw(
                    st.datetimes(min_value=datetime(2015, 1, 1), max_value=datetime(2023, 12, 31))
                ),
                route_id=draw(st.sampled_from(["I-75", "US-23", "SR-315"])),
                milepoint=draw(
                    st.one_of(
                        st.none(),
                        st.floats(min_value=0.0, max_value=500.0, allow_nan=False),
                    )
                ),
                latitude=draw(st.floats(min_value=-90, max_value=90, allow_nan=False))
                if has_ll
                else None,
                longitude=draw(st.floats(min_value=-180, max_value=180, allow_nan=False))
                if has_ll
                else None,
                roadway_class=draw(st.sampled_from(list(RoadwayClass))),
                direction=draw(st.sampled_from(list(Direction))),
                coded_secondary=draw(st.booleans()),
                narrative=draw(_narratives),
            )
        )
    return records


class TestRoundTripProperties:
    @settings(max_examples=200, deadline=None)
    @given(records=record_lists(), fmt=st.sampled_from(["csv", "jsonl"]))
    def test_ingest_export_fixed_point(self, records, fmt):
        first, second, result = roundtrip(records, fmt=fmt)
        assert result.records == records
        assert first == second


# ── Journals ────────────────────────────────────────────────────────────


class TestJournal:
    def test_missing_file_yields_nothing(self, tmp_path):
        assert list(read_journal(tmp_path / "none.jsonl")) == []

    def test_blank_lines_tolerated(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text('{"a": 1}\n\n{"b": 2}\n')
        assert list(read_journal(p)) == [{"a": 1}, {"b": 2}]

    def test_torn_final_line_skipped(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text('{"a": 1}\n{"b": 2}\n{"c": tru')
        assert list(read_journal(p)) == [{"a": 1}, {"b": 2}]

    def test_mid_file_corruption_raises(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text('{"a": 1}\n{oops\n{"b": 2}\n')
        with pytest.raises(IngestError, match="line 2"):
            list(read_journal(p))

    def test_writer_appends_and_flushes(self, tmp_path):
        p = tmp_path / "j.jsonl"
        w = JournalWriter(p)
        w.append({"a": 1})
        # flushed per line: readable before close
        assert list(read_journal(p)) == [{"a": 1}]
        w.append({"b": 2})
        w.close()
        assert list(read_journal(p)) == [{"a": 1}, {"b": 2}]

    def test_append_after_torn_tail_does_not_corrupt(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text('{"a": 1}\n{"b": tr')
        w = JournalWriter(p)
        w.append({"c": 3})
        w.append({"d": 4})
        w.close()
        assert list(read_journal(p)) == [{"a": 1}, {"c": 3}, {"d": 4}]

    def test_unterminated_complete_entry_is_kept(self, tmp_path):
        p = tmp_path / "j.jsonl"
        p.write_text('{"a": 1}\n{"b": 2}')  # valid JSON, newline lost
        w = JournalWriter(p)
        w.append({"c": 3})
        w.close()
        assert list(read_journal(p)) == [{"a": 1}, {"b": 2}, {"c": 3}]


# ── Label store ─────────────────────────────────────────────────────────


class TestLabelStore:
    def test_upsert_and_active(self, tmp_path):
        store = LabelStore(tmp_path / "labels.jsonl")
        store.upsert("R1", True, LabelSource.MANUAL_REVIEW, note="clear rear-end chain")
        active = store.active("R1")
        assert active is not None and active.is_secondary is True
        assert active.note == "clear rear-end chain"
        assert store.active("R2") is None
        store.close()

    def test_latest_write_wins(self, tmp_path):
        store = LabelStore(tmp_path / "labels.jsonl")
        store.upsert("R1", True, LabelSource.IMPORT)
        store.upsert("R1", False, LabelSource.ANALYST_UI)
        assert store.active("R1").is_secondary is False
        assert [lab.is_secondary for lab in store.history("R1")] == [True, False]
        assert store.active_map() == {"R1": False}
        assert len(store) == 1
        store.close()

    def test_history_survives_reopen(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        store = LabelStore(path)
        store.upsert("R1", True, LabelSource.IMPORT)
        store.upsert("R2", False, LabelSource.MANUAL_REVIEW)
        store.close()

        reopened = LabelStore(path)
        assert reopened.active_map() == {"R1": True, "R2": False}
        assert reopened.active("R2").source is LabelSource.MANUAL_REVIEW
        reopened.close()

    def test_known_ids_guard(self, tmp_path):
        store = LabelStore(tmp_path / "labels.jsonl", known_ids={"R1"})
        store.upsert("R1", True, LabelSource.IMPORT)
        with pytest.raises(UnknownRecordError):
            store.upsert("R9", True, LabelSource.IMPORT)
        store.close()

    def test_timestamps_come_from_clock(self, tmp_path):
        tick = datetime(2022, 5, 1, 9, 0)
        store = LabelStore(tmp_path / "labels.jsonl", now_fn=lambda: tick)
        label = store.upsert("R1", True, LabelSource.ANALYST_UI)
        assert label.labeled_at == tick
        store.close()

    def test_label_dict_round_trip(self):
        label = Label("R1", True, LabelSource.ANALYST_UI, note="n", labeled_at=datetime(2022, 1, 2))
        assert Label.from_dict(label.to_dict()) == label


# ── Year split ──────────────────────────────────────────────────────────


class TestSplitByYear:
    def test_cutoff_year_goes_to_train(self, record_factory):
        records = [
            record_factory(record_id="A", occurred_at=datetime(2019, 6, 1)),
            record_factory(record_id="B", occurred_at=datetime(2020, 12, 31, 23, 59)),
            record_factory(record_id="C", occurred_at=datetime(2021, 1, 1, 0, 0)),
        ]
        split = split_by_year(records, 2020)
        assert split.train_ids == {"A", "B"}
        assert split.test_ids == {"C"}
        assert split.train_count == 2 and split.test_count == 1
        assert "2020" in split.summary()

    def test_empty_partition_warns(self, record_factory, caplog):
        records = [record_factory(record_id="A", occurred_at=datetime(2019, 6, 1))]
        with caplog.at_level("WARNING"):
            split = split_by_year(records, 2025)
        assert split.test_count == 0
        assert any("empty" in m for m in caplog.messages)

    def test_records_by_id(self, record_factory):
        recs = [record_factory(record_id="A"), record_factory(record_id="B")]
        index = records_by_id(recs)
        assert set(index) == {"A", "B"}
        assert index["A"] is recs[0]
