"""Dump parsing, tag-field decoding, and canonical round trips."""

from __future__ import annotations

import io

import pytest

from conftest import random_corpus
from tagmetrics.ingest import (
    CanonicalFormatError,
    QuestionRecord,
    SkipLog,
    TagFieldError,
    parse_posts_stream,
    parse_tags_field,
    read_canonical,
    sort_records_by_month,
    write_canonical,
)

SAMPLE_ROWS = """<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" CreationDate="2008-08-01T13:57:07" Tags="&lt;c#&gt;&lt;floating-point&gt;" />
  <row Id="2" PostTypeId="2" CreationDate="2008-08-01T14:00:00" ParentId="1" />
  <row Id="3" PostTypeId="1" CreationDate="2008-08-02T09:30:00" Tags="&lt;java&gt;" />
  <row Id="4" PostTypeId="1" CreationDate="2008-09-01T10:00:00" Tags="&lt;a&gt;&lt;b&gt;&lt;c&gt;&lt;d&gt;&lt;e&gt;&lt;f&gt;" />
  <row Id="5" PostTypeId="1" CreationDate="2008-09-02T10:00:00" />
  <row Id="6" PostTypeId="1" CreationDate="2008-09-03T10:00:00" Tags="|python|pandas|" />
  <row Id="7" PostTypeId="1" CreationDate="2008-09-04T10:00:00" Tags="&lt;x&gt;" broken
</posts>
"""


class TestParseTagsField:
    def test_html_escaped(self):
        assert parse_tags_field("&lt;java&gt;") == ["java"]

    def test_html_escaped_multiple(self):
        assert parse_tags_field("&lt;c#&gt;&lt;floating-point&gt;") == [
            "c#",
            "floating-point",
        ]

    def test_already_unescaped(self):
        assert parse_tags_field("<c#><floating-point>") == ["c#", "floating-point"]

    def test_pipe_delimited(self):
        assert parse_tags_field("|python|pandas|") == ["python", "pandas"]

    def test_duplicate_tag(self):
        with pytest.raises(TagFieldError, match="duplicate tag"):
            parse_tags_field("&lt;a&gt;&lt;a&gt;")

    def test_too_many_tags(self):
        raw = "".join(f"&lt;t{i}&gt;" for i in range(6))
        with pytest.raises(TagFieldError, match="too many tags"):
            parse_tags_field(raw)

    def test_empty(self):
        with pytest.raises(TagFieldError, match="no tags"):
            parse_tags_field("")
        with pytest.raises(TagFieldError, match="no tags"):
            parse_tags_field("<>")

    def test_normalization(self):
        assert parse_tags_field("&lt;Java&gt;&lt; SQL &gt;") == ["java", "sql"]

    def test_order_preserved(self):
        assert parse_tags_field("|z|a|m|") == ["z", "a", "m"]


class TestParsePostsStream:
    def test_sample_dump(self):
        skip = SkipLog()
        records = list(parse_posts_stream(io.StringIO(SAMPLE_ROWS), skip))
        assert [r.question_id for r in records] == ["1", "3", "6"]
        assert records[0].month == "2008-08"
        assert records[0].tags == ["c#", "floating-point"]
        assert records[2].tags == ["python", "pandas"]
        # answer row, 6-tag row, untagged row, malformed row
        assert skip.total == 4
        assert skip.counts["not a question"] == 1
        assert skip.counts["too many tags"] == 1
        assert skip.counts["no tags"] == 1
        assert skip.counts["malformed row"] == 1

    def test_skip_report_lines(self):
        sink = io.StringIO()
        list(parse_posts_stream(io.StringIO(SAMPLE_ROWS), SkipLog(sink)))
        lines = sink.getvalue().splitlines()
        assert len(lines) == 4
        number, reason = lines[0].split("\t")
        assert number == "4"  # the answer row sits on line 4 of the sample
        assert reason == "not a question"

    def test_bytes_source(self):
        records = list(parse_posts_stream(io.BytesIO(SAMPLE_ROWS.encode())))
        assert len(records) == 3

    def test_bad_creation_date(self):
        row = '<row Id="9" PostTypeId="1" CreationDate="bogus" Tags="&lt;a&gt;" />'
        skip = SkipLog()
        assert list(parse_posts_stream(io.StringIO(row), skip)) == []
        assert skip.counts["bad creation date"] == 1


class TestCanonicalRoundTrip:
    def test_write_and_read(self, rng):
        records = random_corpus(rng, 1000)
        sink = io.StringIO()
        manifest = write_canonical(records, sink)
        assert manifest.record_count == 1000
        assert manifest.month_range == (records[0].month, records[-1].month)
        assert manifest.distinct_tags == len({t for r in records for t in r.tags})
        back = list(read_canonical(io.StringIO(sink.getvalue())))
        assert back == records

    def test_manifest_on_toy_records(self):
        records = [
            QuestionRecord("a", "2010-01", ["x"]),
            QuestionRecord("b", "2010-01", ["x", "y"]),
            QuestionRecord("c", "2010-02", ["z"]),
        ]
        manifest = write_canonical(records, io.StringIO())
        assert manifest.record_count == 3
        assert manifest.month_range == ("2010-01", "2010-02")
        assert manifest.distinct_tags == 3
        assert manifest.source_digest.startswith("sha256:")

    def test_empty_sequence(self):
        manifest = write_canonical([], io.StringIO())
        assert manifest.record_count == 0
        assert manifest.month_range is None
        assert list(read_canonical(io.StringIO(""))) == []

    def test_unsorted_months_rejected(self):
        records = [
            QuestionRecord("a", "2010-02", ["x"]),
            QuestionRecord("b", "2010-01", ["y"]),
        ]
        with pytest.raises(ValueError, match="unsorted input"):
            write_canonical(records, io.StringIO())

    def test_read_rejects_six_tags(self):
        line = "q1\t2010-01\ta;b;c;d;e;f\n"
        with pytest.raises(CanonicalFormatError, match="line 1"):
            list(read_canonical(io.StringIO(line)))

    def test_read_rejects_malformed_line(self):
        with pytest.raises(CanonicalFormatError, match="expected 3"):
            list(read_canonical(io.StringIO("only-one-field\n")))

    def test_read_rejects_duplicate_tags(self):
        with pytest.raises(CanonicalFormatError, match="duplicate"):
            list(read_canonical(io.StringIO("q\t2010-01\ta;a\n")))


class TestRecordValidation:
    def test_rejects_bad_month(self):
        with pytest.raises(ValueError, match="bad month"):
            QuestionRecord("q", "2010-13", ["a"]).validate()

    def test_rejects_whitespace_tag(self):
        with pytest.raises(ValueError, match="malformed tag"):
            QuestionRecord("q", "2010-01", ["a b"]).validate()

    def test_rejects_zero_tags(self):
        with pytest.raises(ValueError, match="1..5"):
            QuestionRecord("q", "2010-01", []).validate()


def test_sort_records_by_month_is_stable(rng):
    records = random_corpus(rng, 500)
    shuffled = records.copy()
    rng.shuffle(shuffled)
    ordered = list(sort_records_by_month(shuffled))
    months = [r.month for r in ordered]
    assert months == sorted(months)
    # Stability: within a month the shuffled order is preserved.
    for month in set(months):
        expected = [r for r in shuffled if r.month == month]
        got = [r for r in ordered if r.month == month]
        assert got == expected
