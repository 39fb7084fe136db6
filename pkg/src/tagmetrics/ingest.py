"""Streaming ingestion of Stack Exchange style post dumps.

The raw input is the public dump format: one self-closed XML ``<row>``
element per line with ``Id``, ``PostTypeId``, ``CreationDate`` and
``Tags`` attributes.  Parsing is a single sequential pass whose memory
use is bounded by one row plus the set of distinct tag strings, so
multi-GB files stream through without being loaded.

Parsed questions are written to a line-oriented canonical format, one
record per line, UTF-8::

    question_id<TAB>YYYY-MM<TAB>tag1;tag2;...;tagK

Raw dumps are dirty, so bad rows are diverted to a skip report and
parsing continues.  Canonical files are machine-written, so any defect
there is fatal.
"""

from __future__ import annotations

import hashlib
import html
import io
import os
import re
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import IO, Counter, Iterable, Iterator, TextIO

MAX_TAGS_PER_QUESTION = 5

_MONTH_RE = re.compile(r"^\d{4}-(0[1-9]|1[0-2])$")
_ANGLE_TAG_RE = re.compile(r"<([^<>]*)>")


class DumpFormatError(Exception):
    """Unreadable or structurally broken input that parsing cannot survive."""


class CanonicalFormatError(Exception):
    """Corruption in a canonical corpus file; always carries the line number."""


class TagFieldError(ValueError):
    """A Tags attribute that does not decode to a valid tag list."""


@dataclass
class QuestionRecord:
    """One tagged question: identifier, calendar month, 1..5 distinct tags."""

    question_id: str
    month: str
    tags: list[str]

    def validate(self) -> None:
        if not self.question_id or any(c.isspace() for c in self.question_id):
            raise ValueError(f"bad question id {self.question_id!r}")
        if not _MONTH_RE.match(self.month):
            raise ValueError(f"bad month {self.month!r}")
        if not 1 <= len(self.tags) <= MAX_TAGS_PER_QUESTION:
            raise ValueError(f"expected 1..{MAX_TAGS_PER_QUESTION} tags, got {len(self.tags)}")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("duplicate tag")
        for tag in self.tags:
            _validate_tag(tag)


@dataclass
class CorpusManifest:
    """Provenance summary of one canonical corpus file."""

    record_count: int
    month_range: tuple[str, str] | None
    distinct_tags: int
    source_digest: str

    def to_dict(self) -> dict:
        return {
            "record_count": self.record_count,
            "month_range": list(self.month_range) if self.month_range else None,
            "distinct_tags": self.distinct_tags,
            "source_digest": self.source_digest,
        }


class SkipLog:
    """Collects skipped dump rows without holding them in memory.

    Keeps per-reason counts; the full line-by-line report streams to an
    optional sink as ``line_number<TAB>reason`` lines.
    """

    def __init__(self, sink: TextIO | None = None) -> None:
        self.counts: Counter[str] = Counter()
        self.total = 0
        self._sink = sink

    def record(self, line_number: int, reason: str) -> None:
        self.counts[reason] += 1
        self.total += 1
        if self._sink is not None:
            self._sink.write(f"{line_number}\t{reason}\n")


def _validate_tag(tag: str) -> None:
    if not tag:
        raise TagFieldError("no tags")
    if any(c.isspace() for c in tag) or ";" in tag:
        raise TagFieldError(f"malformed tag {tag!r}")


def parse_tags_field(raw: str) -> list[str]:
    """Decode a dump Tags attribute into a normalized tag list.

    Handles the two encodings seen in the wild: HTML-escaped angle
    brackets (``&lt;a&gt;&lt;b&gt;``, or the already-unescaped
    ``<a><b>``) and pipe delimiters (``|a|b|``).  Tags are lowercased
    and stripped; order follows the file.  Raises :class:`TagFieldError`
    on an empty result, a duplicate tag, or more than five tags.
    """
    if not raw:
        raise TagFieldError("no tags")
    text = html.unescape(raw) if "&" in raw else raw
    if text.startswith("<"):
        parts = _ANGLE_TAG_RE.findall(text)
    elif "|" in text:
        parts = [p for p in text.split("|") if p]
    else:
        parts = [text]
    tags = [p.strip().lower() for p in parts]
    tags = [t for t in tags if t]
    if not tags:
        raise TagFieldError("no tags")
    if len(tags) > MAX_TAGS_PER_QUESTION:
        raise TagFieldError("too many tags")
    if len(set(tags)) != len(tags):
        raise TagFieldError("duplicate tag")
    for tag in tags:
        _validate_tag(tag)
    return tags


def _as_text_lines(source: IO) -> Iterator[str]:
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or (
        hasattr(source, "mode") and "b" in getattr(source, "mode", "")
    ):
        yield from io.TextIOWrapper(source, encoding="utf-8", errors="replace")
    else:
        yield from source


def parse_posts_stream(
    source: IO, skip_log: SkipLog | None = None
) -> Iterator[QuestionRecord]:
    """Yield one record per valid question row of a posts dump.

    Rows with PostTypeId other than "1", rows without tags, and rows that
    violate the record invariants are diverted to ``skip_log`` with their
    line number; parsing continues.  An unreadable source raises.
    """
    if skip_log is None:
        skip_log = SkipLog()
    for line_number, line in enumerate(_as_text_lines(source), start=1):
        stripped = line.strip()
        if "<row" not in stripped:
            continue
        try:
            elem = ET.fromstring(stripped)
        except ET.ParseError:
            skip_log.record(line_number, "malformed row")
            continue
        attrs = elem.attrib
        if attrs.get("PostTypeId") != "1":
            skip_log.record(line_number, "not a question")
            continue
        raw_tags = attrs.get("Tags", "")
        if not raw_tags:
            skip_log.record(line_number, "no tags")
            continue
        question_id = attrs.get("Id", "")
        created = attrs.get("CreationDate", "")
        month = created[:7]
        if not question_id:
            skip_log.record(line_number, "missing id")
            continue
        if not _MONTH_RE.match(month):
            skip_log.record(line_number, "bad creation date")
            continue
        try:
            tags = parse_tags_field(raw_tags)
        except TagFieldError as exc:
            skip_log.record(line_number, str(exc))
            continue
        record = QuestionRecord(question_id=question_id, month=month, tags=tags)
        try:
            record.validate()
        except ValueError as exc:
            skip_log.record(line_number, str(exc))
            continue
        yield record


def format_canonical_line(record: QuestionRecord) -> str:
    return f"{record.question_id}\t{record.month}\t{';'.join(record.tags)}\n"


def write_canonical(records: Iterable[QuestionRecord], sink: TextIO) -> CorpusManifest:
    """Write records in canonical form and return the corpus manifest.

    Records must arrive sorted by month (stable within a month); an
    out-of-order month raises ValueError("unsorted input").  The manifest
    digest is the SHA-256 of the exact bytes written.
    """
    digest = hashlib.sha256()
    count = 0
    first_month: str | None = None
    last_month: str | None = None
    tags_seen: set[str] = set()
    for record in records:
        record.validate()
        if last_month is not None and record.month < last_month:
            raise ValueError("unsorted input")
        if first_month is None:
            first_month = record.month
        last_month = record.month
        tags_seen.update(record.tags)
        line = format_canonical_line(record)
        sink.write(line)
        digest.update(line.encode("utf-8"))
        count += 1
    month_range = (first_month, last_month) if first_month is not None else None
    return CorpusManifest(
        record_count=count,
        month_range=month_range,
        distinct_tags=len(tags_seen),
        source_digest=f"sha256:{digest.hexdigest()}",
    )


def read_canonical(source: IO) -> Iterator[QuestionRecord]:
    """Yield records from a canonical corpus file, validating each line.

    Canonical files are machine-written, so a malformed line raises
    :class:`CanonicalFormatError` with its line number instead of being
    skipped.
    """
    for line_number, line in enumerate(_as_text_lines(source), start=1):
        stripped = line.rstrip("\n")
        if not stripped:
            continue
        fields = stripped.split("\t")
        if len(fields) != 3:
            raise CanonicalFormatError(
                f"line {line_number}: expected 3 tab-separated fields, got {len(fields)}"
            )
        question_id, month, tag_field = fields
        record = QuestionRecord(
            question_id=question_id, month=month, tags=tag_field.split(";")
        )
        try:
            record.validate()
        except ValueError as exc:
            raise CanonicalFormatError(f"line {line_number}: {exc}") from exc
        yield record


def sort_records_by_month(
    records: Iterable[QuestionRecord], spool_dir: str | None = None
) -> Iterator[QuestionRecord]:
    """Order records by month using per-month spill files, memory-bounded.

    Stable within each month.  Dump files are usually already in
    creation order, but this makes the canonical-format precondition hold
    unconditionally without buffering the corpus in memory.
    """
    with tempfile.TemporaryDirectory(dir=spool_dir, prefix="tagmetrics-spool-") as tmp:
        handles: dict[str, TextIO] = {}
        try:
            for record in records:
                handle = handles.get(record.month)
                if handle is None:
                    path = os.path.join(tmp, record.month)
                    handle = open(path, "w", encoding="utf-8")
                    handles[record.month] = handle
                handle.write(format_canonical_line(record))
        finally:
            for handle in handles.values():
                handle.close()
        for month in sorted(handles):
            with open(os.path.join(tmp, month), encoding="utf-8") as fh:
                yield from read_canonical(fh)
