import tempfile
import unittest
from datetime import datetime, timezone
from pathlib import Path

from dsinfluence.corpus import (
    build_publication_timeline,
    dumps_snapshot,
    load_snapshot,
    loads_snapshot,
    save_snapshot,
)
from dsinfluence.errors import (
    IntegrityError,
    SnapshotError,
    SnapshotParseError,
    UnsupportedFormatError,
)
from dsinfluence.models import CitationEdge, DatasetEntry, PaperRecord, Snapshot, SnapshotBuilder
from dsinfluence.unittests.mocks import fixture, read_fixture

CREATED = datetime(2023, 1, 4, tzinfo=timezone.utc)


class TestSnapshotFormat(unittest.TestCase):
    def setUp(self):
        self.text = read_fixture("golden_snapshot.jsonl")
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_roundtrip_is_byte_identical(self):
        snapshot = load_snapshot(fixture("golden_snapshot.jsonl"))
        path = save_snapshot(snapshot, self.dir / "copy.jsonl")
        self.assertEqual(path.read_text(encoding="utf-8"), self.text)
        self.assertEqual(snapshot.created_at, CREATED)
        self.assertFalse(snapshot.partial)
        self.assertEqual(len(snapshot.datasets), 5)
        self.assertEqual(len(snapshot.papers), 8)
        self.assertEqual(len(snapshot.citations), 15)

    def test_empty_snapshot_is_header_only(self):
        text = dumps_snapshot(Snapshot.empty(CREATED))
        self.assertEqual(text.count("\n"), 1)
        self.assertTrue(text.startswith('{"created_at":"2023-01-04T00:00:00+00:00"'))
        self.assertEqual(list(loads_snapshot(text).entities()), [])

    def test_missing_paper_dangles(self):
        lines = [line for line in self.text.splitlines() if '"paper_id":"R1"' not in line]
        path = self.dir / "dangling.jsonl"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        snapshot = load_snapshot(path)
        dangling = snapshot.validate()
        self.assertIn(("paper", "PA", "reference_ids", "R1"), dangling)
        self.assertIn(("paper", "PB", "reference_ids", "R1"), dangling)
        with self.assertRaises(IntegrityError):
            save_snapshot(snapshot, self.dir / "strict.jsonl")
        self.assertFalse((self.dir / "strict.jsonl").exists())
        save_snapshot(snapshot, self.dir / "lenient.jsonl", allow_dangling=True)

    def test_truncated_record(self):
        lines = self.text.splitlines(keepends=True)
        truncated = "".join(lines[:9]) + lines[9][:20]
        with self.assertRaises(SnapshotParseError) as ctx:
            loads_snapshot(truncated, "cut.jsonl")
        self.assertEqual(ctx.exception.line_number, 10)
        self.assertEqual(ctx.exception.last_complete_line, 9)

    def test_unknown_kind(self):
        text = self.text + '{"kind":"venue","id":"x"}\n'
        with self.assertRaises(SnapshotParseError) as ctx:
            loads_snapshot(text)
        self.assertEqual(ctx.exception.line_number, 35)

    def test_unsupported_version(self):
        text = self.text.replace('"format_version":1', '"format_version":2', 1)
        with self.assertRaises(UnsupportedFormatError):
            loads_snapshot(text)

    def test_missing_file(self):
        with self.assertRaises(SnapshotError):
            load_snapshot(self.dir / "nope.jsonl")


class TestTimeline(unittest.TestCase):
    def test_counts_and_cumulative(self):
        builder = SnapshotBuilder()
        builder.add_all(
            [
                DatasetEntry("D1", "One", paper_id="P1"),
                DatasetEntry("D2", "Two", paper_id="P2"),
                PaperRecord("P1", publication_year=2019),
                PaperRecord("P2", publication_year=2019),
                CitationEdge("C1", "P1", 2020),
                CitationEdge("C2", "P2", 2020),
                CitationEdge("C3", "P1", 2021),
            ]
        )
        timeline = build_publication_timeline(builder.build(CREATED))
        self.assertEqual(timeline.counts(), {2019: (2, 0), 2020: (0, 2), 2021: (0, 1)})
        self.assertEqual(timeline.cumulative(), {2019: (2, 0), 2020: (2, 2), 2021: (2, 3)})

    def test_golden(self):
        timeline = build_publication_timeline(load_snapshot(fixture("golden_snapshot.jsonl")))
        self.assertEqual(timeline.counts(), {2020: (2, 1), 2021: (2, 2), 2022: (1, 2)})
        datasets = citations = 0
        for point in timeline.points:
            datasets += point.datasets
            citations += point.citations
            self.assertEqual((point.cumulative_datasets, point.cumulative_citations), (datasets, citations))

    def test_empty(self):
        self.assertEqual(build_publication_timeline(Snapshot.empty(CREATED)).points, [])
