import json
import tempfile
import unittest
from pathlib import Path

from dsinfluence.errors import DataError, MappingError, SourceError
from dsinfluence.importer import (
    FieldMapping,
    SourceType,
    guess_source_type,
    load_ad_datasets,
    normalize_arxiv,
    normalize_doi,
    parse_count,
    parse_sensors,
)
from dsinfluence.unittests.mocks import UniverseAdapter, fixture, mock_session


class TestParsers(unittest.TestCase):
    def test_identifiers(self):
        self.assertEqual(normalize_doi("https://doi.org/10.1000/beta"), "10.1000/beta")
        self.assertEqual(normalize_doi("doi:10.1000/alpha"), "10.1000/alpha")
        self.assertEqual(normalize_doi(" 10.1000/x "), "10.1000/x")
        self.assertIsNone(normalize_doi(""))
        self.assertIsNone(normalize_doi(12))
        self.assertEqual(normalize_arxiv("https://arxiv.org/abs/2102.00003"), "2102.00003")
        self.assertEqual(normalize_arxiv("arXiv:2001.00001"), "2001.00001")

    def test_counts(self):
        self.assertEqual(parse_count(200.0), 200)
        self.assertEqual(parse_count("5,000"), 5000)
        self.assertIsNone(parse_count("118k"))
        self.assertIsNone(parse_count(2.5))
        self.assertIsNone(parse_count(True))
        self.assertEqual(parse_sensors(["camera", "lidar", "camera"]), 2)
        self.assertIsNone(parse_sensors([]))

    def test_source_type(self):
        self.assertIs(guess_source_type("https://example.org/x.json"), SourceType.URL)
        self.assertIs(guess_source_type("x.json"), SourceType.FILE)


class TestCatalogue(unittest.TestCase):
    def test_fixture(self):
        load = load_ad_datasets(fixture("ad_datasets.json"))
        self.assertEqual([e.dataset_id for e in load.entries], ["D1", "D2", "D3", "D4", "D5"])
        self.assertEqual(load.skipped, 0)
        d1, d2, d3, d4, d5 = load.entries
        self.assertEqual((d1.doi, d1.arxiv_id, d1.n_sensors), ("10.1000/alpha", "2001.00001", 3))
        self.assertIsNone(d2.n_frames)
        self.assertEqual(d3.n_frames, 5000)
        self.assertEqual((d4.doi, d4.n_frames), ("10.1000/alpha", 200))
        self.assertFalse(d5.ingestible)
        self.assertEqual(load.non_ingestible, [d5])
        self.assertEqual(len(load.warnings), 1)
        self.assertIn("118k", load.warnings[0])

    def test_custom_mapping_and_skips(self):
        records = {
            "first": {"title": "First", "n_frames": -3},
            "second": {"title": "Second", "n_frames": 10},
            "third": "not a record",
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "catalogue.json"
            path.write_text(json.dumps(records), encoding="utf-8")
            load = load_ad_datasets(path, FieldMapping(id="key", name="title", n_frames="n_frames"))
        self.assertEqual([e.dataset_id for e in load.entries], ["first", "second"])
        self.assertIsNone(load.entries[0].n_frames)
        self.assertEqual(load.entries[1].n_frames, 10)

    def test_duplicate_ids_skipped(self):
        records = [{"id": "A", "name": "x"}, {"id": "A", "name": "y"}, {"name": "no id"}]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "catalogue.json"
            path.write_text(json.dumps(records), encoding="utf-8")
            load = load_ad_datasets(path)
        self.assertEqual(len(load.entries), 1)
        self.assertEqual(load.skipped, 2)

    def test_strict_mapping(self):
        with self.assertRaises(MappingError):
            load_ad_datasets(fixture("ad_datasets.json"), strict=True)

    def test_malformed(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.json"
            path.write_text('{"datasets": [', encoding="utf-8")
            with self.assertRaises(DataError):
                load_ad_datasets(path)
            with self.assertRaises(SourceError):
                load_ad_datasets(Path(tmp) / "missing.json")

    def test_url(self):
        adapter = UniverseAdapter()
        load = load_ad_datasets(
            "http://catalogue.mock/ad_datasets.json", session=mock_session(adapter)
        )
        self.assertEqual(len(load.entries), 5)
        self.assertEqual(len(adapter.log), 1)

    def test_unreachable_url(self):
        adapter = UniverseAdapter(down=("catalogue.mock",))
        with self.assertRaises(SourceError):
            load_ad_datasets("http://catalogue.mock/x.json", session=mock_session(adapter))
