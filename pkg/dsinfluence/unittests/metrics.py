import unittest
from datetime import datetime, timezone

import numpy as np

from dsinfluence.corpus import load_snapshot
from dsinfluence.errors import UnknownEntityError
from dsinfluence.metrics import (
    ALTMETRIC_STALE,
    CIT_H3_EARLY,
    FEATURES,
    SELF_CITATIONS_EXCLUDED,
    Window3,
    citations_after_one_year,
    extract_features,
    feature_table,
    h_index,
    regression_table,
    windowed_citations,
)
from dsinfluence.models import AuthorRecord, CitationEdge, DatasetEntry, PaperRecord, SnapshotBuilder
from dsinfluence.unittests.mocks import fixture

CREATED = datetime(2023, 1, 4, tzinfo=timezone.utc)


def h_index_oracle(counts) -> int:
    return max(h for h in range(len(counts) + 1) if sum(1 for c in counts if c >= h) >= h)


class TestHIndex(unittest.TestCase):
    def test_examples(self):
        self.assertEqual(h_index([]), 0)
        self.assertEqual(h_index([0, 0]), 0)
        self.assertEqual(h_index([3, 0, 6, 1, 5]), 3)
        self.assertEqual(h_index([10, 10, 10]), 3)
        self.assertEqual(h_index([1]), 1)

    def test_against_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            counts = rng.integers(0, 30, size=rng.integers(0, 25)).tolist()
            self.assertEqual(h_index(counts), h_index_oracle(counts), counts)


class TestWindow(unittest.TestCase):
    def test_bounds(self):
        window = Window3(2022)
        self.assertEqual(window.years, frozenset({2020, 2021, 2022}))
        self.assertIn(2020, window)
        self.assertNotIn(2019, window)
        self.assertNotIn(None, window)


class TestGoldenFeatures(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.snapshot = load_snapshot(fixture("golden_snapshot.jsonl"))

    def test_dataset_paper(self):
        features = extract_features("D1", 2022, self.snapshot)
        self.assertEqual(
            (features.n_cit3, features.cit_h3, features.ref_h3, features.aut_mu_h3),
            (3, 1, 2, 2.0),
        )
        self.assertEqual((features.n_frames, features.n_sensors, features.a_pub), (1000, 3, 2020))
        self.assertEqual((features.aas_curr, features.aas_3m, features.n_readers), (12.5, 85.0, 120))
        self.assertEqual(features.flags, (CIT_H3_EARLY,))

    def test_second_and_empty_paper(self):
        pb = extract_features("D2", 2022, self.snapshot)
        self.assertEqual((pb.n_cit3, pb.cit_h3, pb.ref_h3, pb.aut_mu_h3), (2, 1, 1, 2.0))
        self.assertIsNone(pb.n_frames)
        self.assertIsNone(pb.aas_3m)
        pg = extract_features("D3", 2022, self.snapshot)
        self.assertEqual((pg.n_cit3, pg.cit_h3, pg.ref_h3, pg.aut_mu_h3), (0, 0, 0, 0.0))
        self.assertIsNone(pg.aas_curr)

    def test_dataset_without_paper(self):
        features = extract_features("D5", 2022, self.snapshot)
        present = {name for name, value in features.as_dict().items() if value is not None}
        self.assertEqual(present, {"n_frames", "n_sensors"})

    def test_earlier_year(self):
        features = extract_features("D1", 2020, self.snapshot)
        self.assertEqual((features.n_cit3, features.cit_h3), (1, 0))
        self.assertIn(ALTMETRIC_STALE, features.flags)
        self.assertEqual(windowed_citations("PA", Window3(2021), self.snapshot), 2)

    def test_unknown(self):
        with self.assertRaises(UnknownEntityError):
            extract_features("D9", 2022, self.snapshot)
        with self.assertRaises(KeyError):
            extract_features("D1", 2022, self.snapshot).get("not_a_feature")

    def test_one_year_citations(self):
        self.assertEqual(citations_after_one_year("PA", self.snapshot), 2)
        self.assertEqual(citations_after_one_year("PB", self.snapshot), 2)
        self.assertEqual(citations_after_one_year("PG", self.snapshot), 0)

    def test_tables(self):
        vectors = feature_table(self.snapshot, [2021, 2022])
        self.assertEqual(
            [(v.dataset_id, v.eval_year) for v in vectors][:4],
            [("D1", 2021), ("D1", 2022), ("D2", 2021), ("D2", 2022)],
        )
        self.assertEqual(len(vectors), 10)
        rows = regression_table(self.snapshot)
        self.assertEqual([row["dataset_id"] for row in rows], ["D1", "D2", "D3", "D4"])
        self.assertEqual(rows[0]["cit_1y"], 2)
        self.assertEqual(set(rows[0]) - {"dataset_id", "cit_1y"}, set(FEATURES))


class TestMissingData(unittest.TestCase):
    def snapshot(self, *entities):
        builder = SnapshotBuilder()
        builder.add_all(entities)
        return builder.build(CREATED)

    def test_unfetched_lists_are_absent(self):
        snapshot = self.snapshot(
            DatasetEntry("D", "d", paper_id="P"),
            PaperRecord("P", publication_year=2020, author_ids=("a",)),
            AuthorRecord("a"),
        )
        features = extract_features("D", 2021, snapshot)
        for name in ("ref_h3", "aut_mu_h3", "n_cit3", "cit_h3", "aas_curr"):
            self.assertIsNone(features.get(name), name)
        self.assertEqual(features.a_pub, 2020)

    def test_self_citations(self):
        snapshot = self.snapshot(
            DatasetEntry("D", "d", paper_id="P"),
            PaperRecord("P", publication_year=2020, citations_fetched=True),
            PaperRecord("Q", publication_year=2021, citations_fetched=True),
            CitationEdge("Q", "P", 2021, self_citation=True),
            CitationEdge("R", "P", 2021),
            CitationEdge("S", "P"),
        )
        self.assertEqual(extract_features("D", 2021, snapshot).n_cit3, 2)
        without = extract_features("D", 2021, snapshot, include_self_citations=False)
        self.assertEqual(without.n_cit3, 1)
        self.assertIn(SELF_CITATIONS_EXCLUDED, without.flags)
        self.assertEqual(citations_after_one_year("P", snapshot), 2)
        self.assertEqual(citations_after_one_year("P", snapshot, include_self_citations=False), 1)
        rows = regression_table(snapshot, include_self_citations=False)
        self.assertEqual([row["cit_1y"] for row in rows], [1])
