import csv
import unittest

import numpy as np

from dsinfluence.corpus import load_snapshot
from dsinfluence.errors import EmptyPeerGroupError
from dsinfluence.exporter import ReportFormat, render_rank
from dsinfluence.influence import (
    IS_FEATURES,
    NO_FEATURES,
    REPORT_COLUMNS,
    build_percentile_table,
    influence_from_percentiles,
    influence_score,
    is_histogram,
    peer_group,
    percentile_rank,
    rank_datasets,
    score_features,
    score_history,
    score_year,
    top_marks,
)
from dsinfluence.metrics import FeatureVector
from dsinfluence.tools import ABSENT
from dsinfluence.unittests.mocks import fixture, read_fixture


def reference_ranking():
    with open(fixture("ranking_2022.csv"), newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            percentiles = {
                column: None if row[column] == ABSENT else float(row[column])
                for column in REPORT_COLUMNS
            }
            yield row["name"], float(row["IS"]), percentiles


class TestPercentiles(unittest.TestCase):
    def test_examples(self):
        peers = (1, 2, 2, 4)
        self.assertEqual(percentile_rank(1, peers), 0.25)
        self.assertEqual(percentile_rank(2, peers), 0.75)
        self.assertEqual(percentile_rank(4, peers), 1.0)
        with self.assertRaises(EmptyPeerGroupError):
            percentile_rank(1, ())

    def test_properties(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            values = rng.integers(0, 20, size=rng.integers(1, 40)).tolist()
            peers = tuple(sorted(values))
            ranks = {v: percentile_rank(v, peers) for v in values}
            for value, rank in ranks.items():
                self.assertGreater(rank, 0.0)
                self.assertLessEqual(rank, 1.0)
            self.assertEqual(ranks[max(values)], 1.0)
            self.assertAlmostEqual(ranks[min(values)], values.count(min(values)) / len(values))
            ordered = [ranks[v] for v in sorted(ranks)]
            self.assertEqual(ordered, sorted(ordered))
            self.assertEqual(len(set(ordered)), len(ordered))


class TestInfluenceScore(unittest.TestCase):
    def test_reference_ranking(self):
        features = score_features(["n_sensors"])
        rows = list(reference_ranking())
        self.assertEqual(len(rows), 32)
        for name, expected, percentiles in rows:
            result = influence_from_percentiles(name, 2022, percentiles, features)
            self.assertAlmostEqual(result.is_score, expected, delta=0.01, msg=name)

    def test_reference_examples(self):
        rows = {name: percentiles for name, _, percentiles in reference_ranking()}
        block_nerf = influence_from_percentiles("Block-NeRF", 2022, rows["Waymo Block-NeRF"])
        self.assertAlmostEqual(block_nerf.is_score, 0.82, delta=0.005)
        self.assertEqual(block_nerf.n_available, 6)
        boreas = influence_from_percentiles("Boreas", 2022, rows["Boreas"])
        self.assertAlmostEqual(boreas.is_score, 0.22, places=9)
        self.assertEqual(boreas.n_available, 4)
        glare = influence_from_percentiles("GLARE", 2022, rows["GLARE"])
        self.assertAlmostEqual(glare.is_score, 1.33 / 6)

    def test_no_features(self):
        result = influence_from_percentiles("X", 2022, {})
        self.assertIsNone(result.is_score)
        self.assertEqual(result.n_available, 0)
        self.assertEqual(result.flags, (NO_FEATURES,))

    def test_score_features(self):
        self.assertEqual(score_features(), IS_FEATURES)
        self.assertNotIn("n_frames", score_features(["n_frames"]))
        with self.assertRaises(ValueError):
            score_features(["a_pub"])
        with self.assertRaises(ValueError):
            score_features(IS_FEATURES)

    def test_year_mismatch(self):
        vectors = [FeatureVector("A", 2021, n_frames=10), FeatureVector("B", 2021, n_frames=20)]
        table = build_percentile_table(vectors, 2021)
        self.assertEqual(influence_score(vectors[1], table).is_score, 1.0)
        with self.assertRaises(ValueError):
            influence_score(FeatureVector("A", 2022, n_frames=10), table)

    def test_top_marks(self):
        rows = [{"a": 1.0}, {"a": 0.75}, {"a": 0.75}, {"a": 0.5}, {"a": 0.25}, {"a": None}]
        marks = top_marks(rows, ["a"])
        self.assertEqual([bool(m) for m in marks], [True, True, True, True, False, False])


class TestGoldenRanking(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.snapshot = load_snapshot(fixture("golden_snapshot.jsonl"))

    def test_scores(self):
        _, results = score_year(self.snapshot, 2022)
        expected = {"D1": 0.94375, "D4": 0.88125, "D5": 0.75, "D2": 0.580952, "D3": 0.366667}
        for dataset_id, score in expected.items():
            self.assertAlmostEqual(results[dataset_id].is_score, score, places=5, msg=dataset_id)

    def test_rank_report(self):
        ranking = rank_datasets(self.snapshot, 2022)
        self.assertEqual([e.dataset_id for e in ranking], ["D1", "D4", "D5", "D2", "D3"])
        self.assertEqual(render_rank(ranking, ReportFormat.CSV), read_fixture("golden_rank_2022.csv"))
        self.assertEqual(
            render_rank(ranking, ReportFormat.CSV), render_rank(rank_datasets(self.snapshot, 2022), ReportFormat.CSV)
        )

    def test_released_filter(self):
        ranking = rank_datasets(self.snapshot, 2022, released=2021)
        self.assertEqual([e.dataset_id for e in ranking], ["D2", "D3"])
        self.assertEqual([e.rank for e in ranking], [1, 2])
        self.assertAlmostEqual(ranking[0].result.is_score, 0.580952, places=5)

    def test_peer_group(self):
        self.assertEqual(peer_group(self.snapshot, 2020), ["D1", "D4"])
        self.assertEqual(len(peer_group(self.snapshot, 2022)), 5)

    def test_history(self):
        history = score_history("D1", self.snapshot, range(2019, 2023))
        self.assertEqual([r.eval_year for r in history], [2019, 2020, 2021, 2022])
        self.assertIsNone(history[0].is_score)
        self.assertEqual(history[0].flags, ("unreleased",))
        self.assertAlmostEqual(history[1].is_score, 1.0)
        self.assertAlmostEqual(history[2].is_score, 0.958333, places=5)
        self.assertAlmostEqual(history[3].is_score, 0.94375)

    def test_histogram(self):
        _, results = score_year(self.snapshot, 2022)
        histogram = is_histogram(results.values())
        self.assertEqual(histogram.total, 5)
        self.assertEqual(histogram.unscored, 0)
        self.assertEqual(histogram.counts, (0, 0, 0, 1, 0, 1, 0, 1, 1, 1))
        self.assertEqual(len(histogram.edges), 11)
