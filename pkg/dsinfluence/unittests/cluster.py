import unittest
from datetime import datetime, timezone

import numpy as np

from dsinfluence.cluster import (
    ClusterModel,
    DEFAULT_OFFSETS,
    Trajectory,
    build_trajectories,
    cluster_trajectories,
    elbow,
    kmeans,
    kmeans_restarts,
    summarize_clusters,
    trajectory_matrix,
)
from dsinfluence.corpus import load_snapshot
from dsinfluence.errors import InsufficientDataError
from dsinfluence.models import CitationEdge, DatasetEntry, PaperRecord, SnapshotBuilder
from dsinfluence.synthetic import TRAJECTORY_CENTERS, planted_blobs, planted_trajectories
from dsinfluence.unittests.mocks import fixture

CREATED = datetime(2023, 1, 4, tzinfo=timezone.utc)


def same_partition(assignments, planted) -> bool:
    """True if the clusters equal the planted groups up to renumbering"""
    pairs = {(planted[key], cluster) for key, cluster in assignments.items()}
    return len(pairs) == len({p for p, _ in pairs}) == len({c for _, c in pairs})


class TestTrajectories(unittest.TestCase):
    def test_windows(self):
        builder = SnapshotBuilder()
        builder.add_all(
            [
                DatasetEntry("D", "d", paper_id="P"),
                DatasetEntry("E", "e", paper_id="Q"),
                PaperRecord("P", publication_year=2018, citations_fetched=True),
                PaperRecord("Q", publication_year=2019, citations_fetched=True),
                PaperRecord("Z", publication_year=2020),
                CitationEdge("C1", "P", 2018),
                CitationEdge("C2", "P", 2018),
                CitationEdge("C3", "P", 2019),
                CitationEdge("C4", "P", 2019),
                CitationEdge("C5", "P", 2019),
                CitationEdge("C6", "P", 2021),
            ]
        )
        snapshot = builder.build(CREATED)
        trajectories = build_trajectories(snapshot)
        self.assertEqual(
            [(t.paper_id, t.values) for t in trajectories],
            [("P", (0, 2, 5, 5)), ("Q", (0, 0, 0, 0))],
        )
        self.assertEqual(trajectories[0].offsets, DEFAULT_OFFSETS)
        self.assertEqual(build_trajectories(snapshot, (0, 1, 2, 3)), [
            Trajectory("P", (0, 1, 2, 3), (2, 5, 5, 4)),
        ])

    def test_golden(self):
        snapshot = load_snapshot(fixture("golden_snapshot.jsonl"))
        trajectories = build_trajectories(snapshot)
        self.assertEqual(trajectories, [Trajectory("PA", DEFAULT_OFFSETS, (0, 1, 2, 3))])
        with self.assertRaises(InsufficientDataError):
            cluster_trajectories(trajectories, k=6)

    def test_validation(self):
        with self.assertRaises(ValueError):
            Trajectory("P", (0, 1), (1,))
        with self.assertRaises(ValueError):
            Trajectory("P", (1, 0), (1, 2))


class TestKMeans(unittest.TestCase):
    def test_one_cluster_is_the_mean(self):
        points = np.array([[0.0, 0.0], [2.0, 0.0], [4.0, 6.0]])
        model = kmeans(points, 1, seed=0)
        np.testing.assert_allclose(model.centroids[0], [2.0, 2.0])
        self.assertAlmostEqual(model.inertia, 8 + 4 + 20)
        self.assertEqual(model.sizes(), [3])

    def test_one_cluster_per_point(self):
        points = [[0, 0], [5, 5], [0, 5], [5, 0]]
        model = kmeans_restarts(points, 4, seed=1)
        self.assertAlmostEqual(model.inertia, 0.0)
        self.assertEqual(sorted(model.assignments.values()), [0, 1, 2, 3])
        self.assertEqual(model.assignments, {"0": 0, "1": 3, "2": 1, "3": 2})

    def test_too_many_clusters(self):
        with self.assertRaises(InsufficientDataError):
            kmeans([[0.0], [1.0]], 3, seed=0)
        with self.assertRaises(InsufficientDataError):
            kmeans([[0.0]], 0, seed=0)

    def test_blobs(self):
        for seed in range(20):
            points, planted = planted_blobs(np.random.default_rng(seed))
            model = kmeans_restarts(points, 2, seed)
            labels = {str(i): int(label) for i, label in enumerate(planted)}
            self.assertTrue(same_partition(model.assignments, labels), seed)

    def test_inertia_never_rises(self):
        points, _ = planted_blobs(np.random.default_rng(3), separation=1.0)
        for seed in range(10):
            history = kmeans(points, 5, seed).inertia_history
            for earlier, later in zip(history, history[1:]):
                self.assertLessEqual(later, earlier * (1 + 1e-9))

    def test_order_invariant(self):
        rng = np.random.default_rng(4)
        points = rng.normal(size=(60, 3))
        labels = [f"p{i}" for i in range(60)]
        model = kmeans(points, 4, seed=5, labels=labels)
        permutation = rng.permutation(60)
        shuffled = kmeans(points[permutation], 4, seed=5, labels=[labels[i] for i in permutation])
        self.assertEqual(model.assignments, shuffled.assignments)
        self.assertAlmostEqual(model.inertia, shuffled.inertia)
        np.testing.assert_allclose(model.centroids, shuffled.centroids)

    def test_reproducible(self):
        points, _ = planted_blobs(np.random.default_rng(6))
        first = kmeans_restarts(points, 3, seed=7)
        second = kmeans_restarts(points, 3, seed=7, workers=4)
        self.assertEqual(first.assignments, second.assignments)
        self.assertEqual(first.inertia, second.inertia)


class TestTrajectoryClusters(unittest.TestCase):
    def test_planted_clusters_are_recovered(self):
        recovered = 0
        for seed in range(100):
            trajectories, planted = planted_trajectories(np.random.default_rng(seed))
            model = cluster_trajectories(trajectories, k=6, seed=seed, restarts=10)
            recovered += same_partition(model.assignments, planted)
        self.assertGreaterEqual(recovered, 95)

    def test_elbow(self):
        trajectories, _ = planted_trajectories(np.random.default_rng(8))
        series = elbow(trajectory_matrix(trajectories), range(1, 9), seed=8)
        values = [series[k] for k in range(1, 9)]
        for earlier, later in zip(values, values[1:]):
            self.assertLessEqual(later, earlier * (1 + 1e-9))
        self.assertLess(series[6], 0.1 * series[5])
        self.assertGreater(series[7], 0.7 * series[6])
        with self.assertRaises(InsufficientDataError):
            elbow(trajectory_matrix(trajectories[:3]), range(1, 5))

    def test_summaries(self):
        trajectories, _ = planted_trajectories(np.random.default_rng(9), per_cluster=10)
        model = cluster_trajectories(trajectories, k=6, seed=9, k_range=range(1, 8))
        self.assertEqual(sorted(model.per_k_inertia), list(range(1, 8)))
        self.assertAlmostEqual(model.per_k_inertia[6], model.inertia)
        summaries = summarize_clusters(model, trajectories)
        self.assertEqual([s.size for s in summaries], [10] * 6)
        centers = np.array(TRAJECTORY_CENTERS, dtype=float)
        matched = set()
        for summary in summaries:
            gaps = np.abs(centers - np.array(summary.mean_values)).max(axis=1)
            self.assertLess(gaps.min(), 1.5)
            matched.add(int(np.argmin(gaps)))
        self.assertEqual(len(matched), len(TRAJECTORY_CENTERS))

    def test_empty_cluster_keeps_the_offsets_width(self):
        trajectories = [Trajectory("P", (0, 5), (1, 4)), Trajectory("Q", (0, 5), (3, 6))]
        model = ClusterModel(
            k=2, centroids=np.array([[2.0, 5.0], [0.0, 0.0]]), assignments={"P": 0, "Q": 0}, inertia=4.0
        )
        summaries = summarize_clusters(model, trajectories)
        self.assertEqual(summaries[0].mean_values, (2.0, 5.0))
        self.assertEqual(summaries[1].size, 0)
        self.assertEqual(summaries[1].mean_values, (0.0, 0.0))

    def test_standardized_matrix(self):
        trajectories, _ = planted_trajectories(np.random.default_rng(10), per_cluster=5)
        X = trajectory_matrix(trajectories, standardize=True)
        np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(X.std(axis=0), 1.0)
