import csv
import io
import json
import unittest

import numpy as np

from dsinfluence import plots
from dsinfluence.cluster import ClusterModel, ClusterSummary
from dsinfluence.corpus import build_publication_timeline, load_snapshot
from dsinfluence.exporter import (
    RANK_HEADERS,
    ReportFormat,
    render_assignments,
    render_cluster_means,
    render_elbow,
    render_features,
    render_histogram,
    render_history,
    render_rank,
    render_regression,
    render_timeline,
)
from dsinfluence.influence import is_histogram, rank_datasets, score_history, score_year
from dsinfluence.metrics import feature_table
from dsinfluence.regression import run_paper_regression
from dsinfluence.synthetic import planted_regression_rows
from dsinfluence.unittests.mocks import fixture


class TestReports(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.snapshot = load_snapshot(fixture("golden_snapshot.jsonl"))
        cls.ranking = rank_datasets(cls.snapshot, 2022)

    def test_rank_markdown(self):
        text = render_rank(self.ranking, ReportFormat.MARKDOWN)
        lines = text.splitlines()
        self.assertEqual(len(lines), 2 + 5)
        self.assertTrue(lines[0].startswith("|"))
        self.assertIn("**1.00**", lines[2])
        self.assertIn("| --", lines[4])

    def test_rank_json(self):
        records = json.loads(render_rank(self.ranking, ReportFormat.JSON))
        self.assertEqual([r["dataset_id"] for r in records], ["D1", "D4", "D5", "D2", "D3"])
        self.assertAlmostEqual(records[0]["IS"], 0.94375)
        self.assertIsNone(records[2]["percentiles"]["n_cit3"])
        self.assertIn("cit_h3_early", records[0]["flags"])

    def test_empty_rank(self):
        self.assertEqual(render_rank([], ReportFormat.CSV), ",".join(RANK_HEADERS) + "\n")
        self.assertEqual(render_rank([], ReportFormat.JSON), "[]\n")

    def test_history(self):
        results = score_history("D1", self.snapshot, range(2019, 2023))
        rows = list(csv.DictReader(io.StringIO(render_history(results, ReportFormat.CSV))))
        self.assertEqual([row["eval_year"] for row in rows], ["2019", "2020", "2021", "2022"])
        self.assertEqual(rows[0]["IS"], "--")
        self.assertEqual(rows[0]["flags"], "unreleased")
        self.assertEqual(rows[2]["IS"], "0.96")
        self.assertEqual(rows[3]["IS"], "0.94")

    def test_timeline(self):
        text = render_timeline(build_publication_timeline(self.snapshot), ReportFormat.CSV)
        self.assertEqual(
            text,
            "year,datasets,citations,cumulative_datasets,cumulative_citations\n"
            "2020,2,1,2,1\n2021,2,2,4,3\n2022,1,2,5,5\n",
        )

    def test_features_csv_leaves_absent_cells_empty(self):
        vectors = feature_table(self.snapshot, [2022], ["D5"])
        rows = list(csv.reader(io.StringIO(render_features(vectors, ReportFormat.CSV))))
        record = dict(zip(rows[0], rows[1]))
        self.assertEqual(record["n_frames"], "300")
        self.assertEqual(record["n_cit3"], "")
        self.assertEqual(record["dataset_id"], "D5")

    def test_histogram(self):
        _, results = score_year(self.snapshot, 2022)
        text = render_histogram(is_histogram(results.values(), 5), ReportFormat.CSV)
        lines = text.splitlines()
        self.assertEqual(lines[0], "bin_low,bin_high,count")
        self.assertEqual(lines[1], "0.00,0.20,0")
        self.assertEqual(lines[-1], "unscored,,0")
        self.assertEqual(len(lines), 7)

    def test_regression(self):
        result = run_paper_regression(planted_regression_rows(np.random.default_rng(1)))
        markdown = render_regression(result, ReportFormat.MARKDOWN)
        for name in ("aas_3m^2", "breusch_pagan", "white", "HC1", "population"):
            self.assertIn(name, markdown)
        document = json.loads(render_regression(result, ReportFormat.JSON))
        self.assertEqual([c["term"] for c in document["coefficients"]], list(result.names))
        self.assertEqual(document["provenance"]["complete_cases"], "300")
        self.assertIn("statistic", document["diagnostics"]["white"])
        rows = list(csv.reader(io.StringIO(render_regression(result, ReportFormat.CSV).split("\n\n")[1])))
        self.assertEqual(rows[0], ["term", "coef", "se", "z", "p", "ci_low", "ci_high"])

    def test_clusters(self):
        model = ClusterModel(
            k=2,
            centroids=np.array([[0.0, 1.0], [4.0, 5.0]]),
            assignments={"P2": 1, "P1": 0},
            inertia=1.0,
            per_k_inertia={1: 9.5, 2: 1.0},
        )
        self.assertEqual(
            render_assignments(model, ReportFormat.CSV), "paper_id,cluster\nP1,0\nP2,1\n"
        )
        summaries = [ClusterSummary(0, 1, (0.0, 1.0)), ClusterSummary(1, 1, (4.0, 5.5))]
        self.assertEqual(
            render_cluster_means(summaries, (0, 1), ReportFormat.CSV),
            "cluster,size,t+0,t+1\n0,1,0.00,1.00\n1,1,4.00,5.50\n",
        )
        self.assertEqual(render_elbow(model.per_k_inertia, ReportFormat.CSV), "k,inertia\n1,9.50\n2,1.00\n")


class TestCharts(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.snapshot = load_snapshot(fixture("golden_snapshot.jsonl"))

    def test_svg_is_stable(self):
        timeline = build_publication_timeline(self.snapshot)
        first = plots.timeline_svg(timeline)
        self.assertTrue(first.lstrip().startswith("<?xml"))
        self.assertIn("<svg", first)
        self.assertNotIn("<dc:date>", first)
        self.assertEqual(first, plots.timeline_svg(timeline))

    def test_charts_render(self):
        results = score_history("D1", self.snapshot, range(2019, 2023))
        self.assertIn("<svg", plots.history_svg("AlphaDrive", results))
        _, scores = score_year(self.snapshot, 2022)
        self.assertIn("<svg", plots.histogram_svg(is_histogram(scores.values())))
        summaries = [ClusterSummary(0, 3, (1.0, 2.0, 3.0, 4.0)), ClusterSummary(1, 1, (0.0, 0.0, 1.0, 1.0))]
        self.assertIn("<svg", plots.clusters_svg(summaries, (-1, 0, 1, 2)))
        self.assertIn("<svg", plots.elbow_svg({1: 10.0, 2: 3.0, 3: 2.5}))
