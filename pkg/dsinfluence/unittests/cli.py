import json
import socket
import sys
import tempfile
import unittest
from datetime import datetime, timezone
from pathlib import Path
from unittest import mock

import numpy as np
from loguru import logger
from typer.testing import CliRunner

from dsinfluence.cli import ExitCode, app
from dsinfluence.corpus import save_snapshot
from dsinfluence.models import Snapshot
from dsinfluence.synthetic import planted_snapshot
from dsinfluence.unittests.mocks import (
    ALTMETRIC_HOST,
    SCHOLAR_HOST,
    UniverseAdapter,
    fixture,
    mock_session,
    read_fixture,
)

GOLDEN = str(fixture("golden_snapshot.jsonl"))


def refuse_connection(*args, **kwargs):
    raise OSError("network access is disabled in tests")


class CliCase(unittest.TestCase):
    def setUp(self):
        self.runner = CliRunner()
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        patcher = mock.patch.object(socket.socket, "connect", refuse_connection)
        patcher.start()
        self.addCleanup(patcher.stop)

    def tearDown(self):
        self.tmp.cleanup()
        logger.remove()
        logger.add(sys.stderr, level="WARNING")

    def invoke(self, *args, snapshot: str = GOLDEN):
        return self.runner.invoke(app, ["--snapshot", snapshot, *args])

    def path(self, name: str) -> Path:
        return self.dir / name


class TestReports(CliCase):
    def test_rank_matches_golden_report(self):
        out = self.path("rank.csv")
        result = self.invoke("--format", "csv", "rank", "--out", str(out))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        self.assertEqual(out.read_text(encoding="utf-8"), read_fixture("golden_rank_2022.csv"))
        first = out.read_bytes()
        self.invoke("--format", "csv", "rank", "--out", str(out))
        self.assertEqual(out.read_bytes(), first)

    def test_rank_of_empty_snapshot(self):
        empty = self.path("empty.jsonl")
        save_snapshot(Snapshot.empty(datetime(2023, 1, 4, tzinfo=timezone.utc)), empty)
        out = self.path("rank.csv")
        result = self.invoke("--format", "csv", "rank", "--out", str(out), snapshot=str(empty))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        self.assertEqual(out.read_text().count("\n"), 1)
        self.assertTrue(out.read_text().startswith("rank,dataset_id,name,IS"))

    def test_rank_options(self):
        out = self.path("rank.json")
        result = self.invoke(
            "--format", "json", "--year", "2021", "rank", "--released", "2021", "--out", str(out)
        )
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        records = json.loads(out.read_text())
        self.assertEqual([r["dataset_id"] for r in records], ["D2", "D3"])
        bogus = self.invoke("rank", "--exclude-feature", "a_pub")
        self.assertEqual(bogus.exit_code, ExitCode.USAGE)
        late = self.invoke("--year", "2030", "rank")
        self.assertEqual(late.exit_code, ExitCode.USAGE)

    def test_history(self):
        out, svg = self.path("history.csv"), self.path("history.svg")
        result = self.invoke(
            "--format", "csv", "history", "D1", "--first-year", "2019", "--out", str(out), "--svg", str(svg)
        )
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        lines = out.read_text().splitlines()
        self.assertEqual(len(lines), 1 + 4)
        self.assertTrue(lines[1].startswith("2019,--"))
        self.assertIn("<svg", svg.read_text())

    def test_history_of_unknown_dataset(self):
        result = self.invoke("history", "D9")
        self.assertEqual(result.exit_code, ExitCode.DATA)

    def test_timeline(self):
        out, svg = self.path("timeline.csv"), self.path("timeline.svg")
        result = self.invoke("--format", "csv", "timeline", "--out", str(out), "--svg", str(svg))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        self.assertEqual(out.read_text().splitlines()[-1], "2022,1,2,5,5")
        self.assertTrue(svg.exists())

    def test_features(self):
        out = self.path("features.json")
        result = self.invoke("--format", "json", "features", "--first-year", "2021", "--out", str(out))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        records = json.loads(out.read_text())
        self.assertEqual(len(records), 10)
        self.assertEqual(records[1]["n_cit3"], 3)

    def test_distribution(self):
        out, svg = self.path("is.csv"), self.path("is.svg")
        result = self.invoke("--format", "csv", "distribution", "--bins", "5", "--out", str(out), "--svg", str(svg))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        self.assertEqual(out.read_text().splitlines()[-2], "0.80,1.00,2")
        self.assertTrue(svg.exists())

    def test_missing_snapshot(self):
        result = self.invoke("rank", snapshot=str(self.path("missing.jsonl")))
        self.assertEqual(result.exit_code, ExitCode.DATA)


class TestModels(CliCase):
    def test_regression_needs_more_datasets(self):
        self.assertEqual(self.invoke("regress").exit_code, ExitCode.DATA)
        self.assertEqual(self.invoke("regress", "--variant", "nope").exit_code, ExitCode.USAGE)

    def test_regression_report(self):
        snapshot = self.path("planted.jsonl")
        save_snapshot(planted_snapshot(np.random.default_rng(5), n=80), snapshot)
        out = self.path("regression.md")
        result = self.invoke("regress", "--covariance", "HC3", "--out", str(out), snapshot=str(snapshot))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        report = out.read_text()
        self.assertIn("aas_3m^2", report)
        self.assertIn("HC3", report)

    def test_cluster_needs_more_trajectories(self):
        self.assertEqual(self.invoke("cluster").exit_code, ExitCode.DATA)

    def test_cluster_files(self):
        snapshot = self.path("planted.jsonl")
        save_snapshot(planted_snapshot(np.random.default_rng(6), n=60), snapshot)
        out_dir = self.path("clusters")
        result = self.invoke(
            "--format", "csv", "--seed", "3", "cluster", "--k", "3", "--k-max", "5",
            "--out-dir", str(out_dir), snapshot=str(snapshot),
        )
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        names = sorted(p.name for p in out_dir.iterdir())
        self.assertEqual(
            names, ["assignments.csv", "clusters.svg", "elbow.csv", "elbow.svg", "means.csv"]
        )
        self.assertEqual(len(out_dir.joinpath("elbow.csv").read_text().splitlines()), 1 + 5)
        first = out_dir.joinpath("assignments.csv").read_bytes()
        self.invoke(
            "--format", "csv", "--seed", "3", "cluster", "--k", "3", "--k-max", "5",
            "--out-dir", str(out_dir), snapshot=str(snapshot),
        )
        self.assertEqual(out_dir.joinpath("assignments.csv").read_bytes(), first)


class TestIngest(CliCase):
    def ingest(self, snapshot: Path, adapter: UniverseAdapter, *options):
        with mock.patch("dsinfluence.cli.make_session", return_value=mock_session(adapter)):
            return self.invoke(
                *options,
                "ingest",
                "--source", str(fixture("ad_datasets.json")),
                "--ss-base-url", f"http://{SCHOLAR_HOST}",
                "--altmetric-base-url", f"http://{ALTMETRIC_HOST}",
                "--rate", "1000",
                "--created-at", "2023-01-04T00:00:00",
                snapshot=str(snapshot),
            )

    def test_golden_snapshot(self):
        out = self.path("snapshot.jsonl")
        result = self.ingest(out, UniverseAdapter())
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        self.assertEqual(out.read_text(encoding="utf-8"), read_fixture("golden_snapshot.jsonl"))

    def test_offline_without_cache(self):
        out = self.path("snapshot.jsonl")
        adapter = UniverseAdapter()
        result = self.ingest(out, adapter, "--offline")
        self.assertEqual(result.exit_code, ExitCode.SOURCE)
        self.assertFalse(out.exists())
        self.assertEqual(adapter.log, [])

    def test_offline_with_warm_cache(self):
        out, cache = self.path("snapshot.jsonl"), self.path("cache.sqlite")
        self.assertEqual(self.ingest(out, UniverseAdapter(), "--cache", str(cache)).exit_code, 0)
        out.unlink()
        replay = UniverseAdapter()
        result = self.ingest(out, replay, "--offline", "--cache", str(cache))
        self.assertEqual(result.exit_code, ExitCode.OK, result.output)
        self.assertEqual(replay.log, [])
        self.assertEqual(out.read_text(encoding="utf-8"), read_fixture("golden_snapshot.jsonl"))

    def test_rejected_credentials(self):
        out = self.path("snapshot.jsonl")
        result = self.ingest(out, UniverseAdapter(auth_fail=(SCHOLAR_HOST,)))
        self.assertEqual(result.exit_code, ExitCode.SOURCE)
        self.assertFalse(out.exists())
