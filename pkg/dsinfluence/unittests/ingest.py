import tempfile
import unittest
from datetime import datetime, timezone
from pathlib import Path

from dsinfluence.cache import ResponseCache
from dsinfluence.corpus import dumps_snapshot
from dsinfluence.errors import AuthenticationError
from dsinfluence.ingest import (
    FetchPlan,
    PaperTarget,
    SourceSettings,
    build_clients,
    fetch_altmetric,
    fetch_paper_graph,
    ingest_all,
)
from dsinfluence.models import DatasetEntry
from dsinfluence.unittests.mocks import (
    ALTMETRIC_HOST,
    SCHOLAR_HOST,
    FakeClock,
    UniverseAdapter,
    fixture,
    mock_session,
    read_fixture,
)

CREATED = datetime(2023, 1, 4, tzinfo=timezone.utc)
RATE = 5.0


def make_plan(workers: int = 4, offline: bool = False, **options) -> FetchPlan:
    return FetchPlan(
        semantic_scholar=SourceSettings(f"http://{SCHOLAR_HOST}", rate=RATE, workers=workers),
        altmetric=SourceSettings(f"http://{ALTMETRIC_HOST}", rate=RATE, workers=workers),
        offline=offline,
        **options,
    )


class IngestCase(unittest.TestCase):
    def setUp(self):
        self.clock = FakeClock()
        self.golden = read_fixture("golden_snapshot.jsonl")
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def ingest(self, adapter, plan=None, cache=None):
        return ingest_all(
            fixture("ad_datasets.json"),
            plan or make_plan(),
            session=mock_session(adapter),
            cache=cache,
            created_at=CREATED,
            clock=self.clock,
            sleep=self.clock.sleep,
        )

    def cache(self, name: str = "cache.sqlite") -> ResponseCache:
        return ResponseCache(str(Path(self.tmp.name) / name))


class TestIngest(IngestCase):
    def test_golden_snapshot(self):
        result = self.ingest(UniverseAdapter(clock=self.clock))
        self.assertEqual(dumps_snapshot(result.snapshot), self.golden)
        self.assertEqual(result.failed_sources, ())
        self.assertEqual(
            result.counts,
            {"datasets": 5, "papers": 8, "authors": 3, "citations": 15, "altmetric": 2},
        )
        self.assertEqual(result.snapshot.validate(), [])

    def test_throttling_does_not_change_the_snapshot(self):
        adapter = UniverseAdapter(throttle_first=3, clock=self.clock)
        result = self.ingest(adapter)
        self.assertEqual(dumps_snapshot(result.snapshot), self.golden)
        self.assertGreater(len(self.clock.sleeps), 0)

    def test_rate_never_exceeded(self):
        adapter = UniverseAdapter(throttle_first=2, clock=self.clock)
        self.ingest(adapter, make_plan(workers=1))
        for host in (SCHOLAR_HOST, ALTMETRIC_HOST):
            stamps = [entry[3] for entry in adapter.requests_to(host)]
            self.assertGreater(len(stamps), 1)
            for earlier, later in zip(stamps, stamps[1:]):
                self.assertGreaterEqual(later - earlier, 1 / RATE - 1e-6)

    def test_altmetric_unavailable(self):
        adapter = UniverseAdapter(down=(ALTMETRIC_HOST,), clock=self.clock)
        result = self.ingest(adapter)
        snapshot = result.snapshot
        self.assertTrue(snapshot.partial)
        self.assertEqual(result.failed_sources, ("altmetric",))
        self.assertEqual(len(snapshot.altmetrics), 0)
        self.assertEqual(len(snapshot.papers), 8)
        self.assertEqual(snapshot.source_versions["altmetric"], "http://altmetric.mock unavailable")

    def test_graph_unavailable(self):
        adapter = UniverseAdapter(down=(SCHOLAR_HOST,), clock=self.clock)
        result = self.ingest(adapter)
        self.assertIn("semantic_scholar", result.failed_sources)
        self.assertTrue(result.snapshot.partial)
        self.assertEqual(len(result.snapshot.papers), 0)
        self.assertIn("resume=", result.snapshot.source_versions["semantic_scholar"])

    def test_unreadable_paper_is_skipped(self):
        adapter = UniverseAdapter(anonymous=("PB",), clock=self.clock)
        result = self.ingest(adapter)
        snapshot = result.snapshot
        self.assertTrue(snapshot.partial)
        self.assertEqual(result.failed_sources, ())
        self.assertIn(("DOI:10.1000/beta", "malformed"), [(m.key, m.reason) for m in result.misses])
        self.assertIn("failed=DOI:10.1000/beta", snapshot.source_versions["semantic_scholar"])
        self.assertIsNone(snapshot.dataset("D2").paper_id)
        self.assertEqual(snapshot.dataset("D1").paper_id, "PA")

    def test_invalid_json_stops_the_source(self):
        adapter = UniverseAdapter(garble_first=1, clock=self.clock)
        result = self.ingest(adapter, make_plan(workers=1))
        self.assertTrue(result.snapshot.partial)
        self.assertIn("resume=", result.snapshot.source_versions["semantic_scholar"])

    def test_rejected_credentials(self):
        adapter = UniverseAdapter(auth_fail=(SCHOLAR_HOST,), clock=self.clock)
        with self.assertRaises(AuthenticationError):
            self.ingest(adapter)

    def test_offline_replays_cache(self):
        cache = self.cache()
        self.ingest(UniverseAdapter(clock=self.clock), cache=cache)
        replay = UniverseAdapter(clock=self.clock)
        result = self.ingest(replay, make_plan(offline=True), cache)
        cache.close()
        self.assertEqual(dumps_snapshot(result.snapshot), self.golden)
        self.assertEqual(replay.log, [])

    def test_offline_cold_cache(self):
        cache = self.cache()
        replay = UniverseAdapter(clock=self.clock)
        result = self.ingest(replay, make_plan(offline=True), cache)
        cache.close()
        self.assertIn("semantic_scholar", result.failed_sources)
        self.assertEqual(replay.log, [])


class TestFetchers(IngestCase):
    def test_resolution_and_misses(self):
        adapter = UniverseAdapter(clock=self.clock)
        graph, _ = build_clients(make_plan(), mock_session(adapter), None, self.clock, self.clock.sleep)
        targets = [
            PaperTarget.of(DatasetEntry("A", "a", doi="10.1000/alpha")),
            PaperTarget.of(DatasetEntry("B", "b", doi="10.9999/none", arxiv_id="2102.00003")),
            PaperTarget.of(DatasetEntry("C", "c", doi="10.9999/lost")),
        ]
        delta = fetch_paper_graph(targets, make_plan(), graph)
        self.assertEqual(
            delta.resolved,
            {"DOI:10.1000/alpha": "PA", "DOI:10.9999/none": "PG"},
        )
        self.assertEqual([m.key for m in delta.misses], ["DOI:10.9999/lost"])
        self.assertFalse(delta.partial)

    def test_depth_flags(self):
        adapter = UniverseAdapter(clock=self.clock)
        plan = make_plan(fetch_references=False, fetch_author_papers=False)
        graph, _ = build_clients(plan, mock_session(adapter), None, self.clock, self.clock.sleep)
        delta = fetch_paper_graph([PaperTarget(doi="10.1000/alpha")], plan, graph)
        papers = delta.builder.papers
        self.assertIsNone(papers["PA"].reference_ids)
        self.assertNotIn("R1", papers)
        self.assertIsNone(delta.builder.authors["a1"].paper_ids)
        paths = {entry[1] for entry in adapter.log}
        self.assertFalse(any(path.startswith("author/") for path in paths))

    def capped_graph(self, edge_cap: int, page_size: int):
        adapter = UniverseAdapter(page_size=page_size, clock=self.clock)
        plan = make_plan(edge_cap=edge_cap)
        graph, _ = build_clients(plan, mock_session(adapter), None, self.clock, self.clock.sleep)
        delta = fetch_paper_graph([PaperTarget(doi="10.1000/alpha")], plan, graph)
        cited_r1 = [e for e in delta.builder.citations.values() if e.cited_paper_id == "R1"]
        return delta, cited_r1

    def test_edge_cap(self):
        delta, cited_r1 = self.capped_graph(edge_cap=2, page_size=2)
        self.assertIn("citations:R1", delta.truncated)
        self.assertEqual(len(cited_r1), 2)

    def test_edge_cap_within_one_page(self):
        delta, cited_r1 = self.capped_graph(edge_cap=2, page_size=10)
        self.assertIn("citations:R1", delta.truncated)
        self.assertEqual(len(cited_r1), 2)

    def test_edge_cap_on_the_last_page(self):
        delta, cited_r1 = self.capped_graph(edge_cap=4, page_size=3)
        self.assertIn("citations:R1", delta.truncated)
        self.assertEqual(len(cited_r1), 4)

    def test_edge_cap_reached_exactly(self):
        delta, cited_r1 = self.capped_graph(edge_cap=5, page_size=3)
        self.assertNotIn("citations:R1", delta.truncated)
        self.assertEqual(len(cited_r1), 5)

    def test_altmetric_misses(self):
        adapter = UniverseAdapter(clock=self.clock)
        _, altmetric = build_clients(make_plan(), mock_session(adapter), None, self.clock, self.clock.sleep)
        delta = fetch_altmetric(["10.1000/alpha", "not-a-doi", "10.1000/gamma"], make_plan(), altmetric)
        self.assertEqual(sorted(delta.records), ["10.1000/alpha"])
        record = delta.records["10.1000/alpha"]
        self.assertEqual((record.aas_curr, record.n_readers, record.aas_3m), (12.5, 120, 85.0))
        self.assertEqual(
            sorted((m.key, m.reason) for m in delta.misses),
            [("10.1000/gamma", "not-tracked"), ("not-a-doi", "invalid-doi")],
        )
