import itertools
import unittest
from datetime import datetime, timezone

from dsinfluence.errors import UnknownEntityError
from dsinfluence.models import (
    AltmetricRecord,
    AuthorRecord,
    CitationEdge,
    DatasetEntry,
    PaperRecord,
    SnapshotBuilder,
)

CREATED = datetime(2023, 1, 4, tzinfo=timezone.utc)


class TestEntityValidation(unittest.TestCase):
    def test_dataset_counts(self):
        with self.assertRaises(ValueError):
            DatasetEntry("D1", "x", n_frames=-1)
        with self.assertRaises(ValueError):
            DatasetEntry("D1", "x", n_sensors=0)
        self.assertFalse(DatasetEntry("D1", "x").ingestible)
        self.assertTrue(DatasetEntry("D1", "x", arxiv_id="2001.00001").ingestible)

    def test_duplicate_ids(self):
        with self.assertRaises(ValueError):
            PaperRecord("P", author_ids=("a", "a"))
        with self.assertRaises(ValueError):
            AuthorRecord("a", paper_ids=("P", "P"))

    def test_self_citation_must_be_flagged(self):
        with self.assertRaises(ValueError):
            CitationEdge("P", "P", 2020)
        self.assertTrue(CitationEdge("P", "P", 2020, self_citation=True).self_citation)

    def test_altmetric(self):
        with self.assertRaises(ValueError):
            AltmetricRecord("P", 1.0, 5, {"mendeley": 4})
        with self.assertRaises(ValueError):
            AltmetricRecord.from_readers("P", 1.0, {}, aas_3m=101)
        record = AltmetricRecord.from_readers("P", 2, {"mendeley": "7", "citeulike": 3})
        self.assertEqual(record.n_readers, 10)
        self.assertEqual(record.aas_curr, 2.0)


class TestMerge(unittest.TestCase):
    def test_paper_merge_commutes(self):
        views = [
            PaperRecord("P", title="Short", publication_year=2021),
            PaperRecord("P", title="Longer title", publication_year=2020, author_ids=("a1",)),
            PaperRecord("P", reference_ids=("R1",), external_ids={"DOI": "10.1/x"}),
            PaperRecord("P", reference_ids=("R2",), citations_fetched=True),
        ]
        results = set()
        for order in itertools.permutations(views):
            merged = order[0]
            for view in order[1:]:
                merged = merged.merge(view)
            results.add(
                (
                    merged.title,
                    merged.publication_year,
                    merged.author_ids,
                    merged.reference_ids,
                    tuple(sorted(merged.external_ids.items())),
                    merged.citations_fetched,
                )
            )
        self.assertEqual(len(results), 1)
        title, year, authors, references, external, fetched = results.pop()
        self.assertEqual(year, 2020)
        self.assertEqual(authors, ("a1",))
        self.assertEqual(references, ("R1", "R2"))
        self.assertEqual(external, (("DOI", "10.1/x"),))
        self.assertTrue(fetched)

    def test_unfetched_references_stay_none(self):
        merged = PaperRecord("P").merge(PaperRecord("P", title="T"))
        self.assertIsNone(merged.reference_ids)
        merged = PaperRecord("P").merge(PaperRecord("P", reference_ids=()))
        self.assertEqual(merged.reference_ids, ())

    def test_different_papers(self):
        with self.assertRaises(ValueError):
            PaperRecord("P").merge(PaperRecord("Q"))

    def test_builder_order_independent(self):
        entities = [
            DatasetEntry("D1", "One", doi="10.1/x", paper_id="P"),
            PaperRecord("P", title="T", publication_year=2020, author_ids=("a",)),
            AuthorRecord("a", name="A", paper_ids=("P",)),
            CitationEdge("Q", "P", 2022),
            CitationEdge("Q", "P", 2021),
            PaperRecord("Q", publication_year=2021),
        ]
        built = []
        for order in (entities, list(reversed(entities))):
            builder = SnapshotBuilder()
            builder.add_all(order)
            built.append([e.serialize() for e in builder.build(CREATED).entities()])
        self.assertEqual(built[0], built[1])
        edges = [record for record in built[0] if record["kind"] == "citation"]
        self.assertEqual(len(edges), 1)
        self.assertEqual(edges[0]["citing_year"], 2021)


class TestSnapshot(unittest.TestCase):
    def setUp(self):
        builder = SnapshotBuilder()
        builder.add_all(
            [
                DatasetEntry("D1", "One", doi="10.1/x", paper_id="P", publication_year=2019),
                DatasetEntry("D2", "Two", publication_year=2018),
                PaperRecord("P", publication_year=2020, author_ids=("a",), reference_ids=("R",)),
                CitationEdge("Q", "P", 2021),
                CitationEdge("P", "P", 2020, self_citation=True),
                CitationEdge("S", "P"),
            ]
        )
        self.snapshot = builder.build(CREATED)

    def test_lookups(self):
        self.assertEqual(self.snapshot.release_year(self.snapshot.dataset("D1")), 2020)
        self.assertEqual(self.snapshot.release_year(self.snapshot.dataset("D2")), 2018)
        with self.assertRaises(UnknownEntityError):
            self.snapshot.dataset("D9")
        with self.assertRaises(KeyError):
            self.snapshot.paper("missing")

    def test_citing_years(self):
        self.assertEqual(self.snapshot.citing_years("P"), (2020, 2021))
        self.assertEqual(self.snapshot.citing_years("P", include_self_citations=False), (2021,))
        self.assertEqual(self.snapshot.undated_citations, 1)
        self.assertEqual(self.snapshot.coverage_year(), 2021)

    def test_validate_is_pure(self):
        first = self.snapshot.validate()
        self.assertEqual(first, self.snapshot.validate())
        targets = {(d.kind, d.field, d.target) for d in first}
        self.assertEqual(
            targets,
            {
                ("paper", "author_ids", "a"),
                ("paper", "reference_ids", "R"),
            },
        )

    def test_empty(self):
        snapshot = SnapshotBuilder().build(CREATED)
        self.assertEqual(list(snapshot.entities()), [])
        self.assertIsNone(snapshot.coverage_year())
        self.assertEqual(snapshot.validate(), [])
