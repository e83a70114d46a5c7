# -*- coding: utf-8 -*-
"""
Entities of the corpus snapshot and the builder that assembles them.

Entities are immutable. A Snapshot is produced once by a SnapshotBuilder and
every analysis reads it without mutating it.
"""
import dataclasses
import threading
from dataclasses import dataclass, field
from datetime import datetime
from functools import cached_property
from types import MappingProxyType
from typing import (
    ClassVar,
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Tuple,
)

from dsinfluence.errors import UnknownEntityError


def _unique(values: Iterable[str], name: str) -> Tuple[str, ...]:
    values = tuple(values)
    if len(set(values)) != len(values):
        raise ValueError(f"{name} contains duplicates")
    return values


def _merge_ids(
    left: Optional[Tuple[str, ...]], right: Optional[Tuple[str, ...]]
) -> Optional[Tuple[str, ...]]:
    if left is None or not left:
        return right if right is not None else left
    if right is None or not right or left == right:
        return left
    return tuple(sorted(set(left) | set(right)))


def _merge_external(left: Mapping[str, str], right: Mapping[str, str]) -> Dict[str, str]:
    merged = dict(left)
    for name, value in right.items():
        merged[name] = max(merged.get(name, value), value)
    return merged


class Entity:
    """Mixin for the serialization shared by all snapshot entities"""

    kind: ClassVar[str] = ""
    _sequences: ClassVar[Tuple[str, ...]] = ()

    def serialize(self) -> dict:
        record = {"kind": self.kind}
        for field_ in dataclasses.fields(self):
            value = getattr(self, field_.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, Mapping):
                value = dict(value)
            record[field_.name] = value
        return record

    @classmethod
    def from_record(cls, record: dict):
        record = {key: value for key, value in record.items() if key != "kind"}
        for name in cls._sequences:
            if record.get(name) is not None:
                record[name] = tuple(record[name])
        return cls(**record)


@dataclass(frozen=True)
class DatasetEntry(Entity):
    """A dataset as listed by the curated catalogue."""

    dataset_id: str
    name: str
    doi: Optional[str] = None
    arxiv_id: Optional[str] = None
    n_frames: Optional[int] = None
    n_sensors: Optional[int] = None
    publication_year: Optional[int] = None
    paper_id: Optional[str] = None

    kind: ClassVar[str] = "dataset"

    def __post_init__(self):
        if self.n_frames is not None and self.n_frames < 0:
            raise ValueError(f"{self.dataset_id}: n_frames must be >= 0")
        if self.n_sensors is not None and self.n_sensors < 1:
            raise ValueError(f"{self.dataset_id}: n_sensors must be >= 1")

    @property
    def key(self) -> str:
        return self.dataset_id

    @property
    def ingestible(self) -> bool:
        return bool(self.doi or self.arxiv_id)


@dataclass(frozen=True)
class PaperRecord(Entity):
    """
    A paper of the academic graph.

    reference_ids is None while the references were never fetched,
    an empty tuple means the paper has no references.
    """

    paper_id: str
    title: str = ""
    publication_year: Optional[int] = None
    author_ids: Tuple[str, ...] = ()
    reference_ids: Optional[Tuple[str, ...]] = None
    external_ids: Mapping[str, str] = field(default_factory=dict)
    citations_fetched: bool = False

    kind: ClassVar[str] = "paper"
    _sequences: ClassVar[Tuple[str, ...]] = ("author_ids", "reference_ids")

    def __post_init__(self):
        object.__setattr__(
            self, "author_ids", _unique(self.author_ids, f"{self.paper_id}.author_ids")
        )
        if self.reference_ids is not None:
            object.__setattr__(
                self,
                "reference_ids",
                _unique(self.reference_ids, f"{self.paper_id}.reference_ids"),
            )

    @property
    def key(self) -> str:
        return self.paper_id

    def merge(self, other: "PaperRecord") -> "PaperRecord":
        """Combine two partial views of the same paper. Commutative."""
        if other.paper_id != self.paper_id:
            raise ValueError("cannot merge different papers")
        titles = sorted(t for t in (self.title, other.title) if t)
        years = sorted(
            y for y in (self.publication_year, other.publication_year) if y is not None
        )
        return PaperRecord(
            paper_id=self.paper_id,
            title=titles[-1] if titles else "",
            publication_year=years[0] if years else None,
            author_ids=_merge_ids(self.author_ids, other.author_ids) or (),
            reference_ids=_merge_ids(self.reference_ids, other.reference_ids),
            external_ids=_merge_external(self.external_ids, other.external_ids),
            citations_fetched=self.citations_fetched or other.citations_fetched,
        )


@dataclass(frozen=True)
class AuthorRecord(Entity):
    """paper_ids is None while the publication list was never fetched"""

    author_id: str
    name: str = ""
    paper_ids: Optional[Tuple[str, ...]] = None

    kind: ClassVar[str] = "author"
    _sequences: ClassVar[Tuple[str, ...]] = ("paper_ids",)

    def __post_init__(self):
        if self.paper_ids is not None:
            object.__setattr__(
                self, "paper_ids", _unique(self.paper_ids, f"{self.author_id}.paper_ids")
            )

    @property
    def key(self) -> str:
        return self.author_id

    def merge(self, other: "AuthorRecord") -> "AuthorRecord":
        names = sorted(n for n in (self.name, other.name) if n)
        return AuthorRecord(
            author_id=self.author_id,
            name=names[-1] if names else "",
            paper_ids=_merge_ids(self.paper_ids, other.paper_ids),
        )


@dataclass(frozen=True)
class CitationEdge(Entity):
    citing_paper_id: str
    cited_paper_id: str
    citing_year: Optional[int] = None
    self_citation: bool = False

    kind: ClassVar[str] = "citation"

    def __post_init__(self):
        if self.citing_paper_id == self.cited_paper_id and not self.self_citation:
            raise ValueError(
                f"edge {self.citing_paper_id} -> itself must be flagged self_citation"
            )

    @property
    def key(self) -> Tuple[str, str]:
        return self.cited_paper_id, self.citing_paper_id

    def merge(self, other: "CitationEdge") -> "CitationEdge":
        years = sorted(y for y in (self.citing_year, other.citing_year) if y is not None)
        return dataclasses.replace(
            self,
            citing_year=years[0] if years else None,
            self_citation=self.self_citation or other.self_citation,
        )


@dataclass(frozen=True)
class AltmetricRecord(Entity):
    """
    Attention data of one paper. paper_key is the linked paper id, or
    ``doi:<doi>`` while the paper is unresolved.
    """

    paper_key: str
    aas_curr: float
    n_readers: int
    readers_by_service: Mapping[str, int] = field(default_factory=dict)
    aas_3m: Optional[float] = None

    kind: ClassVar[str] = "altmetric"

    def __post_init__(self):
        object.__setattr__(self, "aas_curr", float(self.aas_curr))
        if self.aas_3m is not None:
            object.__setattr__(self, "aas_3m", float(self.aas_3m))
            if not 0 <= self.aas_3m <= 100:
                raise ValueError(f"{self.paper_key}: aas_3m must lie in [0, 100]")
        if self.n_readers != sum(self.readers_by_service.values()):
            raise ValueError(
                f"{self.paper_key}: n_readers does not match readers_by_service"
            )

    @classmethod
    def from_readers(
        cls,
        paper_key: str,
        aas_curr: float,
        readers_by_service: Mapping[str, int],
        aas_3m: Optional[float] = None,
    ) -> "AltmetricRecord":
        readers = {service: int(count) for service, count in readers_by_service.items()}
        return cls(
            paper_key=paper_key,
            aas_curr=aas_curr,
            n_readers=sum(readers.values()),
            readers_by_service=readers,
            aas_3m=aas_3m,
        )

    @property
    def key(self) -> str:
        return self.paper_key


ENTITY_TYPES = {
    cls.kind: cls
    for cls in (AltmetricRecord, AuthorRecord, CitationEdge, DatasetEntry, PaperRecord)
}


class DanglingReference(NamedTuple):
    kind: str
    key: str
    field: str
    target: str

    def __str__(self):
        return f"{self.kind} {self.key}: {self.field} -> {self.target}"


@dataclass(frozen=True)
class Snapshot:
    """Immutable corpus of datasets, papers, authors, citations and attention data."""

    created_at: datetime
    source_versions: Mapping[str, str]
    datasets: Mapping[str, DatasetEntry]
    papers: Mapping[str, PaperRecord]
    authors: Mapping[str, AuthorRecord]
    citations: Tuple[CitationEdge, ...]
    altmetrics: Mapping[str, AltmetricRecord]
    partial: bool = False

    @classmethod
    def empty(cls, created_at: datetime) -> "Snapshot":
        return SnapshotBuilder().build(created_at)

    def entities(self) -> Iterator[Entity]:
        """All entities in canonical order"""
        yield from (self.altmetrics[key] for key in sorted(self.altmetrics))
        yield from (self.authors[key] for key in sorted(self.authors))
        yield from self.citations
        yield from (self.datasets[key] for key in sorted(self.datasets))
        yield from (self.papers[key] for key in sorted(self.papers))

    def dataset(self, dataset_id: str) -> DatasetEntry:
        try:
            return self.datasets[dataset_id]
        except KeyError:
            raise UnknownEntityError("dataset", dataset_id) from None

    def paper(self, paper_id: str) -> PaperRecord:
        try:
            return self.papers[paper_id]
        except KeyError:
            raise UnknownEntityError("paper", paper_id) from None

    def dataset_paper(self, dataset: DatasetEntry) -> Optional[PaperRecord]:
        if dataset.paper_id is None:
            return None
        return self.papers.get(dataset.paper_id)

    def release_year(self, dataset: DatasetEntry) -> Optional[int]:
        """Publication year of the dataset paper, else the catalogue year"""
        paper = self.dataset_paper(dataset)
        if paper is not None and paper.publication_year is not None:
            return paper.publication_year
        return dataset.publication_year

    def altmetric_for(self, paper_id: str) -> Optional[AltmetricRecord]:
        return self.altmetrics.get(paper_id)

    @cached_property
    def _incoming(self) -> Mapping[str, Tuple[CitationEdge, ...]]:
        incoming: Dict[str, List[CitationEdge]] = {}
        for edge in self.citations:
            incoming.setdefault(edge.cited_paper_id, []).append(edge)
        return {key: tuple(edges) for key, edges in incoming.items()}

    @cached_property
    def _incoming_years(self) -> Mapping[Tuple[str, bool], Tuple[int, ...]]:
        years: Dict[Tuple[str, bool], List[int]] = {}
        for edge in self.citations:
            if edge.citing_year is None:
                continue
            years.setdefault((edge.cited_paper_id, True), []).append(edge.citing_year)
            if not edge.self_citation:
                years.setdefault((edge.cited_paper_id, False), []).append(
                    edge.citing_year
                )
        return {key: tuple(sorted(values)) for key, values in years.items()}

    def citations_to(self, paper_id: str) -> Tuple[CitationEdge, ...]:
        return self._incoming.get(paper_id, ())

    def citing_years(
        self, paper_id: str, include_self_citations: bool = True
    ) -> Tuple[int, ...]:
        """Sorted citing years of all dated edges into paper_id"""
        return self._incoming_years.get((paper_id, include_self_citations), ())

    def citing_papers(self, paper_id: str) -> Tuple[str, ...]:
        return tuple(
            sorted({edge.citing_paper_id for edge in self.citations_to(paper_id)})
        )

    @cached_property
    def undated_citations(self) -> int:
        return sum(1 for edge in self.citations if edge.citing_year is None)

    def coverage_year(self) -> Optional[int]:
        """Latest year with any publication or citation in the corpus"""
        return self._coverage

    @cached_property
    def _coverage(self) -> Optional[int]:
        years = [p.publication_year for p in self.papers.values()]
        years += [edge.citing_year for edge in self.citations]
        years = [year for year in years if year is not None]
        return max(years) if years else None

    def validate(self) -> List[DanglingReference]:
        """Cross references that do not resolve. Pure and idempotent."""
        dangling = []
        for dataset in self.datasets.values():
            if dataset.paper_id is not None and dataset.paper_id not in self.papers:
                dangling.append(
                    DanglingReference(
                        "dataset", dataset.dataset_id, "paper_id", dataset.paper_id
                    )
                )
        for paper in self.papers.values():
            for author_id in paper.author_ids:
                if author_id not in self.authors:
                    dangling.append(
                        DanglingReference("paper", paper.paper_id, "author_ids", author_id)
                    )
            for reference_id in paper.reference_ids or ():
                if reference_id not in self.papers:
                    dangling.append(
                        DanglingReference(
                            "paper", paper.paper_id, "reference_ids", reference_id
                        )
                    )
        for author in self.authors.values():
            for paper_id in author.paper_ids or ():
                if paper_id not in self.papers:
                    dangling.append(
                        DanglingReference("author", author.author_id, "paper_ids", paper_id)
                    )
        for edge in self.citations:
            if edge.cited_paper_id not in self.papers:
                dangling.append(
                    DanglingReference(
                        "citation",
                        f"{edge.citing_paper_id}->{edge.cited_paper_id}",
                        "cited_paper_id",
                        edge.cited_paper_id,
                    )
                )
        for record in self.altmetrics.values():
            if record.paper_key not in self.papers:
                dangling.append(
                    DanglingReference(
                        "altmetric", record.paper_key, "paper_key", record.paper_key
                    )
                )
        return sorted(dangling)


def upsert(store: dict, entity) -> object:
    """
    Inserts entity or merges it into the stored entity with the same key.
    Returns:
        the stored entity
    """
    current = store.get(entity.key)
    if current is not None and hasattr(current, "merge"):
        entity = current.merge(entity)
    store[entity.key] = entity
    return entity


class SnapshotBuilder:
    """
    Collects entities from any number of fetchers. Writes are serialized
    and merging is commutative, so the built snapshot does not depend on
    arrival order.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.datasets: Dict[str, DatasetEntry] = {}
        self.papers: Dict[str, PaperRecord] = {}
        self.authors: Dict[str, AuthorRecord] = {}
        self.citations: Dict[Tuple[str, str], CitationEdge] = {}
        self.altmetrics: Dict[str, AltmetricRecord] = {}
        self.source_versions: Dict[str, str] = {}
        self.partial = False

    def add(self, entity: Entity):
        stores = {
            "dataset": self.datasets,
            "paper": self.papers,
            "author": self.authors,
            "citation": self.citations,
            "altmetric": self.altmetrics,
        }
        with self._lock:
            upsert(stores[entity.kind], entity)

    def add_all(self, entities: Iterable[Entity]):
        for entity in entities:
            self.add(entity)

    def entities(self) -> Iterator[Entity]:
        for store in (
            self.datasets,
            self.papers,
            self.authors,
            self.citations,
            self.altmetrics,
        ):
            yield from store.values()

    def merge(self, other: "SnapshotBuilder"):
        self.add_all(list(other.entities()))
        with self._lock:
            self.partial = self.partial or other.partial
            self.source_versions.update(other.source_versions)

    def note_source(self, name: str, version: str):
        with self._lock:
            self.source_versions[name] = version

    def mark_partial(self):
        with self._lock:
            self.partial = True

    def __len__(self):
        return sum(1 for _ in self.entities())

    def build(self, created_at: datetime) -> Snapshot:
        with self._lock:
            return Snapshot(
                created_at=created_at,
                source_versions=MappingProxyType(dict(sorted(self.source_versions.items()))),
                datasets=MappingProxyType(dict(sorted(self.datasets.items()))),
                papers=MappingProxyType(dict(sorted(self.papers.items()))),
                authors=MappingProxyType(dict(sorted(self.authors.items()))),
                citations=tuple(self.citations[key] for key in sorted(self.citations)),
                altmetrics=MappingProxyType(dict(sorted(self.altmetrics.items()))),
                partial=self.partial,
            )
