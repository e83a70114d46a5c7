# -*- coding: utf-8 -*-
"""
Populates a Snapshot from the dataset catalogue, the academic graph and
Altmetric.

Every source has its own worker pool and token bucket. Workers write into
private builders which are merged in sorted key order, so the result only
depends on the responses, never on their arrival order.
"""
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import requests
from loguru import logger

from dsinfluence.cache import ResponseCache
from dsinfluence.errors import (
    AuthenticationError,
    DataError,
    NotFoundError,
    SourceError,
)
from dsinfluence.importer import FieldMapping, load_ad_datasets, source_name
from dsinfluence.models import (
    AltmetricRecord,
    AuthorRecord,
    CitationEdge,
    DatasetEntry,
    PaperRecord,
    Snapshot,
    SnapshotBuilder,
)
from dsinfluence.sources import (
    DOI_PATTERN,
    AltmetricClient,
    Page,
    PaperStub,
    SemanticScholarClient,
)
from dsinfluence.transport import RetryPolicy, SourceClient, TokenBucket

SOURCE_FAILURES = (SourceError, requests.RequestException)


@dataclass(frozen=True)
class SourceSettings:
    base_url: str
    api_key: Optional[str] = None
    rate: float = 1.0
    burst: float = 1.0
    workers: int = 4

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate limit must be > 0 requests per second")
        if self.workers < 1:
            raise ValueError("at least one worker is required")


@dataclass(frozen=True)
class PaperTarget:
    """A dataset paper to resolve. DOI lookups take precedence over arXiv."""

    doi: Optional[str] = None
    arxiv_id: Optional[str] = None

    @property
    def key(self) -> str:
        return f"DOI:{self.doi}" if self.doi else f"ARXIV:{self.arxiv_id}"

    def lookup_ids(self) -> List[str]:
        ids = []
        if self.doi:
            ids.append(f"DOI:{self.doi}")
        if self.arxiv_id:
            ids.append(f"ARXIV:{self.arxiv_id}")
        return ids

    @classmethod
    def of(cls, dataset: DatasetEntry) -> "PaperTarget":
        return cls(dataset.doi, dataset.arxiv_id)


@dataclass(frozen=True)
class FetchPlan:
    semantic_scholar: SourceSettings = SourceSettings(
        "https://api.semanticscholar.org/graph/v1", rate=1.0
    )
    altmetric: SourceSettings = SourceSettings("https://api.altmetric.com/v1", rate=1.0)
    retry: RetryPolicy = RetryPolicy()
    fetch_references: bool = True
    fetch_citations: bool = True
    fetch_author_papers: bool = True
    edge_cap: int = 10000
    offline: bool = False


@dataclass(frozen=True)
class Miss:
    source: str
    key: str
    reason: str


@dataclass
class GraphDelta:
    builder: SnapshotBuilder = field(default_factory=SnapshotBuilder)
    resolved: Dict[str, str] = field(default_factory=dict)
    misses: List[Miss] = field(default_factory=list)
    truncated: List[str] = field(default_factory=list)
    failed: List[str] = field(default_factory=list)
    resume: Tuple[str, ...] = ()

    @property
    def partial(self) -> bool:
        return bool(self.resume or self.failed)


@dataclass
class AltmetricDelta:
    records: Dict[str, AltmetricRecord] = field(default_factory=dict)
    misses: List[Miss] = field(default_factory=list)


@dataclass
class IngestResult:
    snapshot: Snapshot
    counts: Dict[str, int]
    misses: List[Miss]
    failed_sources: Tuple[str, ...] = ()


class _Stopped(Exception):
    pass


class GraphWalker:
    """Fetches the three nested lists around each dataset paper."""

    def __init__(self, client: SemanticScholarClient, plan: FetchPlan):
        self.client = client
        self.plan = plan
        self.stop = threading.Event()
        self._memo: Dict[Tuple[str, str], Page] = {}
        self._memo_lock = threading.Lock()
        self.truncated: List[str] = []

    def _page(self, kind: str, key: str) -> Page:
        if self.stop.is_set():
            raise _Stopped()
        with self._memo_lock:
            page = self._memo.get((kind, key))
        if page is None:
            page = getattr(self.client, kind)(key)
            with self._memo_lock:
                self._memo[(kind, key)] = page
                if page.truncated:
                    self.truncated.append(f"{kind}:{key}")
        return page

    def _cited_by(self, builder: SnapshotBuilder, paper: PaperStub):
        """Records paper with its citing papers and their years."""
        try:
            citers = self._page("citations", paper.paper_id)
        except NotFoundError:
            builder.add(PaperRecord(paper.paper_id, paper.title, paper.year))
            return None
        builder.add(
            PaperRecord(paper.paper_id, paper.title, paper.year, citations_fetched=True)
        )
        for citer in citers.items:
            builder.add(
                CitationEdge(
                    citing_paper_id=citer.paper_id,
                    cited_paper_id=paper.paper_id,
                    citing_year=citer.year,
                    self_citation=citer.paper_id == paper.paper_id,
                )
            )
        return citers.items

    def _resolve(self, target: PaperTarget):
        for lookup_id in target.lookup_ids():
            try:
                return self.client.paper(lookup_id)
            except NotFoundError:
                logger.info(f"{self.client.source}: {lookup_id} not found")
        return None

    def walk(self, target: PaperTarget) -> Tuple[SnapshotBuilder, Optional[str]]:
        builder = SnapshotBuilder()
        meta = self._resolve(target)
        if meta is None:
            return builder, None
        root = meta.paper
        plan = self.plan

        reference_ids = None
        if plan.fetch_references:
            try:
                references = self._page("references", root.paper_id)
                reference_ids = tuple(dict.fromkeys(r.paper_id for r in references.items))
                for reference in references.items:
                    self._cited_by(builder, reference)
            except NotFoundError:
                logger.info(f"{root.paper_id}: references unavailable")

        for author in meta.authors if plan.fetch_author_papers else ():
            try:
                publications = self._page("author_papers", author.author_id)
            except NotFoundError:
                builder.add(AuthorRecord(author.author_id, author.name))
                continue
            builder.add(
                AuthorRecord(
                    author.author_id,
                    author.name,
                    tuple(dict.fromkeys(p.paper_id for p in publications.items)),
                )
            )
            for publication in publications.items:
                self._cited_by(builder, publication)
        if not plan.fetch_author_papers:
            for author in meta.authors:
                builder.add(AuthorRecord(author.author_id, author.name))

        citations_fetched = False
        if plan.fetch_citations:
            citers = self._cited_by(builder, root)
            citations_fetched = citers is not None
            for citer in citers or ():
                self._cited_by(builder, citer)

        builder.add(
            PaperRecord(
                paper_id=root.paper_id,
                title=root.title,
                publication_year=root.year,
                author_ids=tuple(dict.fromkeys(a.author_id for a in meta.authors)),
                reference_ids=reference_ids,
                external_ids=meta.external_ids,
                citations_fetched=citations_fetched,
            )
        )
        return builder, root.paper_id


def fetch_paper_graph(
    ids: Sequence[PaperTarget], plan: FetchPlan, client: SemanticScholarClient
) -> GraphDelta:
    """Resolve dataset papers and fetch their references, authors and citers.

    Args:
        ids: the papers to resolve
        plan: depth flags and worker count
        client: academic-graph client
    Returns:
        the delta, with unresolved ids and unreadable payloads as misses.
        The latter mark the delta partial. If throttling outlasts the
        retry budget, the ids not yet fetched are returned as resume cursor.
    Raises:
        AuthenticationError: the source rejected the credentials
    """
    targets = sorted({target.key: target for target in ids}.items())
    delta = GraphDelta()
    if not targets:
        return delta
    walker = GraphWalker(client, plan)

    def work(target: PaperTarget):
        if walker.stop.is_set():
            return None, None, "stopped"
        try:
            builder, paper_id = walker.walk(target)
            return builder, paper_id, None
        except AuthenticationError:
            walker.stop.set()
            raise
        except _Stopped:
            return None, None, "stopped"
        except DataError as err:
            logger.warning(f"{client.source}: skipping {target.key}: {err}")
            return None, None, "malformed"
        except SOURCE_FAILURES as err:
            walker.stop.set()
            logger.warning(f"{client.source}: stopping at {target.key}: {err}")
            return None, None, "stopped"

    workers = plan.semantic_scholar.workers
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(work, [target for _, target in targets]))

    resume = []
    for (key, _), (builder, paper_id, failure) in zip(targets, outcomes):
        if failure == "malformed":
            delta.misses.append(Miss(client.source, key, failure))
            delta.failed.append(key)
        elif failure:
            resume.append(key)
        elif paper_id is None:
            delta.misses.append(Miss(client.source, key, "not-found"))
        else:
            delta.resolved[key] = paper_id
            delta.builder.merge(builder)
    delta.resume = tuple(resume)
    delta.truncated = sorted(walker.truncated)
    logger.info(
        f"{client.source}: resolved {len(delta.resolved)} of {len(targets)} papers, "
        f"{len(delta.builder.citations)} citation edges"
    )
    return delta


def fetch_altmetric(
    dois: Iterable[str], plan: FetchPlan, client: AltmetricClient
) -> AltmetricDelta:
    """
    One AltmetricRecord per tracked DOI, keyed ``doi:<doi>`` until linked to
    a paper. Untracked and malformed DOIs are listed as misses.
    """
    delta = AltmetricDelta()
    dois = sorted(set(dois))
    valid = []
    for doi in dois:
        if DOI_PATTERN.match(doi):
            valid.append(doi)
        else:
            delta.misses.append(Miss(client.source, doi, "invalid-doi"))
    if not valid:
        return delta

    def work(doi: str):
        try:
            return client.fetch(doi)
        except NotFoundError:
            return None

    with ThreadPoolExecutor(max_workers=plan.altmetric.workers) as pool:
        payloads = list(pool.map(work, valid))
    for doi, payload in zip(valid, payloads):
        if payload is None:
            delta.misses.append(Miss(client.source, doi, "not-tracked"))
            continue
        delta.records[doi] = AltmetricRecord.from_readers(
            f"doi:{doi}", payload.score, payload.readers, payload.aas_3m
        )
    logger.info(
        f"{client.source}: {len(delta.records)} records, {len(delta.misses)} misses"
    )
    return delta


def build_clients(
    plan: FetchPlan,
    session: Optional[requests.Session] = None,
    cache: Optional[ResponseCache] = None,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
) -> Tuple[SemanticScholarClient, AltmetricClient]:
    session = session or requests.Session()

    def source_client(name: str, settings: SourceSettings, **auth) -> SourceClient:
        return SourceClient(
            name,
            settings.base_url,
            TokenBucket(settings.rate, settings.burst, clock=clock, sleep=sleep),
            retry=plan.retry,
            session=session,
            cache=cache,
            offline=plan.offline,
            sleep=sleep,
            **auth,
        )

    ss = plan.semantic_scholar
    graph = source_client(
        SemanticScholarClient.source,
        ss,
        headers={"x-api-key": ss.api_key} if ss.api_key else None,
    )
    am = plan.altmetric
    altmetric = source_client(
        AltmetricClient.source,
        am,
        auth_params={"key": am.api_key} if am.api_key else None,
    )
    return SemanticScholarClient(graph, edge_cap=plan.edge_cap), AltmetricClient(altmetric)


def _graph_version(client: SemanticScholarClient, delta: GraphDelta) -> str:
    version = f"{client.base_url} resolved={len(delta.resolved)} misses={len(delta.misses)}"
    if delta.truncated:
        version += f" truncated={','.join(delta.truncated)}"
    if delta.failed:
        version += f" failed={','.join(delta.failed)}"
    if delta.resume:
        version += f" resume={','.join(delta.resume)}"
    return version


def ingest_all(
    corpus_source: Union[str, Path],
    plan: FetchPlan = FetchPlan(),
    field_mapping: FieldMapping = FieldMapping(),
    session: Optional[requests.Session] = None,
    cache: Optional[ResponseCache] = None,
    created_at: Optional[datetime] = None,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
) -> IngestResult:
    """Combine the catalogue, the academic graph and Altmetric into a Snapshot.

    Whole-source failures of the two remote sources mark the snapshot partial.

    Raises:
        SourceError: the catalogue is unreachable
        AuthenticationError: a source rejected the credentials
    """
    created_at = created_at or datetime.now(timezone.utc).replace(microsecond=0)
    catalogue = load_ad_datasets(corpus_source, field_mapping, session=session)
    builder = SnapshotBuilder()
    builder.note_source(
        "ad_datasets",
        f"{source_name(corpus_source)} records={len(catalogue.entries)} "
        f"skipped={catalogue.skipped}",
    )
    graph_client, altmetric_client = build_clients(plan, session, cache, clock, sleep)
    misses: List[Miss] = []
    failed: List[str] = []

    targets = [PaperTarget.of(d) for d in catalogue.entries if d.ingestible]
    try:
        graph = fetch_paper_graph(targets, plan, graph_client)
    except AuthenticationError:
        raise
    except SOURCE_FAILURES as err:
        logger.error(f"{graph_client.source} unavailable: {err}")
        graph = GraphDelta(resume=tuple(sorted({t.key for t in targets})))
    if graph.resume and not graph.resolved:
        failed.append(graph_client.source)
    builder.merge(graph.builder)
    builder.note_source(graph_client.source, _graph_version(graph_client, graph))
    misses.extend(graph.misses)
    if graph.partial:
        builder.mark_partial()

    paper_by_doi = {}
    for dataset in catalogue.entries:
        paper_id = graph.resolved.get(PaperTarget.of(dataset).key) if dataset.ingestible else None
        builder.add(replace(dataset, paper_id=paper_id))
        if paper_id is not None and dataset.doi:
            paper_by_doi[dataset.doi] = paper_id

    try:
        attention = fetch_altmetric(paper_by_doi, plan, altmetric_client)
    except AuthenticationError:
        raise
    except SOURCE_FAILURES as err:
        logger.error(f"{altmetric_client.source} unavailable: {err}")
        failed.append(altmetric_client.source)
        builder.mark_partial()
        builder.note_source(altmetric_client.source, f"{altmetric_client.base_url} unavailable")
    else:
        for doi, record in attention.records.items():
            builder.add(replace(record, paper_key=paper_by_doi[doi]))
        misses.extend(attention.misses)
        builder.note_source(
            altmetric_client.source,
            f"{altmetric_client.base_url} records={len(attention.records)} "
            f"misses={len(attention.misses)}",
        )

    snapshot = builder.build(created_at)
    counts = {
        "datasets": len(snapshot.datasets),
        "papers": len(snapshot.papers),
        "authors": len(snapshot.authors),
        "citations": len(snapshot.citations),
        "altmetric": len(snapshot.altmetrics),
    }
    return IngestResult(snapshot, counts, misses, tuple(failed))
