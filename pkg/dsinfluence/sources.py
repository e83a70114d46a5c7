# -*- coding: utf-8 -*-
"""
Clients for the academic-graph source and the Altmetric source.

Both speak JSON through a SourceClient, so throttling, retries and the
response cache apply uniformly.
"""
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from loguru import logger

from dsinfluence.errors import DataError
from dsinfluence.transport import SourceClient

DOI_PATTERN = re.compile(r"^10\.\d{4,9}/\S+$")


@dataclass(frozen=True)
class PaperStub:
    paper_id: str
    title: str = ""
    year: Optional[int] = None

    @classmethod
    def from_item(cls, item: dict) -> Optional["PaperStub"]:
        if not item or not item.get("paperId"):
            return None
        return cls(str(item["paperId"]), item.get("title") or "", item.get("year"))


@dataclass(frozen=True)
class AuthorStub:
    author_id: str
    name: str = ""


@dataclass(frozen=True)
class PaperMeta:
    paper: PaperStub
    external_ids: Dict[str, str] = field(default_factory=dict)
    authors: Tuple[AuthorStub, ...] = ()


@dataclass(frozen=True)
class Page:
    """All items of a paginated list; truncated when the edge cap stopped paging"""

    items: Tuple[PaperStub, ...]
    truncated: bool = False


class SemanticScholarClient:
    source = "semantic_scholar"

    def __init__(self, client: SourceClient, edge_cap: int = 10000, page_size: int = 1000):
        self.client = client
        self.edge_cap = edge_cap
        self.page_size = page_size

    @property
    def base_url(self) -> str:
        return self.client.base_url

    def paper(self, lookup_id: str) -> PaperMeta:
        """Lookup by ``DOI:<doi>``, ``ARXIV:<id>`` or a native paper id."""
        data = self.client.get(
            f"paper/{lookup_id}", {"fields": "title,year,externalIds,authors"}
        )
        stub = PaperStub.from_item(data)
        if stub is None:
            raise DataError(f"{self.source}: response for {lookup_id} lacks paperId")
        external = {
            str(key): str(value)
            for key, value in (data.get("externalIds") or {}).items()
            if value is not None
        }
        authors = []
        for author in data.get("authors") or ():
            if author.get("authorId"):
                authors.append(AuthorStub(str(author["authorId"]), author.get("name") or ""))
            else:
                logger.debug(f"{stub.paper_id}: skipping author without id {author}")
        return PaperMeta(stub, external, tuple(authors))

    def _pages(self, path: str, key: str) -> Page:
        items: List[PaperStub] = []
        cursor = None
        while True:
            params = {"fields": "paperId,title,year", "limit": self.page_size}
            if cursor is not None:
                params["cursor"] = cursor
            data = self.client.get(path, params)
            for item in data.get("data") or ():
                stub = PaperStub.from_item(item.get(key, item) if key else item)
                if stub is not None:
                    items.append(stub)
            cursor = data.get("next")
            # a full cap with a cursor left still means unseen items
            over = len(items) > self.edge_cap
            if over or (len(items) == self.edge_cap and cursor is not None):
                logger.warning(f"{self.source}: {path} truncated at {self.edge_cap} items")
                return Page(tuple(items[: self.edge_cap]), truncated=True)
            if cursor is None:
                return Page(tuple(items))

    def references(self, paper_id: str) -> Page:
        return self._pages(f"paper/{paper_id}/references", "citedPaper")

    def citations(self, paper_id: str) -> Page:
        return self._pages(f"paper/{paper_id}/citations", "citingPaper")

    def author_papers(self, author_id: str) -> Page:
        return self._pages(f"author/{author_id}/papers", "")


@dataclass(frozen=True)
class AltmetricPayload:
    doi: str
    score: float
    readers: Dict[str, int]
    aas_3m: Optional[float] = None


def parse_altmetric(doi: str, data: dict) -> AltmetricPayload:
    readers = {}
    for service, value in (data.get("readers") or {}).items():
        try:
            count = int(value)
        except (TypeError, ValueError):
            logger.warning(f"altmetric {doi}: unusable reader count {value!r} for {service}")
            continue
        if count >= 0:
            readers[str(service)] = count
    percentile = ((data.get("context") or {}).get("similar_age_3m") or {}).get("pct")
    return AltmetricPayload(
        doi=doi,
        score=float(data.get("score") or 0.0),
        readers=readers,
        aas_3m=float(percentile) if percentile is not None else None,
    )


class AltmetricClient:
    source = "altmetric"

    def __init__(self, client: SourceClient):
        self.client = client

    @property
    def base_url(self) -> str:
        return self.client.base_url

    def fetch(self, doi: str) -> AltmetricPayload:
        return parse_altmetric(doi, self.client.get(f"doi/{doi}"))
