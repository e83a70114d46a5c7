# -*- coding: utf-8 -*-
"""
The ten dataset features: catalogue values, attention data and the
3-year h-index family (ref_h3, aut_mu_h3, cit_h3) computed from citation years.

Missing source data yields an absent feature (None), never zero.
"""
import bisect
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from loguru import logger

from dsinfluence.models import Snapshot

FEATURES = (
    "n_frames",
    "n_sensors",
    "a_pub",
    "ref_h3",
    "aut_mu_h3",
    "n_cit3",
    "cit_h3",
    "aas_curr",
    "aas_3m",
    "n_readers",
)

CIT_H3_EARLY = "cit_h3_early"
ALTMETRIC_STALE = "altmetric_stale"
SELF_CITATIONS_EXCLUDED = "self_citations_excluded"


def h_index(citation_counts: Iterable[int]) -> int:
    """largest h such that at least h counts are >= h"""
    h = 0
    for rank, count in enumerate(sorted(citation_counts, reverse=True), start=1):
        if count < rank:
            break
        h = rank
    return h


@dataclass(frozen=True)
class Window3:
    """The calendar years end_year - 2 to end_year, inclusive"""

    end_year: int

    @property
    def start_year(self) -> int:
        return self.end_year - 2

    @property
    def years(self) -> frozenset:
        return frozenset(range(self.start_year, self.end_year + 1))

    def __contains__(self, year) -> bool:
        return year is not None and self.start_year <= year <= self.end_year


def window_count(
    snapshot: Snapshot, paper_id: str, start: int, end: int, include_self: bool = True
) -> int:
    years = snapshot.citing_years(paper_id, include_self)
    return bisect.bisect_right(years, end) - bisect.bisect_left(years, start)


def windowed_citations(
    paper_id: str, window: Window3, snapshot: Snapshot, include_self_citations: bool = True
) -> int:
    """Citations of paper_id with a citing year inside window"""
    snapshot.paper(paper_id)
    return window_count(
        snapshot, paper_id, window.start_year, window.end_year, include_self_citations
    )


def ref_h3(
    paper_id: str, window: Window3, snapshot: Snapshot, include_self_citations: bool = True
) -> Optional[int]:
    """h-index over the windowed citations of the references, None if unfetched"""
    paper = snapshot.paper(paper_id)
    if paper.reference_ids is None:
        return None
    return h_index(
        window_count(snapshot, ref, window.start_year, window.end_year, include_self_citations)
        for ref in paper.reference_ids
    )


def author_h3(
    author_id: str,
    window: Window3,
    snapshot: Snapshot,
    own_paper: Optional[str] = None,
    include_self_citations: bool = True,
) -> Optional[int]:
    author = snapshot.authors.get(author_id)
    if author is None or author.paper_ids is None:
        return None
    publications = set(author.paper_ids)
    if own_paper is not None:
        publications.add(own_paper)
    return h_index(
        window_count(snapshot, p, window.start_year, window.end_year, include_self_citations)
        for p in publications
    )


def aut_mu_h3(
    paper_id: str, window: Window3, snapshot: Snapshot, include_self_citations: bool = True
) -> Optional[float]:
    """
    Mean h3-index of the paper's authors. The paper itself counts among each
    author's publications. Authors whose publications were never fetched do
    not enter the mean.
    """
    paper = snapshot.paper(paper_id)
    indices = [
        author_h3(author_id, window, snapshot, paper_id, include_self_citations)
        for author_id in paper.author_ids
    ]
    indices = [h for h in indices if h is not None]
    if not indices:
        return None
    return sum(indices) / len(indices)


def cit_h3(
    paper_id: str, window: Window3, snapshot: Snapshot, include_self_citations: bool = True
) -> Optional[int]:
    """h-index over the windowed citations of the citing papers"""
    paper = snapshot.paper(paper_id)
    if not paper.citations_fetched:
        return None
    citers = snapshot.citing_papers(paper_id)
    if citers and not any(
        snapshot.papers[c].citations_fetched for c in citers if c in snapshot.papers
    ):
        return None
    return h_index(
        window_count(snapshot, c, window.start_year, window.end_year, include_self_citations)
        for c in citers
    )


def n_cit3(
    paper_id: str, window: Window3, snapshot: Snapshot, include_self_citations: bool = True
) -> Optional[int]:
    paper = snapshot.paper(paper_id)
    if not paper.citations_fetched:
        return None
    return windowed_citations(paper_id, window, snapshot, include_self_citations)


def citations_after_one_year(
    paper_id: str, snapshot: Snapshot, include_self_citations: bool = True
) -> Optional[int]:
    """Citations received up to the end of the year after publication"""
    paper = snapshot.paper(paper_id)
    if not paper.citations_fetched or paper.publication_year is None:
        return None
    years = snapshot.citing_years(paper_id, include_self_citations)
    return bisect.bisect_right(years, paper.publication_year + 1)


@dataclass(frozen=True)
class FeatureVector:
    dataset_id: str
    eval_year: int
    n_frames: Optional[int] = None
    n_sensors: Optional[int] = None
    a_pub: Optional[int] = None
    ref_h3: Optional[int] = None
    aut_mu_h3: Optional[float] = None
    n_cit3: Optional[int] = None
    cit_h3: Optional[int] = None
    aas_curr: Optional[float] = None
    aas_3m: Optional[float] = None
    n_readers: Optional[int] = None
    flags: Tuple[str, ...] = ()

    def get(self, feature: str):
        if feature not in FEATURES:
            raise KeyError(feature)
        return getattr(self, feature)

    def as_dict(self) -> Dict[str, Optional[float]]:
        return {feature: getattr(self, feature) for feature in FEATURES}

    def serialize(self) -> dict:
        data = asdict(self)
        data["flags"] = ";".join(self.flags)
        return data


def extract_features(
    dataset_id: str,
    eval_year: int,
    snapshot: Snapshot,
    include_self_citations: bool = True,
) -> FeatureVector:
    """All ten features of a dataset, windowed to the three years ending at eval_year.

    Args:
        dataset_id: the dataset to describe
        eval_year: last year of the citation window
        snapshot: the corpus
        include_self_citations: count edges flagged as self citations

    Returns:
        the feature vector; features lacking source data are None
    """
    dataset = snapshot.dataset(dataset_id)
    values = {"n_frames": dataset.n_frames, "n_sensors": dataset.n_sensors}
    flags = []
    if not include_self_citations:
        flags.append(SELF_CITATIONS_EXCLUDED)
    paper = snapshot.dataset_paper(dataset)
    if paper is not None:
        window = Window3(eval_year)
        paper_id = paper.paper_id
        values["a_pub"] = paper.publication_year
        values["ref_h3"] = ref_h3(paper_id, window, snapshot, include_self_citations)
        values["aut_mu_h3"] = aut_mu_h3(paper_id, window, snapshot, include_self_citations)
        values["n_cit3"] = n_cit3(paper_id, window, snapshot, include_self_citations)
        values["cit_h3"] = cit_h3(paper_id, window, snapshot, include_self_citations)
        if (
            values["cit_h3"] is not None
            and paper.publication_year is not None
            and eval_year < paper.publication_year + 3
        ):
            flags.append(CIT_H3_EARLY)
        attention = snapshot.altmetric_for(paper_id)
        if attention is not None:
            values["aas_curr"] = attention.aas_curr
            values["aas_3m"] = attention.aas_3m
            values["n_readers"] = attention.n_readers
            coverage = snapshot.coverage_year()
            if coverage is not None and eval_year < coverage:
                flags.append(ALTMETRIC_STALE)
    return FeatureVector(dataset_id, eval_year, flags=tuple(flags), **values)


def report_undated(snapshot: Snapshot):
    if snapshot.undated_citations:
        logger.warning(
            f"{snapshot.undated_citations} of {len(snapshot.citations)} citation edges "
            f"({snapshot.undated_citations / len(snapshot.citations):.1%}) lack a citing "
            "year and are not counted in windowed features"
        )


def feature_table(
    snapshot: Snapshot,
    years: Sequence[int],
    dataset_ids: Optional[Iterable[str]] = None,
    include_self_citations: bool = True,
) -> List[FeatureVector]:
    """Feature vectors for every (dataset, year), ordered by dataset then year"""
    report_undated(snapshot)
    dataset_ids = sorted(snapshot.datasets if dataset_ids is None else dataset_ids)
    return [
        extract_features(dataset_id, year, snapshot, include_self_citations)
        for dataset_id in dataset_ids
        for year in years
    ]


def regression_table(
    snapshot: Snapshot, include_self_citations: bool = True
) -> List[Dict[str, Optional[float]]]:
    """
    One row per dataset whose paper has a full year of citations after
    publication: features at the publication year plus the dependent
    variable cit_1y.
    """
    report_undated(snapshot)
    coverage = snapshot.coverage_year()
    rows = []
    for dataset_id, dataset in snapshot.datasets.items():
        paper = snapshot.dataset_paper(dataset)
        if paper is None or paper.publication_year is None:
            continue
        if coverage is None or paper.publication_year + 1 > coverage:
            logger.debug(f"{dataset_id}: one-year citation count not yet observable")
            continue
        features = extract_features(
            dataset_id, paper.publication_year, snapshot, include_self_citations
        )
        row = {"dataset_id": dataset_id, **features.as_dict()}
        row["cit_1y"] = citations_after_one_year(
            paper.paper_id, snapshot, include_self_citations
        )
        rows.append(row)
    return rows
