# -*- coding: utf-8 -*-
"""
Persistence of corpus snapshots as line-delimited JSON and the yearly
publication timeline derived from them.

The first line is a header carrying the format version, the creation time,
the partial flag and one provenance string per source. Every further line is
one entity, sorted by kind and key. Identical snapshots serialize to
identical bytes.
"""
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Union

from loguru import logger

from dsinfluence.errors import (
    IntegrityError,
    SnapshotError,
    SnapshotParseError,
    UnsupportedFormatError,
)
from dsinfluence.models import ENTITY_TYPES, Snapshot, SnapshotBuilder
from dsinfluence.tools import atomic_write, canonical_json

FORMAT_VERSION = 1


def header_record(snapshot: Snapshot) -> dict:
    return {
        "created_at": snapshot.created_at.isoformat(),
        "format_version": FORMAT_VERSION,
        "partial": snapshot.partial,
        "source_versions": dict(snapshot.source_versions),
    }


def dumps_snapshot(snapshot: Snapshot) -> str:
    lines = [canonical_json(header_record(snapshot))]
    lines.extend(canonical_json(entity.serialize()) for entity in snapshot.entities())
    return "\n".join(lines) + "\n"


def save_snapshot(
    snapshot: Snapshot, path: Union[str, Path], allow_dangling: bool = False
) -> Path:
    """
    Serialize snapshot to path, atomically.

    Args:
        snapshot: the snapshot to store
        path: destination file
        allow_dangling: store snapshots with unresolved references
    Raises:
        IntegrityError: if references dangle and allow_dangling is not set
    """
    dangling = snapshot.validate()
    if dangling and not allow_dangling:
        raise IntegrityError(dangling)
    path = Path(path)
    logger.info(f"saving snapshot with {len(snapshot.papers)} papers to {path}")
    atomic_write(path, dumps_snapshot(snapshot))
    return path


def _parse_header(record: dict, path) -> dict:
    version = record.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(
            f"{path}: unsupported snapshot format version {version!r}"
        )
    missing = {"created_at", "source_versions"} - record.keys()
    if missing:
        raise SnapshotParseError(path, 1, f"header lacks {', '.join(sorted(missing))}")
    return record


def loads_snapshot(text: str, path: Union[str, Path] = "<snapshot>") -> Snapshot:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SnapshotParseError(path, 1, "missing header")
    builder = SnapshotBuilder()
    header = None
    for number, line in enumerate(lines, start=1):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise SnapshotParseError(path, number, f"invalid JSON ({err.msg})") from err
        if not isinstance(record, dict):
            raise SnapshotParseError(path, number, "record is not an object")
        if header is None:
            header = _parse_header(record, path)
            continue
        kind = record.get("kind")
        entity_type = ENTITY_TYPES.get(kind)
        if entity_type is None:
            raise SnapshotParseError(path, number, f"unknown record kind {kind!r}")
        try:
            builder.add(entity_type.from_record(record))
        except (TypeError, ValueError) as err:
            raise SnapshotParseError(path, number, str(err)) from err
    for name, version in header["source_versions"].items():
        builder.note_source(name, version)
    if header.get("partial"):
        builder.mark_partial()
    try:
        created_at = datetime.fromisoformat(header["created_at"])
    except (TypeError, ValueError) as err:
        raise SnapshotParseError(path, 1, "invalid created_at") from err
    return builder.build(created_at)


def load_snapshot(path: Union[str, Path]) -> Snapshot:
    """
    Load a snapshot. Dangling references are logged as warnings,
    snapshot.validate() lists them.
    Raises:
        SnapshotParseError: names the line that failed and the last complete one
        UnsupportedFormatError: if the header carries another format version
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise SnapshotError(f"cannot read snapshot {path}: {err.strerror}") from err
    snapshot = loads_snapshot(text, path)
    for reference in snapshot.validate():
        logger.warning(f"dangling reference in {path.name}: {reference}")
    if snapshot.partial:
        logger.warning(f"{path.name} is a partial snapshot")
    logger.info(
        f"loaded {len(snapshot.datasets)} datasets, {len(snapshot.papers)} papers, "
        f"{len(snapshot.citations)} citations from {path.name}"
    )
    return snapshot


@dataclass(frozen=True)
class TimelinePoint:
    year: int
    datasets: int
    citations: int
    cumulative_datasets: int
    cumulative_citations: int

    def serialize(self) -> dict:
        return {
            "year": self.year,
            "datasets": self.datasets,
            "citations": self.citations,
            "cumulative_datasets": self.cumulative_datasets,
            "cumulative_citations": self.cumulative_citations,
        }


@dataclass(frozen=True)
class Timeline:
    points: List[TimelinePoint]

    def counts(self) -> Dict[int, tuple]:
        return {point.year: (point.datasets, point.citations) for point in self.points}

    def cumulative(self) -> Dict[int, tuple]:
        return {
            point.year: (point.cumulative_datasets, point.cumulative_citations)
            for point in self.points
        }


def build_publication_timeline(snapshot: Snapshot) -> Timeline:
    """
    Datasets released and citations received by dataset papers per year.
    The timeline spans every year from the first to the last event.
    Undated datasets and citations are not counted.
    """
    dataset_years: Dict[int, int] = {}
    for dataset in snapshot.datasets.values():
        year = snapshot.release_year(dataset)
        if year is not None:
            dataset_years[year] = dataset_years.get(year, 0) + 1

    citation_years: Dict[int, int] = {}
    dataset_papers = {
        d.paper_id for d in snapshot.datasets.values() if d.paper_id in snapshot.papers
    }
    for paper_id in sorted(dataset_papers):
        for year in snapshot.citing_years(paper_id):
            citation_years[year] = citation_years.get(year, 0) + 1

    years = set(dataset_years) | set(citation_years)
    if not years:
        return Timeline([])
    points = []
    total_datasets = total_citations = 0
    for year in range(min(years), max(years) + 1):
        total_datasets += dataset_years.get(year, 0)
        total_citations += citation_years.get(year, 0)
        points.append(
            TimelinePoint(
                year=year,
                datasets=dataset_years.get(year, 0),
                citations=citation_years.get(year, 0),
                cumulative_datasets=total_datasets,
                cumulative_citations=total_citations,
            )
        )
    return Timeline(points)

