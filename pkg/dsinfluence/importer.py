# -*- coding: utf-8 -*-
"""
Functions to import the curated autonomous-driving dataset catalogue
"""
import json
import re
from dataclasses import dataclass, field
from enum import IntEnum, auto
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import requests
from loguru import logger

from dsinfluence.errors import DataError, MappingError, SourceError
from dsinfluence.models import DatasetEntry

_DOI_PREFIX = re.compile(r"^(?:https?://(?:dx\.)?doi\.org/|doi:)", re.IGNORECASE)
_ARXIV_PREFIX = re.compile(r"^(?:https?://arxiv\.org/(?:abs|pdf)/|arxiv:)", re.IGNORECASE)
_INTEGER = re.compile(r"^\d+$")


class SourceType(IntEnum):
    FILE = auto()
    URL = auto()


def guess_source_type(source: Union[str, Path]) -> SourceType:
    if str(source).startswith(("http://", "https://")):
        return SourceType.URL
    return SourceType.FILE


def source_name(source: Union[str, Path]) -> str:
    if guess_source_type(source) is SourceType.URL:
        return str(source)
    return Path(source).name


@dataclass(frozen=True)
class FieldMapping:
    """Keys of one catalogue record holding the values a DatasetEntry needs"""

    id: str = "id"
    name: str = "name"
    doi: str = "doi"
    arxiv_id: str = "arxiv"
    n_frames: str = "frames"
    n_sensors: str = "sensors"
    publication_year: str = "year"

    def keys(self) -> Dict[str, str]:
        return {
            "id": self.id,
            "name": self.name,
            "doi": self.doi,
            "arxiv_id": self.arxiv_id,
            "n_frames": self.n_frames,
            "n_sensors": self.n_sensors,
            "publication_year": self.publication_year,
        }


@dataclass
class CatalogueLoad:
    entries: List[DatasetEntry] = field(default_factory=list)
    skipped: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def non_ingestible(self) -> List[DatasetEntry]:
        return [entry for entry in self.entries if not entry.ingestible]


def normalize_doi(value) -> Optional[str]:
    if not isinstance(value, str) or not value.strip():
        return None
    return _DOI_PREFIX.sub("", value.strip())


def normalize_arxiv(value) -> Optional[str]:
    if not isinstance(value, str) or not value.strip():
        return None
    return _ARXIV_PREFIX.sub("", value.strip())


def parse_count(value) -> Optional[int]:
    """Counts as delivered: integers, integral floats or digit strings."""
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        text = value.strip().replace(",", "").replace("_", "")
        if _INTEGER.match(text):
            return int(text)
    return None


def parse_sensors(value) -> Optional[int]:
    if isinstance(value, list):
        return len(set(map(str, value))) or None
    return parse_count(value)


def _read_source(source: Union[str, Path], session: Optional[requests.Session]):
    if guess_source_type(source) is SourceType.URL:
        session = session or requests.Session()
        try:
            response = session.get(str(source), timeout=30)
            response.raise_for_status()
        except requests.RequestException as err:
            raise SourceError(f"ad-datasets source {source} unreachable: {err}") from err
        return response.text
    path = Path(source)
    if not path.is_file():
        raise SourceError(f"ad-datasets source {path} not found")
    return path.read_text(encoding="utf-8")


def _records(document) -> List[dict]:
    if isinstance(document, list):
        return document
    if isinstance(document, dict):
        if isinstance(document.get("datasets"), list):
            return document["datasets"]
        records = []
        for key, record in sorted(document.items()):
            if isinstance(record, dict):
                records.append({"__key__": key, **record})
        return records
    raise DataError("ad-datasets document is neither an array nor an object")


def parse_record(
    record: dict, mapping: FieldMapping, strict: bool, warn: Callable[[str], None]
) -> Optional[DatasetEntry]:
    if strict:
        missing = [key for key in mapping.keys().values() if key not in record]
        if missing:
            raise MappingError(f"record lacks mapped key(s) {', '.join(missing)}")
    dataset_id = record.get(mapping.id, record.get("__key__"))
    if dataset_id is None or str(dataset_id) == "":
        return None
    dataset_id = str(dataset_id)
    values = {}
    for attribute, parser in (
        ("n_frames", parse_count),
        ("n_sensors", parse_sensors),
        ("publication_year", parse_count),
    ):
        raw = record.get(getattr(mapping, attribute))
        value = parser(raw)
        if raw is not None and value is None:
            warn(f"{dataset_id}: unusable {attribute} value {raw!r}, left absent")
        if attribute == "n_frames" and value is not None and value < 0:
            warn(f"{dataset_id}: negative n_frames {value}, left absent")
            value = None
        if attribute == "n_sensors" and value is not None and value < 1:
            warn(f"{dataset_id}: n_sensors {value} < 1, left absent")
            value = None
        values[attribute] = value
    name = record.get(mapping.name)
    return DatasetEntry(
        dataset_id=dataset_id,
        name=str(name) if name else dataset_id,
        doi=normalize_doi(record.get(mapping.doi)),
        arxiv_id=normalize_arxiv(record.get(mapping.arxiv_id)),
        **values,
    )


def load_ad_datasets(
    source: Union[str, Path],
    mapping: FieldMapping = FieldMapping(),
    strict: bool = False,
    session: Optional[requests.Session] = None,
) -> CatalogueLoad:
    """Import the dataset catalogue from a JSON file or URL.

    Args:
        source: path or http(s) URL of the catalogue
        mapping: the record keys holding the DatasetEntry values
        strict: raise instead of skipping when a mapped key is missing

    Returns:
        the entries, the number of skipped records and the warnings issued.
    """
    logger.info(f"importing ad-datasets catalogue from {source}")
    try:
        document = json.loads(_read_source(source, session))
    except json.JSONDecodeError as err:
        raise DataError(f"{source}: malformed JSON at line {err.lineno}") from err

    load = CatalogueLoad()

    def warn(message: str):
        logger.warning(message)
        load.warnings.append(message)

    seen = set()
    for record in _records(document):
        if not isinstance(record, dict):
            load.skipped += 1
            continue
        entry = parse_record(record, mapping, strict, warn)
        if entry is None or entry.dataset_id in seen:
            warn(f"skipping record without a usable unique id: {record.get(mapping.name)!r}")
            load.skipped += 1
            continue
        seen.add(entry.dataset_id)
        load.entries.append(entry)
    for entry in load.non_ingestible:
        logger.info(f"{entry.dataset_id} has neither DOI nor arXiv id")
    logger.info(f"imported {len(load.entries)} datasets, skipped {load.skipped}")
    return load
