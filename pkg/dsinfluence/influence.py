# -*- coding: utf-8 -*-
"""
Influence Score: every available feature of a dataset is ranked against its
peer group (all datasets released by the evaluation year) and the
percentiles are averaged.
"""
import bisect
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from dsinfluence.errors import EmptyPeerGroupError
from dsinfluence.metrics import FeatureVector, extract_features
from dsinfluence.models import Snapshot

IS_FEATURES = (
    "n_frames",
    "n_sensors",
    "ref_h3",
    "aut_mu_h3",
    "n_cit3",
    "cit_h3",
    "aas_curr",
    "n_readers",
)

# column order of the ranked report
REPORT_COLUMNS = (
    "n_cit3",
    "cit_h3",
    "ref_h3",
    "aut_mu_h3",
    "n_frames",
    "n_sensors",
    "aas_curr",
    "n_readers",
)

NO_FEATURES = "no_features"


def score_features(exclude: Iterable[str] = ()) -> Tuple[str, ...]:
    exclude = set(exclude)
    unknown = exclude - set(IS_FEATURES)
    if unknown:
        raise ValueError(f"not an influence feature: {', '.join(sorted(unknown))}")
    features = tuple(f for f in IS_FEATURES if f not in exclude)
    if not features:
        raise ValueError("at least one influence feature is required")
    return features


def percentile_rank(value: float, peer_values: Sequence[float]) -> float:
    """Fraction of sorted peer_values that are <= value"""
    if not peer_values:
        raise EmptyPeerGroupError("percentile of an empty peer group")
    return bisect.bisect_right(peer_values, value) / len(peer_values)


@dataclass(frozen=True)
class PercentileTable:
    eval_year: int
    values: Mapping[str, Tuple[float, ...]]

    def percentile(self, feature: str, value: Optional[float]) -> Optional[float]:
        if value is None:
            return None
        return percentile_rank(value, self.values.get(feature, ()))


def build_percentile_table(
    feature_vectors: Iterable[FeatureVector],
    eval_year: int,
    features: Sequence[str] = IS_FEATURES,
) -> PercentileTable:
    columns: Dict[str, List[float]] = {feature: [] for feature in features}
    for vector in feature_vectors:
        for feature in features:
            value = vector.get(feature)
            if value is not None:
                columns[feature].append(value)
    return PercentileTable(
        eval_year, {feature: tuple(sorted(values)) for feature, values in columns.items()}
    )


@dataclass(frozen=True)
class InfluenceResult:
    dataset_id: str
    eval_year: int
    percentiles: Mapping[str, Optional[float]]
    n_available: int
    is_score: Optional[float]
    flags: Tuple[str, ...] = ()

    def serialize(self, features: Sequence[str] = IS_FEATURES) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "eval_year": self.eval_year,
            "IS": self.is_score,
            "n_available": self.n_available,
            **{feature: self.percentiles.get(feature) for feature in features},
        }


def influence_from_percentiles(
    dataset_id: str,
    eval_year: int,
    percentiles: Mapping[str, Optional[float]],
    features: Sequence[str] = IS_FEATURES,
) -> InfluenceResult:
    """Mean over the present percentiles of features. Other percentiles are kept for display."""
    present = [percentiles[f] for f in features if percentiles.get(f) is not None]
    kept = {feature: percentiles.get(feature) for feature in (*percentiles, *features)}
    if not present:
        return InfluenceResult(dataset_id, eval_year, kept, 0, None, (NO_FEATURES,))
    return InfluenceResult(
        dataset_id, eval_year, kept, len(present), sum(present) / len(present)
    )


def influence_score(
    feature_vector: FeatureVector,
    table: PercentileTable,
    features: Sequence[str] = IS_FEATURES,
) -> InfluenceResult:
    if feature_vector.eval_year != table.eval_year:
        raise ValueError(
            f"feature vector for {feature_vector.eval_year} scored against "
            f"table for {table.eval_year}"
        )
    percentiles = {
        feature: table.percentile(feature, feature_vector.get(feature))
        for feature in table.values
    }
    return influence_from_percentiles(
        feature_vector.dataset_id, feature_vector.eval_year, percentiles, features
    )


def peer_group(snapshot: Snapshot, eval_year: int) -> List[str]:
    """Datasets released in or before eval_year"""
    return [
        dataset_id
        for dataset_id, dataset in snapshot.datasets.items()
        if (year := snapshot.release_year(dataset)) is not None and year <= eval_year
    ]


def score_year(
    snapshot: Snapshot,
    eval_year: int,
    features: Sequence[str] = IS_FEATURES,
    include_self_citations: bool = True,
) -> Tuple[Dict[str, FeatureVector], Dict[str, InfluenceResult]]:
    """Features and influence of the whole peer group of eval_year"""
    vectors = {
        dataset_id: extract_features(dataset_id, eval_year, snapshot, include_self_citations)
        for dataset_id in peer_group(snapshot, eval_year)
    }
    table = build_percentile_table(vectors.values(), eval_year, IS_FEATURES)
    results = {
        dataset_id: influence_score(vector, table, features)
        for dataset_id, vector in vectors.items()
    }
    return vectors, results


@dataclass(frozen=True)
class RankedEntry:
    rank: int
    name: str
    release_year: Optional[int]
    result: InfluenceResult
    features: FeatureVector
    marks: FrozenSet[str] = field(default_factory=frozenset)

    @property
    def dataset_id(self) -> str:
        return self.result.dataset_id


def top_marks(
    rows: Sequence[Mapping[str, Optional[float]]], columns: Sequence[str], top: int = 3
) -> List[FrozenSet[str]]:
    """
    Per row, the columns whose value is among the `top` largest distinct
    values of that column.
    """
    leaders = {}
    for column in columns:
        values = {row.get(column) for row in rows} - {None}
        leaders[column] = set(sorted(values, reverse=True)[:top])
    return [
        frozenset(c for c in columns if row.get(c) is not None and row.get(c) in leaders[c])
        for row in rows
    ]


def _order(result: InfluenceResult):
    missing = result.is_score is None
    return missing, -(result.is_score or 0.0), result.dataset_id


def rank_datasets(
    snapshot: Snapshot,
    eval_year: int,
    released: Optional[int] = None,
    features: Sequence[str] = IS_FEATURES,
    include_self_citations: bool = True,
) -> List[RankedEntry]:
    """Peer group of eval_year sorted by descending IS, ties by dataset_id.

    Args:
        released: only list datasets released in this year. The peer group
            is not affected.
    """
    vectors, results = score_year(snapshot, eval_year, features, include_self_citations)
    listed = []
    for dataset_id, result in results.items():
        release_year = snapshot.release_year(snapshot.datasets[dataset_id])
        if released is None or release_year == released:
            listed.append((result, release_year))
    listed.sort(key=lambda item: _order(item[0]))
    marks = top_marks([result.percentiles for result, _ in listed], REPORT_COLUMNS)
    ranking = [
        RankedEntry(
            rank=position,
            name=snapshot.datasets[result.dataset_id].name,
            release_year=release_year,
            result=result,
            features=vectors[result.dataset_id],
            marks=row_marks,
        )
        for position, ((result, release_year), row_marks) in enumerate(
            zip(listed, marks), start=1
        )
    ]
    logger.info(f"ranked {len(ranking)} of {len(results)} datasets for {eval_year}")
    return ranking


def score_history(
    dataset_id: str,
    snapshot: Snapshot,
    year_range: Iterable[int],
    features: Sequence[str] = IS_FEATURES,
    include_self_citations: bool = True,
) -> List[InfluenceResult]:
    """One result per year, scored against that year's peer group.
    Years before the release of the dataset yield absent results."""
    snapshot.dataset(dataset_id)
    history = []
    for year in year_range:
        _, results = score_year(snapshot, year, features, include_self_citations)
        result = results.get(dataset_id)
        if result is None:
            result = InfluenceResult(
                dataset_id,
                year,
                {feature: None for feature in features},
                0,
                None,
                ("unreleased",),
            )
        history.append(result)
    return history


@dataclass(frozen=True)
class Histogram:
    edges: Tuple[float, ...]
    counts: Tuple[int, ...]
    unscored: int

    @property
    def total(self) -> int:
        return sum(self.counts) + self.unscored


def is_histogram(results: Iterable[InfluenceResult], bins: int = 10) -> Histogram:
    """Distribution of IS over [0, 1]; unscored datasets are counted apart"""
    results = list(results)
    scores = [r.is_score for r in results if r.is_score is not None]
    counts, edges = np.histogram(scores, bins=bins, range=(0.0, 1.0))
    return Histogram(
        tuple(float(edge) for edge in edges),
        tuple(int(count) for count in counts),
        len(results) - len(scores),
    )
