# -*- coding: utf-8 -*-
"""
Seeded generators of corpora with planted structure, used to calibrate the
regression and clustering stages where no ground truth corpus exists.
"""
from datetime import datetime, timezone
from typing import Dict, List, Sequence, Tuple

import numpy as np

from dsinfluence.cluster import DEFAULT_OFFSETS, Trajectory
from dsinfluence.models import (
    AltmetricRecord,
    AuthorRecord,
    CitationEdge,
    DatasetEntry,
    PaperRecord,
    Snapshot,
    SnapshotBuilder,
)

PLANTED_TERMS = ("aas_3m", "aas_3m^2")
NULL_TERMS = ("ref_h3", "aut_mu_h3", "a_pub", "n_sensors")

TRAJECTORY_CENTERS = (
    (5, 5, 5, 5),
    (5, 10, 20, 30),
    (5, 25, 50, 60),
    (10, 40, 80, 120),
    (20, 60, 40, 25),
    (30, 90, 150, 200),
)


def _z(values: np.ndarray) -> np.ndarray:
    return (values - values.mean()) / values.std()


def planted_regression_rows(
    rng: np.random.Generator,
    n: int = 300,
    intercept: float = 3.0,
    linear: float = 0.8,
    quadratic: float = 0.35,
    noise: float = 0.3,
) -> List[Dict[str, float]]:
    """
    Regression rows where log(1 + cit_1y) depends on aas_3m and its square
    only. The noise is clipped at three standard deviations so cit_1y stays
    non-negative.
    """
    aas_3m = rng.uniform(0.0, 100.0, n)
    z = _z(aas_3m)
    epsilon = np.clip(rng.normal(0.0, noise, n), -3 * noise, 3 * noise)
    target = intercept + linear * z + quadratic * z ** 2 + epsilon
    ref_h3 = rng.integers(0, 5, n)
    aut_mu_h3 = rng.integers(0, 5, n)
    a_pub = rng.integers(2010, 2022, n)
    n_sensors = rng.integers(1, 7, n)
    return [
        {
            "dataset_id": f"S{i:04d}",
            "ref_h3": int(ref_h3[i]),
            "aut_mu_h3": float(aut_mu_h3[i]),
            "a_pub": int(a_pub[i]),
            "n_sensors": int(n_sensors[i]),
            "aas_3m": float(aas_3m[i]),
            "cit_1y": float(np.expm1(target[i])),
        }
        for i in range(n)
    ]


def _realize_row(builder: SnapshotBuilder, row: Dict[str, float]):
    dataset_id = row["dataset_id"]
    paper_id = f"P-{dataset_id}"
    a_pub = int(row["a_pub"])
    refs = [f"{paper_id}-R{j}" for j in range(int(row["ref_h3"]))]
    for ref in refs:
        builder.add(PaperRecord(ref, publication_year=a_pub - 1, citations_fetched=True))
        builder.add(CitationEdge(paper_id, ref, a_pub))
        for c in range(len(refs)):
            builder.add(CitationEdge(f"{ref}-X{c}", ref, a_pub))
    h = int(row["aut_mu_h3"])
    author_id = f"A-{dataset_id}"
    publications = [f"{author_id}-W{j}" for j in range(h)]
    for publication in publications:
        builder.add(PaperRecord(publication, publication_year=a_pub - 1, citations_fetched=True))
        for c in range(h):
            builder.add(CitationEdge(f"{publication}-X{c}", publication, a_pub))
    builder.add(AuthorRecord(author_id, paper_ids=(paper_id, *publications)))
    builder.add(
        PaperRecord(
            paper_id,
            title=f"Synthetic dataset {dataset_id}",
            publication_year=a_pub,
            author_ids=(author_id,),
            reference_ids=tuple(refs),
            citations_fetched=True,
        )
    )
    for c in range(int(round(row["cit_1y"]))):
        builder.add(CitationEdge(f"{paper_id}-C{c}", paper_id, a_pub + 1))
    builder.add(
        AltmetricRecord.from_readers(paper_id, row["aas_3m"], {}, aas_3m=row["aas_3m"])
    )
    builder.add(
        DatasetEntry(
            dataset_id,
            name=f"Synthetic {dataset_id}",
            doi=f"10.5555/{dataset_id.lower()}",
            n_sensors=int(row["n_sensors"]),
            publication_year=a_pub,
            paper_id=paper_id,
        )
    )


def planted_snapshot(
    rng: np.random.Generator, n: int = 200, intercept: float = 2.0, **effects
) -> Snapshot:
    """
    Snapshot whose regression table reproduces planted_regression_rows with
    cit_1y rounded to whole citations. The citations of each dataset paper
    fall in the year after publication, outside the windows of its features.
    """
    builder = SnapshotBuilder()
    for row in planted_regression_rows(rng, n, intercept, **effects):
        _realize_row(builder, row)
    builder.note_source("synthetic", f"planted n={n}")
    return builder.build(datetime(2023, 1, 4, tzinfo=timezone.utc))


def planted_trajectories(
    rng: np.random.Generator,
    per_cluster: int = 20,
    centers: Sequence[Tuple[int, ...]] = TRAJECTORY_CENTERS,
    spread: float = 1.0,
) -> Tuple[List[Trajectory], Dict[str, int]]:
    """Trajectories scattered around fixed centers, with their planted labels"""
    trajectories = []
    labels = {}
    for label, center in enumerate(centers):
        noise = np.clip(
            rng.normal(0.0, spread, (per_cluster, len(center))), -3 * spread, 3 * spread
        )
        for i, point in enumerate(np.rint(np.asarray(center) + noise)):
            paper_id = f"T{label}-{i:03d}"
            trajectories.append(
                Trajectory(paper_id, DEFAULT_OFFSETS, tuple(max(0, int(v)) for v in point))
            )
            labels[paper_id] = label
    return trajectories, labels


def planted_blobs(
    rng: np.random.Generator, per_blob: int = 50, separation: float = 10.0, spread: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Two gaussian blobs in the plane, centers separation * spread apart"""
    centers = np.array([[0.0, 0.0], [separation * spread, 0.0]])
    points = np.vstack([c + rng.normal(0.0, spread, (per_blob, 2)) for c in centers])
    return points, np.repeat([0, 1], per_blob)
