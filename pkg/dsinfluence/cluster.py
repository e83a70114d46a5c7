# -*- coding: utf-8 -*-
"""
Citation trajectories of dataset papers around their publication year and
their k-means clustering, including the per-k inertia series of the
elbow report.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from dsinfluence.errors import InsufficientDataError
from dsinfluence.metrics import window_count
from dsinfluence.models import Snapshot
from dsinfluence.tools import spawn_seeds

DEFAULT_OFFSETS = (-1, 0, 1, 2)


@dataclass(frozen=True)
class Trajectory:
    """Citations in the trailing three-year window at each offset from a_pub"""

    paper_id: str
    offsets: Tuple[int, ...]
    values: Tuple[int, ...]

    def __post_init__(self):
        if len(self.offsets) != len(self.values):
            raise ValueError("one value per offset is required")
        if any(b <= a for a, b in zip(self.offsets, self.offsets[1:])):
            raise ValueError("offsets must be strictly increasing")


def build_trajectories(
    snapshot: Snapshot,
    offsets: Sequence[int] = DEFAULT_OFFSETS,
    paper_ids: Optional[Iterable[str]] = None,
) -> List[Trajectory]:
    """
    Trajectories of the dataset papers, or of paper_ids. Papers whose last
    offset lies beyond the snapshot coverage are left out.
    """
    offsets = tuple(offsets)
    if paper_ids is None:
        paper_ids = {d.paper_id for d in snapshot.datasets.values() if d.paper_id}
    coverage = snapshot.coverage_year()
    trajectories = []
    for paper_id in sorted(set(paper_ids)):
        paper = snapshot.papers.get(paper_id)
        if paper is None or paper.publication_year is None or coverage is None:
            continue
        a_pub = paper.publication_year
        if a_pub + offsets[-1] > coverage:
            logger.debug(f"{paper_id}: horizon beyond coverage year {coverage}")
            continue
        values = tuple(
            window_count(snapshot, paper_id, a_pub + t - 2, a_pub + t) for t in offsets
        )
        trajectories.append(Trajectory(paper_id, offsets, values))
    return trajectories


@dataclass(frozen=True, eq=False)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: Mapping[str, int]
    inertia: float
    inertia_history: Tuple[float, ...] = ()
    seed: Optional[int] = None
    per_k_inertia: Mapping[int, float] = field(default_factory=dict)

    def sizes(self) -> List[int]:
        counts = [0] * self.k
        for cluster in self.assignments.values():
            counts[cluster] += 1
        return counts


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must all have the same dimension")
    return X


def _squared_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centroids = [X[rng.integers(n)]]
    nearest = ((X - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = nearest.sum()
        index = rng.integers(n) if total <= 0 else rng.choice(n, p=nearest / total)
        centroids.append(X[index])
        nearest = np.minimum(nearest, ((X - X[index]) ** 2).sum(axis=1))
    return np.array(centroids)


def _recenter(X: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    centroids = centroids.copy()
    empty = []
    for cluster in range(len(centroids)):
        members = X[labels == cluster]
        if len(members):
            centroids[cluster] = members.mean(axis=0)
        else:
            empty.append(cluster)
    if empty:
        spread = ((X - centroids[labels]) ** 2).sum(axis=1)
        for cluster in empty:
            farthest = int(np.argmax(spread))
            centroids[cluster] = X[farthest]
            spread[farthest] = 0.0
    return centroids


def kmeans(
    points,
    k: int,
    seed: int,
    max_iter: int = 300,
    labels: Optional[Sequence[str]] = None,
) -> ClusterModel:
    """Lloyd iterations from k-means++ seeding.

    Points are sorted before seeding, so the result does not depend on their
    order. Clusters are numbered by the lexicographic order of their centroids.

    Args:
        points: n points of equal dimension
        k: number of clusters, at most n
        seed: seed of the random generator
        labels: names of the points, their index by default
    """
    X = _as_points(points)
    n = len(X)
    if not 1 <= k <= n:
        raise InsufficientDataError(f"cannot form {k} clusters from {n} points")
    labels = [str(i) for i in range(n)] if labels is None else list(labels)
    order = np.lexsort(X.T[::-1])
    Xs = X[order]
    rng = np.random.default_rng(seed)
    centroids = _plus_plus(Xs, k, rng)
    history: List[float] = []
    assignment = None
    for _ in range(max_iter):
        distances = _squared_distances(Xs, centroids)
        update = np.argmin(distances, axis=1)
        inertia = float(distances[np.arange(n), update].sum())
        assert not history or inertia <= history[-1] * (1 + 1e-9) + 1e-12, (
            f"inertia rose from {history[-1]} to {inertia}"
        )
        history.append(inertia)
        if assignment is not None and np.array_equal(update, assignment):
            break
        assignment = update
        centroids = _recenter(Xs, assignment, centroids)
    else:
        logger.debug(f"k-means stopped after {max_iter} iterations")
        distances = _squared_distances(Xs, centroids)
        assignment = np.argmin(distances, axis=1)
        history.append(float(distances[np.arange(n), assignment].sum()))

    relabel = np.empty(k, dtype=int)
    relabel[np.lexsort(centroids.T[::-1])] = np.arange(k)
    centroids = centroids[np.lexsort(centroids.T[::-1])]
    assignment = relabel[assignment]
    original = np.empty(n, dtype=int)
    original[order] = assignment
    inertia = float(((Xs - centroids[assignment]) ** 2).sum())
    return ClusterModel(
        k=k,
        centroids=centroids,
        assignments={label: int(cluster) for label, cluster in zip(labels, original)},
        inertia=inertia,
        inertia_history=tuple(history),
        seed=seed,
    )


def kmeans_restarts(
    points,
    k: int,
    seed: int,
    restarts: int = 10,
    labels: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> ClusterModel:
    """Best of `restarts` runs, each seeded from a child of seed"""
    seeds = spawn_seeds(seed, restarts)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        models = list(pool.map(lambda s: kmeans(points, k, s, labels=labels), seeds))
    return min(models, key=lambda model: model.inertia)


def elbow(
    points,
    k_range: Iterable[int] = range(1, 11),
    seed: int = 0,
    restarts: int = 10,
) -> Dict[int, float]:
    """Best-of-restarts inertia per k"""
    X = _as_points(points)
    k_range = sorted(k_range)
    if not k_range or k_range[0] < 1 or k_range[-1] > len(X):
        raise InsufficientDataError(f"k range must lie within [1, {len(X)}]")
    series = {}
    for k, child in zip(k_range, spawn_seeds(seed, len(k_range))):
        series[k] = kmeans_restarts(X, k, child, restarts).inertia
    previous = None
    for k, inertia in series.items():
        if previous is not None and inertia > series[previous] * (1 + 1e-9) + 1e-12:
            logger.warning(
                f"inertia rises from k={previous} to k={k}, raise the restart budget"
            )
        previous = k
    return series


def trajectory_matrix(trajectories: Sequence[Trajectory], standardize: bool = False) -> np.ndarray:
    X = np.array([t.values for t in trajectories], dtype=float)
    if standardize and len(X):
        sd = X.std(axis=0)
        X = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    return X


def cluster_trajectories(
    trajectories: Sequence[Trajectory],
    k: int = 6,
    seed: int = 0,
    restarts: int = 10,
    k_range: Optional[Iterable[int]] = None,
    standardize: bool = False,
) -> ClusterModel:
    """Cluster trajectories on raw counts unless standardize is set"""
    X = trajectory_matrix(trajectories, standardize)
    if len(X) == 0:
        raise InsufficientDataError("no trajectories to cluster")
    labels = [t.paper_id for t in trajectories]
    model = kmeans_restarts(X, k, seed, restarts, labels)
    if k_range is not None:
        k_range = [kk for kk in k_range if kk <= len(X)]
        model = replace(model, per_k_inertia=elbow(X, k_range, seed, restarts))
    return model


@dataclass(frozen=True)
class ClusterSummary:
    cluster: int
    size: int
    mean_values: Tuple[float, ...]


def summarize_clusters(
    model: ClusterModel, trajectories: Sequence[Trajectory]
) -> List[ClusterSummary]:
    """Mean raw trajectory and size of every cluster"""
    by_cluster: Dict[int, List[Tuple[int, ...]]] = {c: [] for c in range(model.k)}
    for trajectory in trajectories:
        by_cluster[model.assignments[trajectory.paper_id]].append(trajectory.values)
    summaries = []
    for cluster, members in by_cluster.items():
        means = np.mean(members, axis=0) if members else np.zeros(model.centroids.shape[1])
        summaries.append(
            ClusterSummary(cluster, len(members), tuple(float(v) for v in means))
        )
    return summaries
