"""K-means pseudo-labeling for streams without class labels.

Plain Lloyd iterations over float64 copies of the features, seeded with
k-means++. Everything is deterministic for a fixed seed, including the
empty-cluster repair rule (re-seed at the point farthest from its assigned
centroid), so pseudo-labels are reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .stream import Task
from .vectors import Embedding

__all__ = ["ClusterAssignment", "PseudoGrouping", "kmeans", "pseudo_group", "pseudo_class_id"]


@dataclass(frozen=True)
class ClusterAssignment:
    """Final state of one k-means run."""

    k: int
    centroids: np.ndarray  # (k, dim) float64
    labels: np.ndarray  # (n,) int cluster index per input point
    inertia: float  # sum of squared distances to assigned centroids
    inertia_history: tuple[float, ...] = field(default=())  # one entry per Lloyd iteration


def _sq_dists_to(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    closest_sq = ((points - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest_sq.sum()
        if total <= 0.0:
            # all remaining mass sits on existing centroids; any duplicate-free
            # point would do, but k <= distinct points rules this out
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest_sq), rng.random() * total))
            idx = min(idx, n - 1)
        centroids[i] = points[idx]
        closest_sq = np.minimum(closest_sq, ((points - centroids[i]) ** 2).sum(axis=1))
    return centroids


def _lloyd(
    points: np.ndarray,
    centroids: np.ndarray,
    max_iters: int,
    tol: float,
) -> ClusterAssignment:
    k = centroids.shape[0]
    history: list[float] = []
    labels = np.zeros(points.shape[0], dtype=np.intp)
    for _ in range(max_iters):
        sq = _sq_dists_to(points, centroids)
        labels = sq.argmin(axis=1)  # argmin keeps the lowest index on ties
        inertia = float(sq[np.arange(points.shape[0]), labels].sum())
        if history:
            assert inertia <= history[-1] * (1 + 1e-12) + 1e-12, "inertia increased"
        history.append(inertia)

        new_centroids = centroids.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centroids[j] = points[members].mean(axis=0)
        # repair empty clusters: move each to the current farthest point
        for j in range(k):
            if not (labels == j).any():
                dist_to_own = sq[np.arange(points.shape[0]), labels]
                far = int(dist_to_own.argmax())
                new_centroids[j] = points[far]
                labels[far] = j
                sq[far] = 0.0  # keep later repairs from picking the same point

        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break

    sq = _sq_dists_to(points, centroids)
    labels = sq.argmin(axis=1)
    inertia = float(sq[np.arange(points.shape[0]), labels].sum())
    history.append(inertia)
    return ClusterAssignment(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=inertia,
        inertia_history=tuple(history),
    )


def kmeans(
    features: Sequence[Embedding],
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> ClusterAssignment:
    """Cluster features into k groups (k-means++ seeding, Lloyd refinement)."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    if not features:
        raise ValidationError("cannot cluster an empty feature set")
    points = np.stack([f.values for f in features]).astype(np.float64)
    distinct = np.unique(points, axis=0).shape[0]
    if k > distinct:
        raise ValidationError(f"k={k} exceeds the {distinct} distinct points available")

    rng = np.random.Generator(np.random.PCG64(seed))
    centroids = _kmeanspp_init(points, k, rng)
    return _lloyd(points, centroids, max_iters, tol)


def pseudo_class_id(task_id: int, cluster_index: int, k: int) -> int:
    """Dense integer encoding of the task-scoped pseudo-class (task_id, cluster_index).

    Distinct across tasks as long as every task is clustered with the same k,
    which is how the harness drives it.
    """
    return task_id * k + cluster_index


@dataclass(frozen=True)
class PseudoGrouping:
    """Label-free replacement for group_by_class on one task."""

    groups: dict[int, list[Embedding]]  # pseudo-class id -> features
    purity: float  # fraction of points whose cluster majority-label matches their own
    assignment: ClusterAssignment


def pseudo_group(task: Task, k: int, seed: int) -> PseudoGrouping:
    """Cluster a task's features and group them by pseudo-class.

    The groups slot straight into the bank in place of label groups. Purity
    is computed against the task's true labels as a diagnostic.
    """
    features = [ex.embedding for ex in task.examples]
    labels = [ex.label for ex in task.examples]
    assignment = kmeans(features, k, seed)

    groups: dict[int, list[Embedding]] = {
        pseudo_class_id(task.task_id, j, k): [] for j in range(k)
    }
    members: dict[int, list[int]] = {j: [] for j in range(k)}
    for idx, cluster in enumerate(assignment.labels):
        groups[pseudo_class_id(task.task_id, int(cluster), k)].append(features[idx])
        members[int(cluster)].append(labels[idx])

    matched = 0
    for true_labels in members.values():
        if true_labels:
            matched += max(true_labels.count(lbl) for lbl in set(true_labels))
    purity = matched / len(task.examples) if task.examples else 0.0
    return PseudoGrouping(groups=groups, purity=purity, assignment=assignment)
