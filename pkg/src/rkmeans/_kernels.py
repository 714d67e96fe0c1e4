"""Array-level clustering kernels shared by the solvers.

Everything here operates on plain writable ndarrays with no validation;
the public wrappers in ``solver`` and ``baselines`` own the domain types.
Keeping these branch-lean matters: the replication experiments run tens of
thousands of Lloyd/alternating sweeps on one core.
"""
from __future__ import annotations

import numpy as np


def sq_distances(y: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, rows of y (n x d) against centers (k x d)."""
    d = np.sum(y * y, axis=1)[:, None] + np.sum(centers * centers, axis=1)[None, :]
    d -= 2.0 * (y @ centers.T)
    np.maximum(d, 0.0, out=d)
    return d


def kmeans_pp_init(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: k rows of y, each drawn with probability proportional
    to squared distance from the centers already chosen."""
    n = y.shape[0]
    centers = np.empty((k, y.shape[1]))
    centers[0] = y[int(rng.integers(n))]
    if k == 1:
        return centers
    diff = y - centers[0]
    d2 = np.sum(diff * diff, axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            # remaining points coincide with chosen centers; any pick is as good
            idx = int(rng.integers(n))
        centers[j] = y[idx]
        if j < k - 1:
            diff = y - centers[j]
            np.minimum(d2, np.sum(diff * diff, axis=1), out=d2)
    return centers


def assign_to_nearest(y: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Nearest-center labels; ties go to the smallest center index."""
    return sq_distances(y, centers).argmin(axis=1)


def cluster_means(y: np.ndarray, labels: np.ndarray, k: int, counts: np.ndarray) -> np.ndarray:
    """Per-cluster mean rows. Caller guarantees counts > 0 everywhere."""
    sums = np.empty((k, y.shape[1]))
    for c in range(y.shape[1]):
        sums[:, c] = np.bincount(labels, weights=y[:, c], minlength=k)
    sums /= counts[:, None]
    return sums


def repair_empty_clusters(
    y: np.ndarray, centers: np.ndarray, labels: np.ndarray, counts: np.ndarray
) -> None:
    """Give every empty cluster one point: a member of a cluster with at least
    two points, chosen farthest from its own center. Mutates all arguments.

    Moving the point onto the empty center (distance zero) never increases the
    assigned loss, and a donor always exists when n >= k (pigeonhole), so the
    loop terminates with every cluster non-empty.
    """
    while True:
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return
        j = int(empty[0])
        diff = y - centers[labels]
        d_own = np.sum(diff * diff, axis=1)
        d_own[counts[labels] < 2] = -1.0
        i = int(d_own.argmax())
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] = 1
        centers[j] = y[i]


def lloyd_single(
    y: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iterations: int,
    rel_tolerance: float,
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """One Lloyd run from a k-means++ start on raw coordinates y.

    Returns (centers, labels, mean loss, iterations). Per-sweep order is
    assign -> repair -> means, so the loss trace is non-increasing.
    """
    n = y.shape[0]
    sy = float(np.sum(y * y))
    centers = kmeans_pp_init(y, k, rng)
    prev = np.inf
    labels = np.zeros(n, dtype=np.int64)
    iterations = 0
    for _ in range(max_iterations):
        iterations += 1
        labels = assign_to_nearest(y, centers)
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            repair_empty_clusters(y, centers, labels, counts)
        centers = cluster_means(y, labels, k, counts)
        # ANOVA shortcut: within-SS = sum|y|^2 - sum_j count_j |c_j|^2;
        # clamp the cancellation noise on zero-loss data
        loss = max((sy - float(counts @ np.sum(centers * centers, axis=1))) / n, 0.0)
        if np.isfinite(prev) and prev - loss <= rel_tolerance * max(abs(prev), 1e-300):
            prev = loss
            break
        prev = loss
    # make stored labels the argmin for the final centers; when the run has
    # converged this is a no-op and centers stay the exact cluster means
    labels = assign_to_nearest(y, centers)
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        repair_empty_clusters(y, centers, labels, counts)
    d = sq_distances(y, centers)
    loss = max(float(d[np.arange(n), labels].sum()) / n, 0.0)
    return centers, labels, loss, iterations
