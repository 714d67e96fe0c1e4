"""Comparison methods and oracle building blocks: Lloyd's k-means with
k-means++ starts, certified-exact 1-D k-means, PCA, and the two-step
tandem pipeline (PCA then k-means on the leading scores).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._seeds import spawn_rng
from .errors import DegenerateDataError
from .types import Assignment, DataMatrix, LoadingMatrix, _frozen_array


@dataclass(frozen=True)
class KmeansSolution:
    """A k-means fit: centers, hard assignment, and the mean within-cluster
    squared distance (total form is loss * n)."""

    centers: np.ndarray
    assignment: Assignment
    loss: float

    def __post_init__(self):
        centers = _frozen_array(self.centers)
        if centers.ndim != 2:
            raise ValueError(f"centers must be 2-D, got shape {centers.shape}")
        if self.loss < 0:
            raise ValueError(f"loss must be nonnegative, got {self.loss}")
        object.__setattr__(self, "centers", centers)


def kmeans_fit(
    X: DataMatrix,
    k: int,
    restarts: int = 30,
    seed: int = 0,
    max_iterations: int = 300,
    rel_tolerance: float = 1e-9,
) -> KmeansSolution:
    """Best of ``restarts`` Lloyd runs from k-means++ starts.

    Each restart draws its RNG stream from (seed, restart index), so the
    winner is independent of execution order; loss ties keep the smallest
    restart index.
    """
    k = int(k)
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > X.n:
        raise ValueError(f"k={k} exceeds the number of objects n={X.n}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    y = np.asarray(X.values)
    best = None
    for r in range(restarts):
        rng = spawn_rng(seed, r)
        centers, labels, loss, _ = _kernels.lloyd_single(
            y, k, rng, max_iterations, rel_tolerance
        )
        if best is None or loss < best[0]:
            best = (loss, centers, labels)
    loss, centers, labels = best
    return KmeansSolution(
        centers=centers, assignment=Assignment(labels, k), loss=float(loss)
    )


def kmeans_1d_exact(values, k: int, weights=None) -> KmeansSolution:
    """Certified global optimum of 1-D k-means by dynamic programming.

    ``values`` must be sorted ascending: every optimal 1-D clustering uses
    contiguous runs, so the DP over split points is exhaustive. The optional
    nonnegative ``weights`` generalize the objective to
    sum_i w_i * (v_i - c_{label(i)})^2 / sum_i w_i.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    n = v.size
    k = int(k)
    if n < 1:
        raise ValueError("values must be non-empty")
    if np.any(np.diff(v) < 0):
        raise ValueError("values must be sorted ascending")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if w.shape != v.shape:
            raise ValueError("weights must match values in length")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")

    cw = np.concatenate(([0.0], np.cumsum(w)))
    cwv = np.concatenate(([0.0], np.cumsum(w * v)))
    cwv2 = np.concatenate(([0.0], np.cumsum(w * v * v)))

    def run_cost(a: int, b: int) -> float:
        """Weighted SSE of the half-open run [a, b) around its weighted mean."""
        sw = cw[b] - cw[a]
        if sw <= 0.0:
            return 0.0
        s1 = cwv[b] - cwv[a]
        s2 = cwv2[b] - cwv2[a]
        return max(s2 - s1 * s1 / sw, 0.0)

    # cost[j][i]: best split of the first i points into j clusters
    cost = np.full((k + 1, n + 1), np.inf)
    split = np.zeros((k + 1, n + 1), dtype=np.int64)
    cost[0, 0] = 0.0
    for j in range(1, k + 1):
        for i in range(j, n + 1):
            best_c, best_s = np.inf, j - 1
            # ties keep the latest split, i.e. earlier clusters absorb ties
            for s in range(j - 1, i):
                c = cost[j - 1, s] + run_cost(s, i)
                if c <= best_c:
                    best_c, best_s = c, s
            cost[j, i] = best_c
            split[j, i] = best_s

    labels = np.empty(n, dtype=np.int64)
    centers = np.zeros((k, 1))
    i = n
    for j in range(k, 0, -1):
        s = int(split[j, i])
        labels[s:i] = j - 1
        sw = cw[i] - cw[s]
        centers[j - 1, 0] = (cwv[i] - cwv[s]) / sw if sw > 0 else v[s]
        i = s
    loss = float(cost[k, n]) / float(w.sum())
    return KmeansSolution(centers=centers, assignment=Assignment(labels, k), loss=loss)


def pca_fit(X: DataMatrix, q: int) -> LoadingMatrix:
    """Top-q principal loadings of the column-centered data.

    Sign convention: the largest-magnitude entry of each loading column is
    made positive, so results are reproducible across SVD implementations.
    """
    q = int(q)
    if not 1 <= q <= X.p:
        raise ValueError(f"need 1 <= q <= p, got q={q}, p={X.p}")
    xc = X.values - X.values.mean(axis=0)
    _, _, vh = np.linalg.svd(xc, full_matrices=False)
    if vh.shape[0] < q:
        raise DegenerateDataError(
            f"data has rank at most {vh.shape[0]}, cannot extract {q} loadings"
        )
    A = vh[:q].T.copy()
    for c in range(q):
        pivot = int(np.abs(A[:, c]).argmax())
        if A[pivot, c] < 0:
            A[:, c] = -A[:, c]
    return LoadingMatrix(A)


def tandem_fit(
    X: DataMatrix,
    k: int,
    q: int,
    restarts: int = 30,
    seed: int = 0,
    max_iterations: int = 300,
    rel_tolerance: float = 1e-9,
) -> tuple[LoadingMatrix, KmeansSolution]:
    """Two-step pipeline: PCA loadings, then k-means on the centered scores."""
    A = pca_fit(X, q)
    scores = (X.values - X.values.mean(axis=0)) @ A.values
    km = kmeans_fit(
        DataMatrix(scores),
        k,
        restarts=restarts,
        seed=seed,
        max_iterations=max_iterations,
        rel_tolerance=rel_tolerance,
    )
    return A, km
