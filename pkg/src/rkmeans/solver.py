"""Reduced k-means by alternating least squares with multi-restart search.

One sweep updates, in order:

1. the loading A as the polar factor of the SVD of (UF)'X, which maximizes
   trace(A'X'UF) over column-orthonormal A,
2. the assignment by nearest projected centroid (ties to the smallest index),
   followed by empty-cluster repair,
3. the centroids as cluster means of the projected data XA,
4. the loss, tracked per sweep; the run stops when its relative decrease
   falls below the tolerance.

Each step minimizes the assigned loss |X - UFA'|^2 / n in its own block, so
the per-sweep loss trace is non-increasing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._seeds import spawn_rng
from .types import (
    Assignment,
    CentroidSet,
    DataMatrix,
    LoadingMatrix,
    RkmSolution,
)


@dataclass(frozen=True)
class SolverConfig:
    """Fit-time knobs: cluster count k, subspace dimension q, restart budget,
    iteration cap, relative-decrease stopping tolerance, and master seed."""

    k: int
    q: int
    restarts: int = 30
    max_iterations: int = 300
    rel_tolerance: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")

    def validate_against(self, X: DataMatrix) -> None:
        if self.q > X.p:
            raise ValueError(f"q={self.q} exceeds data dimension p={X.p}")
        if self.k > X.n:
            raise ValueError(f"k={self.k} exceeds the number of objects n={X.n}")


def update_loading(X: DataMatrix, U: Assignment, F: CentroidSet) -> LoadingMatrix:
    """Loss-minimizing loading for fixed assignment and centroids: the polar
    factor PQ' of the SVD QSP' of M = (UF)'X. Rank-deficient or zero M is
    completed to an orthonormal frame by the SVD's deterministic basis."""
    if U.n != X.n:
        raise ValueError(f"assignment has n={U.n} but data has n={X.n}")
    if U.n_clusters > F.k:
        raise ValueError("assignment references more clusters than centroids exist")
    if F.q > X.p:
        raise ValueError(f"q={F.q} exceeds data dimension p={X.p}")
    return LoadingMatrix(_polar_loading(X.values, U.labels, F.values))


def _polar_loading(x: np.ndarray, labels: np.ndarray, f: np.ndarray) -> np.ndarray:
    m = f[labels].T @ x
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return vh.T @ u.T


def assign_clusters(X: DataMatrix, A: LoadingMatrix, F: CentroidSet) -> Assignment:
    """Nearest projected centroid per object; ties to the smallest index.
    Equivalent to minimizing the full-space distance |x - A f_j|."""
    if A.p != X.p:
        raise ValueError(f"loading has p={A.p} but data has p={X.p}")
    if A.q != F.q:
        raise ValueError("loading and centroids disagree on subspace dimension")
    y = X.values @ A.values
    return Assignment(_kernels.assign_to_nearest(y, F.values), F.k)


def update_centroids(X: DataMatrix, U: Assignment, A: LoadingMatrix) -> CentroidSet:
    """Cluster means of the projected data XA under the given assignment."""
    if U.n != X.n:
        raise ValueError(f"assignment has n={U.n} but data has n={X.n}")
    if A.p != X.p:
        raise ValueError(f"loading has p={A.p} but data has p={X.p}")
    counts = U.cluster_sizes()
    if np.any(counts == 0):
        raise RuntimeError(
            "empty cluster reached the centroid update; repair must run first"
        )
    y = X.values @ A.values
    return CentroidSet(_kernels.cluster_means(y, U.labels, U.n_clusters, counts))


def fit_rkm(X: DataMatrix, config: SolverConfig) -> RkmSolution:
    """Best of ``config.restarts`` alternating least squares runs.

    Restart 0 warm-starts the loading from the top-q principal directions of
    the column-centered data; later restarts use the polar factor of a random
    Gaussian p x q matrix. Centroids always start from k-means++ on XA. Each
    restart derives its RNG stream from (seed, restart index), so the outcome
    does not depend on execution order; loss ties keep the smallest index.

    The returned solution is finalized so that its assignment is the nearest-
    centroid rule for its (loading, centroids) and its loss is exactly the
    min-based objective of that pair; it is a local, not certified global,
    minimizer.
    """
    config.validate_against(X)
    x = np.asarray(X.values)
    sx = float(np.sum(x * x))
    pca_a = _pca_loading(x, config.q) if config.restarts >= 1 else None
    best = None
    for r in range(config.restarts):
        # the centroid-seeding stream matches the plain k-means baseline so
        # the two solvers are restart-for-restart comparable when q == p;
        # the loading draw gets its own stream to keep that alignment
        rng = spawn_rng(config.seed, r)
        if r == 0:
            a0 = pca_a
        else:
            g = spawn_rng(config.seed, r, 1).standard_normal((X.p, config.q))
            u, _, vh = np.linalg.svd(g, full_matrices=False)
            a0 = u @ vh
        result = _als_single(x, sx, a0, config, rng)
        if best is None or result[0] < best[0]:
            best = result + (r,)
    loss, a, f, labels, trace, iterations, r = best
    return RkmSolution(
        loading=LoadingMatrix(a),
        centroids=CentroidSet(f),
        assignment=Assignment(labels, config.k),
        loss=loss,
        iterations=iterations,
        restart_index=r,
        seed=config.seed,
        sweep_losses=tuple(trace),
    )


def _pca_loading(x: np.ndarray, q: int) -> np.ndarray:
    xc = x - x.mean(axis=0)
    _, _, vh = np.linalg.svd(xc, full_matrices=False)
    if vh.shape[0] >= q:
        return vh[:q].T.copy()
    # rank-deficient data: pad with the remaining full-matrices basis
    _, _, vh = np.linalg.svd(xc, full_matrices=True)
    return vh[:q].T.copy()


def _als_single(
    x: np.ndarray,
    sx: float,
    a: np.ndarray,
    config: SolverConfig,
    rng: np.random.Generator,
) -> tuple:
    n = x.shape[0]
    k, q = config.k, config.q
    y = x @ a
    f = _kernels.kmeans_pp_init(y, k, rng)
    labels = _kernels.assign_to_nearest(y, f)
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        _kernels.repair_empty_clusters(y, f, labels, counts)
    f = _kernels.cluster_means(y, labels, k, counts)

    trace = []
    prev = np.inf
    iterations = 0
    for _ in range(config.max_iterations):
        iterations += 1
        a = _polar_loading(x, labels, f)
        y = x @ a
        labels = _kernels.assign_to_nearest(y, f)
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            _kernels.repair_empty_clusters(y, f, labels, counts)
        f = _kernels.cluster_means(y, labels, k, counts)
        sy = float(np.sum(y * y))
        # orthogonal residual plus projected within-SS (ANOVA shortcut);
        # clamped because the two big terms cancel on zero-loss data
        loss = max((sx - sy + (sy - float(counts @ np.sum(f * f, axis=1)))) / n, 0.0)
        trace.append(loss)
        if np.isfinite(prev) and prev - loss <= config.rel_tolerance * max(abs(prev), 1e-300):
            prev = loss
            break
        prev = loss

    # finalize: stored labels are the argmin for (a, f) and the stored loss is
    # the min-based objective of (a, f); at a fixed point this changes nothing
    sy = float(np.sum(y * y))
    loss = None
    for _ in range(k + 1):
        d = _kernels.sq_distances(y, f)
        labels_f = d.argmin(axis=1)
        counts = np.bincount(labels_f, minlength=k)
        if np.all(counts > 0):
            labels = labels_f
            loss = max((sx - sy + float(d[np.arange(n), labels_f].sum())) / n, 0.0)
            break
        _kernels.repair_empty_clusters(y, f, labels_f, counts)
        labels = labels_f
    if loss is None:
        # absurdly degenerate data (all projections equal); repair left every
        # cluster non-empty and all distances are zero-like, use assigned form
        diff = y - f[labels]
        loss = max((sx - sy + float(np.sum(diff * diff))) / n, 0.0)
    trace.append(loss)
    return loss, a, f, labels, trace, iterations


def project(X: DataMatrix, sol: RkmSolution) -> tuple[np.ndarray, np.ndarray]:
    """Low-dimensional object scores Y = XA and per-cluster mean rows G of Y
    under the solution's assignment (G equals the stored centroids once the
    solution has converged)."""
    if sol.loading.p != X.p:
        raise ValueError(f"solution has p={sol.loading.p} but data has p={X.p}")
    if sol.assignment.n != X.n:
        raise ValueError(f"solution has n={sol.assignment.n} but data has n={X.n}")
    y = X.values @ sol.loading.values
    counts = sol.assignment.cluster_sizes()
    if np.any(counts == 0):
        raise ValueError("assignment has an empty cluster; cluster means undefined")
    g = _kernels.cluster_means(y, sol.assignment.labels, sol.assignment.n_clusters, counts)
    return y, g
