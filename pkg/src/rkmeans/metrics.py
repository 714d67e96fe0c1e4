"""Evaluation metrics and parameter-space distances.

Partition agreement uses the chance-corrected adjusted Rand index. Fitted
(centroids, loading) pairs are compared with a product distance: Frobenius
on loadings, symmetric Hausdorff on centroid rows, combined by max, after
an optional orthogonal Procrustes alignment that removes the rotational
indeterminacy of the model.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .types import Assignment, CentroidSet, LoadingMatrix, _frozen_array


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation of two label vectors; entry (i, j) counts objects
    with label i in the first partition and j in the second."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.array(self.counts, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError(f"counts must be 2-D, got shape {arr.shape}")
        if np.any(arr < 0):
            raise ValueError("counts must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @classmethod
    def from_assignments(cls, a: Assignment, b: Assignment) -> "ContingencyTable":
        if a.n != b.n:
            raise ValueError(f"label vectors differ in length: {a.n} vs {b.n}")
        counts = np.zeros((a.n_clusters, b.n_clusters), dtype=np.int64)
        np.add.at(counts, (a.labels, b.labels), 1)
        return cls(counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def adjusted_rand_index(a: Assignment, b: Assignment) -> float:
    """Hubert-Arabie adjusted Rand index in [-1, 1]; 1 means identical
    partitions up to relabeling, 0 is the chance level."""
    if a.n != b.n:
        raise ValueError(f"label vectors differ in length: {a.n} vs {b.n}")
    if a.n < 2:
        raise ValueError("need at least 2 objects")
    table = ContingencyTable.from_assignments(a, b).counts
    # exact integer arithmetic until the final division
    sum_cells = sum(comb(int(c), 2) for c in table.ravel())
    sum_rows = sum(comb(int(c), 2) for c in table.sum(axis=1))
    sum_cols = sum(comb(int(c), 2) for c in table.sum(axis=0))
    pairs = comb(a.n, 2)
    expected = sum_rows * sum_cols / pairs
    maximal = (sum_rows + sum_cols) / 2
    if maximal == expected:
        # both partitions place all pairs identically (e.g. single cluster)
        return 1.0
    return float((sum_cells - expected) / (maximal - expected))


def directed_hausdorff(F: CentroidSet, G: CentroidSet) -> float:
    """max over rows f of F of the distance from f to the nearest row of G."""
    if F.q != G.q:
        raise ValueError(f"centroid sets differ in dimension: {F.q} vs {G.q}")
    diff = F.values[:, None, :] - G.values[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    return float(d.min(axis=1).max())


def symmetric_hausdorff(F: CentroidSet, G: CentroidSet) -> float:
    """max of the two directed Hausdorff distances."""
    return max(directed_hausdorff(F, G), directed_hausdorff(G, F))


def align_rotation(A1: LoadingMatrix, A2: LoadingMatrix) -> np.ndarray:
    """Orthogonal Procrustes: the q x q orthonormal R minimizing |A1 R - A2|_F,
    the polar factor of A1'A2."""
    if A1.p != A2.p or A1.q != A2.q:
        raise ValueError(
            f"loading shapes differ: {A1.p}x{A1.q} vs {A2.p}x{A2.q}"
        )
    u, _, vh = np.linalg.svd(A1.values.T @ A2.values)
    r = u @ vh
    return _frozen_array(r)


def param_distance(
    theta1: tuple[CentroidSet, LoadingMatrix],
    theta2: tuple[CentroidSet, LoadingMatrix],
    align: bool = True,
) -> float:
    """Product distance max(|A1 - A2|_F, Hausdorff(F1, F2)) between two
    (centroids, loading) pairs.

    With ``align`` set, theta1 is first rotated onto theta2 by the Procrustes
    rotation R of the loadings; centroid rows rotate with the same R, which
    leaves the model's loss unchanged.
    """
    f1, a1 = theta1
    f2, a2 = theta2
    if a1.p != a2.p or a1.q != a2.q:
        raise ValueError(
            f"loading shapes differ: {a1.p}x{a1.q} vs {a2.p}x{a2.q}"
        )
    if f1.q != a1.q or f2.q != a2.q:
        raise ValueError("centroids and loadings disagree on dimension")
    a1v, f1v = a1.values, f1.values
    if align:
        r = align_rotation(a1, a2)
        a1v = a1v @ r
        f1v = f1v @ r
    d_load = float(np.linalg.norm(a1v - a2.values))
    d_cent = symmetric_hausdorff(CentroidSet(f1v), f2)
    return max(d_load, d_cent)
