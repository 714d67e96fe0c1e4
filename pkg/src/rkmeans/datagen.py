"""Synthetic benchmark generator: cluster structure hidden in a low-dimensional
subspace of the first p1 variables, padded with p2 equicorrelated noise
variables and p3 independent noise variables.

Construction for each draw: an orthonormal p1 x q basis A* (polar factor of a
Gaussian matrix), K cluster centers uniform on [-center_range, center_range]^q,
equiprobable labels, and x_i = A f_{label(i)} + eps_i with A = [A*; 0] and
eps_i ~ N(0, Sigma), Sigma block-diagonal (I_p1, equicorrelated p2 block with
off-diagonal noise_corr, I_p3). All draws come from one counter-based stream,
so a spec equals a dataset, bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._seeds import spawn_rng
from .errors import DegenerateDataError
from .types import Assignment, CentroidSet, DataMatrix, LoadingMatrix


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for one synthetic dataset; equal specs give equal data."""

    K: int
    q: int
    p1: int
    p2: int
    p3: int
    n: int
    center_range: float = 15.0
    noise_corr: float = 0.25
    seed: int = 0
    zero_noise: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 1 <= self.q <= self.p1:
            raise ValueError(f"need 1 <= q <= p1, got q={self.q}, p1={self.p1}")
        if self.p2 < 0 or self.p3 < 0:
            raise ValueError("p2 and p3 must be >= 0")
        if self.n < self.K:
            raise ValueError(f"need n >= K, got n={self.n}, K={self.K}")
        if self.center_range <= 0:
            raise ValueError("center_range must be positive")
        if not -1.0 < self.noise_corr < 1.0:
            raise ValueError("noise_corr must lie in (-1, 1)")

    @property
    def p(self) -> int:
        return self.p1 + self.p2 + self.p3


@dataclass(frozen=True)
class GeneratedDataset:
    """A drawn dataset with its ground truth. Z is the column-normalized copy
    of X, or None when the spec disabled noise (normalization would divide by
    zero on the exactly-constant noise columns)."""

    X: DataMatrix
    Z: DataMatrix | None
    labels: Assignment
    loading_true: LoadingMatrix
    centers_true: CentroidSet


def generate_dataset(spec: DatasetSpec) -> GeneratedDataset:
    """Draw one dataset per the recipe above, deterministically in spec.seed."""
    rng = spawn_rng(spec.seed)
    g = rng.standard_normal((spec.p1, spec.q))
    u, _, vh = np.linalg.svd(g, full_matrices=False)
    a_star = u @ vh
    loading = np.zeros((spec.p, spec.q))
    loading[: spec.p1] = a_star
    centers = rng.uniform(-spec.center_range, spec.center_range, (spec.K, spec.q))
    labels = rng.integers(0, spec.K, spec.n)

    signal = centers[labels] @ loading.T
    if spec.zero_noise:
        x = signal
        z = None
    else:
        eps = rng.standard_normal((spec.n, spec.p))
        if spec.p2 >= 2:
            sigma = np.full((spec.p2, spec.p2), spec.noise_corr)
            np.fill_diagonal(sigma, 1.0)
            chol = np.linalg.cholesky(sigma)
            block = slice(spec.p1, spec.p1 + spec.p2)
            eps[:, block] = eps[:, block] @ chol.T
        x = signal + eps
        z = normalize_columns(DataMatrix(x))
    return GeneratedDataset(
        X=DataMatrix(x),
        Z=z,
        labels=Assignment(labels, spec.K),
        loading_true=LoadingMatrix(loading),
        centers_true=CentroidSet(centers),
    )


def normalize_columns(X: DataMatrix) -> DataMatrix:
    """Center each column and scale it to unit sample variance (divisor n-1)."""
    if X.n < 2:
        raise DegenerateDataError("normalization needs at least 2 rows")
    centered = X.values - X.values.mean(axis=0)
    sd = centered.std(axis=0, ddof=1)
    dead = np.flatnonzero(sd <= 0.0)
    if dead.size:
        raise DegenerateDataError(
            f"column {int(dead[0])} is constant; cannot scale to unit variance"
        )
    return DataMatrix(centered / sd)
