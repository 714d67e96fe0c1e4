"""Empirical consistency laboratory.

Small, certified experiments that check the estimator's large-sample behavior
at desk scale:

* a brute-force global-optimum oracle for two-dimensional data projected to a
  line (angle grid x exact 1-D k-means), with a certified optimality gap,
* replicated sampling experiments that track the fitted loss, the aligned
  parameter distance to the population optimum, and the variance-ratio
  statistic across a grid of sample sizes,
* dimension-selection agreement rates on the synthetic benchmark,
* the finite-sample deviation-probability bound.

Every replication derives its own RNG stream from (seed, n, rep), so reports
are independent of scheduling and reproducible bit for bit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from ._seeds import spawn_rng, spawn_seed
from .baselines import kmeans_1d_exact
from .datagen import DatasetSpec, generate_dataset
from .errors import DegenerateDataError
from .metrics import adjusted_rand_index, param_distance
from .selection import select_dimension, vr_hat
from .solver import SolverConfig, fit_rkm
from .types import CentroidSet, DataMatrix, LoadingMatrix, RkmSolution


@dataclass(frozen=True)
class PopulationSpec:
    """Finitely supported population: m support points in R^p with
    probabilities summing to one."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        weights = np.array(self.weights, dtype=np.float64)
        if atoms.ndim != 2 or atoms.shape[0] < 1:
            raise ValueError(f"atoms must be a non-empty 2-D matrix, got {atoms.shape}")
        if weights.shape != (atoms.shape[0],):
            raise ValueError("weights must be a vector with one entry per atom")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return self.atoms.shape[0]

    @property
    def p(self) -> int:
        return self.atoms.shape[1]

    def mean_risk_bound_radius(self) -> float:
        """Largest atom norm; bounds every projection and centroid."""
        return float(np.sqrt(np.sum(self.atoms * self.atoms, axis=1).max()))


@dataclass(frozen=True)
class OracleSolution:
    """Certified near-global optimum from the angle-grid search: the best
    grid loss is within grid_gap of the true global optimum."""

    loss: float
    loading: LoadingMatrix
    centroids: CentroidSet
    angle: float
    grid_gap: float


def _as_atoms(target) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(target, PopulationSpec):
        return np.asarray(target.atoms), np.asarray(target.weights)
    if isinstance(target, DataMatrix):
        n = target.n
        return np.asarray(target.values), np.full(n, 1.0 / n)
    raise TypeError(f"expected DataMatrix or PopulationSpec, got {type(target).__name__}")


def oracle_global_min(target, k: int, angle_grid_size: int = 2000) -> OracleSolution:
    """Global minimum of the k-cluster line-projection loss for 2-D data, by
    exhaustive search over angle_grid_size directions in [0, pi) with the 1-D
    subproblem solved exactly at every angle.

    The loss is 2R^2-Lipschitz in the angle (R = largest point norm), so the
    best grid value is within grid_gap = 2 R^2 pi / angle_grid_size of the
    true optimum over all directions.
    """
    atoms, weights = _as_atoms(target)
    if atoms.shape[1] != 2:
        raise ValueError(f"the oracle is restricted to p=2, got p={atoms.shape[1]}")
    k = int(k)
    m = atoms.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= {m} points, got k={k}")
    if angle_grid_size < 1:
        raise ValueError("angle_grid_size must be >= 1")

    angles = np.linspace(0.0, np.pi, angle_grid_size, endpoint=False)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    # all projections at once: row g holds the m projected values at angle g
    t = dirs @ atoms.T
    order = np.argsort(t, axis=1, kind="stable")
    ts = np.take_along_axis(t, order, axis=1)
    ws = weights[order]
    within = _grouped_1d_kmeans_loss(ts, ws, k)

    sq_norms = float(weights @ np.sum(atoms * atoms, axis=1))
    proj_var = (ws * ts * ts).sum(axis=1)
    losses = (sq_norms - proj_var) + within
    g_best = int(losses.argmin())

    theta = float(angles[g_best])
    direction = np.array([[math.cos(theta)], [math.sin(theta)]])
    km = kmeans_1d_exact(ts[g_best], k, weights=ws[g_best])
    radius = float(np.sqrt(np.sum(atoms * atoms, axis=1).max()))
    gap = 2.0 * radius * radius * np.pi / angle_grid_size
    return OracleSolution(
        loss=float(losses[g_best]),
        loading=LoadingMatrix(direction),
        centroids=CentroidSet(km.centers),
        angle=theta,
        grid_gap=gap,
    )


def _grouped_1d_kmeans_loss(ts: np.ndarray, ws: np.ndarray, k: int) -> np.ndarray:
    """Exact 1-D k-means loss for every row of ts at once.

    Each row must be sorted; ws holds the matching weights. Returns the
    weighted within-cluster SSE divided by the row weight total. Same dynamic
    program as kmeans_1d_exact, batched across rows.
    """
    g, m = ts.shape
    cw = np.zeros((g, m + 1))
    cwt = np.zeros((g, m + 1))
    cwt2 = np.zeros((g, m + 1))
    np.cumsum(ws, axis=1, out=cw[:, 1:])
    np.cumsum(ws * ts, axis=1, out=cwt[:, 1:])
    np.cumsum(ws * ts * ts, axis=1, out=cwt2[:, 1:])

    def run_cost(s: np.ndarray, i: int) -> np.ndarray:
        """Weighted SSE of runs [s_j, i) for every row, vectorized over s."""
        sw = cw[:, i : i + 1] - cw[:, s]
        s1 = cwt[:, i : i + 1] - cwt[:, s]
        s2 = cwt2[:, i : i + 1] - cwt2[:, s]
        ratio = np.zeros_like(s1)
        np.divide(s1 * s1, sw, out=ratio, where=sw > 0)
        return np.maximum(s2 - ratio, 0.0)

    # one cluster: cost of the whole prefix [0, i) around its weighted mean
    ratio = np.zeros_like(cwt[:, 1:])
    np.divide(cwt[:, 1:] ** 2, cw[:, 1:], out=ratio, where=cw[:, 1:] > 0)
    cost = np.full((g, m + 1), np.inf)
    cost[:, 0] = 0.0
    cost[:, 1:] = np.maximum(cwt2[:, 1:] - ratio, 0.0)
    for j in range(2, k + 1):
        new_cost = np.full((g, m + 1), np.inf)
        for i in range(j, m + 1):
            s = np.arange(j - 1, i)
            cand = cost[:, s] + run_cost(s, i)
            new_cost[:, i] = cand.min(axis=1)
        cost = new_cost
    totals = cw[:, m].copy()
    totals[totals <= 0] = 1.0
    return cost[:, m] / totals


@dataclass(frozen=True)
class ConvergenceReport:
    """Replicated experiment record: per sample size n, one value per rep of
    the fitted loss, the aligned parameter distance to the population
    optimum, the variance-ratio statistic, and the exact population risk of
    the fitted parameters; plus the oracle's population values."""

    n_grid: tuple
    losses: dict
    distances: dict
    vr_values: dict
    population_risks: dict
    oracle_loss: float | None = None
    oracle_vr: float | None = None
    oracle_gap: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        for name in ("losses", "distances", "vr_values", "population_risks"):
            block = getattr(self, name)
            cleaned = {int(n): tuple(float(v) for v in vals) for n, vals in block.items()}
            if sorted(cleaned) != sorted(self.n_grid):
                raise ValueError(f"{name} must be keyed exactly by n_grid")
            object.__setattr__(self, name, cleaned)
        for n, vals in self.losses.items():
            if any(v < 0 for v in vals):
                raise ValueError(f"negative loss recorded at n={n}")
        if self.oracle_loss is not None:
            floor = self.oracle_loss - self.oracle_gap - 1e-9
            for n, vals in self.population_risks.items():
                bad = [v for v in vals if not math.isnan(v) and v < floor]
                if bad:
                    raise ValueError(
                        f"population risk {min(bad)} at n={n} undercuts the "
                        f"certified optimum {self.oracle_loss} - gap {self.oracle_gap}"
                    )

    def reps(self, n: int) -> int:
        return len(self.losses[int(n)])

    def median(self, field: str, n: int) -> float:
        return float(np.nanmedian(getattr(self, field)[int(n)]))

    def iqr(self, field: str, n: int) -> float:
        values = np.asarray(getattr(self, field)[int(n)])
        q1, q3 = np.nanquantile(values, [0.25, 0.75])
        return float(q3 - q1)

    def summary(self) -> dict:
        out = {}
        for label, field in (
            ("loss", "losses"),
            ("distance", "distances"),
            ("vr", "vr_values"),
            ("population_risk", "population_risks"),
        ):
            out[label] = {
                n: {
                    "median": self.median(field, n),
                    "iqr": self.iqr(field, n),
                }
                for n in self.n_grid
            }
        return out

    def to_json_dict(self) -> dict:
        def block(field):
            return {
                str(n): [None if math.isnan(v) else v for v in vals]
                for n, vals in getattr(self, field).items()
            }

        return {
            "n_grid": list(self.n_grid),
            "losses": block("losses"),
            "distances": block("distances"),
            "vr_values": block("vr_values"),
            "population_risks": block("population_risks"),
            "oracle_loss": self.oracle_loss,
            "oracle_vr": self.oracle_vr,
            "oracle_gap": self.oracle_gap,
        }

    def to_csv_rows(self) -> list:
        """Flat rows, one per (n, rep), for external plotting."""
        rows = [["n", "rep", "loss", "distance", "vr", "population_risk"]]
        for n in self.n_grid:
            for r in range(self.reps(n)):
                vr = self.vr_values[n][r]
                rows.append(
                    [
                        n,
                        r,
                        repr(self.losses[n][r]),
                        repr(self.distances[n][r]),
                        "" if math.isnan(vr) else repr(vr),
                        repr(self.population_risks[n][r]),
                    ]
                )
        return rows

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.to_csv_rows())


def population_risk(pop: PopulationSpec, A: LoadingMatrix, F: CentroidSet) -> float:
    """Exact population loss of the parameters: the weighted mean over atoms
    of the squared distance to the nearest subspace centroid."""
    if A.p != pop.p:
        raise ValueError(f"loading has p={A.p} but population has p={pop.p}")
    t = pop.atoms @ A.values
    d = t[:, None, :] - F.values[None, :, :]
    nearest = np.sum(d * d, axis=2).min(axis=1)
    sq = np.sum(pop.atoms * pop.atoms, axis=1) - np.sum(t * t, axis=1)
    return float(pop.weights @ (sq + nearest))


def _population_vr(pop: PopulationSpec, opt: OracleSolution) -> float:
    """Variance-ratio value of the population at the oracle optimum."""
    t = pop.atoms @ opt.loading.values
    d = t[:, None, :] - opt.centroids.values[None, :, :]
    within = float(pop.weights @ np.sum(d * d, axis=2).min(axis=1))
    mean = pop.weights @ t
    centered = t - mean
    total = float(pop.weights @ np.sum(centered * centered, axis=1))
    if total <= 0.0:
        raise DegenerateDataError("population projects to a single point")
    return within / total


def check_distinctness(pop: PopulationSpec, k: int, angle_grid_size: int = 2000) -> tuple:
    """Oracle losses for 1..k clusters; raises unless strictly decreasing.

    A population whose optimal loss does not strictly improve with every
    added cluster violates the premise of the consistency statements.
    """
    losses = tuple(
        oracle_global_min(pop, j, angle_grid_size=angle_grid_size).loss
        for j in range(1, k + 1)
    )
    for j in range(1, len(losses)):
        if not losses[j] < losses[j - 1]:
            raise DegenerateDataError(
                f"optimal losses are not strictly decreasing in the cluster "
                f"count: m_{j}={losses[j - 1]!r} vs m_{j + 1}={losses[j]!r}"
            )
    return losses


def _sample(pop: PopulationSpec, n: int, rng: np.random.Generator) -> DataMatrix:
    idx = rng.choice(pop.m, size=n, p=pop.weights)
    return DataMatrix(pop.atoms[idx])


def consistency_experiment(
    pop: PopulationSpec,
    k: int,
    q: int,
    n_grid,
    reps: int,
    config: SolverConfig | None = None,
    optimum: OracleSolution | None = None,
    angle_grid_size: int = 2000,
) -> ConvergenceReport:
    """Sample i.i.d. datasets of each size in n_grid, fit the model, and
    record per rep the fitted loss, the aligned parameter distance to the
    population optimum, the variance-ratio statistic, and the exact
    population risk of the fit.

    The optimum comes from the angle-grid oracle (p=2, q=1 only) unless an
    analytic one is supplied. Seeds derive from (config.seed, n, rep).
    """
    if config is None:
        config = SolverConfig(k=k, q=q, restarts=20)
    if config.k != k or config.q != q:
        raise ValueError("config disagrees with the requested k, q")
    if optimum is None:
        if pop.p != 2 or q != 1:
            raise ValueError(
                "no analytic optimum supplied and the oracle needs p=2, q=1"
            )
        check_distinctness(pop, k, angle_grid_size=angle_grid_size)
        optimum = oracle_global_min(pop, k, angle_grid_size=angle_grid_size)
    oracle_vr = None
    try:
        oracle_vr = _population_vr(pop, optimum)
    except DegenerateDataError:
        pass

    n_grid = tuple(int(n) for n in n_grid)
    losses: dict = {n: [] for n in n_grid}
    distances: dict = {n: [] for n in n_grid}
    vr_values: dict = {n: [] for n in n_grid}
    population_risks: dict = {n: [] for n in n_grid}
    theta_star = (optimum.centroids, optimum.loading)
    for n in n_grid:
        if n < k:
            raise ValueError(f"n={n} is smaller than k={k}")
        for r in range(reps):
            X = _sample(pop, n, spawn_rng(config.seed, n, r))
            sol = fit_rkm(X, replace(config, seed=spawn_seed(config.seed, n, r, 1)))
            losses[n].append(sol.loss)
            distances[n].append(
                param_distance((sol.centroids, sol.loading), theta_star, align=True)
            )
            try:
                vr_values[n].append(vr_hat(X, sol))
            except DegenerateDataError:
                vr_values[n].append(float("nan"))
            population_risks[n].append(population_risk(pop, sol.loading, sol.centroids))
    return ConvergenceReport(
        n_grid=n_grid,
        losses=losses,
        distances=distances,
        vr_values=vr_values,
        population_risks=population_risks,
        oracle_loss=optimum.loss,
        oracle_vr=oracle_vr,
        oracle_gap=optimum.grid_gap,
    )


def vr_consistency_experiment(
    pop: PopulationSpec,
    k: int,
    q: int,
    n_grid,
    reps: int,
    config: SolverConfig | None = None,
    angle_grid_size: int = 2000,
) -> ConvergenceReport:
    """Same replication engine as consistency_experiment; of interest here are
    the recorded variance-ratio values, whose medians should drift toward the
    population value with shrinking interquartile range as n grows."""
    return consistency_experiment(
        pop, k, q, n_grid, reps, config=config, angle_grid_size=angle_grid_size
    )


@dataclass(frozen=True)
class AgreementResult:
    """Agreement outcome for one synthetic-benchmark setting: how often the
    variance-ratio selector picked the dimension with the best ARI."""

    setting: tuple
    reps: int
    hits: int
    picks: tuple  # per rep: (selected q, ARI-optimal q)

    @property
    def rate(self) -> float:
        return self.hits / self.reps


def agreement_experiment(
    settings,
    reps: int,
    n: int = 400,
    K: int = 8,
    config: SolverConfig | None = None,
    seed: int = 0,
) -> tuple:
    """For each setting (q_true, p1, p2, p3): generate and normalize `reps`
    datasets, profile dimensions 1..min(K-1, p) with the selector, score each
    profiled fit by ARI against the ground truth, and count how often the
    selected dimension matches the ARI-best one."""
    results = []
    for si, (q_true, p1, p2, p3) in enumerate(settings):
        hits = 0
        picks = []
        for r in range(reps):
            ds = generate_dataset(
                DatasetSpec(
                    K=K, q=q_true, p1=p1, p2=p2, p3=p3, n=n,
                    seed=spawn_seed(seed, si, r, 0),
                )
            )
            q_max = min(K - 1, ds.X.p)
            cfg = SolverConfig(
                k=K,
                q=1,
                restarts=config.restarts if config is not None else 50,
                max_iterations=config.max_iterations if config is not None else 300,
                rel_tolerance=config.rel_tolerance if config is not None else 1e-9,
                seed=spawn_seed(seed, si, r, 1),
            )
            profile = select_dimension(ds.Z, K, q_max, cfg)
            best_q, best_ari = None, -np.inf
            for q, sol in zip(range(1, q_max + 1), profile.solutions):
                ari = adjusted_rand_index(sol.assignment, ds.labels)
                if ari > best_ari:
                    best_q, best_ari = q, ari
            picks.append((profile.q_hat, best_q))
            hits += int(profile.q_hat == best_q)
        results.append(
            AgreementResult(
                setting=(q_true, p1, p2, p3), reps=reps, hits=hits, picks=tuple(picks)
            )
        )
    return tuple(results)


@dataclass(frozen=True)
class RateBound:
    """Finite-sample deviation bound: raw polynomial-times-exponential value
    and its clamp to the probability range."""

    raw: float
    bound: float


def rate_bound(n: int, k: int, p: int, B: float, epsilon: float) -> RateBound:
    """Deviation-probability bound 8 (2n)^{k(p+1)} exp(-n eps^2 / (512 B^2)),
    clamped to 1; valid only when n (eps / 8B)^2 >= 2."""
    n, k, p = int(n), int(k), int(p)
    if n < 1 or k < 1 or p < 1:
        raise ValueError("n, k, p must be positive integers")
    if not (B > 0 and epsilon > 0):
        raise ValueError("B and epsilon must be positive")
    condition = n * (epsilon / (8.0 * B)) ** 2
    if condition < 2.0:
        raise ValueError(
            f"bound requires n*(epsilon/(8*B))**2 >= 2, got {condition!r}"
        )
    log_raw = (
        math.log(8.0)
        + k * (p + 1) * math.log(2.0 * n)
        - n * epsilon * epsilon / (512.0 * B * B)
    )
    raw = math.exp(log_raw) if log_raw < 700 else math.inf
    return RateBound(raw=raw, bound=min(1.0, raw))
