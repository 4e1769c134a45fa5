"""Empirical distances between sample sets and reference densities.

The quadratic-transport distances come in three flavors: the exact 1-D sorted
coupling, an exact linear-assignment solver for small multivariate sets, and a
sliced estimator that averages 1-D distances over random directions.  The
total-variation estimate is a fixed-bin histogram distance against either a
quadrature truth grid or a second sample set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .potentials import CompositePotential, ContractViolation

W2_EXACT_SIZE_CAP = 4096


@dataclass
class SampleSet:
    """Matrix of draws (one row per chain/sample) with provenance metadata."""

    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if self.points.shape[0] < 1:
            raise ContractViolation("sample set must be nonempty")
        if not np.isfinite(self.points).all():
            raise ContractViolation("sample set contains nonfinite entries")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        """One row per sample, `repr` (shortest round-trip) formatting.

        A leading ``#`` line records the config hash and seed.
        """
        with open(path, "w", newline="") as fh:
            fh.write(f"# config_hash={self.meta.get('config_hash', '')} "
                     f"seed={self.meta.get('seed', '')} "
                     f"variant={self.meta.get('variant', '')}\n")
            fh.write(",".join(f"x{i}" for i in range(self.dim)) + "\n")
            for row in self.points:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SampleSet":
        meta = {}
        with open(path) as fh:
            first = fh.readline()
            if first.startswith("#"):
                for token in first[1:].split():
                    if "=" in token:
                        key, val = token.split("=", 1)
                        meta[key] = val
                fh.readline()  # header
            rows = [[float(v) for v in line] for line in csv.reader(fh) if line]
        return cls(points=np.asarray(rows, dtype=np.float64), meta=meta)


def _points(a) -> np.ndarray:
    if isinstance(a, SampleSet):
        return a.points
    return np.atleast_2d(np.asarray(a, dtype=np.float64))


def _sorted_1d(a) -> np.ndarray:
    pts = _points(a)
    if pts.shape[1] != 1:
        raise ContractViolation("1-D distance needs 1-D samples")
    return np.sort(pts[:, 0])


def _quantile_match(sorted_vals: np.ndarray, n: int) -> np.ndarray:
    """Downsample a sorted sample to n points by quantile matching."""
    q = (np.arange(n) + 0.5) / n
    return np.quantile(sorted_vals, q, method="linear")


def w2_1d(a, b) -> float:
    """Exact quadratic-transport distance between 1-D empirical measures.

    Sorting gives the optimal coupling.  Unequal sizes are handled by
    quantile-matching the larger set down to the smaller one, which makes the
    result an estimator rather than the exact distance.
    """
    xs, ys = _sorted_1d(a), _sorted_1d(b)
    if xs.size == 0 or ys.size == 0:
        raise ContractViolation("empty sample set")
    if xs.size != ys.size:
        n = min(xs.size, ys.size)
        if xs.size > n:
            xs = _quantile_match(xs, n)
        else:
            ys = _quantile_match(ys, n)
    return math.sqrt(float(np.mean((xs - ys) ** 2)))


def w2_exact(a, b) -> float:
    """Exact transport distance between equal-size empirical measures.

    Solves the linear assignment problem on the squared-distance matrix; the
    solver is an exact augmenting-path method, so desk-scale results are not
    approximations.  Capped at 4096 points.
    """
    pa, pb = _points(a), _points(b)
    if pa.shape != pb.shape:
        raise ContractViolation("sample sets must have equal shape")
    n = pa.shape[0]
    if n > W2_EXACT_SIZE_CAP:
        raise ContractViolation(f"size cap {W2_EXACT_SIZE_CAP} exceeded")
    cost = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(float(cost[rows, cols].sum()) / n)


def w2_sliced(a, b, n_proj: int, rng: np.random.Generator) -> float:
    """Sliced transport estimate: RMS of 1-D distances over random directions.

    Directions are uniform on the sphere (normalized Gaussian draws from the
    caller's dedicated stream); with a seeded generator the estimate is
    deterministic.
    """
    if n_proj < 1:
        raise ContractViolation("n_proj must be >= 1")
    pa, pb = _points(a), _points(b)
    if pa.shape[1] != pb.shape[1]:
        raise ContractViolation("dimension mismatch")
    d = pa.shape[1]
    dirs = rng.standard_normal((n_proj, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sq = np.empty(n_proj)
    for i in range(n_proj):
        sq[i] = w2_1d((pa @ dirs[i])[:, None], (pb @ dirs[i])[:, None]) ** 2
    return math.sqrt(float(np.mean(sq)))


@dataclass
class DensityGrid:
    """1-D truth density on a uniform grid of cells.

    ``centers`` are the cell midpoints, ``density`` the normalized density
    there, and ``cell_mass`` the per-cell probability (summing to one).
    """

    lo: float
    hi: float
    centers: np.ndarray
    density: np.ndarray
    cell_mass: np.ndarray

    def __post_init__(self):
        if not np.all(np.diff(self.centers) > 0):
            raise ContractViolation("grid abscissae must be strictly increasing")
        if np.any(self.density < 0.0) or np.any(self.cell_mass < 0.0):
            raise ContractViolation("density values must be nonnegative")
        if abs(float(self.cell_mass.sum()) - 1.0) > 1e-8:
            raise ContractViolation("cell masses must sum to 1 within 1e-8")

    @property
    def n_cells(self) -> int:
        return self.centers.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("x,density,cell_mass\n")
            for x, f, m in zip(self.centers, self.density, self.cell_mass):
                fh.write(f"{x!r},{f!r},{m!r}\n")


def quadrature_density_1d(pot: CompositePotential, span: tuple[float, float] | None = None,
                          n_cells: int = 4000) -> DensityGrid:
    """Normalize ``exp(-energy)`` on a 1-D grid by per-cell Simpson quadrature.

    The default span is minimizer +/- 10 standard deviations of the
    strong-convexity Gaussian envelope.  The envelope also certifies the
    truncated tails: for convex energy the mass beyond an edge is at most
    ``density(edge) / subgrad(edge)``, and construction fails if that bound
    exceeds 1e-6.
    """
    if pot.dim != 1:
        raise ContractViolation("quadrature truth oracle is 1-D only")
    if n_cells < 2:
        raise ContractViolation("need at least 2 cells")
    if span is None:
        from .samplers import make_init  # local import to avoid a cycle
        center = make_init(pot, "point").center[0]
        half = 10.0 / math.sqrt(pot.strong_lambda)
        span = (center - half, center + half)
    lo, hi = float(span[0]), float(span[1])
    if not lo < hi:
        raise ContractViolation("span must be increasing")

    edges = np.linspace(lo, hi, n_cells + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    energy_edges = np.atleast_1d(pot.value(edges[:, None]))
    energy_centers = np.atleast_1d(pot.value(centers[:, None]))
    shift = min(energy_edges.min(), energy_centers.min())
    f_edges = np.exp(-(energy_edges - shift))
    f_centers = np.exp(-(energy_centers - shift))
    h = (hi - lo) / n_cells
    cell_integrals = h / 6.0 * (f_edges[:-1] + 4.0 * f_centers + f_edges[1:])
    z = float(cell_integrals.sum())
    if not np.isfinite(z) or z <= 0.0:
        raise ContractViolation("quadrature failed: energy not integrable on span")
    mass = cell_integrals / z
    density = f_centers / z

    # convexity-based tail certificates at both edges
    g_hi = float(pot.subgrad(np.array([hi]))[0])
    g_lo = float(pot.subgrad(np.array([lo]))[0])
    if g_hi <= 0.0 or g_lo >= 0.0:
        raise ContractViolation("span does not bracket the mode")
    tail = f_edges[-1] / z / g_hi + f_edges[0] / z / (-g_lo)
    if tail > 1e-6:
        raise ContractViolation(f"span leaves {tail:.2e} mass outside (limit 1e-6)")
    return DensityGrid(lo=lo, hi=hi, centers=centers, density=density,
                       cell_mass=mass)


def _bin_masses_from_grid(grid: DensityGrid, n_bins: int) -> np.ndarray:
    """Aggregate grid cell masses into equal-width bins (exact proration)."""
    edges = np.linspace(grid.lo, grid.hi, grid.n_cells + 1)
    bin_edges = np.linspace(grid.lo, grid.hi, n_bins + 1)
    masses = np.zeros(n_bins)
    cell_lo, cell_hi = edges[:-1], edges[1:]
    width = cell_hi - cell_lo
    for j in range(n_bins):
        overlap = (np.minimum(cell_hi, bin_edges[j + 1])
                   - np.maximum(cell_lo, bin_edges[j])).clip(min=0.0)
        masses[j] = float((grid.cell_mass * overlap / width).sum())
    return masses


def tv_histogram(a, truth, n_bins: int) -> float:
    """Histogram total-variation distance, always in [0, 1].

    ``truth`` is either a `DensityGrid` (bins span the truth grid and samples
    are clipped into it) or a second sample set (bins span the pooled range).
    Bins are fixed by the truth side, never adapted to the samples.
    """
    pa = _points(a)
    if pa.shape[1] != 1:
        raise ContractViolation("histogram distance is 1-D only")
    if n_bins < 2:
        raise ContractViolation("need at least 2 bins")
    xs = pa[:, 0]
    if isinstance(truth, DensityGrid):
        lo, hi = truth.lo, truth.hi
        p_truth = _bin_masses_from_grid(truth, n_bins)
        xs = np.clip(xs, lo, hi)
    else:
        pb = _points(truth)
        if pb.shape[1] != 1:
            raise ContractViolation("histogram distance is 1-D only")
        ys = pb[:, 0]
        lo = float(min(xs.min(), ys.min()))
        hi = float(max(xs.max(), ys.max()))
        if lo == hi:
            hi = lo + 1.0
        p_truth = np.histogram(ys, bins=n_bins, range=(lo, hi))[0] / ys.size
    p_a = np.histogram(xs, bins=n_bins, range=(lo, hi))[0] / xs.size
    return 0.5 * float(np.abs(p_a - p_truth).sum())


def moment4(a, center) -> float:
    """Empirical fourth moment ``mean ||x - center||^4``."""
    pts = _points(a)
    center = np.asarray(center, dtype=np.float64).reshape(pts.shape[1])
    sq = ((pts - center) ** 2).sum(axis=1)
    return float(np.mean(sq * sq))
