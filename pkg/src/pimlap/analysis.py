"""Quantitative verification harness: error tables against the reference
spectrum, log-log rate fits, principal-angle eigenspace comparisons, the
empirical kernel-class discrepancy, and the discrete coercivity constant.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LaplacianSystem, assemble, norm_const, w_field
from .errors import (
    InvalidArgumentError,
    MultiplicityMismatchError,
    PimlapError,
)
from .geometry import (
    DensitySpec,
    ManifoldModel,
    PointCloud,
    quadrature_grid,
    reference_spectrum,
    sample,
)
from .kernels import KernelSpec, eval_R
from .solver import DENSE_EIG_THRESHOLD, EigResult, solve_eig

T_MAX = 0.25  # kernel support must not cover the whole manifold


@dataclass(frozen=True)
class SweepGrid:
    """Experimental axes for a convergence sweep.

    mode 'product' runs every (n, t) combination; 'zip' pairs them into a
    joint refinement ladder.  Every cell runs once per seed.
    """

    manifold: ManifoldModel
    density: DensitySpec
    kernel: KernelSpec
    n_values: tuple
    t_values: tuple
    seeds: tuple
    mode: str = "product"

    def __post_init__(self):
        if not self.n_values or not self.t_values or not self.seeds:
            raise InvalidArgumentError("sweep grid must be nonempty")
        if list(self.n_values) != sorted(self.n_values):
            raise InvalidArgumentError("n_values must be ascending")
        if list(self.t_values) != sorted(self.t_values, reverse=True):
            raise InvalidArgumentError("t_values must be descending")
        if any(t <= 0 or t > T_MAX for t in self.t_values):
            raise InvalidArgumentError(f"t values must lie in (0, {T_MAX}]")
        if self.mode not in ("product", "zip"):
            raise InvalidArgumentError("mode must be 'product' or 'zip'")
        if self.mode == "zip" and len(self.n_values) != len(self.t_values):
            raise InvalidArgumentError("zip mode needs matching axis lengths")

    def cells(self):
        if self.mode == "zip":
            return list(zip(self.n_values, self.t_values))
        return [(n, t) for n in self.n_values for t in self.t_values]


@dataclass
class FitResult:
    slope: float
    intercept: float
    r2: float
    npoints: int
    flag: str = "ok"


def fit_power_law(x, y) -> FitResult:
    """Least-squares slope of log y against log x with its R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if len(x) < 2:
        return FitResult(np.nan, np.nan, np.nan, len(x), "insufficient-points")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    fitted = A @ coef
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return FitResult(float(coef[0]), float(coef[1]), r2, len(x))


@dataclass
class CellRecord:
    n: int
    t: float
    seed: int
    status: str = "ok"
    message: str = ""
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    abs_errors: np.ndarray = field(default_factory=lambda: np.empty(0))
    angles: np.ndarray = field(default_factory=lambda: np.empty(0))
    coercivity: float = np.nan
    discrepancy: float = np.nan
    w_min: float = np.nan
    w_max: float = np.nan
    wall_ms: float = np.nan


@dataclass
class SpectralReport:
    grid: SweepGrid
    count: int
    reference: np.ndarray
    records: list
    fits_vs_t: dict = field(default_factory=dict)
    fits_vs_n: dict = field(default_factory=dict)

    def ok_records(self):
        return [r for r in self.records if r.status == "ok"]

    def mean_abs_error(self, n, t, index):
        vals = [
            r.abs_errors[index]
            for r in self.ok_records()
            if r.n == n and r.t == t and index < len(r.abs_errors)
        ]
        return float(np.mean(vals)) if vals else np.nan

    def median_discrepancy(self, n, t):
        vals = [
            r.discrepancy
            for r in self.ok_records()
            if r.n == n and r.t == t and np.isfinite(r.discrepancy)
        ]
        return float(np.median(vals)) if vals else np.nan

    def rows(self):
        """Flat per-seed per-index rows matching the report.csv schema."""
        out = []
        for r in self.records:
            if r.status != "ok":
                continue
            for i in range(len(r.abs_errors)):
                out.append(
                    {
                        "n": r.n,
                        "t": r.t,
                        "seed": r.seed,
                        "eig_index": i,
                        "lambda_discrete": float(r.eigenvalues[i]),
                        "lambda_reference": float(self.reference[i]),
                        "abs_error": float(r.abs_errors[i]),
                        "subspace_angle": float(r.angles[i]),
                        "coercivity": r.coercivity,
                        "discrepancy": r.discrepancy,
                        "wall_ms": r.wall_ms,
                    }
                )
        return out


def subspace_angle(system, eig: EigResult, group, reference) -> float:
    """Largest principal angle between a discrete eigengroup and the span of
    the reference eigenfunctions sampled at the points, in the B-weighted
    inner product."""
    group = list(group)
    ref_groups = reference.groups()
    ref_group = next((g for g in ref_groups if g[0] == group[0]), None)
    if ref_group is None or len(ref_group) != len(group):
        raise MultiplicityMismatchError(
            len(group), len(ref_group) if ref_group else 0
        )
    U = eig.eigenvectors[:, group]
    V = np.column_stack(
        [reference.eigenfunction_eval(i, system.cloud.points) for i in ref_group]
    )
    BV = np.column_stack([system.B_matvec(V[:, j]) for j in range(V.shape[1])])
    G = V.T @ BV
    G = 0.5 * (G + G.T)
    vals, vecs = np.linalg.eigh(G)
    if np.any(vals <= 0):
        raise InvalidArgumentError(
            "reference functions are B-degenerate at the sample points"
        )
    V = V @ vecs / np.sqrt(vals)
    BV = BV @ vecs / np.sqrt(vals)
    C = U.T @ BV
    sv = np.linalg.svd(C, compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))


def discrepancy(
    cloud: PointCloud,
    kernel: KernelSpec,
    t: float,
    manifold: ManifoldModel,
    density: DensitySpec,
    centers: int = 256,
    quadrature=None,
    quad_m: int = 2048,
) -> float:
    """Empirical sup over kernel centers of |p(f) - p_n(f)| for the class
    f = R(|x - .|^2 / 4t), un-normalized (no C_t factor).

    ``quadrature`` overrides the integral rule with explicit
    (nodes, measure_weights); measure weights already include the density.
    """
    if centers < 8:
        raise InvalidArgumentError("need at least 8 centers")
    center_pts = quadrature_grid(manifold, centers)[0]
    if quadrature is None:
        nodes, wts = quadrature_grid(manifold, max(quad_m, 1000))
        mweights = wts * density.pdf(nodes, manifold)
    else:
        nodes, mweights = quadrature
        nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
        mweights = np.asarray(mweights, dtype=float)
    four_t = 4.0 * t

    def kernel_avg(targets, weights):
        out = np.empty(center_pts.shape[0])
        block = max(1, int(4_000_000 // max(targets.shape[0], 1)))
        for s in range(0, center_pts.shape[0], block):
            cs = center_pts[s : s + block]
            diff = cs[:, None, :] - targets[None, :, :]
            q = (diff * diff).sum(axis=2) / four_t
            rv = np.asarray(eval_R(kernel, q))
            out[s : s + block] = rv @ weights
        return out

    # both sides share one arithmetic path, so feeding the cloud itself as
    # an equal-weight quadrature yields exactly zero
    integral = kernel_avg(nodes, mweights)
    empirical = kernel_avg(cloud.points, np.full(cloud.n, 1.0 / cloud.n))
    return float(np.max(np.abs(integral - empirical)))


def coercivity_constant(system: LaplacianSystem) -> float:
    """Smallest Dirichlet-energy to mean-square ratio over mean-zero vectors:

        min (C_t / (n^2 t)) sum R_t (u_i - u_j)^2  /  ((1/n) sum u_i^2)

    equal to (2 C_t / n) times the second-smallest eigenvalue of L; zero for
    disconnected systems.
    """
    n = system.n
    if system.disconnected or n < 2:
        return 0.0
    if n <= DENSE_EIG_THRESHOLD:
        vals = sla.eigh(system.L_dense(), eigvals_only=True, subset_by_index=[0, 1])
    else:
        L = system.L_csr()
        scale = float(np.max(system.ldiag)) or 1.0
        vals = spla.eigsh(
            L.tocsc(),
            k=2,
            sigma=-1e-8 * scale,
            which="LM",
            return_eigenvectors=False,
        )
        vals = np.sort(vals)
    ct = norm_const(system.t, system.cloud.manifold.intrinsic_dim)
    return float(2.0 * ct / n * max(vals[1], 0.0))


def rayleigh(system: LaplacianSystem, u) -> float:
    """(u' L u) / (u' B u); invalid when the B-form is nonpositive."""
    u = np.asarray(u, dtype=float)
    denom = float(u @ system.B_matvec(u))
    if denom <= 0:
        raise InvalidArgumentError("u' B u must be positive")
    return float(u @ system.L_matvec(u)) / denom


def run_cell(grid: SweepGrid, n: int, t: float, seed: int, count: int, options=None):
    """One sample -> assemble -> solve -> diagnose pass; faults are recorded
    in the returned record, never raised."""
    options = options or {}
    rec = CellRecord(n=n, t=t, seed=seed)
    t0 = time.perf_counter()
    try:
        ref = reference_spectrum(grid.manifold, grid.density, count)
        cloud = sample(grid.manifold, grid.density, n, seed)
        thr = options.get("dense_threshold")
        storage = None if thr is None else ("dense" if n <= int(thr) else "sparse")
        system = assemble(cloud, grid.kernel, t, storage=storage)
        eig = solve_eig(system, count)
        rec.eigenvalues = eig.eigenvalues
        rec.abs_errors = np.abs(eig.eigenvalues - ref.eigenvalues[:count])
        angles = np.full(count, np.nan)
        for g in ref.groups():
            if max(g) < count:
                try:
                    ang = subspace_angle(system, eig, g, ref)
                    angles[g] = ang
                except PimlapError:
                    pass
        rec.angles = angles
        if options.get("coercivity", True):
            rec.coercivity = coercivity_constant(system)
        if options.get("discrepancy", True):
            rec.discrepancy = discrepancy(
                cloud,
                grid.kernel,
                t,
                grid.manifold,
                grid.density,
                centers=options.get("centers", 256),
                quad_m=options.get("quad_m", 2048),
            )
        nodes, _ = quadrature_grid(grid.manifold, options.get("w_nodes", 257))
        wvals = w_field(cloud, grid.kernel, t, nodes)
        rec.w_min = float(np.min(wvals))
        rec.w_max = float(np.max(wvals))
    except (PimlapError, sla.LinAlgError, np.linalg.LinAlgError) as exc:
        rec.status = "error"
        rec.message = f"{type(exc).__name__}: {exc}"
    rec.wall_ms = 1000.0 * (time.perf_counter() - t0)
    return rec


def _run_cell_star(args):
    return run_cell(*args)


def eig_error_table(
    grid: SweepGrid, count: int, options=None, jobs: int = 1
) -> SpectralReport:
    """Run the sweep and fit log-log convergence slopes.

    Slopes vs t use the cells at the largest n; slopes vs n use the cells at
    the smallest t.  Cells that fault are recorded and skipped by the fits.
    """
    ref = reference_spectrum(grid.manifold, grid.density, count)
    tasks = [
        (grid, n, t, seed, count, options)
        for (n, t) in grid.cells()
        for seed in grid.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell_star, tasks))
    else:
        records = [run_cell(*task) for task in tasks]

    report = SpectralReport(
        grid=grid,
        count=count,
        reference=ref.eigenvalues[:count],
        records=records,
    )

    n_max = max(grid.n_values)
    t_min = min(grid.t_values)
    for i in range(1, count):
        ts = sorted({t for (n, t) in grid.cells() if n == n_max})
        ys = [report.mean_abs_error(n_max, t, i) for t in ts]
        report.fits_vs_t[i] = fit_power_law(ts, ys)
        ns = sorted({n for (n, t) in grid.cells() if t == t_min})
        ys = [report.mean_abs_error(n, t_min, i) for n in ns]
        report.fits_vs_n[i] = fit_power_law(ns, ys)
    return report
