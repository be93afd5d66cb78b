"""Model manifolds, densities, seeded sampling, quadrature, reference spectra.

Three closed-form manifolds are supported: an interval in R^1, a circle in
R^2 and a sphere in R^3.  Distances elsewhere in the package are always
ambient (chordal) Euclidean, never geodesic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import lpmv

from .errors import (
    DegenerateDensityError,
    InvalidArgumentError,
    UnsupportedConfigurationError,
)

_CDF_NODES = 10_000  # inverse-CDF table size for 1D sampling
_REJECTION_MIN_RATE = 1e-3


@dataclass(frozen=True)
class ManifoldModel:
    """One of Interval(a,b) in R^1, Circle(rho) in R^2, Sphere(rho) in R^3."""

    shape: str
    a: float = 0.0
    b: float = 1.0
    radius: float = 1.0

    @staticmethod
    def interval(a=0.0, b=1.0):
        if not b > a:
            raise InvalidArgumentError("interval requires b > a")
        return ManifoldModel("interval", a=float(a), b=float(b))

    @staticmethod
    def circle(radius=1.0):
        if radius <= 0:
            raise InvalidArgumentError("radius must be positive")
        return ManifoldModel("circle", radius=float(radius))

    @staticmethod
    def sphere(radius=1.0):
        if radius <= 0:
            raise InvalidArgumentError("radius must be positive")
        return ManifoldModel("sphere", radius=float(radius))

    @property
    def intrinsic_dim(self):
        return 2 if self.shape == "sphere" else 1

    @property
    def ambient_dim(self):
        return {"interval": 1, "circle": 2, "sphere": 3}[self.shape]

    @property
    def has_boundary(self):
        return self.shape == "interval"

    @property
    def volume(self):
        if self.shape == "interval":
            return self.b - self.a
        if self.shape == "circle":
            return 2.0 * math.pi * self.radius
        return 4.0 * math.pi * self.radius**2

    def on_manifold(self, points, tol=1e-12):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape == "interval":
            return bool(
                np.all(pts[:, 0] >= self.a - tol) and np.all(pts[:, 0] <= self.b + tol)
            )
        r = np.linalg.norm(pts, axis=1)
        return bool(np.all(np.abs(r - self.radius) <= tol * max(1.0, self.radius)))

    def parameter(self, points):
        """Intrinsic parameter of ambient points.

        interval -> x, circle -> angle in [0, 2pi), sphere -> (theta, phi)
        with theta the azimuth and phi the colatitude.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape == "interval":
            return pts[:, 0]
        if self.shape == "circle":
            th = np.arctan2(pts[:, 1], pts[:, 0])
            return np.mod(th, 2.0 * math.pi)
        th = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
        phi = np.arccos(np.clip(pts[:, 2] / self.radius, -1.0, 1.0))
        return np.stack([th, phi], axis=1)

    def embed(self, s):
        """Ambient coordinates from the 1D intrinsic parameter (not sphere)."""
        s = np.asarray(s, dtype=float)
        if self.shape == "interval":
            return s[:, None]
        if self.shape == "circle":
            return self.radius * np.stack([np.cos(s), np.sin(s)], axis=1)
        raise InvalidArgumentError("embed() takes a 1D parameter; sphere is 2D")

    def normalized_coordinate(self, points):
        """Coordinate driving the cosine density perturbation.

        interval: (x-a)/(b-a) in [0,1]; circle: angle/pi - 1 in [-1,1) so the
        perturbation stays periodic; sphere: colatitude/pi in [0,1].
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape == "interval":
            return (pts[:, 0] - self.a) / (self.b - self.a)
        if self.shape == "circle":
            return self.parameter(pts) / math.pi - 1.0
        return self.parameter(pts)[:, 1] / math.pi


@dataclass(frozen=True)
class DensitySpec:
    """Sampling density on a manifold, normalized to unit total mass.

    form 'uniform'; 'cosine' with p proportional to 1 + a*cos(pi*s) in the
    normalized coordinate s; or 'table' of positive values on a uniform
    parameter grid over [0, 1] (1D manifolds only).
    """

    form: str = "uniform"
    a: float = 0.0
    table: tuple = ()

    def __post_init__(self):
        if self.form not in ("uniform", "cosine", "table"):
            raise InvalidArgumentError(f"unknown density form {self.form!r}")
        if self.form == "cosine" and not abs(self.a) < 1.0:
            raise InvalidArgumentError("cosine perturbation needs |a| < 1")
        if self.form == "table":
            if len(self.table) < 2:
                raise InvalidArgumentError("table density needs >= 2 values")
            if min(self.table) <= 0:
                raise InvalidArgumentError("table density must be positive")

    def normalization(self, manifold: ManifoldModel) -> float:
        """Constant Z with p = raw/Z; cosine perturbations integrate to zero."""
        if self.form in ("uniform", "cosine"):
            return manifold.volume
        s = np.linspace(0.0, 1.0, len(self.table))
        return float(np.trapezoid(np.asarray(self.table), s) * manifold.volume)

    def _raw(self, s, manifold: ManifoldModel):
        if self.form == "uniform":
            return np.ones_like(s)
        if self.form == "cosine":
            return 1.0 + self.a * np.cos(math.pi * s)
        if manifold.shape == "sphere":
            raise UnsupportedConfigurationError("table densities are 1D only")
        grid = np.linspace(0.0, 1.0, len(self.table))
        return np.interp(s, grid, np.asarray(self.table))

    def pdf(self, points, manifold: ManifoldModel):
        s = manifold.normalized_coordinate(points)
        return self._raw(s, manifold) / self.normalization(manifold)

    def pdf_param(self, s, manifold: ManifoldModel):
        """Density at normalized coordinate s (vectorized)."""
        s = np.asarray(s, dtype=float)
        return self._raw(s, manifold) / self.normalization(manifold)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    density_at_points: np.ndarray
    manifold: ManifoldModel
    seed: int

    def __post_init__(self):
        self.points.setflags(write=False)
        self.density_at_points.setflags(write=False)

    @property
    def n(self):
        return self.points.shape[0]

    def to_csv(self, path):
        d = self.points.shape[1]
        header = ",".join(f"x{k+1}" for k in range(d)) + ",p"
        data = np.column_stack([self.points, self.density_at_points])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def _cdf_table(manifold, density, nodes=_CDF_NODES):
    """Inverse-CDF table on the normalized coordinate for 1D manifolds."""
    s = np.linspace(0.0, 1.0, nodes)
    if manifold.shape == "interval":
        raw = density.pdf_param(s, manifold)
    else:
        # circle: normalized coordinate of angle 2*pi*s is 2s - 1
        raw = density.pdf_param(2.0 * s - 1.0, manifold)
    cdf = np.concatenate([[0.0], np.cumsum((raw[1:] + raw[:-1]) * 0.5 * np.diff(s))])
    cdf /= cdf[-1]
    return s, cdf


def sample(manifold: ManifoldModel, density: DensitySpec, n: int, seed: int) -> PointCloud:
    """n i.i.d. draws from the density; deterministic for a fixed seed.

    1D manifolds invert a tabulated CDF; the sphere uses rejection against
    sup p with uniform proposals.
    """
    if n < 1:
        raise InvalidArgumentError("sample size must be >= 1")
    rng = np.random.default_rng(seed)

    if manifold.shape in ("interval", "circle"):
        sgrid, cdf = _cdf_table(manifold, density)
        u = rng.random(n)
        s = np.interp(u, cdf, sgrid)
        if manifold.shape == "interval":
            pts = manifold.embed(manifold.a + s * (manifold.b - manifold.a))
        else:
            pts = manifold.embed(2.0 * math.pi * s)
    else:
        sup = _sphere_sup_raw(density, manifold)
        chunks = []
        accepted = proposed = 0
        while accepted < n:
            m = max(2 * (n - accepted), 1024)
            v = rng.standard_normal((m, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            v *= manifold.radius
            u = rng.random(m)
            keep = u * sup <= density._raw(manifold.normalized_coordinate(v), manifold)
            chunks.append(v[keep])
            accepted += int(keep.sum())
            proposed += m
            if proposed >= 10_000 and accepted / proposed < _REJECTION_MIN_RATE:
                raise DegenerateDensityError(
                    f"rejection acceptance rate {accepted / proposed:.2e} below "
                    f"{_REJECTION_MIN_RATE}"
                )
        pts = np.vstack(chunks)[:n]

    pts = np.ascontiguousarray(pts, dtype=float)
    return PointCloud(
        points=pts,
        density_at_points=np.asarray(density.pdf(pts, manifold), dtype=float),
        manifold=manifold,
        seed=int(seed),
    )


@lru_cache(maxsize=64)
def _sphere_sup_raw_cached(density, manifold):
    s = np.linspace(0.0, 1.0, 4097)
    return float(np.max(density._raw(s, manifold)))


def _sphere_sup_raw(density, manifold):
    return _sphere_sup_raw_cached(density, manifold)


def quadrature_grid(manifold: ManifoldModel, m: int):
    """Nodes and positive weights summing to the manifold volume.

    Trapezoid on the interval, uniform angles on the circle, Fibonacci
    lattice with equal weights on the sphere.
    """
    if m < 2:
        raise InvalidArgumentError("quadrature grid needs m >= 2")
    if manifold.shape == "interval":
        nodes = np.linspace(manifold.a, manifold.b, m)[:, None]
        h = (manifold.b - manifold.a) / (m - 1)
        w = np.full(m, h)
        w[0] *= 0.5
        w[-1] *= 0.5
        return nodes, w
    if manifold.shape == "circle":
        th = 2.0 * math.pi * np.arange(m) / m
        return manifold.embed(th), np.full(m, manifold.volume / m)
    k = np.arange(m)
    z = 1.0 - (2.0 * k + 1.0) / m
    golden = math.pi * (3.0 - math.sqrt(5.0))
    th = golden * k
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    nodes = manifold.radius * np.stack([r * np.cos(th), r * np.sin(th), z], axis=1)
    return nodes, np.full(m, manifold.volume / m)


@dataclass
class ReferenceSpectrum:
    """Ground-truth spectrum of the weighted Neumann operator."""

    eigenvalues: np.ndarray
    eigenfunction_eval: object  # (index, points) -> values
    provenance: str

    def groups(self, rtol=1e-6):
        """Consecutive index groups of equal eigenvalues (multiplicity)."""
        out = [[0]]
        ev = self.eigenvalues
        for i in range(1, len(ev)):
            if abs(ev[i] - ev[i - 1]) <= rtol * (1.0 + abs(ev[i])):
                out[-1].append(i)
            else:
                out.append([i])
        return out


def _interval_closed_form(manifold, count):
    ell = manifold.b - manifold.a
    lam = np.array([(m * math.pi / ell) ** 2 for m in range(count)])

    def efun(index, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
        if index == 0:
            return np.ones_like(x)
        return np.cos(index * math.pi * (x - manifold.a) / ell)

    return ReferenceSpectrum(lam, efun, "closed-form")


def _circle_closed_form(manifold, count):
    lam = [0.0]
    modes = [(0, "c")]
    m = 1
    while len(lam) < count:
        lam += [(m / manifold.radius) ** 2] * 2
        modes += [(m, "c"), (m, "s")]
        m += 1
    lam = np.array(lam[:count])
    modes = modes[:count]

    def efun(index, points):
        th = manifold.parameter(np.atleast_2d(np.asarray(points, dtype=float)))
        m, kind = modes[index]
        if m == 0:
            return np.ones_like(th)
        return np.cos(m * th) if kind == "c" else np.sin(m * th)

    return ReferenceSpectrum(lam, efun, "closed-form")


def _sphere_closed_form(manifold, count):
    lam = []
    modes = []
    level = 0
    while len(lam) < count:
        lam += [level * (level + 1) / manifold.radius**2] * (2 * level + 1)
        modes.append((level, 0, "c"))
        for mm in range(1, level + 1):
            modes += [(level, mm, "c"), (level, mm, "s")]
        level += 1
    lam = np.array(lam[:count])
    modes = modes[:count]

    def efun(index, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        par = manifold.parameter(pts)
        th, phi = par[:, 0], par[:, 1]
        level, mm, kind = modes[index]
        leg = lpmv(mm, level, np.cos(phi))
        if mm == 0:
            return leg
        return leg * (np.cos(mm * th) if kind == "c" else np.sin(mm * th))

    return ReferenceSpectrum(lam, efun, "closed-form")


def reference_spectrum(manifold: ManifoldModel, density: DensitySpec, count: int) -> ReferenceSpectrum:
    """First ``count`` eigenvalues (with multiplicity) of the limit operator.

    Closed forms for uniform densities; nonuniform 1D densities delegate to
    the finite-difference oracle; nonuniform sphere is unsupported.
    """
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    if count > 64:
        raise InvalidArgumentError("count > 64 is beyond desk scale")
    if density.form == "uniform":
        if manifold.shape == "interval":
            return _interval_closed_form(manifold, count)
        if manifold.shape == "circle":
            return _circle_closed_form(manifold, count)
        return _sphere_closed_form(manifold, count)
    if manifold.shape == "sphere":
        raise UnsupportedConfigurationError(
            "no reference oracle for nonuniform densities on the sphere"
        )
    return fd_oracle_1d(density, 4001, manifold, count)


def fd_oracle_1d(density: DensitySpec, m: int, domain: ManifoldModel, count: int) -> ReferenceSpectrum:
    """Second-order finite-difference reference for -(1/p^2) (p^2 u')'.

    Neumann closure by ghost nodes on the interval; periodic wrap on the
    circle.  Independent of the kernel pipeline.
    """
    if m < 3:
        raise InvalidArgumentError("fd oracle needs m >= 3")
    if count > m:
        raise InvalidArgumentError("count exceeds grid size")
    if domain.shape == "sphere":
        raise UnsupportedConfigurationError("fd oracle is 1D only")

    if domain.shape == "interval":
        ell = domain.b - domain.a
        h = ell / (m - 1)
        s = np.linspace(0.0, 1.0, m)
        sh = s[:-1] + 0.5 / (m - 1)
        q = density.pdf_param(s, domain) ** 2
        qh = density.pdf_param(sh, domain) ** 2
        # symmetric pencil K u = lam W u with half cells at the ends
        main = np.zeros(m)
        main[:-1] += qh
        main[1:] += qh
        wcell = q.copy()
        wcell[0] *= 0.5
        wcell[-1] *= 0.5
        dinv = 1.0 / np.sqrt(wcell)
        diag = main / h**2 * dinv**2
        off = -qh / h**2 * dinv[:-1] * dinv[1:]
        from scipy.linalg import eigh_tridiagonal

        vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
        u = vecs * dinv[:, None]
        xg = domain.a + s * ell

        def efun(index, points, _xg=xg, _u=u):
            x = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
            return np.interp(x, _xg, _u[:, index])

    else:
        circumference = domain.volume
        h = circumference / m
        s_angle = 2.0 * math.pi * np.arange(m) / m
        coord = s_angle / math.pi - 1.0
        coord_h = (s_angle + math.pi / m) / math.pi - 1.0
        q = density.pdf_param(coord, domain) ** 2
        qh = density.pdf_param(coord_h, domain) ** 2  # midpoint i+1/2
        import scipy.sparse as sp
        import scipy.sparse.linalg as spla

        idx = np.arange(m)
        nxt = (idx + 1) % m
        rows = np.concatenate([idx, idx, nxt])
        cols = np.concatenate([idx, nxt, idx])
        prev_qh = np.roll(qh, 1)
        data = np.concatenate([(qh + prev_qh) / h**2, -qh / h**2, -qh / h**2])
        K = sp.csr_matrix((data, (rows, cols)), shape=(m, m))
        dinv = 1.0 / np.sqrt(q)
        S = sp.diags(dinv) @ K @ sp.diags(dinv)
        scale = float(np.max(np.abs(S.diagonal())))
        vals, vecs = spla.eigsh(
            S.tocsc(), k=count, sigma=-1e-8 * scale, which="LM", mode="normal"
        )
        order = np.argsort(vals)
        vals = vals[order]
        vecs = vecs[:, order]
        u = vecs * dinv[:, None]

        def efun(index, points, _u=u, _m=m):
            th = domain.parameter(np.atleast_2d(np.asarray(points, dtype=float)))
            grid = 2.0 * math.pi * np.arange(_m + 1) / _m
            vals_ext = np.concatenate([_u[:, index], _u[:1, index]])
            return np.interp(np.mod(th, 2.0 * math.pi), grid, vals_ext)

    vals = np.asarray(vals, dtype=float)
    if abs(vals[0]) <= 1e-6:
        vals[0] = 0.0
    return ReferenceSpectrum(vals, efun, f"fd-oracle(m={m})")


def builtin_function(name: str, m: int, manifold: ManifoldModel, points):
    """Named right-hand sides for the Poisson driver."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if name == "zero":
        return np.zeros(pts.shape[0])
    if name == "coordinate":
        return pts[:, 0].copy()
    if name == "cosine":
        if manifold.shape == "interval":
            s = (pts[:, 0] - manifold.a) / (manifold.b - manifold.a)
            return np.cos(m * math.pi * s)
        if manifold.shape == "circle":
            return np.cos(m * manifold.parameter(pts))
        return np.cos(m * manifold.parameter(pts)[:, 1])
    raise InvalidArgumentError(f"unknown builtin function {name!r}")
