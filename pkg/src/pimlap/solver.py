"""Eigen and Poisson solvers for the assembled pencil, plus the continuous
extension formulas that evaluate solutions off the sample set.

The generalized problem L u = lambda B u is delicate because the mass
matrix B, a Gram matrix of the compactly supported tail kernel, is
indefinite once rows hold many neighbors: roughly half its spectrum goes
negative at desk scales.  The meaningful low modes are still well posed:
every eigenvector with lambda != 0 satisfies ones' B u = 0, and on that
subspace the inverted pencil (B, L) is symmetric definite because L is
positive definite there.  Concretely, with

    Btil = B - (B 1)(B 1)' / (1' B 1)        (rank-one correction, Btil 1 = 0)
    Laug = L + (tr L / n^2) 1 1'             (positive definite when connected)

the pairs (mu, v) of Btil v = mu Laug v with mu != 0 have mean-zero v and
map exactly to Eq-pencil pairs via lambda = 1/mu, u = v - 1 (1'Bv)/(1'B1).
The dense path solves that reduction directly; the iterative path runs
ARPACK shift-invert on it, factoring (B - mu0 L) once and applying the
rank-one corrections by the Woodbury identity.

The plain Cholesky-of-B route is still attempted first (it is valid
whenever B happens to be positive definite, e.g. disconnected systems) and
a recorded epsilon-regularization retry sits between the two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .assembly import LaplacianSystem, _query_block_sums, norm_const
from .errors import (
    InvalidArgumentError,
    NumericalFailureError,
    OutOfSupportError,
)

#: dense generalized path up to this n; shift-invert iterative above
DENSE_EIG_THRESHOLD = 2000
#: factor the shifted matrix densely once its fill passes this fraction
DENSE_LU_FILL = 0.25


@dataclass
class EigResult:
    eigenvalues: np.ndarray  # ascending, >= -1e-8 numerical floor
    eigenvectors: np.ndarray  # n x count, B-orthonormal columns
    residuals: np.ndarray  # ||L u - lambda B u|| / ||u|| per pair
    regularization_applied: float
    path: str = ""

    @property
    def count(self):
        return len(self.eigenvalues)


@dataclass
class PoissonSolution:
    u: np.ndarray
    rhs_projection_applied: bool
    iterations: int
    residual: float


def group_eigenvalues(eigenvalues, rel_gap=1e-3):
    """Indices grouped by near-degeneracy: gap <= rel_gap * (1 + lambda)."""
    ev = np.asarray(eigenvalues, dtype=float)
    groups = [[0]]
    for i in range(1, len(ev)):
        if ev[i] - ev[i - 1] <= rel_gap * (1.0 + abs(ev[i - 1])):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _b_orthonormalize(U, b_matvec):
    """Polish columns to B-orthonormality via Cholesky of the small Gram."""
    G = U.T @ np.column_stack([b_matvec(U[:, j]) for j in range(U.shape[1])])
    G = 0.5 * (G + G.T)
    try:
        c = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return U  # leave as computed; invariants will surface the defect
    return sla.solve_triangular(c, U.T, lower=True).T


def _finalize(system, vals, vecs, reg, path):
    vals = np.asarray(vals, dtype=float)
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = _b_orthonormalize(vecs, system.B_matvec)
    res = np.empty(len(vals))
    for j in range(len(vals)):
        u = vecs[:, j]
        r = system.L_matvec(u) - vals[j] * system.B_matvec(u)
        res[j] = np.linalg.norm(r) / np.linalg.norm(u)
    return EigResult(vals, vecs, res, reg, path)


def _deflated_dense(system, count):
    n = system.n
    L = system.L_dense()
    B = system.B_dense()
    ones = np.ones(n)
    b_one = B @ ones
    s = float(ones @ b_one)
    if s <= 0:
        raise NumericalFailureError(
            "constant mode has nonpositive B-norm", {"ones_B_ones": s}
        )
    u0 = ones / np.sqrt(s)
    if count == 1:
        return np.zeros(1), u0[:, None]
    tau = float(np.trace(L)) / n
    if tau <= 0:
        raise NumericalFailureError(
            "stiffness matrix vanishes; pencil has no positive modes",
            {"trace_L": tau},
        )
    btil = B - np.outer(b_one, b_one) / s
    laug = L + (tau / n) * np.outer(ones, ones)
    try:
        mu, V = sla.eigh(btil, laug, subset_by_index=[n - count + 1, n - 1])
    except sla.LinAlgError as exc:
        raise NumericalFailureError(
            "deflated pencil reduction failed (system disconnected?)",
            {"n_components": system.n_components},
        ) from exc
    mu = mu[::-1]
    V = V[:, ::-1]
    if np.any(mu <= 0):
        raise NumericalFailureError(
            "requested more positive pencil modes than exist",
            {"mu": mu.tolist()},
        )
    lam = 1.0 / mu
    U = V + np.outer(ones, -(b_one @ V) / s)
    return np.concatenate([[0.0], lam]), np.column_stack([u0, U])


def _rayleigh_probe(system):
    """Cheap positive Rayleigh estimate used to place the spectral shift."""
    pts = system.cloud.points
    n = system.n
    rng = np.random.default_rng(0)
    candidates = [pts[:, k].copy() for k in range(pts.shape[1])]
    candidates.append(rng.standard_normal(n))
    for v in candidates:
        v = v - v.mean()
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        v /= nv
        denom = float(v @ system.B_matvec(v))
        if denom <= 0:
            continue
        num = float(v @ system.L_matvec(v))
        if num > 0:
            return num / denom
    raise NumericalFailureError("no positive Rayleigh probe found", {})


def _woodbury_opinv(G, u2):
    """Solver for (G - U2 U2') x = b with G prefactored sparse or dense."""
    n = G.shape[0]
    fill = G.nnz / float(n) ** 2
    if fill > DENSE_LU_FILL:
        lu = sla.lu_factor(G.toarray())
        base = lambda x: sla.lu_solve(lu, x)
    else:
        slu = spla.splu(G.tocsc())
        base = slu.solve
    Y = np.column_stack([base(u2[:, 0]), base(u2[:, 1])])
    m2 = np.eye(2) - u2.T @ Y
    m2inv = np.linalg.inv(m2)

    def solve(x):
        z = base(x)
        return z + Y @ (m2inv @ (u2.T @ z))

    return solve


def _deflated_sparse(system, count):
    n = system.n
    if system.disconnected:
        raise NumericalFailureError(
            "iterative eigensolver requires a connected system",
            {"n_components": system.n_components},
        )
    L = system.L_csr()
    B = system.B_csr()
    ones = np.ones(n)
    b_one = B @ ones
    s = float(ones @ b_one)
    if s <= 0:
        raise NumericalFailureError(
            "constant mode has nonpositive B-norm", {"ones_B_ones": s}
        )
    u0 = ones / np.sqrt(s)
    if count == 1:
        return np.zeros(1), u0[:, None]
    tau = float(L.diagonal().sum()) / n

    def btil_mv(x):
        return B @ x - b_one * ((b_one @ x) / s)

    def laug_mv(x):
        return L @ x + (tau * np.mean(x)) * ones

    a_op = spla.LinearOperator((n, n), matvec=btil_mv)
    m_op = spla.LinearOperator((n, n), matvec=laug_mv)
    lam_est = _rayleigh_probe(system)
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    v0 -= v0.mean()

    last_exc = None
    for fac in (1.0, 0.5, 2.0, 0.25):
        mu0 = fac * 2.0 / lam_est
        try:
            G = (B - mu0 * L).tocsr()
            u2 = np.column_stack([b_one / np.sqrt(s), np.sqrt(mu0 * tau / n) * ones])
            opinv_solve = _woodbury_opinv(G, u2)
            opinv = spla.LinearOperator((n, n), matvec=opinv_solve)
            mu, V = spla.eigsh(
                a_op,
                k=count - 1,
                M=m_op,
                sigma=mu0,
                mode="normal",
                which="LM",
                OPinv=opinv,
                v0=v0,
            )
        except (RuntimeError, spla.ArpackError, ValueError) as exc:
            last_exc = exc
            continue
        order = np.argsort(mu)[::-1]
        mu = mu[order]
        V = V[:, order]
        if np.all(mu > 0):
            lam = 1.0 / mu
            U = V + np.outer(ones, -(b_one @ V) / s)
            return np.concatenate([[0.0], lam]), np.column_stack([u0, U])
        last_exc = NumericalFailureError(
            "shift-invert returned nonpositive pencil modes", {"mu": mu.tolist()}
        )
    raise NumericalFailureError(
        f"iterative eigensolver failed after shift retries: {last_exc}",
        {"lam_est": lam_est},
    )


def solve_eig(system: LaplacianSystem, count: int) -> EigResult:
    """Smallest ``count`` eigenpairs of L u = lambda B u, B-orthonormal.

    Dense reductions up to n = 2000, ARPACK shift-invert beyond.  The
    B-Cholesky route runs first with one recorded epsilon retry; the
    deflation described in the module docstring handles indefinite B.
    """
    n = system.n
    if count < 1 or count > n:
        raise InvalidArgumentError("count must satisfy 1 <= count <= n")

    if n <= DENSE_EIG_THRESHOLD or count >= n - 1:
        L = system.L_dense()
        B = system.B_dense()
        try:
            vals, vecs = sla.eigh(L, B, subset_by_index=[0, count - 1])
            return _finalize(system, vals, vecs, 0.0, "cholesky")
        except sla.LinAlgError:
            pass
        eps = 1e-12 * float(np.trace(B)) / n
        try:
            vals, vecs = sla.eigh(
                L, B + eps * np.eye(n), subset_by_index=[0, count - 1]
            )
            return _finalize(system, vals, vecs, eps, "cholesky-regularized")
        except sla.LinAlgError:
            pass
        vals, vecs = _deflated_dense(system, count)
        return _finalize(system, vals, vecs, 0.0, "deflated")

    vals, vecs = _deflated_sparse(system, count)
    return _finalize(system, vals, vecs, 0.0, "shift-invert")


def solve_poisson(
    system: LaplacianSystem, f, rtol: float = 1e-10, maxiter: int | None = None
) -> PoissonSolution:
    """Mean-zero solution of the kernel Poisson system (1/n) L_t u = b.

    b_i = (1/n) sum_j barR_t(x_i, x_j) f_j is projected onto range(L);
    conjugate gradients with Jacobi preconditioning run on the projected
    system with re-centering every iteration.
    """
    n = system.n
    f = np.asarray(f, dtype=float)
    if f.shape != (n,):
        raise InvalidArgumentError(f"f must have shape ({n},)")
    if not np.all(np.isfinite(f)):
        raise InvalidArgumentError("f must be finite")
    if maxiter is None:
        maxiter = 10 * n

    ct = norm_const(system.t, system.cloud.manifold.intrinsic_dim)
    scale = ct / n
    b = scale * system.B_matvec(f)
    if not np.any(b):
        return PoissonSolution(np.zeros(n), False, 0, 0.0)

    bmean = float(b.mean())
    b_proj = b - bmean
    projected = bmean != 0.0
    bnorm = np.linalg.norm(b_proj)
    if bnorm == 0.0:
        return PoissonSolution(np.zeros(n), projected, 0, 0.0)

    diag = scale * system.ldiag
    dmax = float(diag.max(initial=0.0))
    if dmax <= 0:
        raise NumericalFailureError(
            "stiffness matrix vanishes but the right-hand side does not",
            {"rhs_norm": float(bnorm)},
        )
    mdiag = np.maximum(diag, 1e-30 * dmax)

    def a_mv(x):
        return scale * system.L_matvec(x)

    x = np.zeros(n)
    r = b_proj.copy()
    z = r / mdiag
    z -= z.mean()
    p = z.copy()
    rz = float(r @ z)
    history = []
    it = 0
    while it < maxiter:
        relres = np.linalg.norm(r) / bnorm
        history.append(relres)
        if relres <= rtol:
            break
        q = a_mv(p)
        pq = float(p @ q)
        if pq <= 0:
            raise NumericalFailureError(
                "conjugate gradients broke down (nonpositive curvature)",
                {"iteration": it, "residual_history": history},
            )
        alpha = rz / pq
        x += alpha * p
        x -= x.mean()
        r -= alpha * q
        r -= r.mean()
        z = r / mdiag
        z -= z.mean()
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    else:
        raise NumericalFailureError(
            f"conjugate gradients did not converge in {maxiter} iterations",
            {"residual_history": history},
        )

    x -= x.mean()
    final = float(np.linalg.norm(a_mv(x) - b_proj) / bnorm)
    return PoissonSolution(x, projected, it, final)


def apply_Ttn(system: LaplacianSystem, f, query, u=None):
    """Solution-operator value at arbitrary points:

    T(f)(x) = [sum_j R_t(x, x_j) u_j + t sum_j barR_t(x, x_j) f_j] / (n w(x))

    with u the Poisson solution for f.  The smoothed right-hand side enters
    through its projection onto range(L) — the same projection the Poisson
    solve applies — which keeps T an exact inverse on the samples:
    T(f)(x_i) = u_i.  Queries outside every kernel bump raise
    OutOfSupportError.
    """
    f = np.asarray(f, dtype=float)
    if u is None:
        u = solve_poisson(system, f).u
    queries = np.atleast_2d(np.asarray(query, dtype=float))
    scalar = np.asarray(query).ndim == 1
    sum_r, sum_ru, sum_bf = _query_block_sums(
        queries, system.cloud.points, system.t, system.kernel, weights_r=u, weights_br=f
    )
    if np.any(sum_r <= 0):
        raise OutOfSupportError("query point outside all kernel supports")
    ct = norm_const(system.t, system.cloud.manifold.intrinsic_dim)
    n = system.n
    w = (ct / n) * sum_r
    beta = float(np.mean((ct / n) * system.B_matvec(f)))
    vals = (ct * sum_ru + system.t * ct * sum_bf) / (n * w) - system.t * beta / w
    return float(vals[0]) if scalar else vals


def extend_eigvec(system: LaplacianSystem, u, lam: float, query):
    """Closed-form continuation of a discrete eigenvector:

    I(u)(x) = [lam t sum_j barR_t(x, x_j) u_j + sum_j R_t(x, x_j) u_j]
              / sum_j R_t(x, x_j)

    which restricts to u on the samples.
    """
    u = np.asarray(u, dtype=float)
    queries = np.atleast_2d(np.asarray(query, dtype=float))
    scalar = np.asarray(query).ndim == 1
    sum_r, sum_ru, sum_bu = _query_block_sums(
        queries, system.cloud.points, system.t, system.kernel, weights_r=u, weights_br=u
    )
    if np.any(sum_r <= 0):
        raise OutOfSupportError("query point outside all kernel supports")
    vals = (lam * system.t * sum_bu + sum_ru) / sum_r
    return float(vals[0]) if scalar else vals


def export_eigpairs(result: EigResult, csv_path, vectors_path=None):
    """CSV of (index, lambda, residual) plus an optional eigenvector matrix."""
    with open(csv_path, "w") as fh:
        fh.write("index,lambda,residual\n")
        for i, (lam, res) in enumerate(zip(result.eigenvalues, result.residuals)):
            fh.write(f"{i},{lam:.17g},{res:.17g}\n")
    if vectors_path is not None:
        np.savetxt(vectors_path, result.eigenvectors, fmt="%.17g")
