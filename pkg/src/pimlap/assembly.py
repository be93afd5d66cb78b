"""Discrete operator assembly: stiffness L, mass B, kernel-sum field w.

For a cloud x_1..x_n and bandwidth t the entries are

    L_ij = -(1/t) R(|x_i-x_j|^2 / 4t)   (i != j),   L_ii = -sum_j L_ij
    B_ij =        barR(|x_i-x_j|^2 / 4t)            (including j = i)

so the pencil (L, B) is the kernel graph-Laplacian eigenproblem and both
matrices vanish outside ambient distance 2*sqrt(t).

One canonical entry list (row-major, neighbor columns ascending, diagonal
stored last per row) backs every materialization, which makes dense and
sparse storage agree entrywise and makes L @ ones vanish exactly: the
diagonal is the negated sequential sum of the stored off-diagonal values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _backend
from .errors import InvalidArgumentError
from .geometry import PointCloud
from .kernels import KernelSpec, eval_barR, eval_R

#: pair search switches from brute force to the cell list at this n
BRUTE_THRESHOLD = 512
#: storage switches from dense to sparse above this n
DENSE_THRESHOLD = 512


def t_auto(n: int, k: int, c: float = 1.0) -> float:
    """Bandwidth heuristic c * n^(-2/(2k+7)) balancing the two error terms."""
    return c * float(n) ** (-2.0 / (2 * k + 7))


def norm_const(t: float, k: int) -> float:
    """C_t = (4 pi t)^(-k/2), the kernel normalization for intrinsic dim k."""
    return (4.0 * math.pi * t) ** (-0.5 * k)


@dataclass
class LaplacianSystem:
    """Assembled pencil plus the canonical entry arrays that define it."""

    cloud: PointCloud
    kernel: KernelSpec
    t: float
    storage: str
    row_ptr: np.ndarray  # (n+1,) offsets into cols per row
    cols: np.ndarray  # off-diagonal neighbor columns, ascending per row
    lvals: np.ndarray  # off-diagonal L entries
    brvals: np.ndarray  # off-diagonal B entries
    ldiag: np.ndarray
    bdiag: np.ndarray
    w: np.ndarray  # w_{t,n} at the sample points
    disconnected: bool
    n_components: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.cloud.n

    def _canonical(self, vals, diag):
        """CSR with the diagonal stored after each row's sorted neighbors."""
        n = self.n
        counts = np.diff(self.row_ptr) + 1
        indptr = np.concatenate([[0], np.cumsum(counts)])
        indices = np.empty(indptr[-1], dtype=self.cols.dtype)
        data = np.empty(indptr[-1])
        for i in range(n):
            s, e = self.row_ptr[i], self.row_ptr[i + 1]
            cs, ce = indptr[i], indptr[i + 1]
            indices[cs : ce - 1] = self.cols[s:e]
            data[cs : ce - 1] = vals[s:e]
            indices[ce - 1] = i
            data[ce - 1] = diag[i]
        return sp.csr_matrix((data, indices, indptr), shape=(n, n))

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    def L_canonical(self):
        return self._get("Lc", lambda: self._canonical(self.lvals, self.ldiag))

    def B_canonical(self):
        return self._get("Bc", lambda: self._canonical(self.brvals, self.bdiag))

    def L_csr(self):
        return self._get("Lcsr", lambda: self.L_canonical().sorted_indices())

    def B_csr(self):
        return self._get("Bcsr", lambda: self.B_canonical().sorted_indices())

    def L_dense(self):
        return self._get("Ld", lambda: self.L_csr().toarray())

    def B_dense(self):
        return self._get("Bd", lambda: self.B_csr().toarray())

    @property
    def L(self):
        return self.L_dense() if self.storage == "dense" else self.L_csr()

    @property
    def B(self):
        return self.B_dense() if self.storage == "dense" else self.B_csr()

    def L_matvec(self, v):
        return self.L_canonical() @ v

    def B_matvec(self, v):
        return self.B_canonical() @ v

    @property
    def fill_fraction(self):
        return (len(self.cols) + self.n) / float(self.n) ** 2

    def export_coo(self, which: str, path):
        """Coordinate triplet text dump (i, j, value), diagonal included."""
        mat = {"L": self.L_canonical(), "B": self.B_canonical()}[which].tocoo()
        with open(path, "w") as fh:
            fh.write("i j value\n")
            for i, j, v in zip(mat.row, mat.col, mat.data):
                fh.write(f"{i} {j} {v:.17g}\n")


def _find_pairs(points, cutoff_sq, method, n):
    if method == "auto":
        method = "brute" if n < BRUTE_THRESHOLD else "cell"
    if method == "brute":
        return _backend.find_pairs_brute(points, cutoff_sq)
    if method == "cell":
        return _backend.find_pairs_cell(points, cutoff_sq)
    raise InvalidArgumentError(f"unknown neighbor method {method!r}")


def assemble(
    cloud: PointCloud,
    kernel: KernelSpec,
    t: float,
    method: str = "auto",
    storage: str | None = None,
) -> LaplacianSystem:
    """Build the (L, B) pencil for the cloud at bandwidth t.

    ``method`` picks the neighbor search (auto: brute below n=512, cell list
    above); ``storage`` picks the default materialization (auto: dense up to
    n=512).  A system with no interacting pairs is flagged disconnected, not
    rejected.
    """
    if t <= 0:
        raise InvalidArgumentError("bandwidth t must be positive")
    n = cloud.n
    pts = np.ascontiguousarray(cloud.points, dtype=float)
    cutoff_sq = 4.0 * t

    ii, jj, d2 = _find_pairs(pts, cutoff_sq, method, n)
    order = np.lexsort((jj, ii))
    ii, jj, d2 = ii[order], jj[order], d2[order]

    q = d2 / cutoff_sq
    rvals = np.asarray(eval_R(kernel, q), dtype=float).reshape(-1)
    brvals = np.asarray(eval_barR(kernel, q), dtype=float).reshape(-1)
    lvals = -(rvals / t)
    # diagonal = negated sequential row sum of the stored entries, so the
    # canonical matvec against the constant vector is exactly zero
    ldiag = -np.bincount(ii, weights=lvals, minlength=n) if len(ii) else np.zeros(n)
    bdiag = np.full(n, float(eval_barR(kernel, 0.0)))

    counts = np.bincount(ii, minlength=n) if len(ii) else np.zeros(n, dtype=np.int64)
    row_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    rsum = np.bincount(ii, weights=rvals, minlength=n) if len(ii) else np.zeros(n)
    k = cloud.manifold.intrinsic_dim
    ct = norm_const(t, k)
    w = (ct / n) * (rsum + float(eval_R(kernel, 0.0)))

    if n > 1:
        pattern = sp.csr_matrix(
            (np.ones(len(ii), dtype=np.int8), (ii, jj)), shape=(n, n)
        )
        ncomp = connected_components(pattern, directed=False)[0]
    else:
        ncomp = 1

    if storage is None:
        storage = "dense" if n <= DENSE_THRESHOLD else "sparse"
    if storage not in ("dense", "sparse"):
        raise InvalidArgumentError(f"unknown storage {storage!r}")

    return LaplacianSystem(
        cloud=cloud,
        kernel=kernel,
        t=float(t),
        storage=storage,
        row_ptr=row_ptr,
        cols=jj,
        lvals=lvals,
        brvals=brvals,
        ldiag=ldiag,
        bdiag=bdiag,
        w=w,
        disconnected=ncomp > 1,
        n_components=int(ncomp),
    )


def _query_block_sums(queries, points, t, kernel, weights_r=None, weights_br=None):
    """Row sums of R and barR kernels between query points and the cloud.

    Returns (sum_R, sum_R*u, sum_barR*f) with the weighted sums omitted when
    the corresponding weights are None.  Blocked to bound memory.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    m = queries.shape[0]
    n = points.shape[0]
    four_t = 4.0 * t
    sum_r = np.zeros(m)
    sum_ru = np.zeros(m) if weights_r is not None else None
    sum_bf = np.zeros(m) if weights_br is not None else None
    block = max(1, int(4_000_000 // max(n, 1)))
    for s in range(0, m, block):
        qs = queries[s : s + block]
        diff = qs[:, None, :] - points[None, :, :]
        q = (diff * diff).sum(axis=2) / four_t
        rv = np.asarray(eval_R(kernel, q))
        sum_r[s : s + block] = rv.sum(axis=1)
        if sum_ru is not None:
            sum_ru[s : s + block] = rv @ weights_r
        if sum_bf is not None:
            bv = np.asarray(eval_barR(kernel, q))
            sum_bf[s : s + block] = bv @ weights_br
    return sum_r, sum_ru, sum_bf


def w_field(cloud: PointCloud, kernel: KernelSpec, t: float, queries) -> np.ndarray:
    """w_{t,n} at arbitrary query points, including the C_t factor."""
    if t <= 0:
        raise InvalidArgumentError("bandwidth t must be positive")
    queries_arr = np.atleast_2d(np.asarray(queries, dtype=float))
    scalar = np.asarray(queries).ndim == 1
    sum_r, _, _ = _query_block_sums(queries_arr, cloud.points, t, kernel)
    ct = norm_const(t, cloud.manifold.intrinsic_dim)
    out = (ct / cloud.n) * sum_r
    return float(out[0]) if scalar else out
