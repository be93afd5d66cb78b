# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled neighbor search: hot twin of ``_pairscan_py``.

Same contract as the fallback: unsorted ordered pairs with d2 <= cutoff_sq.
Squared distances accumulate over coordinates in ascending order so the two
backends agree bit for bit.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

BACKEND = "cython"


cdef inline double _dist2(const double* a, const double* b, Py_ssize_t d) nogil:
    cdef double s = 0.0, dx
    cdef Py_ssize_t k
    for k in range(d):
        dx = a[k] - b[k]
        s = s + dx * dx
    return s


def find_pairs_brute(pts, double cutoff_sq):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] p = \
        np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], d = p.shape[1]
    if n < 2:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    cdef Py_ssize_t i, j, m = 0
    cdef double d2
    with nogil:
        for i in range(n):
            for j in range(n):
                if i != j and _dist2(&p[i, 0], &p[j, 0], d) <= cutoff_sq:
                    m += 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ii = np.empty(m, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] jj = np.empty(m, np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd = np.empty(m, np.float64)
    cdef Py_ssize_t k = 0
    with nogil:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d2 = _dist2(&p[i, 0], &p[j, 0], d)
                if d2 <= cutoff_sq:
                    ii[k] = i
                    jj[k] = j
                    dd[k] = d2
                    k += 1
    return ii, jj, dd


def find_pairs_cell(pts, double cutoff_sq):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] p = \
        np.ascontiguousarray(pts, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], d = p.shape[1]
    if n < 2:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))

    cdef double cut = sqrt(cutoff_sq)
    mins_a = np.min(pts, axis=0)
    ext_a = np.max(pts, axis=0) - mins_a
    nc_a = np.maximum(1, np.floor(ext_a / cut).astype(np.int64))
    cap = max(1, int(np.ceil((8.0 * n) ** (1.0 / d))))
    nc_a = np.minimum(nc_a, cap)
    width_a = np.where(nc_a > 1, ext_a / nc_a, np.maximum(ext_a, cut))

    cdef cnp.ndarray[cnp.float64_t, ndim=1] mins = np.ascontiguousarray(mins_a, np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] width = np.ascontiguousarray(width_a, np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nc = np.ascontiguousarray(nc_a, np.int64)

    cdef Py_ssize_t ncells = 1
    cdef Py_ssize_t k
    for k in range(d):
        ncells *= nc[k]

    # cell index per point, raveled row-major
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cid = np.empty(n, np.int64)
    cdef Py_ssize_t i, c
    cdef long long cc
    with nogil:
        for i in range(n):
            cc = 0
            for k in range(d):
                c = <Py_ssize_t>floor((p[i, k] - mins[k]) / width[k])
                if c < 0:
                    c = 0
                if c >= nc[k]:
                    c = nc[k] - 1
                cc = cc * nc[k] + c
            cid[i] = cc

    # bucket sort: head/next chains
    cdef cnp.ndarray[cnp.int64_t, ndim=1] head = np.full(ncells, -1, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nxt = np.full(n, -1, np.int64)
    with nogil:
        for i in range(n):
            nxt[i] = head[cid[i]]
            head[cid[i]] = i

    # neighbor cell offsets (3^d), precomputed as raveled strides per dim
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] offs = np.ascontiguousarray(
        np.stack(np.meshgrid(*([np.arange(-1, 2)] * d), indexing="ij"), axis=-1)
        .reshape(-1, d),
        np.int64,
    )
    cdef Py_ssize_t noff = offs.shape[0]

    cdef cnp.ndarray[cnp.int64_t, ndim=1] coord = np.empty(d, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ncoord = np.empty(d, np.int64)

    cdef Py_ssize_t m = 0, passno, o, j
    cdef long long rem, nbid
    cdef bint ok
    cdef double d2
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ii = np.empty(0, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] jj = np.empty(0, np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd = np.empty(0, np.float64)
    cdef Py_ssize_t w = 0

    for passno in range(2):
        if passno == 1:
            ii = np.empty(m, np.int64)
            jj = np.empty(m, np.int64)
            dd = np.empty(m, np.float64)
        w = 0
        with nogil:
            for i in range(n):
                rem = cid[i]
                for k in range(d - 1, -1, -1):
                    coord[k] = rem % nc[k]
                    rem //= nc[k]
                for o in range(noff):
                    ok = True
                    for k in range(d):
                        ncoord[k] = coord[k] + offs[o, k]
                        if ncoord[k] < 0 or ncoord[k] >= nc[k]:
                            ok = False
                            break
                    if not ok:
                        continue
                    nbid = 0
                    for k in range(d):
                        nbid = nbid * nc[k] + ncoord[k]
                    j = head[nbid]
                    while j != -1:
                        if j != i:
                            d2 = _dist2(&p[i, 0], &p[j, 0], d)
                            if d2 <= cutoff_sq:
                                if passno == 0:
                                    m += 1
                                else:
                                    ii[w] = i
                                    jj[w] = j
                                    dd[w] = d2
                                    w += 1
                        j = nxt[j]
    return ii, jj, dd
