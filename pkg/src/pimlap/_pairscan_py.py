"""Pure-NumPy neighbor search: fallback twin of the compiled extension.

Both backends return the identical multiset of ordered pairs (i, j), i != j,
with squared distance d2 <= cutoff_sq, plus the d2 values.  Pair order is
unspecified; callers canonicalize with a lexsort.
"""
import numpy as np

BACKEND = "python"


def _grid_shape(ext, cut, n, d):
    nc = np.maximum(1, np.floor(ext / cut).astype(np.int64))
    cap = max(1, int(np.ceil((8.0 * max(n, 1)) ** (1.0 / d))))
    return np.minimum(nc, cap)


def find_pairs_brute(pts, cutoff_sq):
    pts = np.ascontiguousarray(pts, dtype=float)
    n = pts.shape[0]
    if n < 2:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, float))
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    mask = d2 <= cutoff_sq
    np.fill_diagonal(mask, False)
    ii, jj = np.nonzero(mask)
    return ii.astype(np.int64), jj.astype(np.int64), d2[ii, jj]


def find_pairs_cell(pts, cutoff_sq):
    pts = np.ascontiguousarray(pts, dtype=float)
    n, d = pts.shape
    if n < 2:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, float))
    cut = np.sqrt(cutoff_sq)
    mins = pts.min(axis=0)
    ext = pts.max(axis=0) - mins
    nc = _grid_shape(ext, cut, n, d)
    width = np.where(nc > 1, ext / nc, np.maximum(ext, cut))
    coords = np.minimum((pts - mins) / width, nc - 1).astype(np.int64)
    coords = np.maximum(coords, 0)
    cell_id = np.ravel_multi_index(coords.T, nc)

    order = np.argsort(cell_id, kind="stable")
    sorted_ids = cell_id[order]
    uniq, starts = np.unique(sorted_ids, return_index=True)
    bounds = np.append(starts, n)
    members = {int(c): order[bounds[k] : bounds[k + 1]] for k, c in enumerate(uniq)}

    offsets = np.stack(
        np.meshgrid(*([np.arange(-1, 2)] * d), indexing="ij"), axis=-1
    ).reshape(-1, d)
    uniq_coords = np.stack(np.unravel_index(uniq, nc), axis=-1)

    out_i, out_j, out_d2 = [], [], []
    for c, cid in zip(uniq_coords, uniq):
        a = members[int(cid)]
        pa = pts[a]
        for off in offsets:
            nb = c + off
            if np.any(nb < 0) or np.any(nb >= nc):
                continue
            nbid = int(np.ravel_multi_index(nb, nc))
            b = members.get(nbid)
            if b is None:
                continue
            diff = pa[:, None, :] - pts[b][None, :, :]
            d2 = (diff * diff).sum(axis=2)
            mask = d2 <= cutoff_sq
            if nbid == cid:
                mask &= a[:, None] != b[None, :]
            ia, ib = np.nonzero(mask)
            if ia.size:
                out_i.append(a[ia])
                out_j.append(b[ib])
                out_d2.append(d2[ia, ib])
    if not out_i:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, float))
    return (
        np.concatenate(out_i).astype(np.int64),
        np.concatenate(out_j).astype(np.int64),
        np.concatenate(out_d2),
    )
