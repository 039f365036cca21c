"""Inner loops of the per-frame pipeline and the mask renderer.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version. The module-level names point at whichever
backend ``lanepath._accel`` selected; both variants stay importable so the
tests and ``benchmarks/bench_kernels.py`` can compare them.
"""
import numpy as np

from ._accel import BACKEND, njit

# ---------------------------------------------------------------- run extraction


def _extract_runs_loop(binary):
    h, w = binary.shape
    n = 0
    for r in range(h):
        prev = 0
        for c in range(w):
            cur = binary[r, c]
            if cur != 0 and prev == 0:
                n += 1
            prev = cur
    xs = np.empty(n, np.float64)
    ys = np.empty(n, np.int64)
    widths = np.empty(n, np.int64)
    k = 0
    for r in range(h):
        start = -1
        for c in range(w + 1):
            on = c < w and binary[r, c] != 0
            if on and start < 0:
                start = c
            elif not on and start >= 0:
                xs[k] = 0.5 * (start + c - 1)
                ys[k] = r
                widths[k] = c - start
                k += 1
                start = -1
    return xs, ys, widths


extract_runs_numba = njit(_extract_runs_loop)


def extract_runs_numpy(binary):
    b = (np.asarray(binary) != 0).astype(np.int8)
    padded = np.zeros((b.shape[0], b.shape[1] + 2), np.int8)
    padded[:, 1:-1] = b
    step = np.diff(padded, axis=1)
    rs, starts = np.nonzero(step == 1)
    _, stops = np.nonzero(step == -1)  # exclusive end; same row-major order
    xs = 0.5 * (starts + stops - 1).astype(np.float64)
    return xs, rs.astype(np.int64), (stops - starts).astype(np.int64)


# ------------------------------------------------------------- neighbourhoods


def _neighbors_loop(xs, ys, eps):
    n = xs.shape[0]
    order = np.argsort(ys, kind="mergesort")
    sy = ys[order]
    e2 = eps * eps
    counts = np.zeros(n, np.int64)
    for a in range(n):
        i = order[a]
        lo = np.searchsorted(sy, ys[i] - eps, side="left")
        hi = np.searchsorted(sy, ys[i] + eps, side="right")
        for b in range(lo, hi):
            j = order[b]
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx * dx + dy * dy <= e2:
                counts[i] += 1
    offsets = np.zeros(n + 1, np.int64)
    for i in range(n):
        offsets[i + 1] = offsets[i] + counts[i]
    indices = np.empty(offsets[n], np.int64)
    fill = offsets[:-1].copy()
    for a in range(n):
        i = order[a]
        lo = np.searchsorted(sy, ys[i] - eps, side="left")
        hi = np.searchsorted(sy, ys[i] + eps, side="right")
        for b in range(lo, hi):
            j = order[b]
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx * dx + dy * dy <= e2:
                indices[fill[i]] = j
                fill[i] += 1
        indices[offsets[i] : offsets[i + 1]].sort()
    return offsets, indices


neighbors_numba = njit(_neighbors_loop)


def neighbors_numpy(xs, ys, eps, chunk=1024):
    xs = np.asarray(xs, np.float64)
    ys = np.asarray(ys, np.float64)
    n = xs.shape[0]
    e2 = eps * eps
    rows, cols = [], []
    for s in range(0, n, chunk):
        dx = xs[s : s + chunk, None] - xs[None, :]
        dy = ys[s : s + chunk, None] - ys[None, :]
        r, c = np.nonzero(dx * dx + dy * dy <= e2)
        rows.append(r + s)
        cols.append(c)
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    offsets = np.zeros(n + 1, np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=offsets[1:])
    return offsets, cols.astype(np.int64)


# ---------------------------------------------------------------- DBSCAN labels


def _dbscan_loop(offsets, indices, min_pts):
    n = offsets.shape[0] - 1
    labels = np.full(n, -1, np.int64)
    core = np.zeros(n, np.bool_)
    for i in range(n):
        core[i] = offsets[i + 1] - offsets[i] >= min_pts
    stack = np.empty(n, np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] >= 0 or not core[i]:
            continue
        labels[i] = cluster
        top = 0
        stack[top] = i
        top += 1
        while top > 0:
            top -= 1
            p = stack[top]
            for k in range(offsets[p], offsets[p + 1]):
                q = indices[k]
                if labels[q] < 0:
                    labels[q] = cluster
                    if core[q]:
                        stack[top] = q
                        top += 1
        cluster += 1
    return labels


dbscan_labels_numba = njit(_dbscan_loop)


def dbscan_labels_numpy(offsets, indices, min_pts):
    """Core components by min-label propagation, then borders to the lowest id."""
    n = offsets.shape[0] - 1
    counts = np.diff(offsets)
    core = counts >= min_pts
    labels = np.full(n, -1, np.int64)
    if not core.any():
        return labels
    owner = np.repeat(np.arange(n), counts)
    keep = core[owner] & core[indices]
    src, dst = owner[keep], indices[keep]
    comp = np.where(core, np.arange(n), n)
    while True:
        nxt = comp.copy()
        np.minimum.at(nxt, src, comp[dst])
        if np.array_equal(nxt, comp):
            break
        comp = nxt
    roots = np.unique(comp[core])  # ascending minimum core index = discovery order
    ids = np.full(n + 1, -1, np.int64)
    ids[roots] = np.arange(roots.size)
    labels[core] = ids[comp[core]]
    # border points take the smallest cluster id among adjacent cores
    border_src = owner[core[indices] & ~core[owner]]
    border_cid = labels[indices[core[indices] & ~core[owner]]]
    best = np.full(n, np.iinfo(np.int64).max, np.int64)
    np.minimum.at(best, border_src, border_cid)
    hit = ~core & (best != np.iinfo(np.int64).max)
    labels[hit] = best[hit]
    return labels


# ------------------------------------------------------------------ span filling


def _fill_spans_loop(mask, rows, lo, hi, value):
    h, w = mask.shape
    for k in range(rows.shape[0]):
        r = rows[k]
        if r < 0 or r >= h:
            continue
        a = max(lo[k], 0)
        b = min(hi[k], w - 1)
        for c in range(a, b + 1):
            mask[r, c] = value


fill_spans_numba = njit(_fill_spans_loop)


def fill_spans_numpy(mask, rows, lo, hi, value):
    h, w = mask.shape
    ok = (rows >= 0) & (rows < h) & (hi >= 0) & (lo < w) & (lo <= hi)
    rows, lo, hi = rows[ok], lo[ok], hi[ok]
    cols = np.arange(w)
    sel = (cols[None, :] >= lo[:, None]) & (cols[None, :] <= hi[:, None])
    r_idx, c_idx = np.nonzero(sel)
    mask[rows[r_idx], c_idx] = value


if BACKEND == "numba":
    extract_runs = extract_runs_numba
    neighbors = neighbors_numba
    dbscan_labels = dbscan_labels_numba
    fill_spans = fill_spans_numba
else:
    extract_runs = extract_runs_numpy
    neighbors = neighbors_numpy
    dbscan_labels = dbscan_labels_numpy
    fill_spans = fill_spans_numpy
