"""Hot inner loops, each with a numba and a pure-numpy implementation.

Every public function here dispatches on :func:`wvc._accel.active_backend`.
The filtering and pooling kernels accumulate in the same order on both
paths and agree bitwise.  Patch correlation is a matrix product on both
paths (BLAS does the multiply-adds), so the two agree to rounding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._accel import active_backend, njit

# ---------------------------------------------------------------------------
# periodic a-trous filtering along one axis


@njit(cache=True, nogil=True)
def _atrous_rows_nb(x, taps, dilation):
    rows, n = x.shape
    c = taps.shape[0] // 2
    out = np.zeros_like(x)
    for t in range(taps.shape[0]):
        w = taps[t]
        off = (dilation * (t - c)) % n
        split = n - off
        for r in range(rows):
            for i in range(split):
                out[r, i] += w * x[r, i + off]
            for i in range(split, n):
                out[r, i] += w * x[r, i - split]
    return out


@njit(cache=True, nogil=True)
def _atrous_cols_nb(x, taps, dilation):
    n, cols = x.shape
    c = taps.shape[0] // 2
    out = np.zeros_like(x)
    for t in range(taps.shape[0]):
        w = taps[t]
        off = (dilation * (t - c)) % n
        for r in range(n):
            src = r + off
            if src >= n:
                src -= n
            for i in range(cols):
                out[r, i] += w * x[src, i]
    return out


def _atrous_np(x, taps, dilation, axis):
    c = len(taps) // 2
    out = np.zeros_like(x)
    for t, w in enumerate(taps):
        out += w * np.roll(x, -dilation * (t - c), axis=axis)
    return out


def atrous_filter(x: np.ndarray, taps: np.ndarray, dilation: int, axis: int) -> np.ndarray:
    """Correlate ``x`` along ``axis`` with ``taps`` spread ``dilation`` apart.

    ``out[i] = sum_t taps[t] * x[(i + dilation*(t - c)) mod n]`` with ``c``
    the centre tap; boundaries wrap.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    if active_backend() == "numba":
        if axis == 1:
            return _atrous_rows_nb(x, taps, int(dilation))
        return _atrous_cols_nb(x, taps, int(dilation))
    return _atrous_np(x, taps, dilation, axis)


# ---------------------------------------------------------------------------
# non-overlapping block maximum


@njit(cache=True, nogil=True)
def _block_max_nb(x, b):
    h = x.shape[0] // b
    w = x.shape[1] // b
    out = np.empty((h, w), dtype=x.dtype)
    for i in range(h):
        for j in range(w):
            m = x[i * b, j * b]
            for di in range(b):
                for dj in range(b):
                    val = x[i * b + di, j * b + dj]
                    if val > m:
                        m = val
            out[i, j] = m
    return out


def block_max(x: np.ndarray, b: int) -> np.ndarray:
    """Max over grid-aligned ``b x b`` blocks; ragged right/bottom edges dropped."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if active_backend() == "numba":
        return _block_max_nb(x, int(b))
    h, w = x.shape[0] // b, x.shape[1] // b
    return x[: h * b, : w * b].reshape(h, b, w, b).max(axis=(1, 3))


# ---------------------------------------------------------------------------
# patch correlation with running max / argmax


@njit(cache=True, nogil=True)
def _corr_max_nb(maps, patches, out_h, out_w):
    # maps: (K, H, W); patches: (n, K, M, M). Only the first out_h x out_w
    # placements are scanned, which lets the caller pre-pad for wraparound.
    n, nk, m, _ = patches.shape
    d = nk * m * m
    cols = np.empty((out_h * out_w, d))
    for v in range(out_h):
        for u in range(out_w):
            row = cols[v * out_w + u]
            q = 0
            for k in range(nk):
                for a in range(m):
                    for b in range(m):
                        row[q] = maps[k, v + a, u + b]
                        q += 1
    # (n, placements) so each patch's argmax scan is contiguous
    resp = np.dot(np.ascontiguousarray(patches.reshape(n, d)), cols.T)
    best = np.empty(n)
    best_v = np.empty(n, dtype=np.int64)
    best_u = np.empty(n, dtype=np.int64)
    for p in range(n):
        r = resp[p]
        i_best = 0
        top = r[0]
        for i in range(1, r.shape[0]):
            if r[i] > top:
                top = r[i]
                i_best = i
        best[p] = top
        best_v[p] = i_best // out_w
        best_u[p] = i_best % out_w
    return best, best_v, best_u


def _corr_max_np(maps, patches, out_h, out_w):
    n, nk, m, _ = patches.shape
    win = sliding_window_view(maps, (m, m), axis=(1, 2))[:, :out_h, :out_w]
    cols = np.ascontiguousarray(win.transpose(1, 2, 0, 3, 4)).reshape(out_h * out_w, nk * m * m)
    resp = patches.reshape(n, nk * m * m) @ cols.T
    flat = np.argmax(resp, axis=1)
    best = resp[np.arange(n), flat]
    return best, flat // out_w, flat % out_w


def correlate_max(maps: np.ndarray, patches: np.ndarray, periodic: bool = False):
    """Slide each patch over ``maps`` and keep the best response.

    ``maps`` is ``(K, H, W)``, ``patches`` is ``(n, K, M, M)``.  Valid mode
    scans the ``(H-M+1) x (W-M+1)`` full-overlap placements; periodic mode
    scans all ``H x W`` placements with wraparound.  Returns
    ``(values, rows, cols)``; ties resolve to the first placement in
    row-major order.
    """
    maps = np.ascontiguousarray(maps, dtype=np.float64)
    patches = np.ascontiguousarray(patches, dtype=np.float64)
    m = patches.shape[2]
    _, h, w = maps.shape
    if periodic:
        out_h, out_w = h, w
        maps = np.ascontiguousarray(np.pad(maps, ((0, 0), (0, m - 1), (0, m - 1)), mode="wrap"))
    else:
        out_h, out_w = h - m + 1, w - m + 1
    if out_h < 1 or out_w < 1 or patches.shape[0] == 0:
        raise ValueError("patch does not fit the map")
    if active_backend() == "numba":
        return _corr_max_nb(maps, patches, out_h, out_w)
    return _corr_max_np(maps, patches, out_h, out_w)
