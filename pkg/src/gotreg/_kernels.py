"""Hot loops used by the quantile-grid geometry.

Each kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version.  The numba path is used when numba imports and the environment
variable ``GOTREG_DISABLE_NUMBA`` is unset (or ``0``/``false``).  Both paths
agree to rounding error; ``benchmarks/bench_kernels.py`` times them against
each other.
"""

import os

import numpy as np
from scipy.optimize import isotonic_regression

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    nb = None


def _flag_disabled():
    value = os.environ.get("GOTREG_DISABLE_NUMBA", "").strip().lower()
    return value not in ("", "0", "false", "no")


USE_NUMBA = nb is not None and not _flag_disabled()


def _njit(func):
    if nb is None:
        return func
    return nb.njit(cache=True, nogil=True, inline="always")(func)


# ---------------------------------------------------------------------------
# pool adjacent violators


@_njit
def _pava_row(row, level, weight, start):
    # in place; level/weight/start are scratch buffers of length >= len(row) + 1
    m = row.shape[0]
    nblocks = 0
    for j in range(m):
        level[nblocks] = row[j]
        weight[nblocks] = 1.0
        start[nblocks] = j
        nblocks += 1
        while nblocks > 1 and level[nblocks - 2] > level[nblocks - 1]:
            w = weight[nblocks - 2] + weight[nblocks - 1]
            level[nblocks - 2] = (
                level[nblocks - 2] * weight[nblocks - 2] + level[nblocks - 1] * weight[nblocks - 1]
            ) / w
            weight[nblocks - 2] = w
            nblocks -= 1
    start[nblocks] = m
    for b in range(nblocks):
        for j in range(start[b], start[b + 1]):
            row[j] = level[b]


@_njit
def _pava_rows_numba(values):
    n, m = values.shape
    out = values.copy()
    level = np.empty(m + 1)
    weight = np.empty(m + 1)
    start = np.empty(m + 1, dtype=np.int64)
    for i in range(n):
        for j in range(1, m):
            if out[i, j] < out[i, j - 1]:
                _pava_row(out[i], level, weight, start)
                break
    return out


def _pava_rows_numpy(values):
    out = np.array(values, dtype=float, copy=True)
    if out.shape[1] < 2:
        return out
    bad = np.nonzero(np.any(np.diff(out, axis=1) < 0.0, axis=1))[0]
    for i in bad:
        out[i] = isotonic_regression(out[i]).x
    return out


def pava_rows(values):
    """Row-wise L2 isotonic (non-decreasing) projection of a 2-D array."""
    values = np.ascontiguousarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("pava_rows expects a 2-D array")
    if USE_NUMBA:
        return _pava_rows_numba(values)
    return _pava_rows_numpy(values)


# ---------------------------------------------------------------------------
# piecewise-linear monotone maps with linear end extrapolation


@_njit
def _eval_row(kx, ky, x, out):
    k_count = kx.shape[0]
    m = x.shape[0]
    last = k_count - 1
    if k_count > 1 and kx[1] > kx[0]:
        left_slope = (ky[1] - ky[0]) / (kx[1] - kx[0])
    else:
        left_slope = 1.0
    if k_count > 1 and kx[last] > kx[last - 1]:
        right_slope = (ky[last] - ky[last - 1]) / (kx[last] - kx[last - 1])
    else:
        right_slope = 1.0
    # walk from the previous position: linear total cost for sorted rows
    k = 0
    for j in range(m):
        xv = x[j]
        while k < k_count and kx[k] < xv:
            k += 1
        while k > 0 and kx[k - 1] >= xv:
            k -= 1
        if k < k_count and kx[k] == xv:
            out[j] = ky[k]
        elif k == 0:
            out[j] = ky[0] + (xv - kx[0]) * left_slope
        elif k == k_count:
            out[j] = ky[last] + (xv - kx[last]) * right_slope
        else:
            frac = (xv - kx[k - 1]) / (kx[k] - kx[k - 1])
            out[j] = ky[k - 1] + frac * (ky[k] - ky[k - 1])


@_njit
def _transport_eval_numba(kx, ky, x):
    n = kx.shape[0]
    out = np.empty(x.shape)
    for i in range(n):
        _eval_row(kx[i], ky[i], x[i], out[i])
    return out


def _transport_eval_numpy(kx, ky, x):
    n, k_count = kx.shape
    # per-row search in the original coordinates (a shared shifted search
    # would round away differences below the shift's ulp)
    k = np.empty(x.shape, dtype=np.intp)
    for i in range(n):
        k[i] = np.searchsorted(kx[i], x[i], side="left")

    kc = np.minimum(k, k_count - 1)
    x_at = np.take_along_axis(kx, kc, axis=1)
    y_at = np.take_along_axis(ky, kc, axis=1)
    km1 = np.maximum(k - 1, 0)
    x_prev = np.take_along_axis(kx, km1, axis=1)
    y_prev = np.take_along_axis(ky, km1, axis=1)

    if k_count > 1:
        dx0 = kx[:, 1] - kx[:, 0]
        left_slope = np.where(dx0 > 0, (ky[:, 1] - ky[:, 0]) / np.where(dx0 > 0, dx0, 1.0), 1.0)
        dx1 = kx[:, -1] - kx[:, -2]
        right_slope = np.where(dx1 > 0, (ky[:, -1] - ky[:, -2]) / np.where(dx1 > 0, dx1, 1.0), 1.0)
    else:
        left_slope = np.ones(n)
        right_slope = np.ones(n)

    width = x_at - x_prev
    safe = np.where(width > 0, width, 1.0)
    inner = y_prev + (x - x_prev) / safe * (y_at - y_prev)
    left = ky[:, :1] + (x - kx[:, :1]) * left_slope[:, None]
    right = ky[:, -1:] + (x - kx[:, -1:]) * right_slope[:, None]

    out = np.where(k == 0, left, inner)
    out = np.where(k == k_count, right, out)
    exact = (k < k_count) & (x_at == x)
    return np.where(exact, y_at, out)


def transport_eval(kx, ky, x):
    """Evaluate row-wise piecewise-linear maps ``knots_x -> knots_y`` at ``x``.

    Parameters
    ----------
    kx, ky : ndarray, shape (n, K)
        Knot abscissae (non-decreasing per row) and ordinates.
    x : ndarray, shape (n, m)
        Evaluation points; row ``i`` is evaluated with the map of row ``i``.

    Notes
    -----
    A point equal to a run of tied knots takes the ordinate of the first
    (leftmost) knot of the run.  Outside the knot range the end segments are
    extended linearly; a zero-width end segment extends with slope one.
    """
    kx = np.ascontiguousarray(kx, dtype=float)
    ky = np.ascontiguousarray(ky, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    if USE_NUMBA:
        return _transport_eval_numba(kx, ky, x)
    return _transport_eval_numpy(kx, ky, x)


# ---------------------------------------------------------------------------
# fused quantile-grid ubiquity map


@_njit
def _extend_row(q, lo, hi, out):
    m = q.shape[0]
    if m == 1:
        left = q[0]
        right = q[0]
    else:
        left = q[0] - 0.5 * (q[1] - q[0])
        right = q[m - 1] + 0.5 * (q[m - 1] - q[m - 2])
    out[0] = min(max(left, lo), hi)
    for j in range(m):
        out[j + 1] = q[j]
    out[m + 1] = min(max(right, lo), hi)


@_njit
def _quantile_ubiquity_numba(w1, w2, w3, lo, hi):
    n = max(w1.shape[0], w2.shape[0], w3.shape[0])
    m = w3.shape[1]
    out = np.empty((n, m))
    kx = np.empty(m + 2)
    ky = np.empty(m + 2)
    level = np.empty(m + 1)
    weight = np.empty(m + 1)
    start = np.empty(m + 1, dtype=np.int64)
    for i in range(n):
        i1 = i if w1.shape[0] > 1 else 0
        i2 = i if w2.shape[0] > 1 else 0
        i3 = i if w3.shape[0] > 1 else 0
        _extend_row(w1[i1], lo, hi, kx)
        _extend_row(w2[i2], lo, hi, ky)
        row = out[i]
        _eval_row(kx, ky, w3[i3], row)
        for j in range(1, m):
            if row[j] < row[j - 1]:
                _pava_row(row, level, weight, start)
                break
        for j in range(m):
            row[j] = min(max(row[j], lo), hi)
    return out


def _quantile_ubiquity_numpy(w1, w2, w3, lo, hi):
    n = max(w1.shape[0], w2.shape[0], w3.shape[0])
    m = w3.shape[1]

    def extend(q):
        q = np.broadcast_to(q, (n, q.shape[1]))
        if q.shape[1] == 1:
            left = right = q
        else:
            left = q[:, :1] - 0.5 * (q[:, 1:2] - q[:, :1])
            right = q[:, -1:] + 0.5 * (q[:, -1:] - q[:, -2:-1])
        return np.concatenate([np.clip(left, lo, hi), q, np.clip(right, lo, hi)], axis=1)

    out = _transport_eval_numpy(extend(w1), extend(w2), np.broadcast_to(w3, (n, m)))
    return np.clip(_pava_rows_numpy(out), lo, hi)


def quantile_ubiquity(w1, w2, w3, lo, hi):
    """Push ``w3`` through the transport map ``w1 -> w2`` on quantile grids.

    All three are 2-D with ``n`` or one rows (one row broadcasts).  The
    result is repaired to be non-decreasing and clamped to ``[lo, hi]``.
    """
    w1 = np.ascontiguousarray(w1, dtype=float)
    w2 = np.ascontiguousarray(w2, dtype=float)
    w3 = np.ascontiguousarray(w3, dtype=float)
    if USE_NUMBA:
        return _quantile_ubiquity_numba(w1, w2, w3, float(lo), float(hi))
    return _quantile_ubiquity_numpy(w1, w2, w3, float(lo), float(hi))
