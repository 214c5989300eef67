"""SPD matrices via their Cholesky factors under the log-Cholesky metric.

A point is the Cholesky factor ``L`` of ``S = L L^T`` stored as one vector:
the strictly lower entries (row-major) followed by the diagonal.  The chart
``(strict lower part, log diagonal)`` is an isometry onto Euclidean space, so
geodesics, the ubiquity map and Fréchet means are straight-line operations
in chart coordinates.
"""

from __future__ import annotations

import numpy as np

from .core import GeodesicSpace, SpaceDescriptor, _as_points, check_weights
from .errors import IngestionError


def n_strict(m):
    return m * (m - 1) // 2


def factor_to_vector(L):
    """Pack lower-triangular factor(s) ``(..., m, m)`` into point vectors."""
    L = np.asarray(L, dtype=float)
    m = L.shape[-1]
    rows, cols = np.tril_indices(m, -1)
    return np.concatenate([L[..., rows, cols], np.diagonal(L, axis1=-2, axis2=-1)], axis=-1)


def vector_to_factor(v, m):
    v = np.asarray(v, dtype=float)
    k = n_strict(m)
    L = np.zeros(v.shape[:-1] + (m, m))
    rows, cols = np.tril_indices(m, -1)
    L[..., rows, cols] = v[..., :k]
    idx = np.arange(m)
    L[..., idx, idx] = v[..., k:]
    return L


def cholesky_factor(S):
    """Cholesky factor of a symmetric positive-definite matrix, as a point vector."""
    S = np.asarray(S, dtype=float)
    if S.shape[-1] != S.shape[-2]:
        raise IngestionError("SPD input must be square")
    scale = max(np.max(np.abs(S)), 1.0)
    if not np.allclose(S, np.swapaxes(S, -1, -2), rtol=0.0, atol=1e-12 * scale):
        raise IngestionError("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise IngestionError("matrix is not positive definite") from exc
    return factor_to_vector(L)


def to_spd(v, m):
    L = vector_to_factor(v, m)
    return L @ np.swapaxes(L, -1, -2)


def chart(v, m):
    """Chart coordinates ``(strict lower, log diagonal)`` of point vector(s)."""
    v = np.asarray(v, dtype=float)
    k = n_strict(m)
    return np.concatenate([v[..., :k], np.log(v[..., k:])], axis=-1)


def from_chart(c, m):
    c = np.asarray(c, dtype=float)
    k = n_strict(m)
    return np.concatenate([c[..., :k], np.exp(c[..., k:])], axis=-1)


def distance(L1, L2, m):
    diff = chart(L1, m) - chart(L2, m)
    return np.sqrt(np.sum(diff * diff, axis=-1))


def geodesic(L1, L2, t, m):
    c1 = chart(L1, m)
    c2 = chart(L2, m)
    t = np.asarray(t, dtype=float)[..., None] if np.ndim(t) else float(t)
    return from_chart(c1 + t * (c2 - c1), m)


def ubiquity(M1, M2, M3, m):
    """Add the chart displacement ``M1 -> M2`` to ``M3``."""
    return from_chart(chart(M3, m) + (chart(M2, m) - chart(M1, m)), m)


def frechet_mean(points, weights, m):
    pts = np.asarray(points, dtype=float)
    if np.all(pts == pts[0]):
        return pts[0].copy()
    return from_chart(weights @ chart(pts, m), m)


class SpdSpace(GeodesicSpace):
    """``m x m`` SPD matrices in log-Cholesky geometry (point = packed factor)."""

    def __init__(self, size=2, tol=1e-10, descriptor=None):
        if descriptor is None:
            descriptor = SpaceDescriptor("spd", size, tol=tol)
        super().__init__(descriptor)
        self.size = descriptor.dim

    @property
    def point_dim(self):
        return self.size * (self.size + 1) // 2

    def belongs(self, x):
        x = np.asarray(x, dtype=float)
        return np.all(np.isfinite(x), axis=-1) & np.all(x[..., n_strict(self.size):] > 0, axis=-1)

    def chart(self, x):
        return chart(x, self.size)

    def from_chart(self, c):
        return from_chart(c, self.size)

    def distance(self, a, b):
        return distance(a, b, self.size)

    def squared_distance(self, a, b):
        diff = chart(a, self.size) - chart(b, self.size)
        return np.sum(diff * diff, axis=-1)

    def geodesic_point(self, a, b, t):
        return geodesic(a, b, t, self.size)

    def ubiquity(self, w1, w2, w3):
        return ubiquity(w1, w2, w3, self.size)

    def frechet_mean(self, points, weights=None):
        pts = _as_points(points, self)
        return frechet_mean(pts, check_weights(weights, len(pts)), self.size)

    def project(self, x):
        return np.array(x, dtype=float, copy=True)

    def from_matrix(self, S):
        return cholesky_factor(S)

    def to_matrix(self, x):
        return to_spd(x, self.size)
