"""One-dimensional distributions on a bounded interval under the 2-Wasserstein metric.

A distribution is stored as its quantile function sampled at the midpoint
levels ``u_k = (2k - 1) / (2M)``.  In this representation the metric is an
L2 distance, McCann interpolation is linear and Fréchet means are averages.
Optimal transport maps ``T = Q_b o F_a`` are piecewise linear with knots at
the paired quantile values, extended to ``u = 0`` and ``u = 1`` by linear
extrapolation of the end segments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import _kernels
from .core import GeodesicSpace, SpaceDescriptor, _as_points, check_weights
from .errors import IngestionError


def levels(grid_size):
    """Midpoint probability levels of a grid of size ``grid_size``."""
    return (np.arange(1, grid_size + 1) - 0.5) / grid_size


def enforce_monotone(values):
    """L2 projection onto non-decreasing sequences (pool adjacent violators).

    Works on a single vector or row-wise on a 2-D array.  Already monotone
    input is returned unchanged.

    >>> enforce_monotone([1.0, 3.0, 2.0])
    array([1. , 2.5, 2.5])
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        return _kernels.pava_rows(arr[None, :])[0]
    shape = arr.shape
    return _kernels.pava_rows(arr.reshape(-1, shape[-1])).reshape(shape)


def extend_quantiles(q, support):
    """Append the extrapolated quantile values at ``u = 0`` and ``u = 1``."""
    q = np.asarray(q, dtype=float)
    if q.shape[-1] == 1:
        left = right = q[..., :1]
    else:
        left = q[..., :1] - 0.5 * (q[..., 1:2] - q[..., :1])
        right = q[..., -1:] + 0.5 * (q[..., -1:] - q[..., -2:-1])
    lo, hi = support
    return np.concatenate([np.clip(left, lo, hi), q, np.clip(right, lo, hi)], axis=-1)


def distance(a, b):
    """Wasserstein distance between quantile grids (midpoint rule)."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return np.sqrt(np.mean(diff * diff, axis=-1))


def mccann(a, b, t):
    """McCann interpolant: quantile-linear path from ``a`` (t=0) to ``b`` (t=1)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.asarray(t, dtype=float)[..., None] if np.ndim(t) else float(t)
    return a + t * (b - a)


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """Non-decreasing piecewise-linear map of the support onto itself.

    Stored by its knots rather than by samples on a fixed grid so that the
    composition ``Q_b o F_a o Q_a`` reproduces ``Q_b`` exactly.
    """

    knots_x: np.ndarray
    knots_y: np.ndarray
    support: tuple

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(1, -1)
        out = _kernels.transport_eval(self.knots_x[None, :], self.knots_y[None, :], flat)
        return out.reshape(x.shape)

    def sample(self, n_points=None):
        """Values of the map on a uniform grid of ``n_points`` over the support."""
        if n_points is None:
            n_points = len(self.knots_x) - 2
        grid = np.linspace(self.support[0], self.support[1], n_points)
        return grid, enforce_monotone(self(grid))


def transport_map(a, b, support):
    """Optimal transport map pushing the distribution ``a`` onto ``b``."""
    return MonotoneMap(extend_quantiles(a, support), extend_quantiles(b, support), tuple(support))


def apply_pushforward(T: MonotoneMap, c):
    """Quantile grid of ``T_# c``: compose, repair monotonicity, clamp."""
    out = enforce_monotone(T(c))
    return np.clip(out, T.support[0], T.support[1])


def from_samples(samples, space: "WassersteinSpace"):
    """Empirical quantile grid of a sample (linear interpolation of order statistics)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise IngestionError("empty sample")
    if not np.all(np.isfinite(x)):
        raise IngestionError("non-finite sample values")
    lo, hi = space.descriptor.support
    if x.min() < lo - space.tol or x.max() > hi + space.tol:
        raise IngestionError(f"samples outside the support [{lo}, {hi}]")
    q = np.quantile(np.clip(x, lo, hi), space.levels)
    return enforce_monotone(q)


def truncnorm_grid(mean, sd, space: "WassersteinSpace"):
    """Quantile grid of a normal law truncated to the support.

    ``mean`` and ``sd`` may be arrays; the result has shape
    ``broadcast(mean, sd).shape + (M,)``.
    """
    mean = np.asarray(mean, dtype=float)[..., None]
    sd = np.asarray(sd, dtype=float)[..., None]
    lo, hi = space.descriptor.support
    pa = ndtr((lo - mean) / sd)
    pb = ndtr((hi - mean) / sd)
    q = mean + sd * ndtri(pa + space.levels * (pb - pa))
    return np.clip(q, lo, hi)


def cdf_on_grid(q, support, edges):
    """Generalised inverse of the quantile grid ``q`` evaluated at ``edges``."""
    q = np.asarray(q, dtype=float)
    m = q.shape[-1]
    ext_levels = np.concatenate([[0.0], levels(m), [1.0]])
    kx = extend_quantiles(q, support).reshape(1, -1)
    f = _kernels.transport_eval(kx, ext_levels[None, :], np.asarray(edges, dtype=float)[None, :])[0]
    f = np.clip(f, 0.0, 1.0)
    if edges[0] <= support[0]:
        f[0] = 0.0
    if edges[-1] >= support[1]:
        f[-1] = 1.0
    return np.maximum.accumulate(f)


def density_from_quantiles(q, support, n_cells=200):
    """Histogram density on ``n_cells`` equal cells of the support.

    Finite differences of the CDF recovered from the quantile grid; the
    density integrates to one exactly (up to rounding).

    Returns
    -------
    centers, density : ndarray
    """
    edges = np.linspace(support[0], support[1], n_cells + 1)
    f = cdf_on_grid(q, support, edges)
    width = edges[1] - edges[0]
    return 0.5 * (edges[:-1] + edges[1:]), np.diff(f) / width


class WassersteinSpace(GeodesicSpace):
    """Distributions on ``support`` represented by ``grid_size`` quantile values."""

    def __init__(self, grid_size=200, support=(0.0, 1.0), tol=1e-10, descriptor=None):
        if descriptor is None:
            descriptor = SpaceDescriptor("wasserstein", grid_size, support=support, tol=tol)
        super().__init__(descriptor)
        self.levels = levels(descriptor.dim)
        # grid-discretised geometry: identities hold up to interpolation error
        self.geometry_tol = 1e-3

    @property
    def point_dim(self):
        return self.descriptor.dim

    @property
    def support(self):
        return self.descriptor.support

    @property
    def diameter(self):
        return self.support[1] - self.support[0]

    def belongs(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        ok = np.all(np.isfinite(x), axis=-1)
        ok &= np.all((x >= lo - self.tol) & (x <= hi + self.tol), axis=-1)
        if x.shape[-1] > 1:
            ok &= np.all(np.diff(x, axis=-1) >= -self.tol, axis=-1)
        return ok

    def distance(self, a, b):
        return distance(a, b)

    def squared_distance(self, a, b):
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return np.mean(diff * diff, axis=-1)

    def geodesic_point(self, a, b, t):
        return mccann(a, b, t)

    def ubiquity(self, w1, w2, w3):
        w1 = np.asarray(w1, dtype=float)
        w2 = np.asarray(w2, dtype=float)
        w3 = np.asarray(w3, dtype=float)
        shape = np.broadcast_shapes(w1.shape, w2.shape, w3.shape)
        m = shape[-1]
        lead = shape[:-1]

        def rows(w):
            # keep single points un-broadcast; the kernel reuses row 0
            if w.shape[:-1] == lead:
                return w.reshape(-1, m)
            if w.ndim == 1 or w.size == m:
                return w.reshape(1, m)
            return np.broadcast_to(w, shape).reshape(-1, m)

        out = _kernels.quantile_ubiquity(rows(w1), rows(w2), rows(w3), *self.support)
        return out.reshape(shape)

    def transport_map(self, a, b):
        return transport_map(a, b, self.support)

    def frechet_mean(self, points, weights=None):
        pts = _as_points(points, self)
        w = check_weights(weights, len(pts))
        if np.all(pts == pts[0]):
            return pts[0].copy()
        return np.clip(w @ pts, *self.support)

    def project(self, x):
        return np.clip(enforce_monotone(x), self.support[0], self.support[1])

    def from_samples(self, samples):
        return from_samples(samples, self)

    def truncnorm(self, mean, sd):
        return truncnorm_grid(mean, sd, self)
