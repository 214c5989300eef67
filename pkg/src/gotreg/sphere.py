"""Unit sphere of a finite-dimensional weighted inner-product space.

Covers directional data (unit weights), compositional data and discretised
densities under the Fisher-Rao metric (square-root densities, quadrature
weights, nonnegative orthant).  Transports are rotations acting in the
plane spanned by the two points that define them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GeodesicSpace, SpaceDescriptor, _as_points, check_weights
from .errors import GeometryError, IngestionError, NumericError

#: inner products at or below ``-1 + ANTIPODAL_TOL`` have no unique geodesic
ANTIPODAL_TOL = 1e-8
_PLANE_EPS = 1e-14


def inner(a, b, weights):
    return np.sum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float) * weights, axis=-1)


def norm(a, weights):
    return np.sqrt(np.maximum(inner(a, a, weights), 0.0))


def grid_weights(grid):
    """Product quadrature weights (equal cell areas) of a tensor grid."""
    area = float(np.prod([(hi - lo) / cnt for lo, hi, cnt in grid]))
    return np.full(int(np.prod([cnt for _, _, cnt in grid])), area)


def grid_centers(grid):
    """Cell centres of a tensor grid, one array per axis (``ij`` indexing)."""
    axes = [lo + (np.arange(cnt) + 0.5) * (hi - lo) / cnt for lo, hi, cnt in grid]
    return np.meshgrid(*axes, indexing="ij")


def embed_density(density, weights):
    """Square-root embedding of a density given on quadrature cells."""
    f = np.asarray(density, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise IngestionError("density values must be finite and non-negative")
    mass = float(np.sum(f * weights))
    if mass <= 0:
        raise IngestionError("density is identically zero")
    if abs(mass - 1.0) > 0.01:
        raise IngestionError(f"density integrates to {mass:.4g}, expected 1 within 1%")
    return np.sqrt(f / mass)


def histogram_density(samples, grid):
    """Bin 2-D (or k-D) samples on a tensor grid into a normalised density."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != len(grid) or len(samples) == 0:
        raise IngestionError(f"expected a non-empty (n, {len(grid)}) sample array")
    bins = [np.linspace(lo, hi, cnt + 1) for lo, hi, cnt in grid]
    clipped = np.column_stack(
        [np.clip(samples[:, k], grid[k][0], grid[k][1]) for k in range(len(grid))]
    )
    counts, _ = np.histogramdd(clipped, bins=bins)
    w = grid_weights(grid)
    return counts.ravel() / (len(samples) * w[0])


def distance(g, h, weights):
    """Geodesic (great-circle) distance ``arccos <g, h>`` in a stable form."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    c = np.clip(inner(g, h, weights), -1.0, 1.0)
    s = norm(h - c[..., None] * g, weights)
    return np.arctan2(s, c)


def _plane(g1, g2, weights):
    """Orthonormal frame (u1, u2) of span{g1, g2} and the angle between them."""
    c = inner(g1, g2, weights)
    if np.any(c <= -1.0 + ANTIPODAL_TOL):
        raise GeometryError("antipodal points: the geodesic is not unique")
    r = g2 - c[..., None] * g1
    s = norm(r, weights)
    flat = s <= _PLANE_EPS
    u2 = r / np.where(flat, 1.0, s)[..., None]
    theta = np.where(flat, 0.0, np.arctan2(s, c))
    return g1, u2, theta, flat


@dataclass(frozen=True, eq=False)
class RotationSpec:
    """Rotation by ``angle`` in the plane with orthonormal frame (u1, u2).

    The rotation turns ``u1`` towards ``u2``: ``R(angle) u1 = cos u1 + sin u2``.
    """

    u1: np.ndarray
    u2: np.ndarray
    angle: float
    weights: np.ndarray

    @classmethod
    def from_points(cls, g1, g2, weights, angle=None):
        weights = np.asarray(weights, dtype=float)
        g1 = np.asarray(g1, dtype=float)
        g2 = np.asarray(g2, dtype=float)
        u1, u2, theta, flat = _plane(g1, g2, weights)
        if flat:
            raise GeometryError("coincident points do not span a rotation plane")
        return cls(u1, u2, float(theta) if angle is None else float(angle), weights)


def _apply_rotation(u1, u2, angle, x, weights):
    # exp(angle Q) x with Q x = <u1, x> u2 - <u2, x> u1
    a = inner(u1, x, weights)[..., None]
    b = inner(u2, x, weights)[..., None]
    angle = np.asarray(angle, dtype=float)[..., None]
    return x + np.sin(angle) * (a * u2 - b * u1) - (1.0 - np.cos(angle)) * (a * u1 + b * u2)


def rotate(spec: RotationSpec, x):
    """Apply ``I + sin(angle) Q + (1 - cos(angle)) Q^2`` to ``x``."""
    return _apply_rotation(spec.u1, spec.u2, spec.angle, np.asarray(x, dtype=float), spec.weights)


def geodesic(g1, g2, t, weights):
    """Point at fraction ``t`` along the great circle from ``g1`` to ``g2``."""
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    g1, g2 = np.broadcast_arrays(g1, g2)
    u1, u2, theta, flat = _plane(g1, g2, weights)
    ang = (np.asarray(t, dtype=float) * theta)[..., None]
    out = np.cos(ang) * u1 + np.sin(ang) * u2
    return np.where(flat[..., None], g1, out)


def project_nonneg(g, weights):
    """Clamp negative coefficients to zero and renormalise."""
    g = np.asarray(g, dtype=float)
    clamped = np.maximum(g, 0.0)
    n = norm(clamped, weights)
    if np.any(n <= 0):
        raise GeometryError("projection onto the nonnegative orthant is empty (no positive coefficient)")
    if np.array_equal(clamped, g) and np.all(np.abs(n - 1.0) <= 1e-15):
        return g.copy()
    return clamped / n[..., None]


def ubiquity(g1, g2, g3, weights, orthant=False):
    """Rotate ``g3`` by the full angle between ``g1`` and ``g2`` in their plane."""
    g1, g2, g3 = np.broadcast_arrays(
        np.asarray(g1, dtype=float), np.asarray(g2, dtype=float), np.asarray(g3, dtype=float)
    )
    u1, u2, theta, flat = _plane(g1, g2, weights)
    out = _apply_rotation(u1, u2, theta, g3, weights)
    out = np.where(flat[..., None], g3, out)
    if orthant:
        out = project_nonneg(out, weights)
    return out


def log_map(p, q, weights):
    """Tangent vector at ``p`` pointing to ``q`` with length ``d(p, q)``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = np.clip(inner(p, q, weights), -1.0, 1.0)
    r = q - c[..., None] * p
    s = norm(r, weights)
    theta = np.arctan2(s, c)
    scale = np.where(s > 0, theta / np.where(s > 0, s, 1.0), 0.0)
    return scale[..., None] * r


def exp_map(p, v, weights):
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = norm(v, weights)[..., None]
    direction = v / np.where(nv > 0, nv, 1.0)
    out = np.cos(nv) * p + np.sin(nv) * direction
    return out / norm(out, weights)[..., None]


def frechet_mean(points, weights, quad_weights, orthant=False, max_iter=1000, step_tol=1e-10):
    """Intrinsic weighted mean by fixed-point iteration of exp/log maps."""
    pts = np.asarray(points, dtype=float)
    active = weights > 0
    pts, w = pts[active], weights[active]
    w = w / w.sum()
    if np.all(pts == pts[0]):
        return pts[0].copy()
    gram = (pts * quad_weights) @ pts.T
    if np.any(gram <= np.cos(np.pi - 1e-6)):
        raise GeometryError("points are not contained in an open hemisphere")
    mu = w @ pts
    nmu = norm(mu, quad_weights)
    if nmu <= 1e-12:
        raise NumericError("extrinsic mean vanishes; cannot initialise the iteration")
    mu = mu / nmu
    step = np.inf
    for _ in range(max_iter):
        v = w @ log_map(mu, pts, quad_weights)
        step = float(norm(v, quad_weights))
        mu = exp_map(mu, v, quad_weights)
        if step < step_tol:
            break
    else:
        raise NumericError(f"Fréchet mean did not converge after {max_iter} iterations (last step {step:.3e})")
    if orthant:
        mu = project_nonneg(mu, quad_weights)
    return mu


class SphereSpace(GeodesicSpace):
    """Unit sphere ``{g : sum_i w_i g_i^2 = 1}``.

    Parameters
    ----------
    dim : int
        Number of coefficients.
    grid : sequence of (lo, hi, count), optional
        Tensor grid of a discretised density; sets the quadrature weights.
        Without a grid all weights are one (plain directional data).
    orthant : bool
        Restrict to the nonnegative orthant (Fisher-Rao / compositional data);
        the ubiquity map is then followed by :func:`project_nonneg`.
    """

    def __init__(self, dim=3, grid=None, orthant=False, tol=1e-10, descriptor=None):
        if descriptor is None:
            if grid is not None:
                dim = int(np.prod([cnt for _, _, cnt in grid]))
            descriptor = SpaceDescriptor("sphere", dim, grid=grid, orthant=orthant, tol=tol)
        super().__init__(descriptor)
        if descriptor.grid is not None:
            self.weights = grid_weights(descriptor.grid)
        else:
            self.weights = np.ones(descriptor.dim)

    @property
    def point_dim(self):
        return self.descriptor.dim

    @property
    def orthant(self):
        return self.descriptor.orthant

    @property
    def diameter(self):
        return np.pi / 2 if self.orthant else np.pi

    def belongs(self, x):
        x = np.asarray(x, dtype=float)
        ok = np.abs(inner(x, x, self.weights) - 1.0) <= max(self.tol, 1e-10)
        if self.orthant:
            ok &= np.all(x >= -1e-12, axis=-1)
        return ok

    def inner(self, a, b):
        return inner(a, b, self.weights)

    def distance(self, a, b):
        return distance(a, b, self.weights)

    def geodesic_point(self, a, b, t):
        return geodesic(a, b, t, self.weights)

    def ubiquity(self, w1, w2, w3):
        return ubiquity(w1, w2, w3, self.weights, orthant=self.orthant)

    def rotation(self, g1, g2, angle=None):
        return RotationSpec.from_points(g1, g2, self.weights, angle)

    def frechet_mean(self, points, weights=None):
        pts = _as_points(points, self)
        w = check_weights(weights, len(pts))
        return frechet_mean(pts, w, self.weights, orthant=self.orthant)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        if self.orthant:
            return project_nonneg(x, self.weights)
        n = norm(x, self.weights)
        if np.any(n <= 0):
            raise GeometryError("cannot project the zero vector onto the sphere")
        return x / n[..., None]

    def log(self, p, q):
        return log_map(p, q, self.weights)

    def exp(self, p, v):
        return exp_map(p, v, self.weights)

    def embed_density(self, density):
        return embed_density(density, self.weights)

    def density(self, g):
        """Density values ``g^2`` on the grid cells."""
        return np.asarray(g, dtype=float) ** 2
