"""Geodesic-space interface, point container and the Euclidean reference space.

Spaces work on plain arrays whose last axis holds one point, so every method
broadcasts over leading axes.  :class:`SpacePoint` wraps a single point
together with its space for the checked, single-point API exposed by the
module-level functions (:func:`distance`, :func:`ubiquity`, ...).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DispatchError, GeometryError, IngestionError

KINDS = ("euclidean", "wasserstein", "sphere", "spd")


@dataclass(frozen=True)
class SpaceDescriptor:
    """Serializable description of a space.

    ``dim`` is the vector dimension (euclidean), the quantile grid size
    (wasserstein), the number of coefficients (sphere) or the matrix size
    (spd).  ``support`` is the distribution support for wasserstein and
    optional clamping bounds for euclidean.  ``grid`` describes the tensor
    grid ``((lo, hi, count), ...)`` of a discretised density on the sphere.
    """

    kind: str
    dim: int
    support: Optional[Tuple[float, float]] = None
    grid: Optional[Tuple[Tuple[float, float, int], ...]] = None
    orthant: bool = False
    tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if int(self.dim) < 1:
            raise ValueError("dimension/grid parameters must be >= 1")
        object.__setattr__(self, "dim", int(self.dim))
        if self.support is not None:
            lo, hi = (float(v) for v in self.support)
            object.__setattr__(self, "support", (lo, hi))
        if self.kind == "wasserstein":
            if self.support is None:
                raise ValueError("wasserstein space needs a support interval")
            if not self.support[1] > self.support[0]:
                raise ValueError("support interval must have positive length")
        if self.grid is not None:
            grid = tuple((float(lo), float(hi), int(cnt)) for lo, hi, cnt in self.grid)
            if any(cnt < 1 or hi <= lo for lo, hi, cnt in grid):
                raise ValueError("invalid sphere grid")
            if int(np.prod([cnt for _, _, cnt in grid])) != self.dim:
                raise ValueError("sphere grid size does not match dim")
            object.__setattr__(self, "grid", grid)
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")

    def to_dict(self):
        out = {"kind": self.kind, "dim": self.dim, "tol": self.tol}
        if self.support is not None:
            out["support"] = list(self.support)
        if self.grid is not None:
            out["grid"] = [list(g) for g in self.grid]
        if self.orthant:
            out["orthant"] = True
        return out

    @classmethod
    def from_dict(cls, data):
        grid = data.get("grid")
        return cls(
            kind=data["kind"],
            dim=data["dim"],
            support=tuple(data["support"]) if data.get("support") is not None else None,
            grid=tuple(tuple(g) for g in grid) if grid is not None else None,
            orthant=bool(data.get("orthant", False)),
            tol=float(data.get("tol", 1e-10)),
        )


class GeodesicSpace(ABC):
    """A unique-geodesic metric space with a ubiquity map.

    Subclasses implement the array-level geometry.  All methods accept
    arrays of shape ``(..., point_dim)`` and broadcast over leading axes.
    """

    #: tolerance for geometric identities in exact spaces
    geometry_tol = 1e-8

    def __init__(self, descriptor: SpaceDescriptor):
        self.descriptor = descriptor

    @property
    def kind(self):
        return self.descriptor.kind

    @property
    def tol(self):
        return self.descriptor.tol

    @property
    @abstractmethod
    def point_dim(self) -> int:
        """Length of the vector holding one point."""

    def __eq__(self, other):
        return isinstance(other, GeodesicSpace) and self.descriptor == other.descriptor

    def __hash__(self):
        return hash(self.descriptor)

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor})"

    # -- membership --------------------------------------------------------

    def _shape_ok(self, x):
        return x.shape[-1:] == (self.point_dim,)

    @abstractmethod
    def belongs(self, x) -> np.ndarray:
        """Boolean membership test, vectorised over leading axes."""

    def validate(self, x):
        """Return ``x`` as a float array, raising if any point is not a member."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or not self._shape_ok(x):
            raise IngestionError(
                f"expected points with last axis {self.point_dim}, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise IngestionError("non-finite point coordinates")
        ok = np.asarray(self.belongs(x))
        if not np.all(ok):
            raise IngestionError(f"{int(np.size(ok) - np.count_nonzero(ok))} point(s) outside the {self.kind} space")
        return x

    # -- geometry ----------------------------------------------------------

    @abstractmethod
    def distance(self, a, b) -> np.ndarray:
        """Geodesic distance."""

    def squared_distance(self, a, b):
        return self.distance(a, b) ** 2

    @abstractmethod
    def geodesic_point(self, a, b, t):
        """Point at fraction ``t`` of the geodesic from ``a`` to ``b``."""

    @abstractmethod
    def ubiquity(self, w1, w2, w3):
        """Endpoint of the geodesic from ``w1`` to ``w2`` re-attached at ``w3``."""

    @abstractmethod
    def frechet_mean(self, points, weights=None):
        """Weighted Fréchet mean of ``points`` (shape ``(n, point_dim)``)."""

    @abstractmethod
    def project(self, x):
        """Map onto the admissible subset of the space (idempotent)."""

    # -- conveniences ------------------------------------------------------

    def point(self, values) -> "SpacePoint":
        return SpacePoint(self, values)

    def geodesic_ratio(self, w1, w2, w3, alpha):
        """Empirical ratio ``d(g13(alpha), g23(alpha)) / d(w1, w2)``.

        Monitors the Lipschitz constant of geodesics in their starting point.
        Returns ``nan`` where ``w1 == w2``.
        """
        num = self.distance(self.geodesic_point(w1, w3, alpha), self.geodesic_point(w2, w3, alpha))
        den = self.distance(w1, w2)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def check_weights(weights, n):
    """Validate Fréchet-mean weights and return them normalised to sum one."""
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise ValueError("weights must have a positive sum")
    return w / total


def _as_points(points, space):
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != space.point_dim:
        raise ValueError(f"expected an (n, {space.point_dim}) array of points")
    if pts.shape[0] == 0:
        raise ValueError("cannot average an empty list of points")
    return pts


# ---------------------------------------------------------------------------


class EuclideanSpace(GeodesicSpace):
    """``R^d`` with the usual norm; the reference geometry for testing.

    If the descriptor carries a ``support`` interval it is used as
    coordinate-wise clamping bounds by :meth:`project`.
    """

    def __init__(self, dim=1, bounds=None, tol=1e-10, descriptor=None):
        if descriptor is None:
            descriptor = SpaceDescriptor("euclidean", dim, support=bounds, tol=tol)
        super().__init__(descriptor)

    @property
    def point_dim(self):
        return self.descriptor.dim

    def belongs(self, x):
        x = np.asarray(x, dtype=float)
        ok = np.all(np.isfinite(x), axis=-1)
        if self.descriptor.support is not None:
            lo, hi = self.descriptor.support
            ok &= np.all((x >= lo - self.tol) & (x <= hi + self.tol), axis=-1)
        return ok

    def distance(self, a, b):
        return np.linalg.norm(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), axis=-1)

    def squared_distance(self, a, b):
        diff = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        return np.einsum("...i,...i->...", diff, diff)

    def geodesic_point(self, a, b, t):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        t = np.asarray(t, dtype=float)[..., None] if np.ndim(t) else float(t)
        return a + t * (b - a)

    def ubiquity(self, w1, w2, w3):
        return np.asarray(w3, dtype=float) + (np.asarray(w2, dtype=float) - np.asarray(w1, dtype=float))

    def frechet_mean(self, points, weights=None):
        pts = _as_points(points, self)
        w = check_weights(weights, len(pts))
        if np.all(pts == pts[0]):
            return pts[0].copy()
        return w @ pts

    def project(self, x):
        x = np.asarray(x, dtype=float)
        if self.descriptor.support is None:
            return x.copy()
        lo, hi = self.descriptor.support
        return np.clip(x, lo, hi)


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpacePoint:
    """One element of a geodesic space.

    The payload is copied and made read-only; points are immutable values.
    """

    space: GeodesicSpace
    payload: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.payload, dtype=float)
        if arr.shape != (self.space.point_dim,):
            raise IngestionError(
                f"{self.space.kind} point needs {self.space.point_dim} values, got shape {arr.shape}"
            )
        self.space.validate(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "payload", arr)

    def __eq__(self, other):
        return (
            isinstance(other, SpacePoint)
            and self.space == other.space
            and np.array_equal(self.payload, other.payload)
        )

    def __hash__(self):
        return hash((self.space, self.payload.tobytes()))

    def __repr__(self):
        return f"SpacePoint({self.space.kind}, {np.array2string(self.payload, threshold=8)})"


def _common_space(*points: SpacePoint) -> GeodesicSpace:
    space = points[0].space
    for p in points[1:]:
        if p.space != space:
            raise DispatchError(f"space mismatch: {space!r} vs {p.space!r}")
    return space


def distance(a: SpacePoint, b: SpacePoint) -> float:
    space = _common_space(a, b)
    return float(space.distance(a.payload, b.payload))


def geodesic_point(a: SpacePoint, b: SpacePoint, t: float) -> SpacePoint:
    if not 0.0 <= t <= 1.0:
        raise ValueError("geodesic fraction must lie in [0, 1]")
    space = _common_space(a, b)
    return SpacePoint(space, space.geodesic_point(a.payload, b.payload, t))


def ubiquity(w1: SpacePoint, w2: SpacePoint, w3: SpacePoint) -> SpacePoint:
    space = _common_space(w1, w2, w3)
    return SpacePoint(space, space.ubiquity(w1.payload, w2.payload, w3.payload))


def frechet_mean(points: Sequence[SpacePoint], weights=None) -> SpacePoint:
    if len(points) == 0:
        raise ValueError("cannot average an empty list of points")
    space = _common_space(*points)
    stacked = np.stack([p.payload for p in points])
    return SpacePoint(space, space.frechet_mean(stacked, weights))


def project(w: SpacePoint) -> SpacePoint:
    return SpacePoint(w.space, w.space.project(w.payload))


def make_space(descriptor) -> GeodesicSpace:
    """Instantiate the space described by a :class:`SpaceDescriptor` or dict."""
    if isinstance(descriptor, dict):
        descriptor = SpaceDescriptor.from_dict(descriptor)
    if descriptor.kind == "euclidean":
        return EuclideanSpace(descriptor=descriptor)
    if descriptor.kind == "wasserstein":
        from .wasserstein import WassersteinSpace

        return WassersteinSpace(descriptor=descriptor)
    if descriptor.kind == "sphere":
        from .sphere import SphereSpace

        return SphereSpace(descriptor=descriptor)
    if descriptor.kind == "spd":
        from .spd import SpdSpace

        return SpdSpace(descriptor=descriptor)
    raise GeometryError(f"unsupported space kind {descriptor.kind!r}")  # pragma: no cover
