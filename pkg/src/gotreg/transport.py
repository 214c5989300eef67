"""Geodesic transports and their algebra.

``T_{a,b}(w) = ubiquity(a, b, w)`` moves ``w`` the way ``a`` moves to ``b``.
Scalar multiples follow the geodesic only part of the way (or reverse it),
multiples beyond one compose whole copies with a fractional remainder, and
addition is composition, ``T1 (+) T2 = T1 o T2``.

Sources and targets may carry leading batch axes; all operations broadcast,
which is how the regression code applies one transport per observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GeodesicSpace, SpacePoint
from .errors import DispatchError


def _unwrap(space, w):
    if isinstance(w, SpacePoint):
        if w.space != space:
            raise DispatchError(f"space mismatch: {space!r} vs {w.space!r}")
        return w.payload, True
    return np.asarray(w, dtype=float), False


def _wrap(space, value, as_point):
    return SpacePoint(space, value) if as_point else value


@dataclass(frozen=True, eq=False)
class GeodesicTransport:
    space: GeodesicSpace
    source: np.ndarray
    target: np.ndarray

    @classmethod
    def between(cls, a: SpacePoint, b: SpacePoint) -> "GeodesicTransport":
        if a.space != b.space:
            raise DispatchError(f"space mismatch: {a.space!r} vs {b.space!r}")
        return cls(a.space, a.payload, b.payload)

    def __call__(self, w):
        value, as_point = _unwrap(self.space, w)
        return _wrap(self.space, self.space.ubiquity(self.source, self.target, value), as_point)

    def inverse(self) -> "GeodesicTransport":
        return GeodesicTransport(self.space, self.target, self.source)

    def __mul__(self, alpha) -> "ScaledTransport":
        return ScaledTransport(self, float(alpha))

    __rmul__ = __mul__


def scale_apply(alpha, T: GeodesicTransport, w):
    """Apply ``alpha (.) T`` to ``w``.

    ``|alpha| <= 1`` re-attaches the geodesic truncated at ``|alpha|`` (on the
    inverse transport when ``alpha < 0``).  Larger magnitudes apply
    ``floor(|alpha|)`` whole transports first and the fractional remainder
    last.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ValueError("transport coefficient must be finite")
    space = T.space
    value, as_point = _unwrap(space, w)
    if alpha == 0.0:
        return _wrap(space, np.array(value, copy=True), as_point)
    base = T if alpha > 0 else T.inverse()
    whole = int(math.floor(abs(alpha)))
    frac = abs(alpha) - whole
    out = value
    for _ in range(whole):
        out = space.ubiquity(base.source, base.target, out)
    if frac > 0.0:
        partial = space.geodesic_point(base.source, base.target, frac)
        out = space.ubiquity(base.source, partial, out)
    return _wrap(space, out, as_point)


@dataclass(frozen=True, eq=False)
class ScaledTransport:
    base: GeodesicTransport
    coefficient: float

    def __post_init__(self):
        if not math.isfinite(self.coefficient):
            raise ValueError("transport coefficient must be finite")

    @property
    def space(self):
        return self.base.space

    def __call__(self, w):
        return scale_apply(self.coefficient, self.base, w)


@dataclass(frozen=True, eq=False)
class TransportChain:
    """``terms[0] (+) terms[1] (+) ...``; the last term acts first."""

    terms: tuple

    def __init__(self, terms: Sequence[ScaledTransport] = ()):
        terms = tuple(terms)
        if terms:
            space = terms[0].space
            for term in terms[1:]:
                if term.space != space:
                    raise DispatchError("all transports of a chain must share one space")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    def __call__(self, w):
        out = w
        for term in reversed(self.terms):
            out = term(out)
        return out

    def then(self, term: ScaledTransport) -> "TransportChain":
        """Chain with ``term`` appended at the end (so it acts first)."""
        return TransportChain(self.terms + (term,))


def apply(T: GeodesicTransport, w):
    return T(w)


def invert(T: GeodesicTransport) -> GeodesicTransport:
    return T.inverse()


def chain_apply(chain: TransportChain, w):
    return chain(w)
