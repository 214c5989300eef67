"""Geodesic optimal transport regression for random objects in geodesic spaces."""

__version__ = "0.1.0"

from .core import (
    EuclideanSpace,
    GeodesicSpace,
    SpaceDescriptor,
    SpacePoint,
    distance,
    frechet_mean,
    geodesic_point,
    make_space,
    project,
    ubiquity,
)
from .errors import DispatchError, FitWarning, GeometryError, GotError, IngestionError, NumericError
from .spd import SpdSpace
from .sphere import SphereSpace
from .transport import GeodesicTransport, ScaledTransport, TransportChain, apply, chain_apply, invert, scale_apply
from .wasserstein import WassersteinSpace
from .regression import FitConfig, GotModel, estimate_alpha, fit, predict, select_order
from .nadaraya_watson import NwConfig, median_tau, nw_predict

__all__ = [
    "DispatchError",
    "EuclideanSpace",
    "FitConfig",
    "FitWarning",
    "GeodesicSpace",
    "GeodesicTransport",
    "GeometryError",
    "GotError",
    "GotModel",
    "IngestionError",
    "NumericError",
    "NwConfig",
    "ScaledTransport",
    "SpaceDescriptor",
    "SpacePoint",
    "SpdSpace",
    "SphereSpace",
    "TransportChain",
    "WassersteinSpace",
    "apply",
    "chain_apply",
    "distance",
    "estimate_alpha",
    "fit",
    "frechet_mean",
    "geodesic_point",
    "invert",
    "make_space",
    "median_tau",
    "nw_predict",
    "predict",
    "project",
    "scale_apply",
    "select_order",
    "ubiquity",
]
