"""Nadaraya-Watson regression for one predictor in a metric space.

Weights are ``K(X_i, x) = exp(-d^2(X_i, x) / tau)`` and the prediction is
the weighted Fréchet mean of the responses.  By default ``tau`` is the
median distance from the training predictors to the query, recomputed for
every query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import GeodesicSpace
from .errors import NumericError

MEDIAN = "median"
UNDERFLOW = 1e-300


@dataclass(frozen=True)
class NwConfig:
    """``tau`` is a positive number or ``"median"``."""

    tau: Union[float, str] = MEDIAN

    def __post_init__(self):
        if isinstance(self.tau, str):
            if self.tau != MEDIAN:
                raise ValueError(f"tau must be a positive number or {MEDIAN!r}")
        elif not float(self.tau) > 0:
            raise ValueError("tau must be positive")


def median_tau(distances):
    """Median of the predictor-to-query distances.

    Even sample sizes average the two middle values.  The result is zero
    when more than half of the training points coincide with the query.

    Raises
    ------
    NumericError
        If all distances are zero (the heuristic gives no scale).
    """
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise ValueError("need at least one distance")
    if np.all(d == 0):
        raise NumericError("all distances to the query are zero; pass an explicit tau")
    return float(np.median(d))


def kernel_weights(distances, tau):
    d = np.asarray(distances, dtype=float)
    return np.exp(-(d * d) / tau)


def nw_weights(space: GeodesicSpace, train_x, query, config: NwConfig = NwConfig()):
    d = space.distance(train_x, query)
    if len(d) == 1 or np.all(d == 0):
        # every kernel weight is exp(0) whatever tau is
        return np.ones(len(d))
    tau = median_tau(d) if config.tau == MEDIAN else float(config.tau)
    if tau == 0:
        # limit tau -> 0: only exact matches keep weight
        return (d == 0).astype(float)
    w = kernel_weights(d, tau)
    if np.all(w < UNDERFLOW):
        raise NumericError(f"all kernel weights underflow at tau={tau:.3g}; use a larger tau")
    return w


def nw_predict(space: GeodesicSpace, train_x, train_y, query, config: NwConfig = NwConfig()):
    """Kernel-weighted Fréchet mean of ``train_y`` at ``query``.

    Parameters
    ----------
    train_x, train_y : ndarray, shape (n, point_dim)
    query : ndarray, shape (point_dim,) or (m, point_dim)
    """
    train_x = np.asarray(train_x, dtype=float)
    train_y = np.asarray(train_y, dtype=float)
    query = np.asarray(query, dtype=float)
    if len(train_x) != len(train_y) or len(train_x) == 0:
        raise ValueError("need matching, non-empty training predictors and responses")
    if query.ndim == 2:
        return np.stack([nw_predict(space, train_x, train_y, q, config) for q in query])
    w = nw_weights(space, train_x, query, config)
    return space.frechet_mean(train_y, w)
