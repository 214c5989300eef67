"""Geodesic optimal transport (GOT) regression.

The model predicts a response from ``p`` predictors by transporting the
response mean ``nu`` along a chain of scaled transports, one per predictor:

    Y = a_1 (.) T_{mu_j1, X_j1} (+) ... (+) a_p (.) T_{mu_jp, X_jp} (nu)

The rightmost term acts first.  The predictor ordering is chosen greedily,
each new candidate being appended at the end of the chain, and all
coefficients are then refitted jointly over the box ``[-A, A]^p``.

Arrays follow the space convention: predictors ``X`` have shape
``(n, p, point_dim)`` and responses ``Y`` shape ``(n, point_dim)``.
Predictor indices are 0-based.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from ._optim import grid_starts, minimize_box
from .core import GeodesicSpace, make_space
from .errors import FitWarning
from .transport import GeodesicTransport, scale_apply

DEFAULT_GRID = (-1.5, -0.75, 0.0, 0.75, 1.5)


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings for :func:`fit`.

    Parameters
    ----------
    alpha_bound : float
        Coefficients are searched in ``[-alpha_bound, alpha_bound]``.
    grid : sequence of float
        Coarse grid per coordinate; its cross product seeds the multi-start.
    xatol : float
        Nelder-Mead simplex tolerance.
    max_iter : int
        Iteration cap per Nelder-Mead run.
    max_starts : int
        At most this many grid seeds (lowest loss first) are refined.
    seed : int
        Recorded for provenance; the fit itself is deterministic.
    """

    alpha_bound: float = 2.0
    grid: tuple = DEFAULT_GRID
    xatol: float = 1e-6
    max_iter: int = 500
    max_starts: int = 64
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if not self.alpha_bound > 0:
            raise ValueError("alpha_bound must be positive")
        if not self.grid:
            raise ValueError("coarse grid must not be empty")
        if any(abs(g) > self.alpha_bound for g in self.grid):
            raise ValueError("coarse grid points must lie inside [-alpha_bound, alpha_bound]")
        if not self.xatol > 0 or self.max_iter < 1 or self.max_starts < 1:
            raise ValueError("invalid optimizer settings")

    def to_dict(self):
        return {
            "alpha_bound": self.alpha_bound,
            "grid": list(self.grid),
            "xatol": self.xatol,
            "max_iter": self.max_iter,
            "max_starts": self.max_starts,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def predictor_means(space: GeodesicSpace, X):
    """Fréchet mean of every predictor column, shape ``(p, point_dim)``."""
    return np.stack([space.frechet_mean(X[:, j]) for j in range(X.shape[1])])


def chain_predict(space, nu, sources, targets, coefs):
    """Apply ``coefs[0] (.) T_0 (+) ... (+) coefs[-1] (.) T_{-1}`` to ``nu``.

    ``sources[k]`` and ``targets[k]`` define transport ``k`` and may carry a
    leading batch axis; the result broadcasts accordingly.
    """
    out = nu
    for k in reversed(range(len(coefs))):
        T = GeodesicTransport(space, sources[k], targets[k])
        out = scale_apply(coefs[k], T, out)
    return out


class _ChainLoss:
    """Empirical loss ``(1/n) sum d^2(Y_i, chain_i(nu))`` for a fixed ordering."""

    def __init__(self, space, X, Y, mu, nu, order, fixed_zero=()):
        self.space = space
        self.Y = Y
        self.nu = np.asarray(nu, dtype=float)
        self.sources = [mu[j] for j in order]
        self.targets = [np.ascontiguousarray(X[:, j]) for j in order]
        # coefficients of degenerate predictors stay at zero
        self.free = np.array([j not in fixed_zero for j in order], dtype=bool)
        self.nfree = int(self.free.sum())
        self.nfev = 0

    def full(self, beta_free):
        beta = np.zeros(len(self.free))
        beta[self.free] = beta_free
        return beta

    def predictions(self, beta):
        return chain_predict(self.space, self.nu, self.sources, self.targets, beta)

    def __call__(self, beta_free):
        self.nfev += 1
        beta = self.full(beta_free)
        return float(np.mean(self.space.squared_distance(self.Y, self.predictions(beta))))


def _optimize(loss: _ChainLoss, config: FitConfig, warm=None):
    """Multi-start search over the free coordinates; returns (beta, value, converged)."""
    if loss.nfree == 0:
        return loss.full(np.zeros(0)), loss(np.zeros(0)), True
    seeds, _ = grid_starts(loss, loss.nfree, config.grid, config.max_starts)
    if warm is not None:
        seeds = np.vstack([np.asarray(warm, dtype=float)[loss.free][None, :], seeds])
    res = minimize_box(loss, seeds, config.alpha_bound, xatol=config.xatol, max_iter=config.max_iter)
    return loss.full(res.x), res.fun, res.converged


@dataclass
class StageRecord:
    """Diagnostics of one greedy selection stage."""

    stage: int
    candidate_losses: dict
    chosen: int
    loss: float
    gap: float
    coefficients: list

    def to_dict(self):
        return {
            "stage": self.stage,
            "candidate_losses": {str(k): v for k, v in self.candidate_losses.items()},
            "chosen": self.chosen,
            "loss": self.loss,
            "gap": self.gap,
            "coefficients": list(self.coefficients),
        }


def _degenerate(space, X, mu):
    """Indices of predictors whose observations all coincide with their mean."""
    out = []
    for j in range(X.shape[1]):
        if np.all(space.distance(X[:, j], mu[j]) <= space.tol):
            out.append(j)
    return tuple(out)


def select_order(space, X, Y, mu, nu, config: FitConfig = FitConfig(), fixed_zero=()):
    """Greedy predictor ordering.

    Stage ``m`` tries every remaining predictor at the end of the chain and
    minimizes the loss over all ``m`` coefficients; the strictly smallest
    loss wins, ties going to the smaller index.  The last predictor is the
    left-over one.

    Returns
    -------
    ordering : tuple of int
    staged : ndarray
        Coefficients of the last completed stage (length ``p - 1``, or empty).
    stages : list of StageRecord
    """
    p = X.shape[1]
    chosen: list = []
    staged = np.zeros(0)
    stages = []
    remaining = list(range(p))
    while len(remaining) > 1:
        losses = {}
        fits = {}
        for j in remaining:
            order = chosen + [j]
            loss = _ChainLoss(space, X, Y, mu, nu, order, fixed_zero)
            warm = np.append(staged, 0.0) if chosen else None
            beta, value, _ = _optimize(loss, config, warm)
            losses[j] = value
            fits[j] = beta
        best = min(remaining, key=lambda j: (losses[j], j))
        others = sorted(v for j, v in losses.items() if j != best)
        gap = others[0] - losses[best]
        if gap <= 1e-12 * max(1.0, abs(losses[best])):
            warnings.warn(
                f"selection stage {len(chosen) + 1}: candidates tie (gap {gap:.3g}); "
                "taking the smallest index",
                FitWarning,
                stacklevel=3,
            )
        chosen.append(best)
        remaining.remove(best)
        staged = fits[best]
        stages.append(StageRecord(len(chosen), losses, best, losses[best], gap, staged.tolist()))
    chosen.extend(remaining)
    return tuple(chosen), staged, stages


def estimate_alpha(space, X, Y, ordering, mu, nu, config: FitConfig = FitConfig(), warm=None, fixed_zero=()):
    """Joint coefficient estimate for a fixed ordering.

    Returns
    -------
    alpha : ndarray
        Coefficients in ``ordering`` order.
    loss : float
        Training loss at ``alpha``.
    converged : bool
        False if the winning Nelder-Mead run hit its iteration cap.
    """
    loss = _ChainLoss(space, X, Y, mu, nu, ordering, fixed_zero)
    return _optimize(loss, config, warm)


@dataclass
class GotModel:
    """Fitted GOT regression model.

    ``alpha[k]`` belongs to predictor ``ordering[k]``; ``mu_hat`` is indexed
    by the original predictor number.
    """

    space: GeodesicSpace
    ordering: tuple
    alpha: np.ndarray
    mu_hat: np.ndarray
    nu_hat: np.ndarray
    training_loss: float
    n_obs: int
    config: FitConfig = field(default_factory=FitConfig)
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_predictors(self):
        return len(self.ordering)

    def coefficient(self, j):
        """Coefficient attached to predictor ``j``."""
        return float(self.alpha[self.ordering.index(j)])

    def predict(self, x):
        return predict(self, x)

    def to_dict(self):
        return {
            "library_version": __version__,
            "space": self.space.descriptor.to_dict(),
            "ordering": list(self.ordering),
            "alpha": [float(a) for a in self.alpha],
            "mu_hat": np.asarray(self.mu_hat).tolist(),
            "nu_hat": np.asarray(self.nu_hat).tolist(),
            "training_loss": float(self.training_loss),
            "n_obs": self.n_obs,
            "config": self.config.to_dict(),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data):
        space = make_space(data["space"])
        return cls(
            space=space,
            ordering=tuple(int(j) for j in data["ordering"]),
            alpha=np.asarray(data["alpha"], dtype=float),
            mu_hat=np.asarray(data["mu_hat"], dtype=float),
            nu_hat=np.asarray(data["nu_hat"], dtype=float),
            training_loss=float(data["training_loss"]),
            n_obs=int(data["n_obs"]),
            config=FitConfig.from_dict(data["config"]),
            diagnostics=data.get("diagnostics", {}),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _check_data(space, X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.ndim != 3 or Y.ndim != 2:
        raise ValueError("expected X of shape (n, p, dim) and Y of shape (n, dim)")
    n, p, _ = X.shape
    if Y.shape[0] != n:
        raise ValueError("X and Y have different numbers of observations")
    if n < 2:
        raise ValueError("need at least two observations")
    if p < 1:
        raise ValueError("need at least one predictor")
    space.validate(X)
    space.validate(Y)
    return X, Y


def fit(X, Y, space: GeodesicSpace, config: Optional[FitConfig] = None) -> GotModel:
    """Fit a GOT regression model.

    Parameters
    ----------
    X : array_like, shape (n, p, point_dim)
        Predictors; ``(n, point_dim)`` is accepted for ``p = 1``.
    Y : array_like, shape (n, point_dim)
        Responses.
    space : GeodesicSpace
    config : FitConfig, optional

    Returns
    -------
    GotModel
    """
    config = config or FitConfig()
    X, Y = _check_data(space, X, Y)
    n, p, _ = X.shape
    mu = predictor_means(space, X)
    nu = space.frechet_mean(Y)

    fixed = _degenerate(space, X, mu)
    for j in fixed:
        warnings.warn(
            f"predictor {j} does not vary around its mean; its coefficient is fixed at 0",
            FitWarning,
            stacklevel=2,
        )

    ordering, staged, stages = select_order(space, X, Y, mu, nu, config, fixed)
    warm = np.append(staged, 0.0)
    alpha, loss, converged = estimate_alpha(space, X, Y, ordering, mu, nu, config, warm, fixed)
    if not converged:
        warnings.warn("coefficient search hit the iteration cap; returning the best point found", FitWarning, stacklevel=2)

    diagnostics = {
        "stages": [s.to_dict() for s in stages],
        "fixed_predictors": list(fixed),
        "converged": bool(converged),
    }
    return GotModel(space, ordering, alpha, mu, nu, loss, n, config, diagnostics)


def predict(model: GotModel, x):
    """Predict responses for predictor values ``x``.

    ``x`` has shape ``(p, point_dim)`` for one observation or
    ``(m, p, point_dim)`` for several.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1] != model.n_predictors or x.shape[2] != model.space.point_dim:
        raise ValueError(
            f"expected predictors of shape (m, {model.n_predictors}, {model.space.point_dim})"
        )
    model.space.validate(x)
    sources = [model.mu_hat[j] for j in model.ordering]
    targets = [x[:, j] for j in model.ordering]
    nu = np.broadcast_to(model.nu_hat, (x.shape[0], model.space.point_dim))
    out = chain_predict(model.space, nu, sources, targets, model.alpha)
    return out[0] if single else out


def training_loss(space, X, Y, ordering, alpha, mu, nu):
    """Empirical loss of an arbitrary coefficient vector (for diagnostics)."""
    X, Y = _check_data(space, X, Y)
    loss = _ChainLoss(space, X, Y, mu, nu, tuple(ordering))
    return loss(np.asarray(alpha, dtype=float))

