"""Synthetic data, leave-one-out evaluation and Monte Carlo experiments.

Data are drawn from the GOT model itself: predictors scatter around known
population means, responses are the transported response mean followed by
a random perturbation whose Fréchet mean is the unperturbed point.  The
experiments check, at desk scale, that the greedy ordering is recovered,
that the prediction gap shrinks with the sample size and that GOT beats
Nadaraya-Watson on correctly specified data.

Every replication derives its random stream from ``(seed, replication)``,
so results do not depend on how work is spread over processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import roots_legendre

from .core import GeodesicSpace, SpaceDescriptor, make_space
from .errors import GeometryError, GotError
from .nadaraya_watson import NwConfig, nw_predict
from .regression import FitConfig, GotModel, _ChainLoss, chain_predict, fit, predict
from ._optim import minimize_box
from . import spd as spd_mod
from . import sphere as sphere_mod

MAX_TRIES = 100
SIG_DIGITS = 12


def rng_for(seed, *stream):
    """Independent generator for ``(seed, *stream)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(s) for s in stream)]))


# ---------------------------------------------------------------------------
# perturbations


@dataclass(frozen=True)
class PerturbationSpec:
    """Random perturbation with amplitude ``sigma``.

    ``kind="default"`` picks the construction of the space: sine noise on
    quantile values (wasserstein), uniform noise in chart coordinates
    (euclidean, spd) and the exponential map of a uniform tangent vector
    (sphere).  ``kind="gaussian"`` uses normal chart noise with standard
    deviation ``sigma`` in the flat spaces.
    """

    sigma: float = 0.0
    kind: str = "default"

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("perturbation amplitude must be non-negative")
        if self.kind not in ("default", "gaussian"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")


def _sine_noise(rng, sigma, levels, n):
    xi = rng.uniform(-sigma, sigma, size=(n, 3))
    basis = np.sin(np.pi * np.arange(1, 4)[:, None] * levels[None, :])
    return xi @ basis


def _tangent_noise(space, z, sigma, rng):
    raw = rng.uniform(-sigma, sigma, size=z.shape) / np.sqrt(space.weights)
    # drop the radial component so the vector is tangent at z
    return raw - space.inner(raw, z)[..., None] * z


def perturb(space: GeodesicSpace, z, spec: PerturbationSpec, rng):
    """Perturb each point of ``z`` (shape ``(..., point_dim)``).

    Sphere draws that leave the admissible set are redrawn up to 100 times.
    """
    z = np.asarray(z, dtype=float)
    if spec.sigma == 0:
        return z.copy()
    flat = z.reshape(-1, z.shape[-1])
    n = len(flat)
    kind = space.kind
    if kind == "wasserstein":
        out = space.project(flat + _sine_noise(rng, spec.sigma, space.levels, n))
    elif kind in ("euclidean", "spd"):
        if spec.kind == "gaussian":
            noise = rng.normal(0.0, spec.sigma, size=flat.shape)
        else:
            noise = rng.uniform(-spec.sigma, spec.sigma, size=flat.shape)
        if kind == "spd":
            out = space.from_chart(space.chart(flat) + noise)
        else:
            out = flat + noise
    elif kind == "sphere":
        out = np.empty_like(flat)
        for i in range(n):
            for _ in range(MAX_TRIES):
                cand = space.exp(flat[i], _tangent_noise(space, flat[i], spec.sigma, rng))
                if not space.orthant or np.all(cand >= 0):
                    out[i] = cand
                    break
            else:
                raise GeometryError(f"no admissible perturbation after {MAX_TRIES} draws; reduce sigma")
    else:  # pragma: no cover
        raise GeometryError(f"no perturbation for space kind {kind!r}")
    return out.reshape(z.shape)


# ---------------------------------------------------------------------------
# predictor generators


@dataclass(frozen=True)
class GeneratorSpec:
    """How predictors scatter around their population means.

    Wasserstein predictors are normals truncated to the support with
    location uniform on ``mean_range`` and scale uniform on ``sd_range``;
    the response mean is the truncated normal at the range midpoints.
    Other spaces perturb a base point symmetrically with amplitude
    ``spread`` (normal noise for euclidean, uniform chart noise for spd,
    uniform tangent noise for the sphere).
    """

    mean_range: tuple = (-1.0, 1.0)
    sd_range: tuple = (0.5, 1.5)
    spread: float = 0.5
    quad_points: int = 64


def base_point(space: GeodesicSpace, gen: GeneratorSpec):
    kind = space.kind
    if kind == "wasserstein":
        return space.truncnorm(np.mean(gen.mean_range), np.mean(gen.sd_range))
    if kind == "euclidean":
        return np.zeros(space.point_dim)
    if kind == "spd":
        return spd_mod.factor_to_vector(np.eye(space.size))
    if kind == "sphere":
        g = np.ones(space.point_dim)
        return g / sphere_mod.norm(g, space.weights)
    raise GeometryError(f"no generator for space kind {kind!r}")  # pragma: no cover


def population_mean(space: GeodesicSpace, gen: GeneratorSpec):
    """Fréchet mean of the predictor distribution.

    For truncated normals this averages the quantile functions over the
    parameter box with Gauss-Legendre quadrature; elsewhere the generator
    is symmetric about the base point, which is therefore the mean.
    """
    if space.kind != "wasserstein":
        return base_point(space, gen)
    nodes, weights = roots_legendre(gen.quad_points)
    (m0, m1), (s0, s1) = gen.mean_range, gen.sd_range
    m = 0.5 * (m0 + m1) + 0.5 * (m1 - m0) * nodes
    s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * nodes
    grid = space.truncnorm(m[:, None], s[None, :])
    w = np.outer(weights, weights) / 4.0
    return np.einsum("ij,ijk->k", w, grid)


def draw_predictors(space: GeodesicSpace, gen: GeneratorSpec, n, p, rng):
    """``(n, p, point_dim)`` independent predictor draws."""
    kind = space.kind
    if kind == "wasserstein":
        m = rng.uniform(*gen.mean_range, size=(n, p))
        s = rng.uniform(*gen.sd_range, size=(n, p))
        return space.truncnorm(m, s)
    base = base_point(space, gen)
    if kind == "euclidean":
        return base + rng.normal(0.0, gen.spread, size=(n, p, space.point_dim))
    if kind == "spd":
        noise = rng.uniform(-gen.spread, gen.spread, size=(n, p, space.point_dim))
        return space.from_chart(space.chart(base) + noise)
    if kind == "sphere":
        return perturb(space, np.broadcast_to(base, (n, p, space.point_dim)), PerturbationSpec(gen.spread), rng)
    raise GeometryError(f"no generator for space kind {kind!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# simulation


@dataclass
class Truth:
    """Generating parameters of a simulated GOT dataset."""

    space: GeodesicSpace
    mu: np.ndarray
    nu: np.ndarray
    alpha_star: np.ndarray
    ordering_star: tuple
    perturbation: PerturbationSpec
    generator: GeneratorSpec

    def responses(self, X, rng):
        """Noise-free chain outputs followed by perturbation."""
        clean = chain_predict(
            self.space,
            self.nu,
            [self.mu[j] for j in self.ordering_star],
            [X[:, j] for j in self.ordering_star],
            self.alpha_star,
        )
        clean = np.broadcast_to(clean, (len(X), self.space.point_dim))
        return perturb(self.space, clean, self.perturbation, rng)

    def draw(self, n, rng):
        """Fresh ``(X, Y)`` sample; failing observations are redrawn."""
        p = len(self.ordering_star)
        X = draw_predictors(self.space, self.generator, n, p, rng)
        try:
            return X, self.responses(X, rng)
        except GeometryError:
            pass
        Y = np.empty((n, self.space.point_dim))
        for i in range(n):
            for _ in range(MAX_TRIES):
                try:
                    Y[i] = self.responses(X[i : i + 1], rng)[0]
                    break
                except GeometryError:
                    X[i] = draw_predictors(self.space, self.generator, 1, p, rng)[0]
            else:
                raise GeometryError(f"observation {i} failed {MAX_TRIES} times")
        return X, Y


@dataclass
class SimulatedData:
    X: np.ndarray
    Y: np.ndarray
    truth: Truth


def make_truth(space, alpha_star, ordering_star=None, perturbation=PerturbationSpec(), generator=GeneratorSpec()):
    alpha_star = np.asarray(alpha_star, dtype=float)
    p = len(alpha_star)
    ordering_star = tuple(range(p)) if ordering_star is None else tuple(int(j) for j in ordering_star)
    if sorted(ordering_star) != list(range(p)):
        raise ValueError("ordering_star must be a permutation of the predictor indices")
    mu = np.stack([population_mean(space, generator)] * p)
    return Truth(space, mu, base_point(space, generator), alpha_star, ordering_star, perturbation, generator)


def simulate_got(
    space: GeodesicSpace,
    n,
    alpha_star,
    ordering_star=None,
    perturbation=PerturbationSpec(),
    seed=0,
    generator=GeneratorSpec(),
):
    """Draw ``n`` observations from the GOT model.

    ``alpha_star[k]`` is the coefficient of predictor ``ordering_star[k]``
    (identity ordering by default).
    """
    truth = make_truth(space, alpha_star, ordering_star, perturbation, generator)
    X, Y = truth.draw(n, rng_for(seed))
    return SimulatedData(X, Y, truth)


# ---------------------------------------------------------------------------
# leave-one-out


@dataclass
class LooResult:
    method: str
    errors: np.ndarray  # nan for failed folds
    failures: dict = field(default_factory=dict)

    @property
    def mean_error(self):
        ok = ~np.isnan(self.errors)
        return float(np.mean(self.errors[ok])) if ok.any() else math.nan


def _loo_fold(args):
    space_dict, X, Y, i, method, fit_config, nw_config, nw_predictor = args
    space = make_space(space_dict)
    keep = np.arange(len(Y)) != i
    try:
        if method == "got":
            model = fit(X[keep], Y[keep], space, fit_config)
            pred = predict(model, X[i])
        else:
            pred = nw_predict(space, X[keep, nw_predictor], Y[keep], X[i, nw_predictor], nw_config)
        return float(space.distance(Y[i], pred)), None
    except (GotError, ValueError, ArithmeticError) as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def loo_evaluate(
    space: GeodesicSpace,
    X,
    Y,
    method="got",
    fit_config: Optional[FitConfig] = None,
    nw_config: NwConfig = NwConfig(),
    nw_predictor=0,
    threads=1,
):
    """Leave-one-out prediction errors ``d(Y_i, Yhat_{-i})``.

    Nadaraya-Watson uses the single predictor ``nw_predictor``.  Folds that
    raise are recorded in ``failures`` and excluded from the mean.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 2:
        X = X[:, None, :]
    if len(Y) < 3:
        raise ValueError("leave-one-out needs at least three observations")
    if method not in ("got", "nw"):
        raise ValueError(f"unknown method {method!r}")
    fit_config = fit_config or FitConfig()
    jobs = [
        (space.descriptor.to_dict(), X, Y, i, method, fit_config, nw_config, nw_predictor)
        for i in range(len(Y))
    ]
    results = run_ordered(_loo_fold, jobs, threads)
    errors = np.array([r[0] for r in results])
    failures = {i: r[1] for i, r in enumerate(results) if r[1] is not None}
    return LooResult(method, errors, failures)


def run_ordered(func, jobs, threads=1):
    """``[func(j) for j in jobs]``, optionally on a process pool (order kept)."""
    if threads <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, jobs))


# ---------------------------------------------------------------------------
# prediction gap


def _truth_loss(truth: Truth, X, Y, alpha_by_predictor):
    loss = _ChainLoss(truth.space, X, Y, truth.mu, truth.nu, truth.ordering_star)
    return loss, loss(np.asarray(alpha_by_predictor, dtype=float))


def estimate_delta(model: GotModel, truth: Truth, test_size=1000, seed=0, stream=(), bound=None):
    """Monte Carlo prediction gap of the fitted coefficients.

    The test loss uses the generating means and ordering; the fitted
    coefficient of each predictor is plugged in at that predictor's
    position.  The best coefficients are searched on the same test sample
    from ``alpha_star`` and from the fitted values.  Returns ``max(gap, 0)``.
    """
    X, Y = truth.draw(test_size, rng_for(seed, *stream, 1))
    fitted = np.array([model.coefficient(j) for j in truth.ordering_star])
    loss, fitted_loss = _truth_loss(truth, X, Y, fitted)
    bound = model.config.alpha_bound if bound is None else bound
    starts = np.vstack([truth.alpha_star, np.clip(fitted, -bound, bound)])
    best = minimize_box(loss, starts, bound, xatol=model.config.xatol, max_iter=model.config.max_iter)
    return max(fitted_loss - min(best.fun, fitted_loss), 0.0)


# ---------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class Scenario:
    """A simulation setting shared by the experiments."""

    space: dict = field(default_factory=lambda: {"kind": "wasserstein", "dim": 200, "support": [-10.0, 10.0]})
    alpha_star: tuple = (0.8, 0.3)
    ordering_star: tuple = (0, 1)
    sigma: float = 0.05
    generator: GeneratorSpec = GeneratorSpec()
    fit: FitConfig = FitConfig(max_starts=4)

    def build_space(self):
        return make_space(self.space)

    def truth(self):
        return make_truth(
            self.build_space(), self.alpha_star, self.ordering_star, PerturbationSpec(self.sigma), self.generator
        )

    def to_dict(self):
        return {
            "space": SpaceDescriptor.from_dict(self.space).to_dict(),
            "alpha_star": list(self.alpha_star),
            "ordering_star": list(self.ordering_star),
            "sigma": self.sigma,
            "generator": asdict(self.generator),
            "fit": self.fit.to_dict(),
        }


@dataclass
class ExperimentReport:
    """Per-replication records plus a summary."""

    name: str
    config: dict
    records: list
    summary: dict

    @property
    def replications(self):
        return len(self.records)

    def to_dict(self):
        return {"name": self.name, "config": self.config, "summary": self.summary, "records": self.records}

    def to_json(self):
        return json.dumps(round_floats(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        if self.records:
            fields = list(self.records[0])
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(fields)
            for rec in self.records:
                writer.writerow([format_value(rec[f]) for f in fields])
        return buf.getvalue()

    def write(self, directory, stem=None):
        import os

        stem = stem or self.name
        os.makedirs(directory, exist_ok=True)
        paths = (os.path.join(directory, f"{stem}.json"), os.path.join(directory, f"{stem}.csv"))
        with open(paths[0], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())
        with open(paths[1], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv())
        return paths


def format_value(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), f".{SIG_DIGITS}g")
    if isinstance(v, (list, tuple)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def round_floats(obj):
    """Round every float in a JSON-shaped object to 12 significant digits."""
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not math.isfinite(f):
            return None
        return float(format(f, f".{SIG_DIGITS}g"))
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _order_job(args):
    scenario, n, seed, rep = args
    truth = scenario.truth()
    X, Y = truth.draw(n, rng_for(seed, rep))
    model = fit(X, Y, truth.space, scenario.fit)
    recovered = tuple(model.ordering) == tuple(truth.ordering_star)
    return {
        "replication": rep,
        "recovered": int(recovered),
        "ordering": list(model.ordering),
        "alpha": [float(a) for a in model.alpha],
        "training_loss": float(model.training_loss),
    }


def order_recovery(scenario: Scenario, n=500, replications=100, seed=0, threads=1):
    """How often the greedy ordering equals the generating ordering."""
    jobs = [(scenario, n, seed, r) for r in range(replications)]
    records = run_ordered(_order_job, jobs, threads)
    rate = float(np.mean([r["recovered"] for r in records])) if records else math.nan
    config = {"scenario": scenario.to_dict(), "n": n, "replications": replications, "seed": seed}
    return ExperimentReport("order_recovery", config, records, {"recovery_rate": rate})


def _delta_job(args):
    scenario, n, seed, rep, test_size = args
    truth = scenario.truth()
    X, Y = truth.draw(n, rng_for(seed, n, rep))
    model = fit(X, Y, truth.space, scenario.fit)
    delta = estimate_delta(model, truth, test_size, seed=seed, stream=(n, rep))
    return {"replication": rep, "n": n, "delta": delta, "alpha": [float(a) for a in model.alpha]}


def prediction_gap(scenario: Scenario, sizes=(50, 500), replications=50, seed=0, test_size=1000, threads=1):
    """Estimated prediction gap per replication for each sample size."""
    jobs = [(scenario, n, seed, r, test_size) for n in sizes for r in range(replications)]
    records = run_ordered(_delta_job, jobs, threads)
    summary = {}
    for n in sizes:
        d = np.array([r["delta"] for r in records if r["n"] == n])
        summary[f"n{n}"] = {
            "median_delta": float(np.median(d)),
            "q25_delta": float(np.quantile(d, 0.25)),
            "q75_delta": float(np.quantile(d, 0.75)),
        }
    config = {
        "scenario": scenario.to_dict(),
        "sizes": list(sizes),
        "replications": replications,
        "seed": seed,
        "test_size": test_size,
    }
    return ExperimentReport("prediction_gap", config, records, summary)


def _dominance_job(args):
    scenario, n, seed, rep, nw_predictor = args
    truth = scenario.truth()
    X, Y = truth.draw(n, rng_for(seed, rep))
    got = loo_evaluate(truth.space, X, Y, "got", scenario.fit)
    nw = loo_evaluate(truth.space, X, Y, "nw", nw_predictor=nw_predictor)
    return {
        "replication": rep,
        "got_loo": got.mean_error,
        "nw_loo": nw.mean_error,
        "got_wins": int(got.mean_error < nw.mean_error),
        "failed_folds": len(got.failures) + len(nw.failures),
    }


def method_comparison(scenario: Scenario, n=30, replications=50, seed=0, nw_predictor=0, threads=1):
    """Leave-one-out errors of GOT and Nadaraya-Watson on GOT-generated data."""
    jobs = [(scenario, n, seed, r, nw_predictor) for r in range(replications)]
    records = run_ordered(_dominance_job, jobs, threads)
    wins = int(sum(r["got_wins"] for r in records))
    summary = {
        "got_wins": wins,
        "replications": replications,
        "median_got_loo": float(np.median([r["got_loo"] for r in records])),
        "median_nw_loo": float(np.median([r["nw_loo"] for r in records])),
    }
    config = {
        "scenario": scenario.to_dict(),
        "n": n,
        "replications": replications,
        "seed": seed,
        "nw_predictor": nw_predictor,
    }
    return ExperimentReport("method_comparison", config, records, summary)


def alpha_recovery(scenario: Scenario, n=200, seed=0):
    """Single noiseless fit; reports the largest coefficient error."""
    truth = scenario.truth()
    X, Y = truth.draw(n, rng_for(seed))
    model = fit(X, Y, truth.space, scenario.fit)
    fitted = np.array([model.coefficient(j) for j in truth.ordering_star])
    err = float(np.max(np.abs(fitted - truth.alpha_star)))
    record = {"ordering": list(model.ordering), "alpha": fitted.tolist(), "max_abs_error": err}
    config = {"scenario": scenario.to_dict(), "n": n, "seed": seed}
    return ExperimentReport("alpha_recovery", config, [record], {"max_abs_error": err})
