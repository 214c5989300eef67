"""Acceptance suite: one test (or parametrised family) per criterion.

Every check logs ``(criterion, passed, detail)`` before asserting, and the
terminal summary prints one PASS/FAIL line per criterion.
"""

import os
import time

import numpy as np
import pytest

from gotreg import (
    EuclideanSpace,
    FitConfig,
    GeodesicTransport,
    SpdSpace,
    SphereSpace,
    TransportChain,
    WassersteinSpace,
    chain_apply,
    fit,
    scale_apply,
)
from gotreg import cli
from gotreg import sphere as sph
from gotreg.harness import Scenario, method_comparison, order_recovery, prediction_gap

N_RANDOM = 100
WORKERS = min(8, os.cpu_count() or 1)


def record(log, crit, passed, detail):
    line = (crit, bool(passed), detail)
    log.append(line)
    print(("PASS " if passed else "FAIL ") + f"{crit}: {detail}")
    return passed


# ---------------------------------------------------------------------------
# random points per space


def unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class Sampler:
    """Random interior points of the four test spaces."""

    def __init__(self, kind, seed):
        self.kind = kind
        self.rng = np.random.default_rng(seed)
        if kind == "euclidean":
            self.space = EuclideanSpace(3)
        elif kind == "sphere":
            self.space = SphereSpace(4, orthant=True)
        elif kind == "spd":
            self.space = SpdSpace(3)
        else:
            self.space = WassersteinSpace(500, (-10.0, 10.0))
        self.tol = self.space.geometry_tol

    def draw(self):
        r = self.rng
        if self.kind == "euclidean":
            return r.normal(scale=2.0, size=3)
        if self.kind == "sphere":
            return unit(np.abs(r.normal(size=4)) + 0.05)
        if self.kind == "spd":
            return self.space.from_chart(r.normal(scale=0.7, size=6))
        return self.space.truncnorm(r.uniform(-2, 2), r.uniform(0.5, 2))


KINDS = ["euclidean", "sphere", "spd", "wasserstein"]


# ---------------------------------------------------------------------------
# 1


def test_ac1_euclidean_ols(acceptance_log):
    rng = np.random.default_rng(2024)
    n, p, d = 300, 3, 2
    X = rng.normal(size=(n, p, d))
    beta = np.array([0.9, -0.5, 0.25])
    Y = np.array([1.0, -2.0]) + np.einsum("j,njd->nd", beta, X) + 0.1 * rng.normal(size=(n, d))
    start = time.perf_counter()
    model = fit(X, Y, EuclideanSpace(d), FitConfig())
    elapsed = time.perf_counter() - start
    Xc = (X - X.mean(axis=0)).transpose(0, 2, 1).reshape(n * d, p)
    ols = np.linalg.lstsq(Xc, (Y - Y.mean(axis=0)).reshape(n * d), rcond=None)[0]
    dev = np.max(np.abs(np.array([model.coefficient(j) for j in range(p)]) - ols))
    ok = dev <= 1e-3 and elapsed < 10.0
    record(acceptance_log, "AC1 euclidean OLS", ok, f"max |alpha - OLS| = {dev:.2e}, {elapsed:.1f} s")
    assert ok


# ---------------------------------------------------------------------------
# 2


@pytest.mark.parametrize("kind", KINDS)
def test_ac2_geodesic_proportionality(acceptance_log, kind):
    s = Sampler(kind, 2)
    worst = 0.0
    ok = True
    for _ in range(N_RANDOM):
        a, b = s.draw(), s.draw()
        t = s.rng.uniform()
        d = float(s.space.distance(a, b))
        err = abs(float(s.space.distance(a, s.space.geodesic_point(a, b, t))) - t * d)
        bound = 1e-3 * d if kind == "wasserstein" else 1e-8
        ok &= err <= bound
        worst = max(worst, err / d if kind == "wasserstein" and d > 0 else err)
    unit_txt = "relative" if kind == "wasserstein" else "absolute"
    record(acceptance_log, "AC2 geodesic proportionality", ok, f"{kind} worst {unit_txt} {worst:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 3


@pytest.mark.parametrize("kind", KINDS)
def test_ac3_ubiquity_identities(acceptance_log, kind):
    s = Sampler(kind, 3)
    worst = 0.0
    for _ in range(N_RANDOM):
        w1, w2, w3 = s.draw(), s.draw(), s.draw()
        worst = max(
            worst,
            float(s.space.distance(s.space.ubiquity(w1, w2, w1), w2)),
            float(s.space.distance(s.space.ubiquity(w1, w1, w3), w3)),
        )
    ok = worst <= s.tol
    record(acceptance_log, "AC3 ubiquity identities and law", ok, f"{kind} identities {worst:.1e}")
    assert ok


def projection_free(s, w1, w2, w3):
    """True when no Υ evaluation of the law leaves the admissible set."""
    if s.kind == "sphere":
        w = s.space.weights
        raw = [sph.ubiquity(w1, w2, w3, w)]
        raw += [sph.ubiquity(w1, s.space.geodesic_point(w1, w2, r), w3, w) for r in (0.25, 0.5, 0.75)]
        return all(np.all(v >= 0) for v in raw)
    if s.kind == "wasserstein":
        lo, hi = s.space.support
        T = s.space.transport_map(w1, w2)
        v = T(w3)
        return bool(np.all((v > lo) & (v < hi)) and np.all(np.diff(v) >= 0))
    return True


@pytest.mark.parametrize("kind", KINDS)
def test_ac3_consistency_law(acceptance_log, kind):
    s = Sampler(kind, 33)
    worst = 0.0
    used = 0
    while used < N_RANDOM:
        w1, w2, w3 = s.draw(), s.draw(), s.draw()
        if not projection_free(s, w1, w2, w3):
            continue
        used += 1
        w4 = s.space.ubiquity(w1, w2, w3)
        for r in (0.25, 0.5, 0.75):
            lhs = s.space.ubiquity(w1, s.space.geodesic_point(w1, w2, r), w3)
            rhs = s.space.geodesic_point(w3, w4, r)
            worst = max(worst, float(s.space.distance(lhs, rhs)))
    ok = worst <= s.tol
    record(acceptance_log, "AC3 ubiquity identities and law", ok, f"{kind} law {worst:.1e} (tol {s.tol:g})")
    assert ok


# ---------------------------------------------------------------------------
# 4


def interior(space, q):
    """No quantile value was clamped to the support boundary."""
    lo, hi = space.support
    return bool(np.all((q > lo) & (q < hi)))


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.7])
@pytest.mark.parametrize("kind", KINDS)
def test_ac4_round_trip(acceptance_log, kind, alpha):
    s = Sampler(kind, 4)
    if kind == "sphere":
        # unconstrained sphere so that no projection can fire
        s.space = SphereSpace(4)
    worst = 0.0
    used = 0
    while used < N_RANDOM:
        a, b, w = s.draw(), s.draw(), s.draw()
        T = GeodesicTransport(s.space, a, b)
        forward = scale_apply(alpha, T, w)
        back = scale_apply(-alpha, T, forward)
        if kind == "wasserstein" and not (interior(s.space, forward) and interior(s.space, back)):
            continue
        used += 1
        worst = max(worst, float(s.space.distance(back, w)))
    ok = worst <= s.tol
    record(acceptance_log, "AC4 transport round trip", ok, f"{kind} alpha={alpha} {worst:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 5


def test_ac5_gaussian_oracle(acceptance_log):
    S = WassersteinSpace(1000, (-10.0, 10.0))
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        m1, m2 = rng.uniform(-2, 2, 2)
        s1, s2 = rng.uniform(0.5, 2, 2)
        d2 = float(S.distance(S.truncnorm(m1, s1), S.truncnorm(m2, s2))) ** 2
        exact = (m1 - m2) ** 2 + (s1 - s2) ** 2
        worst = max(worst, abs(d2 - exact) / exact)
    ok = worst <= 0.01
    record(acceptance_log, "AC5 wasserstein gaussian oracle", ok, f"worst relative error {worst:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 6


def test_ac6_rotation(acceptance_log):
    S = SphereSpace(6)
    rng = np.random.default_rng(6)
    worst_map = worst_norm = 0.0
    for _ in range(N_RANDOM):
        g1, g2, x = unit(rng.normal(size=(3, 6)))
        spec = S.rotation(g1, g2)
        worst_map = max(worst_map, float(np.max(np.abs(sph.rotate(spec, g1) - g2))))
        worst_norm = max(worst_norm, abs(float(np.linalg.norm(sph.rotate(spec, x))) - 1.0))
    ok = worst_map <= 1e-10 and worst_norm <= 1e-10
    record(acceptance_log, "AC6 rotation operator", ok, f"R(g1)-g2 {worst_map:.1e}, norm {worst_norm:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 7


def test_ac7_spd_flat_chart(acceptance_log):
    S = SpdSpace(3)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(N_RANDOM):
        c = rng.normal(scale=0.7, size=(7, 6))
        pts = S.from_chart(c)
        ubi = S.chart(S.ubiquity(pts[0], pts[1], pts[2]))
        worst = max(worst, float(np.max(np.abs(ubi - (c[2] + c[1] - c[0])))))
        coefs = rng.uniform(-2, 2, 2)
        chain = TransportChain(
            [GeodesicTransport(S, pts[3], pts[4]) * coefs[0], GeodesicTransport(S, pts[5], pts[6]) * coefs[1]]
        )
        out = S.chart(chain_apply(chain, pts[0]))
        expected = c[0] + coefs[0] * (c[4] - c[3]) + coefs[1] * (c[6] - c[5])
        worst = max(worst, float(np.max(np.abs(out - expected))))
    ok = worst <= 1e-12
    record(acceptance_log, "AC7 spd flat chart", ok, f"worst chart deviation {worst:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 8-10 simulation experiments


@pytest.mark.slow
def test_ac8_order_recovery(acceptance_log):
    start = time.perf_counter()
    report = order_recovery(Scenario(), n=500, replications=100, seed=8, threads=WORKERS)
    elapsed = time.perf_counter() - start
    hits = sum(r["recovered"] for r in report.records)
    ok = hits >= 95
    detail = f"{hits}/100 orderings recovered; {elapsed / 60:.1f} min on {WORKERS} worker(s)"
    record(acceptance_log, "AC8 order recovery", ok, detail)
    assert ok


@pytest.mark.slow
def test_ac9_prediction_gap(acceptance_log):
    sc = Scenario()
    report = prediction_gap(sc, sizes=(50, 500), replications=50, seed=9, test_size=1000, threads=WORKERS)
    small = report.summary["n50"]["median_delta"]
    large = report.summary["n500"]["median_delta"]
    lo, hi = sc.space["support"]
    cap = 0.01 * (hi - lo) ** 2
    ok = large < small and large <= cap
    detail = f"median delta n=50 {small:.3e}, n=500 {large:.3e} (cap {cap:g})"
    record(acceptance_log, "AC9 prediction gap", ok, detail)
    assert ok


@pytest.mark.slow
def test_ac10_dominance(acceptance_log):
    report = method_comparison(Scenario(), n=30, replications=50, seed=10, threads=WORKERS)
    wins = report.summary["got_wins"]
    ok = wins >= 45
    detail = (
        f"GOT beats NW in {wins}/50; median LOO got {report.summary['median_got_loo']:.3f}, "
        f"nw {report.summary['median_nw_loo']:.3f}"
    )
    record(acceptance_log, "AC10 correct-specification dominance", ok, detail)
    assert ok


# ---------------------------------------------------------------------------
# 11 real data (optional)

REAL_DATA = [
    ("GOTREG_MORTALITY_MANIFEST", "mortality", 0.58, 1.37),
    ("GOTREG_TEMPERATURE_MANIFEST", "temperature", 0.19, 0.42),
]


@pytest.mark.parametrize("env, label, got_ref, nw_ref", REAL_DATA)
def test_ac11_real_data(acceptance_log, tmp_path, capsys, env, label, got_ref, nw_ref):
    manifest = os.environ.get(env)
    if not manifest:
        pytest.skip(f"optional: set {env} to a manifest built with the converters")
    code = cli.main(["loo", "--manifest", manifest, "--output-dir", str(tmp_path), "--threads", str(WORKERS)])
    out = capsys.readouterr().out
    values = dict(line.split(": ")[:2] for line in out.splitlines() if "_loo_error" in line)
    got = float(values["got_loo_error"].split()[0])
    nw = float(values["nw_loo_error"].split()[0])
    ok = code == 0 and abs(got - got_ref) <= 0.1 and abs(nw - nw_ref) <= 0.1
    detail = f"{label} LOO got {got:.3f} (ref {got_ref}), nw {nw:.3f} (ref {nw_ref})"
    record(acceptance_log, "AC11 real data", ok, detail)
    assert ok


# ---------------------------------------------------------------------------
# 12


def _loo_manifest(tmp_path):
    from gotreg.dataio import write_points
    from gotreg.harness import rng_for

    sc = Scenario(space={"kind": "wasserstein", "dim": 60, "support": [-10.0, 10.0]})
    truth = sc.truth()
    X, Y = truth.draw(16, rng_for(12))
    ids = [f"s{i:02d}" for i in range(16)]
    S = truth.space
    write_points(tmp_path / "x1.csv", S, ids, X[:, 0])
    write_points(tmp_path / "x2.csv", S, ids, X[:, 1])
    write_points(tmp_path / "y.csv", S, ids, Y)
    import json

    doc = {
        "space": {"kind": "wasserstein", "grid_size": 60, "support": [-10, 10]},
        "predictors": [{"path": "x1.csv", "format": "quantiles"}, {"path": "x2.csv", "format": "quantiles"}],
        "response": {"path": "y.csv", "format": "quantiles"},
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_ac12_determinism(acceptance_log, tmp_path, capsys):
    manifest = _loo_manifest(tmp_path)
    runs = {
        "loo": (["loo", "--manifest", manifest, "--max-starts", "2"], ("loo.json", "loo.csv")),
        "simulate": (
            ["simulate", "--experiment", "order", "--n", "40", "--replications", "8", "--grid-size", "60", "--max-starts", "2"],
            ("order_recovery.json", "order_recovery.csv"),
        ),
    }
    ok = True
    details = []
    for name, (args, files) in runs.items():
        outputs = {}
        for threads in (1, 4, 8):
            out_dir = tmp_path / f"{name}_{threads}"
            assert cli.main(args + ["--threads", str(threads), "--seed", "3", "--output-dir", str(out_dir)]) == 0
            outputs[threads] = [(out_dir / f).read_bytes() for f in files]
        same = outputs[1] == outputs[4] == outputs[8]
        ok &= same
        details.append(f"{name} {'identical' if same else 'DIFFERENT'}")
    capsys.readouterr()
    record(acceptance_log, "AC12 determinism", ok, ", ".join(details) + " across threads 1/4/8")
    assert ok
