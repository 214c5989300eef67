"""Timing of the numba kernels against the pure-numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Both paths are timed in
one process (the kernel modules expose both implementations); a final
end-to-end loss evaluation is timed in two subprocesses, one with
``GOTREG_DISABLE_NUMBA=1``.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from gotreg import WassersteinSpace
from gotreg import _kernels as K


def best_of(func, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def kernel_table(n, m, repeat):
    S = WassersteinSpace(m, (-10.0, 10.0))
    rng = np.random.default_rng(0)
    X = S.truncnorm(rng.uniform(-1, 1, n), rng.uniform(0.5, 1.5, n))
    a = S.truncnorm(0.0, 1.0)[None, :]
    b = S.truncnorm(0.3, 1.2)[None, :]
    noisy = X + 0.05 * rng.normal(size=X.shape)
    kx = np.sort(X, axis=1)
    ky = np.sort(noisy, axis=1)
    cases = {
        "pava_rows": (lambda: K._pava_rows_numba(noisy), lambda: K._pava_rows_numpy(noisy)),
        "transport_eval": (
            lambda: K._transport_eval_numba(kx, ky, noisy),
            lambda: K._transport_eval_numpy(kx, ky, noisy),
        ),
        "quantile_ubiquity": (
            lambda: K._quantile_ubiquity_numba(a, X, b, -10.0, 10.0),
            lambda: K._quantile_ubiquity_numpy(a, X, b, -10.0, 10.0),
        ),
    }
    print(f"kernels on {n} rows x {m} grid points (best of {repeat})")
    print(f"{'kernel':<20}{'numba ms':>12}{'numpy ms':>12}{'speed-up':>10}")
    for name, (fast, slow) in cases.items():
        fast()  # compile
        t_fast = best_of(fast, repeat)
        t_slow = best_of(slow, repeat)
        print(f"{name:<20}{t_fast * 1e3:>12.3f}{t_slow * 1e3:>12.3f}{t_slow / t_fast:>10.1f}")


LOSS_SNIPPET = """
import time, numpy as np
from gotreg import WassersteinSpace
from gotreg import _kernels as K
from gotreg.regression import _ChainLoss, predictor_means
S = WassersteinSpace({m}, (-10.0, 10.0))
rng = np.random.default_rng(1)
X = S.truncnorm(rng.uniform(-1, 1, ({n}, 2)), rng.uniform(0.5, 1.5, ({n}, 2)))
Y = S.truncnorm(rng.uniform(-1, 1, {n}), 1.0)
loss = _ChainLoss(S, X, Y, predictor_means(S, X), S.frechet_mean(Y), (0, 1))
loss(np.array([0.5, 0.2]))
best = min(
    (lambda s: (loss(np.array([0.8, 0.3])), time.perf_counter() - s)[1])(time.perf_counter())
    for _ in range({repeat})
)
print(K.USE_NUMBA, best)
"""


def loss_table(n, m, repeat):
    code = LOSS_SNIPPET.format(n=n, m=m, repeat=repeat)
    print(f"\nfit loss evaluation, p=2, n={n}, M={m} (best of {repeat}, separate processes)")
    results = {}
    for label, flag in (("numba", None), ("numpy", "1")):
        env = dict(os.environ)
        env.pop("GOTREG_DISABLE_NUMBA", None)
        if flag:
            env["GOTREG_DISABLE_NUMBA"] = flag
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        used, seconds = out.stdout.split()
        results[label] = float(seconds)
        print(f"{label:<8} numba active={used:<6} {float(seconds) * 1e3:8.2f} ms")
    print(f"speed-up {results['numpy'] / results['numba']:.1f}x")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=500)
    parser.add_argument("--grid", type=int, default=200)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    if not K.USE_NUMBA:
        sys.exit("numba is disabled or missing; unset GOTREG_DISABLE_NUMBA to benchmark")
    kernel_table(args.rows, args.grid, args.repeat)
    loss_table(args.rows, args.grid, args.repeat)


if __name__ == "__main__":
    main()
