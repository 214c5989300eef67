import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gotreg import _kernels as K

needs_numba = pytest.mark.skipif(not K.USE_NUMBA, reason="numba path disabled")


def monotone_rows(draw_rows, m, lo=-10.0, hi=10.0):
    return np.sort(np.clip(draw_rows, lo, hi), axis=-1)


@needs_numba
@given(arrays(float, (4, 15), elements=st.floats(-50, 50)))
def test_pava_paths_agree(values):
    np.testing.assert_allclose(K._pava_rows_numba(values), K._pava_rows_numpy(values), atol=1e-9)


@needs_numba
@given(
    arrays(float, (3, 12), elements=st.floats(-10, 10)),
    arrays(float, (3, 12), elements=st.floats(-10, 10)),
    arrays(float, (3, 25), elements=st.floats(-15, 15)),
)
def test_transport_eval_paths_agree(kx, ky, x):
    kx, ky = np.sort(kx, axis=1), np.sort(ky, axis=1)
    np.testing.assert_allclose(K._transport_eval_numba(kx, ky, x), K._transport_eval_numpy(kx, ky, x), atol=1e-9)


@needs_numba
@settings(max_examples=40)
@given(
    arrays(float, (5, 20), elements=st.floats(-12, 12)),
    arrays(float, (1, 20), elements=st.floats(-12, 12)),
    arrays(float, (5, 20), elements=st.floats(-12, 12)),
)
def test_quantile_ubiquity_paths_agree(w1, w2, w3):
    w1, w2, w3 = (monotone_rows(w, 20) for w in (w1, w2, w3))
    a = K._quantile_ubiquity_numba(w1, w2, w3, -10.0, 10.0)
    b = K._quantile_ubiquity_numpy(w1, w2, w3, -10.0, 10.0)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_transport_eval_examples():
    kx = np.array([[0.0, 1.0, 2.0]])
    ky = np.array([[0.0, 2.0, 4.0]])
    x = np.array([[-1.0, 0.5, 1.0, 3.0]])
    np.testing.assert_allclose(K.transport_eval(kx, ky, x), [[-2.0, 1.0, 2.0, 6.0]])


def test_disable_flag_selects_numpy():
    env = dict(os.environ, GOTREG_DISABLE_NUMBA="1")
    code = (
        "from gotreg import _kernels as K, WassersteinSpace as W;"
        "S = W(40, (-10, 10));"
        "print(K.USE_NUMBA, repr(float(S.ubiquity(S.truncnorm(0, 1), S.truncnorm(1, 2), S.truncnorm(-.5, .7)).sum())))"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    flag, value = out.stdout.split()
    assert flag == "False"
    from gotreg import WassersteinSpace

    S = WassersteinSpace(40, (-10, 10))
    here = float(S.ubiquity(S.truncnorm(0, 1), S.truncnorm(1, 2), S.truncnorm(-0.5, 0.7)).sum())
    assert float(value) == pytest.approx(here, abs=1e-9)
