import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gotreg import IngestionError, SpdSpace
from gotreg import spd

S2 = SpdSpace(2)
E = np.e


def factor(lower, diag):
    """Point vector of a 2x2 factor [[d0, 0], [lower, d1]]."""
    return np.array([lower, diag[0], diag[1]], dtype=float)


def test_cholesky_examples():
    np.testing.assert_array_equal(S2.from_matrix(np.eye(2)), factor(0, (1, 1)))
    np.testing.assert_array_equal(S2.from_matrix(np.diag([4.0, 9.0])), factor(0, (2, 3)))
    L = S2.from_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(L, factor(1 / np.sqrt(2), (np.sqrt(2), np.sqrt(1.5))), atol=1e-15)
    np.testing.assert_allclose(S2.to_matrix(L), [[2.0, 1.0], [1.0, 2.0]], atol=1e-14)


def test_cholesky_errors():
    with pytest.raises(IngestionError):
        S2.from_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(IngestionError):
        S2.from_matrix(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(IngestionError):
        S2.from_matrix(np.ones((2, 3)))


def test_distance_examples():
    eye = factor(0, (1, 1))
    assert S2.distance(eye, eye) == 0.0
    assert S2.distance(eye, factor(0, (E, E))) == pytest.approx(np.sqrt(2), abs=1e-15)
    assert S2.distance(factor(0.3, (2, 1)), factor(-0.45, (2, 1))) == pytest.approx(0.75, abs=1e-15)


def test_geodesic_examples():
    a, b = factor(0, (1, 1)), factor(4, (E**2, E**2))
    np.testing.assert_array_equal(S2.geodesic_point(a, b, 0.0), a)
    np.testing.assert_allclose(S2.geodesic_point(a, b, 1.0), b, rtol=1e-15)
    np.testing.assert_allclose(S2.geodesic_point(a, b, 0.5)[1:], [E, E], rtol=1e-15)
    assert S2.geodesic_point(a, b, 0.25)[0] == 1.0


def test_ubiquity_examples():
    eye, two, three = factor(0, (1, 1)), factor(0, (2, 2)), factor(0, (3, 3))
    np.testing.assert_allclose(S2.ubiquity(eye, two, three), factor(0, (6, 6)), rtol=1e-15)
    np.testing.assert_allclose(S2.ubiquity(eye, eye, three), three, rtol=1e-15)
    m1, m2 = factor(0.5, (1.5, 0.7)), factor(-1.0, (0.2, 3.0))
    np.testing.assert_allclose(S2.ubiquity(m1, m2, m1), m2, rtol=1e-15)


def test_frechet_mean_examples():
    a, b = factor(0, (1, 1)), factor(4, (E**2, E**2))
    np.testing.assert_allclose(S2.frechet_mean([a, b]), factor(2, (E, E)), rtol=1e-15)
    assert np.array_equal(S2.frechet_mean([b]), b)


def random_spd(m, seed):
    G = np.random.default_rng(seed).normal(size=(m, m))
    return G @ G.T + m * np.eye(m)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_factor_round_trip(m):
    S = SpdSpace(m)
    for seed in range(20):
        A = random_spd(m, seed)
        back = S.to_matrix(S.from_matrix(A))
        assert np.max(np.abs(back - A)) <= 1e-10 * np.max(np.abs(A))


chart3 = arrays(float, 6, elements=st.floats(-3, 3))


@given(chart3, chart3, st.floats(0, 1))
def test_chart_isometry_and_straight_geodesics(ca, cb, t):
    S = SpdSpace(3)
    a, b = S.from_chart(ca), S.from_chart(cb)
    assert S.distance(a, b) == pytest.approx(np.linalg.norm(S.chart(a) - S.chart(b)), rel=1e-12, abs=1e-12)
    g = S.geodesic_point(a, b, t)
    np.testing.assert_allclose(S.chart(g), S.chart(a) + t * (S.chart(b) - S.chart(a)), atol=1e-12)


@given(chart3, chart3, chart3)
def test_consistency_law(c1, c2, c3):
    S = SpdSpace(3)
    w1, w2, w3 = S.from_chart(c1), S.from_chart(c2), S.from_chart(c3)
    w4 = S.ubiquity(w1, w2, w3)
    for r in (0.25, 0.5, 0.75):
        lhs = S.ubiquity(w1, S.geodesic_point(w1, w2, r), w3)
        assert S.distance(lhs, S.geodesic_point(w3, w4, r)) <= 1e-12


def test_vector_packing():
    L = np.array([[1.0, 0, 0], [2.0, 3.0, 0], [4.0, 5.0, 6.0]])
    v = spd.factor_to_vector(L)
    np.testing.assert_array_equal(v, [2, 4, 5, 1, 3, 6])
    np.testing.assert_array_equal(spd.vector_to_factor(v, 3), L)
