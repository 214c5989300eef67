import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gotreg import GeometryError, IngestionError, NumericError, SphereSpace
from gotreg import sphere as Sph

E1, E2, E3 = np.eye(3)
S3 = SphereSpace(3)
ORTH = SphereSpace(3, orthant=True)


def test_distance_examples():
    assert S3.distance(E1, E1) == 0.0
    assert S3.distance(E1, E2) == pytest.approx(np.pi / 2, abs=1e-15)
    assert S3.distance(E1, -E1) == pytest.approx(np.pi, abs=1e-15)


def test_rotation_examples():
    spec = S3.rotation(E1, E2, angle=0.0)
    x = np.array([0.6, 0.0, 0.8])
    np.testing.assert_array_equal(Sph.rotate(spec, x), x)
    np.testing.assert_allclose(Sph.rotate(S3.rotation(E1, E2, np.pi / 2), E1), E2, atol=1e-15)
    np.testing.assert_array_equal(Sph.rotate(S3.rotation(E1, E2, 1.1), E3), E3)


def test_geodesic_examples():
    np.testing.assert_allclose(S3.geodesic_point(E1, E2, 0.5), (E1 + E2) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(S3.geodesic_point(E1, E2, 1.0), E2, atol=1e-10)
    np.testing.assert_array_equal(S3.geodesic_point(E1, E2, 0.0), E1)
    np.testing.assert_array_equal(S3.geodesic_point(E1, E1, 0.3), E1)
    with pytest.raises(GeometryError):
        S3.geodesic_point(E1, -E1, 0.5)


def test_ubiquity_examples():
    g = np.array([0.6, 0.8, 0.0])
    np.testing.assert_allclose(S3.ubiquity(E1, g, E1), g, atol=1e-15)
    np.testing.assert_array_equal(S3.ubiquity(g, g, E3), E3)
    np.testing.assert_allclose(S3.ubiquity(E1, E2, E3), E3, atol=1e-15)
    with pytest.raises(GeometryError):
        S3.ubiquity(E1, -E1, E2)


def test_orthant_ubiquity_projects():
    # a 45 degree turn from e1 towards e2 sends e2 to (-e1 + e2) / sqrt(2)
    diag = (E1 + E2) / np.sqrt(2)
    np.testing.assert_allclose(S3.ubiquity(E1, diag, E2), (E2 - E1) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(ORTH.ubiquity(E1, diag, E2), E2, atol=1e-15)
    out = ORTH.ubiquity(E1, E2, np.array([0.8, 0.6, 0.0]))
    assert np.all(out >= 0)
    assert ORTH.belongs(out)


def test_project_nonneg_examples():
    g = np.array([0.6, 0.8, 0.0])
    np.testing.assert_array_equal(ORTH.project(g), g)
    np.testing.assert_allclose(ORTH.project(np.array([0.6, -0.8, 0.0])), E1, atol=1e-15)
    np.testing.assert_allclose(ORTH.project(np.array([0.6, 0.8, -1e-15])), g, atol=1e-12)
    with pytest.raises(GeometryError):
        ORTH.project(np.array([-0.6, -0.8, 0.0]))


def test_embed_density_examples():
    S = SphereSpace(grid=((0, 1, 2), (0, 1, 2)), orthant=True)
    np.testing.assert_allclose(S.weights, 0.25)
    np.testing.assert_allclose(S.embed_density(np.ones(4)), np.ones(4), atol=1e-15)
    point_mass = S.embed_density(np.array([4.0, 0, 0, 0]))
    np.testing.assert_allclose(point_mass, [2.0, 0, 0, 0])
    f = np.array([0.5, 1.5, 1.0, 1.0])
    np.testing.assert_allclose(S.density(S.embed_density(f)), f, atol=1e-12)
    with pytest.raises(IngestionError):
        S.embed_density(np.zeros(4))
    with pytest.raises(IngestionError):
        S.embed_density(np.array([-1.0, 1, 2, 2]))


def test_fisher_rao_distance_is_arccos_of_root_inner_product():
    S = SphereSpace(grid=((0, 1, 4), (0, 2, 3)), orthant=True)
    rng = np.random.default_rng(3)
    f1, f2 = rng.random(12) + 0.1, rng.random(12) + 0.1
    f1 /= np.sum(f1 * S.weights)
    f2 /= np.sum(f2 * S.weights)
    expected = np.arccos(np.sum(np.sqrt(f1 * f2) * S.weights))
    assert S.distance(S.embed_density(f1), S.embed_density(f2)) == pytest.approx(expected, abs=1e-12)


def test_histogram_density():
    grid = ((0, 1, 2), (0, 1, 2))
    dens = Sph.histogram_density([[0.2, 0.2], [0.7, 0.2], [0.7, 0.9], [0.7, 0.8]], grid)
    np.testing.assert_allclose(dens, [1.0, 0.0, 1.0, 2.0])


def test_frechet_mean_examples():
    g = np.array([0.6, 0.8, 0.0])
    assert np.array_equal(S3.frechet_mean([g, g, g]), g)
    np.testing.assert_allclose(S3.frechet_mean([E1, E2]), (E1 + E2) / np.sqrt(2), atol=1e-8)
    np.testing.assert_array_equal(S3.frechet_mean([E1, E2], [1, 0]), E1)
    with pytest.raises(GeometryError):
        S3.frechet_mean([E1, -E1 + 1e-9 * E2])


def test_frechet_mean_reports_non_convergence():
    pts = np.array([E1, E2, (E1 + E3) / np.sqrt(2)])
    with pytest.raises(NumericError):
        Sph.frechet_mean(pts, np.ones(3), np.ones(3), max_iter=2)


def unit_positive(seed_vec):
    v = np.abs(seed_vec) + 0.05
    return v / np.linalg.norm(v)


pos4 = arrays(float, 4, elements=st.floats(0, 1))
any4 = arrays(float, 4, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 0.1)


@given(any4, any4, any4, st.floats(-6, 6))
def test_rotation_preserves_norm_and_inverts(a, b, x, angle):
    S = SphereSpace(4)
    cos = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    assume(cos < 0.99)
    spec = S.rotation(a / np.linalg.norm(a), b / np.linalg.norm(b), angle)
    x = x / np.linalg.norm(x)
    y = Sph.rotate(spec, x)
    assert abs(np.linalg.norm(y) - 1.0) <= 1e-10
    back = Sph.rotate(Sph.RotationSpec(spec.u1, spec.u2, -angle, spec.weights), y)
    np.testing.assert_allclose(back, x, atol=1e-9)


@given(pos4, pos4, st.floats(0, 1))
def test_geodesic_proportional(a, b, t):
    S = SphereSpace(4, orthant=True)
    g1, g2 = unit_positive(a), unit_positive(b)
    g = S.geodesic_point(g1, g2, t)
    assert abs(S.distance(g1, g) - t * S.distance(g1, g2)) <= 1e-9


@given(pos4, pos4)
def test_two_point_mean_on_geodesic(a, b):
    S = SphereSpace(4, orthant=True)
    g1, g2 = unit_positive(a), unit_positive(b)
    mu = S.frechet_mean([g1, g2])
    assert abs(S.distance(g1, mu) + S.distance(mu, g2) - S.distance(g1, g2)) <= 1e-7


@given(pos4, pos4)
def test_ubiquity_consistency_in_plane(a, b):
    # the consistency law holds for g3 inside span{g1, g2}
    S = SphereSpace(4)
    g1, g2 = unit_positive(a), unit_positive(b)
    g3 = S.geodesic_point(g1, g2, 0.3)
    g4 = S.ubiquity(g1, g2, g3)
    for r in (0.25, 0.5, 0.75):
        lhs = S.ubiquity(g1, S.geodesic_point(g1, g2, r), g3)
        rhs = S.geodesic_point(g3, g4, r)
        assert S.distance(lhs, rhs) <= 1e-7
