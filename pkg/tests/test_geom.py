import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spheretrack.errors import AdmissibilityError, AntipodalSingularity, DegeneratePair
from spheretrack.geom import (E1, E2, E3, admissible_rot, p_rot, random_tangent,
                              random_unit_vectors, rodrigues, rodrigues_coefficient, skew,
                              sphere_point, tangent_project, tangent_vector)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, (3,), elements=finite)


def unit(v):
    n = np.linalg.norm(v)
    if n < 1e-3:
        return None
    return v / n


# fixed values -------------------------------------------------------------

def test_p_rot_identity_and_antipodal():
    z = unit(np.array([0.3, -0.2, 0.9]))
    assert np.allclose(p_rot(z, z), np.eye(3), atol=1e-15)
    assert np.allclose(p_rot(z, -z), -np.eye(3), atol=1e-15)


def test_p_rot_quarter_turn():
    # <e1,e2> = 0, so P = e2 e1^T - e1 e2^T: rotates e1 -> e2 and kills e3
    P = p_rot(E1, E2)
    assert np.allclose(P @ E1, E2)
    assert np.allclose(P @ E2, -E1)
    assert np.allclose(P @ E3, 0)
    assert np.linalg.matrix_rank(P) == 2


def test_rodrigues_quarter_turn_is_rotation_about_e3():
    R = rodrigues(E1, E2)
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])
    assert np.allclose(R, expected, atol=1e-15)


def test_rodrigues_same_point_is_identity():
    z = unit(np.array([1.0, 2.0, 2.0]))
    assert np.allclose(rodrigues(z, z), np.eye(3), atol=1e-15)


def test_rodrigues_antipodal_raises():
    with pytest.raises(AntipodalSingularity):
        rodrigues(E3, -E3)
    with pytest.raises(AntipodalSingularity):
        rodrigues(E3, -E3 + 1e-10 * E1)


def test_rodrigues_agrees_with_scipy_align_vectors(rng):
    from scipy.spatial.transform import Rotation

    for z1, z2 in zip(random_unit_vectors(rng, 50), random_unit_vectors(rng, 50)):
        rot, _ = Rotation.align_vectors(z2[None], z1[None])
        assert np.allclose(rodrigues(z1, z2), rot.as_matrix(), atol=1e-10)


def test_rodrigues_equals_closed_form_away_from_antipodes(rng):
    for z1, z2 in zip(random_unit_vectors(rng, 200), random_unit_vectors(rng, 200)):
        c = z1 @ z2
        if c < -0.9:
            continue
        n = np.cross(z1, z2)
        closed = p_rot(z1, z2) + np.outer(n, n) / (1 + c)
        assert np.allclose(rodrigues(z1, z2), closed, atol=1e-13)


def test_rodrigues_coefficient_reproduces_rodrigues(rng):
    z1, z2 = random_unit_vectors(rng, 2)
    a = rodrigues_coefficient(z1, z2)
    assert a == pytest.approx(1 / (1 + z1 @ z2), rel=1e-12)
    assert np.allclose(admissible_rot(z1, z2, a, 0.0), rodrigues(z1, z2), atol=1e-12)


def test_admissible_rot_degenerate_pair():
    with pytest.raises(DegeneratePair):
        admissible_rot(E1, E1, 1.0, 2.0)
    with pytest.raises(DegeneratePair):
        admissible_rot(E1, -E1, 1.0, 2.0)


def test_skew_matches_cross(rng):
    w, x = rng.standard_normal((2, 3))
    assert np.allclose(skew(w) @ x, np.cross(w, x), atol=1e-15)
    assert np.allclose(skew(w), -skew(w).T)


def test_tangent_project():
    assert np.allclose(tangent_project(E3, np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 0.0])


def test_validation_helpers():
    assert np.allclose(sphere_point([0, 0, 1]), E3)
    with pytest.raises(AdmissibilityError):
        sphere_point([0, 0, 1.001])
    with pytest.raises(AdmissibilityError):
        tangent_vector(E3, [0, 0, 0.1])
    with pytest.raises(ValueError):
        sphere_point([0, 1])


def test_random_helpers(rng):
    pts = random_unit_vectors(rng, 100)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1)
    tv = random_tangent(rng, pts)
    assert np.abs(np.sum(tv * pts, axis=1)).max() < 1e-14


# properties ---------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(vectors, vectors, vectors)
def test_p_rot_transport_identities(a, b, v):
    z1, z2 = unit(a), unit(b)
    if z1 is None or z2 is None:
        return
    c = z1 @ z2
    P = p_rot(z1, z2)
    t = v - (v @ z1) * z1
    assert np.allclose(P @ z1, z2, atol=1e-12)
    assert np.allclose(P @ z2, 2 * c * z2 - z1, atol=1e-12)
    assert abs((P @ t) @ z2) < 1e-11
    assert np.allclose(P.T, p_rot(z2, z1), atol=1e-15)
    assert np.allclose(P.T @ P @ z1, z1, atol=1e-12)
    assert np.linalg.det(P) == pytest.approx(c, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(vectors, vectors)
def test_rodrigues_is_rotation(a, b):
    z1, z2 = unit(a), unit(b)
    if z1 is None or z2 is None or np.linalg.norm(z1 + z2) < 1e-6:
        return
    R = rodrigues(z1, z2)
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(R @ z1, z2, atol=1e-12)
    assert np.allclose(R @ np.cross(z1, z2), np.cross(z1, z2), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(vectors, vectors, vectors, finite, finite)
def test_admissible_family_transport(a, b, v, alpha, beta):
    z1, z2 = unit(a), unit(b)
    if z1 is None or z2 is None or np.linalg.norm(np.cross(z1, z2)) < 1e-3:
        return
    M = admissible_rot(z1, z2, alpha, beta)
    c = z1 @ z2
    t = v - (v @ z1) * z1
    scale = 1 + abs(alpha) + abs(beta)
    assert np.allclose(M @ z1, z2, atol=1e-12 * scale)
    assert np.allclose(M @ z2, 2 * c * z2 - z1, atol=1e-12 * scale)
    assert abs((M @ t) @ z2) < 1e-11 * scale * (1 + np.linalg.norm(v))


@settings(max_examples=100, deadline=None)
@given(vectors, vectors)
def test_p_rot_singular_iff_orthogonal(a, b):
    z1, z2 = unit(a), unit(b)
    if z1 is None or z2 is None:
        return
    w = np.cross(z1, z2)
    if np.linalg.norm(w) < 1e-3:
        return
    # project z2 to be exactly orthogonal to z1
    z2o = z2 - (z2 @ z1) * z1
    z2o /= np.linalg.norm(z2o)
    assert abs(np.linalg.det(p_rot(z1, z2o))) < 1e-12
