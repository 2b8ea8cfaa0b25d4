"""Vector algebra on the unit sphere and the admissible rotation-operator family.

Vectors are plain ``numpy`` arrays of shape ``(3,)`` and operators are
``(3, 3)`` arrays.  Everything here is closed form; no decompositions.
"""

import numpy as np

from .errors import AdmissibilityError, AntipodalSingularity, DegeneratePair

ADMISSIBILITY_TOL = 1e-9
ANTIPODAL_TOL = 1e-8
DEGENERACY_TOL = 1e-12

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def vec3(v):
    """Coerce to a finite float array of shape (3,)."""
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite components")
    return a


def sphere_point(v, tol=ADMISSIBILITY_TOL):
    """Validate that ``v`` lies on the unit sphere (no renormalization)."""
    a = vec3(v)
    if abs(np.linalg.norm(a) - 1.0) > tol:
        raise AdmissibilityError(f"|v| = {np.linalg.norm(a)!r} is not 1 within {tol}")
    return a


def tangent_vector(base, v, tol=ADMISSIBILITY_TOL):
    """Validate that ``v`` lies in the tangent plane at ``base``."""
    q = sphere_point(base, tol)
    a = vec3(v)
    if abs(a @ q) > tol:
        raise AdmissibilityError(f"<v, base> = {a @ q!r} exceeds {tol}")
    return a


def cross(a, b):
    return np.cross(a, b)


def skew(w):
    """Matrix W with ``W @ x == cross(w, x)``."""
    w1, w2, w3 = w
    return np.array([
        [0.0, -w3, w2],
        [w3, 0.0, -w1],
        [-w2, w1, 0.0],
    ])


def tangent_project(q, u):
    """``|q|^2 u - <u, q> q``, the component of ``u`` normal to ``q`` (scaled)."""
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    return (q @ q) * u - (u @ q) * q


def p_rot(z1, z2):
    """Regularized rotation operator ``<z1,z2> I + z2 z1^T - z1 z2^T``.

    Globally defined: no singularity at antipodal pairs (it is ``-I`` there).
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    return (z1 @ z2) * np.eye(3) + np.outer(z2, z1) - np.outer(z1, z2)


def rodrigues(z1, z2, antipodal_tol=ANTIPODAL_TOL):
    """Rodrigues' rotation taking the unit vector ``z1`` onto ``z2``.

    Evaluated as the product of two Householder reflections,
    ``(I - 2 z2 z2^T)(I - 2 m m^T)`` with ``m`` the unit bisector of ``z1`` and
    ``z2``.  This equals ``P + n n^T / (1 + <z1,z2>)`` (``n = z1 x z2``) but stays
    orthogonal to roundoff even near antipodal pairs.  Raises
    :class:`AntipodalSingularity` when ``|z1 + z2| < antipodal_tol``.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    s = z1 + z2
    ns = np.linalg.norm(s)
    if ns < antipodal_tol:
        raise AntipodalSingularity("rodrigues(z1, z2) is undefined for z1 = -z2")
    m = s / ns
    eye = np.eye(3)
    return (eye - 2.0 * np.outer(z2, z2)) @ (eye - 2.0 * np.outer(m, m))


def admissible_rot(z1, z2, a, b, tol=DEGENERACY_TOL):
    """Member ``P + a n n^T + b (z1 - <z1,z2> z2) n^T`` of the admissible family.

    ``n = z1 x z2``.  Every member maps ``z1 -> z2``,
    ``z2 -> 2<z1,z2> z2 - z1`` and ``T_{z1} -> T_{z2}``.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    n = np.cross(z1, z2)
    if np.linalg.norm(n) < tol:
        raise DegeneratePair("z1 and z2 are linearly dependent")
    c = z1 @ z2
    return p_rot(z1, z2) + a * np.outer(n, n) + b * np.outer(z1 - c * z2, n)


def rodrigues_coefficient(z1, z2):
    """The ``a`` for which :func:`admissible_rot` reproduces :func:`rodrigues`."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    n = np.cross(z1, z2)
    return (1.0 - z1 @ z2) / (n @ n)


def random_unit_vectors(rng, n):
    """``n`` points uniform on the sphere (normalized Gaussian triples)."""
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_tangent(rng, base):
    """Random tangent vectors at each row of ``base``."""
    base = np.atleast_2d(base)
    v = rng.standard_normal(base.shape)
    v -= np.sum(v * base, axis=1, keepdims=True) * base
    return v
