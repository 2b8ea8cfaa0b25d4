import numpy as np
import pytest

from spheretrack.analysis import (RendezvousCondition, aux_functionals, dissipation_coefficient,
                                  eig_M_closed, eig_Minf_closed, energy, energy_threshold,
                                  fit_exponential_rate, match_eigenvalues, matrix_M, matrix_Minf,
                                  rendezvous_metrics, spectrum, thm1_condition, thm3_rate,
                                  weighted_functionals, x_inf)
from spheretrack.dynamics import ModelParams
from spheretrack.errors import AntipodalToTarget, RequiresConstantSigma
from spheretrack.frame import StructuralState, structural_rhs
from spheretrack.geom import E1, E2, E3, random_tangent, random_unit_vectors


def random_structural(rng, n):
    x = random_unit_vectors(rng, n + 1)
    return StructuralState(x[1:], random_tangent(rng, x[1:]), x[0])


def time_derivative(fn, st, params, A, h=1e-5):
    dx, dv = structural_rhs(st, params, A)
    plus = StructuralState(st.x + h * dx, st.v + h * dv, st.x_gamma)
    minus = StructuralState(st.x - h * dx, st.v - h * dv, st.x_gamma)
    return (fn(plus) - fn(minus)) / (2 * h)


def test_energy_example():
    st = StructuralState([E1, E2], np.zeros((2, 3)), E3)
    e = energy(st, ModelParams(sigma=1.0, c_q=1.0))
    assert e.e_k == 0.0
    assert e.e_c == pytest.approx(1.25)
    assert e.e_total == pytest.approx(1.25)


def test_thm1_condition_branches():
    st = StructuralState([E1, E2], np.zeros((2, 3)), E3)
    assert thm1_condition(st, ModelParams(sigma=1.0, c_q=2.0)) is RendezvousCondition.HOLDS_BY_GAIN
    assert energy_threshold(ModelParams(sigma=1.0, c_q=1.0)) == pytest.approx(2.0)
    assert thm1_condition(st, ModelParams(sigma=1.0, c_q=1.0)) is RendezvousCondition.HOLDS_BY_ENERGY
    fast = StructuralState([E1, E2], [[0, 3.0, 0], [3.0, 0, 0]], E3)
    assert thm1_condition(fast, ModelParams(sigma=1.0, c_q=1.0)) is RendezvousCondition.FAILS


def test_constant_sigma_required():
    params = ModelParams(sigma_fn=lambda d2: np.ones_like(d2))
    with pytest.raises(RequiresConstantSigma):
        matrix_M(params)
    with pytest.raises(RequiresConstantSigma):
        energy(StructuralState([E1], [[0, 0, 0]], E3), params)


@pytest.mark.parametrize("seed", range(5))
def test_quadratic_functionals_obey_linear_system(seed):
    rng = np.random.default_rng(seed)
    st = random_structural(rng, 6)
    params = ModelParams(sigma=1.3, c_q=2.0, c_p=0.4)
    A = random_tangent(rng, st.x)
    X, F = aux_functionals(st, params, A)
    dX = time_derivative(lambda s: aux_functionals(s, params)[0], st, params, A)
    assert np.abs(dX - (matrix_M(params) @ X + F)).max() < 1e-7


def test_positive_sign_of_sigma_coupling_is_inconsistent(rng):
    st = random_structural(rng, 6)
    params = ModelParams(sigma=1.3, c_q=2.0, c_p=0.4)
    X, F = aux_functionals(st, params)
    dX = time_derivative(lambda s: aux_functionals(s, params)[0], st, params, None)
    M = matrix_M(params)
    assert M[2, 4] == -params.sigma
    flipped = M.copy()
    flipped[2, 4] = params.sigma
    assert np.abs(dX - (flipped @ X + F)).max() > 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_weighted_functionals_obey_linear_system(seed):
    rng = np.random.default_rng(100 + seed)
    st = random_structural(rng, 5)
    params = ModelParams(sigma=0.8, c_q=3.0, c_p=1.1)
    A = random_tangent(rng, st.x)
    for i in range(3):
        Xi, Fi = weighted_functionals(st, params, A, i)
        dX = time_derivative(lambda s: weighted_functionals(s, params, None, i)[0], st, params, A)
        scale = 1 + np.abs(Xi).max()
        assert np.abs(dX - (matrix_Minf(params) @ Xi + Fi)).max() < 1e-6 * scale


def test_weighted_functionals_antipodal_raises():
    st = StructuralState([-E3], [[0, 0, 0]], E3)
    with pytest.raises(AntipodalToTarget):
        x_inf(st, ModelParams())


def test_matrix_minf_example():
    expected = np.array([[0, 2, 0], [-4, -4, 1], [0, -8, -8.0]])
    assert np.array_equal(matrix_Minf(ModelParams(c_q=4.0, c_p=4.0)), expected)


def test_closed_form_eigenvalues():
    assert np.allclose(eig_Minf_closed(4.0, 4.0), [-4, -4, -4])
    ev = eig_Minf_closed(5.0, 0.1)
    assert np.allclose(ev.real, -0.1)
    assert np.allclose(sorted(ev.imag), [-np.sqrt(19.99), 0.0, np.sqrt(19.99)])


@pytest.mark.parametrize("sigma,c_q,c_p", [(1, 5, 0.1), (1, 5, 4), (2, 0.5, 3), (1, 1, 2)])
def test_closed_form_matches_numeric(sigma, c_q, c_p):
    params = ModelParams(sigma=sigma, c_q=c_q, c_p=c_p)
    tol = 1e-4  # a triple root moves by ~eps**(1/3) under eigvals
    assert match_eigenvalues(eig_M_closed(sigma, c_q, c_p), np.linalg.eigvals(matrix_M(params))) < tol
    assert match_eigenvalues(eig_Minf_closed(c_q, c_p), np.linalg.eigvals(matrix_Minf(params))) < tol


def test_spectrum_summary():
    sp = spectrum(ModelParams(sigma=1.0, c_q=5.0, c_p=0.1))
    assert sp.mu == pytest.approx(0.1)
    assert sp.mu_inf == pytest.approx(0.1)
    assert sp.mu_numeric == pytest.approx(0.1, abs=1e-8)
    assert sp.D_thm3_literal_branch
    assert sp.D_thm3 == pytest.approx(0.1)


def test_thm3_rate_real_root():
    value, literal = thm3_rate(1.0, 4.0)
    assert literal
    assert value == pytest.approx(4.0 - np.sqrt(12.0))


def test_match_eigenvalues_is_permutation_invariant():
    a = np.array([1 + 1j, -2, 3j])
    assert match_eigenvalues(a, a[::-1]) == 0.0
    assert match_eigenvalues(a, a + 0.5) == pytest.approx(0.5)


def test_rendezvous_metrics_from_arrays():
    q = np.array([[[1.0, 0, 0], [0, 1.0, 0]]])
    p = np.zeros_like(q)
    d, v = rendezvous_metrics(type("T", (), {"q": q, "p": p, "q_gamma": np.array([[0, 0, 1.0]]),
                                             "p_gamma": np.zeros((1, 3))})())
    assert d[0] == pytest.approx(np.sqrt(2))
    assert v[0] == 0.0


def test_fit_exponential_rate():
    t = np.linspace(0, 100, 1001)
    rate, amp = fit_exponential_rate(t, 3.0 * np.exp(-0.2 * t), window=(10, 90))
    assert rate == pytest.approx(-0.2)
    assert amp == pytest.approx(np.log(3.0))
    with pytest.raises(ValueError):
        fit_exponential_rate(t, -np.ones_like(t))


def test_dissipation_coefficient_synthetic():
    # E = E_k = exp(-2 k t) satisfies dE/dt = -k * 2 E_k
    t = np.linspace(0, 5, 5001)
    e = np.exp(-0.6 * t)
    assert dissipation_coefficient(t, e, e) == pytest.approx(0.3, rel=1e-4)
