"""Acceptance criteria, one test per criterion at the stated tolerance.

Run ``pytest tests/test_acceptance.py -v`` (a per-criterion PASS/FAIL table is
printed at the end of the session), or ``python tests/test_acceptance.py``.
"""

import time

import numpy as np
import pytest

from conftest import record
from spheretrack.analysis import (aux_functionals, dissipation_coefficient, eig_M_closed,
                                  eig_Minf_closed, match_eigenvalues, matrix_M, matrix_Minf,
                                  spectrum, weighted_functionals)
from spheretrack.dynamics import ModelParams, SystemState, ZeroControl
from spheretrack.errors import AntipodalToTarget
from spheretrack.flatspace import qd_closed_form
from spheretrack.geom import p_rot, random_unit_vectors, rodrigues
from spheretrack.scenarios import FIG4B_CP_VALUES
from spheretrack.sim import (ExplicitInitial, SimConfig, integrate, run_simulation,
                             run_structural, run_sweep)


def _report(criterion, passed, detail):
    record(criterion, passed, detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
    return passed


# 1 -------------------------------------------------------------------------

def test_criterion_01_operator_identities():
    rng = np.random.default_rng(2024)
    n = 10_000
    t0 = time.perf_counter()
    z1 = random_unit_vectors(rng, n)
    z2 = random_unit_vectors(rng, n)
    v = rng.standard_normal((n, 3))
    v -= np.sum(v * z1, axis=1, keepdims=True) * z1
    P = np.array([p_rot(a, b) for a, b in zip(z1, z2)])
    Prev = np.array([p_rot(b, a) for a, b in zip(z1, z2)])
    R = np.array([rodrigues(a, b) for a, b in zip(z1, z2)])
    c = np.sum(z1 * z2, axis=1)
    app = lambda M, x: np.einsum("nij,nj->ni", M, x)  # noqa: E731
    PtP = np.swapaxes(P, 1, 2) @ P
    normal = np.cross(z1, z2)
    res = {
        "P z1 = z2": np.abs(app(P, z1) - z2).max(),
        "P z2 = 2c z2 - z1": np.abs(app(P, z2) - (2 * c[:, None] * z2 - z1)).max(),
        "tangent to tangent": np.abs(np.sum(app(P, v) * z2, axis=1)).max(),
        "P^T = P reversed": np.abs(np.swapaxes(P, 1, 2) - Prev).max(),
        "P^T P z1 = z1": np.abs(app(PtP, z1) - z1).max(),
        "P^T P z2 = z2": np.abs(app(PtP, z2) - z2).max(),
        "P n = c n": np.abs(app(P, normal) - c[:, None] * normal).max(),
        "det P = c": np.abs(np.linalg.det(P) - c).max(),
        "R^T R = I": np.abs(np.swapaxes(R, 1, 2) @ R - np.eye(3)).max(),
        "R z1 = z2": np.abs(app(R, z1) - z2).max(),
    }
    elapsed = time.perf_counter() - t0
    # singular exactly when <z1,z2> = 0
    w = np.cross(z1[0], rng.standard_normal(3))
    w /= np.linalg.norm(w)
    singular = np.linalg.matrix_rank(p_rot(z1[0], w), tol=1e-12) < 3
    worst = max(res.values())
    ok = worst <= 1e-12 and elapsed < 1.0 and singular
    _report(1, ok, f"worst identity residual {worst:.2e} (tol 1e-12), runtime {elapsed:.2f}s (< 1s)")
    assert singular
    for name, value in res.items():
        assert value <= 1e-12, name
    assert elapsed < 1.0


# 2 -------------------------------------------------------------------------

def test_criterion_02_constraint_preservation():
    cfg = SimConfig.for_figure("1", dt=1e-3, t_end=200.0, renormalize=False, record_every=1)
    run_simulation(cfg.with_(t_end=0.01))  # warm the compiled kernels
    t0 = time.perf_counter()
    tr = run_simulation(cfg)
    elapsed = time.perf_counter() - t0
    nd, od = tr.norm_drift().max(), tr.orth_drift().max()
    ok = nd <= 1e-5 and od <= 1e-5 and elapsed < 30
    _report(2, ok, f"norm_drift {nd:.2e}, orth_drift {od:.2e} (tol 1e-5), runtime {elapsed:.1f}s")
    assert nd <= 1e-5
    assert od <= 1e-5
    assert elapsed < 30


# 3 -------------------------------------------------------------------------

def test_criterion_03_complete_rendezvous(fig1_fine):
    d, _ = fig1_fine.rendezvous()
    m = (fig1_fine.t >= 40) & (fig1_fine.t <= 200)
    c_p = fig1_fine.params.c_p
    env = 2 * np.exp((-c_p + 0.05) * (fig1_fine.t[m] - 40))
    ratio = np.max(d[m] / env)
    _report(3, ratio <= 1, f"max d/envelope on [40,200] = {ratio:.3f}; d(200) = {d[-1]:.2e}")
    assert np.all(d[m] <= env)


# 4 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def cp_sweep():
    return run_sweep(SimConfig.for_figure("4b"), "c_p", FIG4B_CP_VALUES, probe_time=100.0)


def test_criterion_04a_practical_bound(fig3_run):
    d, _ = fig3_run.rendezvous()
    bound = 2 / np.sqrt(fig3_run.params.c_p)
    worst = d[(fig3_run.t >= 50) & (fig3_run.t <= 200)].max()
    assert worst <= bound


def test_criterion_04b_sweep_monotone(fig3_run, cp_sweep):
    d, _ = fig3_run.rendezvous()
    worst = d[(fig3_run.t >= 50) & (fig3_run.t <= 200)].max()
    d100 = np.array([row.d_max for row in cp_sweep])
    monotone = bool(np.all(np.diff(d100) < 0))
    table = ", ".join(f"{row.value:g}:{row.d_max:.4f}" for row in cp_sweep)
    _report(4, worst <= 1.0 and monotone,
            f"sup d on [50,200] = {worst:.3f} (<= 1.0); d(100) by c_p = {table} "
            f"({'strictly decreasing' if monotone else 'NOT monotone'})")
    assert monotone


# 5 -------------------------------------------------------------------------

def test_criterion_05_frame_decomposition():
    cfg = SimConfig.for_figure("1", t_end=50.0, dt=1e-3, record_every=10)
    amb = run_simulation(cfg)
    st = run_structural(cfg)
    err = np.linalg.norm(st.ambient_positions() - amb.q, axis=-1).max()
    _report(5, err <= 1e-6, f"max_(i,t<=50) |q_i - S x_i| = {err:.2e} (tol 1e-6)")
    assert err <= 1e-6


# 6 -------------------------------------------------------------------------

def test_criterion_06_linearized_systems(fig1_fine):
    tr = fig1_fine
    params = tr.params
    h = tr.t[1] - tr.t[0]
    M, Mi = matrix_M(params), matrix_Minf(params)
    worst6 = worst3 = 0.0
    for k in range(1, len(tr) - 1, 20):
        sm, s0, sp = tr.structural(k - 1), tr.structural(k), tr.structural(k + 1)
        X, F = aux_functionals(s0, params)
        dX = (aux_functionals(sp, params)[0] - aux_functionals(sm, params)[0]) / (2 * h)
        worst6 = max(worst6, np.abs(dX - M @ X - F).max() / (1 + np.linalg.norm(X)))
        for i in range(tr.n_agents):
            try:
                Xi, Fi = weighted_functionals(s0, params, None, i)
                dXi = (weighted_functionals(sp, params, None, i)[0]
                       - weighted_functionals(sm, params, None, i)[0]) / (2 * h)
            except AntipodalToTarget:
                continue
            worst3 = max(worst3, np.abs(dXi - Mi @ Xi - Fi).max() / (1 + np.linalg.norm(Xi)))
    ok = worst6 <= 1e-4 and worst3 <= 1e-4
    _report(6, ok, f"relative residual 6-dim {worst6:.2e}, weighted 3-dim {worst3:.2e} (tol 1e-4)")
    assert worst6 <= 1e-4
    assert worst3 <= 1e-4


# 7 -------------------------------------------------------------------------

def test_criterion_07_spectra():
    rng = np.random.default_rng(7)
    worst = 0.0
    for sigma, c_q, c_p in rng.uniform(0.01, 20.0, size=(100, 3)):
        p = ModelParams(sigma=sigma, c_q=c_q, c_p=c_p)
        worst = max(worst,
                    match_eigenvalues(eig_M_closed(sigma, c_q, c_p), np.linalg.eigvals(matrix_M(p))),
                    match_eigenvalues(eig_Minf_closed(c_q, c_p), np.linalg.eigvals(matrix_Minf(p))))
    mu = spectrum(ModelParams(sigma=1.0, c_q=5.0, c_p=0.1)).mu
    ok = worst <= 1e-9 and abs(mu - 0.1) <= 1e-12
    _report(7, ok, f"closed vs numeric eigenvalues {worst:.2e} (tol 1e-9); mu(1,5,0.1) = {mu:.15g}")
    assert worst <= 1e-9
    assert mu == pytest.approx(0.1, abs=1e-12)


# 8 -------------------------------------------------------------------------

def test_criterion_08_energy_monotone(fig1_fine):
    e_k, e_c = fig1_fine.energies()
    e = e_k + e_c
    rise = np.max(np.diff(e))
    coef = dissipation_coefficient(fig1_fine.t, e, e_k)
    _report(8, rise <= 1e-8,
            f"max per-step energy increase {rise:.2e} (tol 1e-8); measured dissipation "
            f"coefficient {coef:.6f} (c_p = {fig1_fine.params.c_p}, c_q = {fig1_fine.params.c_q})")
    assert rise <= 1e-8
    assert coef == pytest.approx(fig1_fine.params.c_p, rel=1e-3)


# 9 -------------------------------------------------------------------------

def _geodesic_error(dt, t_end=10.0):
    q0 = np.array([0.0, 0.6, 0.8])
    p0 = np.array([0.3, -0.4, 0.3])
    state = SystemState(0.0, q0[None], p0[None], q0, p0)
    steps = int(round(t_end / dt))
    cfg = SimConfig(params=ModelParams(sigma=0.0, c_q=0.0, c_p=0.0), t_end=t_end, dt=dt,
                    record_every=steps, initial=ExplicitInitial(state), control=ZeroControl())
    tr = run_simulation(cfg)
    speed = np.linalg.norm(p0)
    exact = np.cos(speed * t_end) * q0 + np.sin(speed * t_end) * p0 / speed
    return max(np.abs(tr.q[-1, 0] - exact).max(), np.abs(tr.q_gamma[-1] - exact).max())


def test_criterion_09_oracles():
    geo = _geodesic_error(1e-3)

    c_q, c_p = 5.0, 0.1
    q0, p0 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.0])
    _, y = integrate(lambda t, y: np.concatenate([y[3:], -c_q * y[:3] - c_p * y[3:]]),
                     np.concatenate([q0, p0]), 10.0, 1e-3)
    flat = np.abs(y[:3] - qd_closed_form(q0, p0, c_q, c_p, 10.0)).max()

    errs = np.array([_geodesic_error(h, t_end=10.0) for h in (1e-2, 5e-3, 2.5e-3)])
    ratios = errs[:-1] / errs[1:]
    order_ok = bool(np.all((ratios > 8) & (ratios < 32)))
    ok = geo <= 1e-8 and flat <= 1e-6 and order_ok
    _report(9, ok, f"geodesic err {geo:.2e} (1e-8), flat q_d err {flat:.2e} (1e-6), "
                   f"RK4 halving ratios {ratios.round(2).tolist()} (16 expected)")
    assert geo <= 1e-8
    assert flat <= 1e-6
    assert order_ok


# 10 ------------------------------------------------------------------------

def test_criterion_10_negative_control():
    tr = run_simulation(SimConfig.for_figure("9"))
    d, _ = tr.rendezvous()
    _report(10, d[-1] > 0.5, f"c_p = 0, k0 = 1e4: d_max(200) = {d[-1]:.3f} (> 0.5)")
    assert d[-1] > 0.5


# 11 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def flocking_pairs():
    out = {}
    for base, flock in (("1", "5"), ("3", "6")):
        a = run_simulation(SimConfig.for_figure(base)).rendezvous()[0][-1]
        b = run_simulation(SimConfig.for_figure(flock)).rendezvous()[0][-1]
        out[base] = (a, b, abs(b - a) / a)
    return out


def test_criterion_11_flocking_fig3(flocking_pairs):
    assert flocking_pairs["3"][2] < 0.1


def test_criterion_11_flocking_fig1(flocking_pairs):
    parts = [f"fig{k}: d(200) {a:.3e} -> {b:.3e}, rel change {r:.1%}"
             for k, (a, b, r) in flocking_pairs.items()]
    ok = all(r < 0.1 for _, _, r in flocking_pairs.values())
    _report(11, ok, "; ".join(parts) + " (tol 10%)")
    assert flocking_pairs["1"][2] < 0.1


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
