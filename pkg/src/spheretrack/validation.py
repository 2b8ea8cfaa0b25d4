"""Self-checks run by ``spheretrack validate``.

Each suite returns a list of :class:`Check` rows.  Thresholds match the ones
used in the test-suite so a green ``validate`` means a green acceptance run.
"""

import time
from dataclasses import dataclass

import numpy as np

from .analysis import (aux_functionals, eig_M_closed, eig_Minf_closed, energy, match_eigenvalues,
                       matrix_M, matrix_Minf, spectrum, weighted_functionals)
from .dynamics import ModelParams, SystemState, ZeroControl
from .errors import AntipodalToTarget
from .flatspace import qd_closed_form
from .geom import admissible_rot, p_rot, random_unit_vectors, rodrigues
from .scenarios import FIG4B_CP_VALUES, FIG4B_PROBE_TIME
from .sim import (ExplicitInitial, SimConfig, integrate, run_simulation, run_structural,
                  run_sweep)


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    threshold: float
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.suite}.{self.name}={status} value={self.value:.6g} "
                f"threshold={self.threshold:.6g} seconds={self.seconds:.2f}")


def _check(suite, name, value, threshold, passed=None, seconds=0.0):
    value = float(value)
    if passed is None:
        passed = bool(value <= threshold)
    return Check(suite, name, bool(passed), value, float(threshold), seconds)


# --------------------------------------------------------------------------- operators

def operator_residuals(n=10_000, seed=0):
    """Worst residual of every transport identity over ``n`` random unit pairs."""
    rng = np.random.default_rng(seed)
    z1 = random_unit_vectors(rng, n)
    z2 = random_unit_vectors(rng, n)
    c = np.sum(z1 * z2, axis=1)
    eye = np.eye(3)
    P = c[:, None, None] * eye + np.einsum("ni,nj->nij", z2, z1) - np.einsum("ni,nj->nij", z1, z2)
    PT = np.swapaxes(P, 1, 2)
    Prev = c[:, None, None] * eye + np.einsum("ni,nj->nij", z1, z2) - np.einsum("ni,nj->nij", z2, z1)
    v = rng.normal(size=(n, 3))
    v -= np.sum(v * z1, axis=1, keepdims=True) * z1
    nrm = np.cross(z1, z2)
    m = (z1 + z2) / np.linalg.norm(z1 + z2, axis=1, keepdims=True)
    H2 = eye - 2 * np.einsum("ni,nj->nij", z2, z2)
    Hm = eye - 2 * np.einsum("ni,nj->nij", m, m)
    R = H2 @ Hm
    PtP = PT @ P
    out = {
        "maps_z1": np.abs(np.einsum("nij,nj->ni", P, z1) - z2).max(),
        "maps_z2": np.abs(np.einsum("nij,nj->ni", P, z2) - (2 * c[:, None] * z2 - z1)).max(),
        "tangent": np.abs(np.sum(np.einsum("nij,nj->ni", P, v) * z2, axis=1)).max(),
        "transpose": np.abs(PT - Prev).max(),
        "PtP_z1": np.abs(np.einsum("nij,nj->ni", PtP, z1) - z1).max(),
        "PtP_z2": np.abs(np.einsum("nij,nj->ni", PtP, z2) - z2).max(),
        "normal_eig": np.abs(np.einsum("nij,nj->ni", P, nrm) - c[:, None] * nrm).max(),
        "det_equals_cos": np.abs(np.linalg.det(P) - c).max(),
        "rodrigues_orthogonal": np.abs(np.swapaxes(R, 1, 2) @ R - eye).max(),
        "rodrigues_maps_z1": np.abs(np.einsum("nij,nj->ni", R, z1) - z2).max(),
        "rodrigues_det": np.abs(np.linalg.det(R) - 1).max(),
    }
    # spot-check the scalar implementations against the batched formulas
    k = rng.integers(n, size=50)
    out["p_rot_impl"] = max(np.abs(p_rot(z1[i], z2[i]) - P[i]).max() for i in k)
    out["rodrigues_impl"] = max(np.abs(rodrigues(z1[i], z2[i]) - R[i]).max() for i in k)
    ab = rng.normal(size=(50, 2))
    fam = []
    for (a, b), i in zip(ab, k):
        M = admissible_rot(z1[i], z2[i], a, b)
        fam.append(max(np.abs(M @ z1[i] - z2[i]).max(),
                       np.abs(M @ z2[i] - (2 * c[i] * z2[i] - z1[i])).max(),
                       abs((M @ v[i]) @ z2[i])))
    out["admissible_family"] = max(fam)
    return {key: float(val) for key, val in out.items()}


def suite_operators():
    t0 = time.perf_counter()
    res = operator_residuals()
    dt = time.perf_counter() - t0
    rows = [_check("operators", k, v, 1e-12) for k, v in res.items()]
    rows.append(_check("operators", "runtime", dt, 1.0))
    return rows


# --------------------------------------------------------------------------- sphere runs

def suite_constraints():
    t0 = time.perf_counter()
    tr = run_simulation(SimConfig.for_figure("1", record_every=1))
    dt = time.perf_counter() - t0
    return [_check("constraints", "norm_drift", tr.norm_drift().max(), 1e-5),
            _check("constraints", "orth_drift", tr.orth_drift().max(), 1e-5),
            _check("constraints", "runtime", dt, 30.0)]


def rendezvous_envelope_ratio(traj, c_p, t0=40.0, margin=0.05):
    """``max d(t) / (2 exp((-c_p + margin)(t - t0)))`` over recorded ``t >= t0``."""
    d, _ = traj.rendezvous()
    m = traj.t >= t0
    env = 2.0 * np.exp((-c_p + margin) * (traj.t[m] - t0))
    return float(np.max(d[m] / env))


def suite_rendezvous():
    f1 = run_simulation(SimConfig.for_figure("1"))
    f3 = run_simulation(SimConfig.for_figure("3"))
    d3, _ = f3.rendezvous()
    rows = [_check("rendezvous", "fig1_envelope_ratio",
                   rendezvous_envelope_ratio(f1, f1.params.c_p), 1.0),
            _check("rendezvous", "fig3_bound", d3[f3.t >= 50].max(), 2 / np.sqrt(f3.params.c_p))]
    sweep = run_sweep(SimConfig.for_figure("4b"), "c_p", FIG4B_CP_VALUES, FIG4B_PROBE_TIME)
    d = np.array([r.d_max for r in sweep])
    worst = float(np.max(np.diff(d)))
    rows.append(_check("rendezvous", "cp_sweep_max_increment", worst, 0.0, passed=worst < 0))
    return rows


def frame_decomposition_error(figure="1", t_end=50.0, dt=1e-3):
    cfg = SimConfig.for_figure(figure, t_end=t_end, dt=dt, record_every=10)
    amb = run_simulation(cfg)
    st = run_structural(cfg)
    return float(np.abs(st.ambient_positions() - amb.q).max())


def suite_frame():
    return [_check("frame", f"decomposition_fig{f}", frame_decomposition_error(f), 1e-6)
            for f in ("1", "3")]


def linearized_residuals(figure="1", stride=50, t_end=200.0):
    """Worst relative central-difference residual of both linear systems."""
    cfg = SimConfig.for_figure(figure, t_end=t_end, record_every=1)
    tr = run_simulation(cfg)
    h = tr.t[1] - tr.t[0]
    M, Mi = matrix_M(cfg.params), matrix_Minf(cfg.params)
    worst6 = worst3 = 0.0
    for k in range(1, len(tr) - 1, stride):
        s_m, s_0, s_p = tr.structural(k - 1), tr.structural(k), tr.structural(k + 1)
        X, F = aux_functionals(s_0, cfg.params)
        dX = (aux_functionals(s_p, cfg.params)[0] - aux_functionals(s_m, cfg.params)[0]) / (2 * h)
        worst6 = max(worst6, np.abs(dX - M @ X - F).max() / (1 + np.linalg.norm(X)))
        for i in range(tr.n_agents):
            try:
                Xi, Fi = weighted_functionals(s_0, cfg.params, None, i)
                dXi = (weighted_functionals(s_p, cfg.params, None, i)[0]
                       - weighted_functionals(s_m, cfg.params, None, i)[0]) / (2 * h)
            except AntipodalToTarget:
                continue
            worst3 = max(worst3, np.abs(dXi - Mi @ Xi - Fi).max() / (1 + np.linalg.norm(Xi)))
    return float(worst6), float(worst3)


def suite_linearized():
    r6, r3 = linearized_residuals()
    return [_check("linearized", "residual_M", r6, 1e-4),
            _check("linearized", "residual_Minf", r3, 1e-4)]


def suite_spectra(n=100, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sigma, c_q, c_p in rng.uniform(0.05, 10.0, size=(n, 3)):
        p = ModelParams(sigma=sigma, c_q=c_q, c_p=c_p)
        worst = max(worst,
                    match_eigenvalues(eig_M_closed(sigma, c_q, c_p), np.linalg.eigvals(matrix_M(p))),
                    match_eigenvalues(eig_Minf_closed(c_q, c_p), np.linalg.eigvals(matrix_Minf(p))))
    mu = spectrum(ModelParams(sigma=1.0, c_q=5.0, c_p=0.1)).mu
    return [_check("spectra", "closed_vs_numeric", worst, 1e-9),
            _check("spectra", "mu_fig1", abs(mu - 0.1), 1e-12)]


def energy_series(traj):
    e_k, e_c = traj.energies()
    return e_k + e_c, e_k


def suite_energy():
    from .analysis import dissipation_coefficient

    tr = run_simulation(SimConfig.for_figure("1", record_every=1))
    e, e_k = energy_series(tr)
    coef = dissipation_coefficient(tr.t, e, e_k)
    return [_check("energy", "max_step_increase", np.max(np.diff(e)), 1e-8),
            _check("energy", "dissipation_coefficient_minus_c_p", abs(coef - tr.params.c_p), 1e-3)]


# --------------------------------------------------------------------------- oracles

def geodesic_error(dt, t_end=10.0):
    """RK4 error against the great circle ``cos(|p|t) q0 + sin(|p|t) p0/|p|``."""
    q0 = np.array([1.0, 0.0, 0.0])
    p0 = np.array([0.0, 0.7, 0.0])
    state = SystemState(0.0, q0[None], p0[None], q0, p0)
    nsteps = int(round(t_end / dt))
    cfg = SimConfig(params=ModelParams(sigma=0.0, c_q=0.0, c_p=0.0), t_end=t_end, dt=dt,
                    record_every=nsteps, initial=ExplicitInitial(state), control=ZeroControl())
    tr = run_simulation(cfg)
    w = np.linalg.norm(p0)
    exact = np.cos(w * t_end) * q0 + np.sin(w * t_end) * p0 / w
    return float(np.abs(tr.q[-1, 0] - exact).max())


def qd_oracle_error(c_q=5.0, c_p=0.1, t=10.0, dt=1e-3):
    q0 = np.array([1.0, -0.5, 0.25])
    p0 = np.array([0.2, 0.0, -0.3])

    def rhs(_t, y):
        return np.concatenate([y[3:], -c_q * y[:3] - c_p * y[3:]])

    _, y = integrate(rhs, np.concatenate([q0, p0]), t, dt)
    return float(np.abs(y[:3] - qd_closed_form(q0, p0, c_q, c_p, t)).max())


def suite_oracles():
    errs = [geodesic_error(h) for h in (1e-2, 5e-3, 2.5e-3)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    return [_check("oracles", "geodesic_t10", geodesic_error(1e-3), 1e-8),
            _check("oracles", "qd_closed_form_t10", qd_oracle_error(), 1e-6),
            _check("oracles", "rk4_order_min", orders.min(), 4.0,
                   passed=bool(np.all(np.abs(orders - 4.0) < 1.0)))]


def suite_negative():
    tr = run_simulation(SimConfig.for_figure("9"))
    d, _ = tr.rendezvous()
    return [_check("negative", "fig9_d200", d[-1], 0.5, passed=d[-1] > 0.5)]


def flocking_relative_change(base_fig, flock_fig):
    a = run_simulation(SimConfig.for_figure(base_fig)).rendezvous()[0][-1]
    b = run_simulation(SimConfig.for_figure(flock_fig)).rendezvous()[0][-1]
    return float(abs(b - a) / a), float(a), float(b)


def suite_flocking():
    return [_check("flocking", f"fig{a}_vs_fig{b}", flocking_relative_change(a, b)[0], 0.1)
            for a, b in (("1", "5"), ("3", "6"))]


SUITES = {
    "operators": suite_operators,
    "constraints": suite_constraints,
    "rendezvous": suite_rendezvous,
    "frame": suite_frame,
    "linearized": suite_linearized,
    "spectra": suite_spectra,
    "energy": suite_energy,
    "oracles": suite_oracles,
    "negative": suite_negative,
    "flocking": suite_flocking,
}


def run_suites(names=None):
    names = list(SUITES) if not names or "all" in names else names
    rows = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
        t0 = time.perf_counter()
        out = SUITES[name]()
        dt = time.perf_counter() - t0
        rows.extend(r if r.seconds else Check(r.suite, r.name, r.passed, r.value, r.threshold, dt)
                    for r in out)
    return rows
