"""Energy, auxiliary functionals, linearized systems and spectra.

Structural states (frame coordinates) are the natural input.  All of the
quantities here are built from inner products, so they can equally be fed the
"instantaneous" structural state ``to_structural(FrameState.identity(), s)``
of an ambient state: a rigid rotation does not change them.

Auxiliary 6-vectors use the order ``(Xg1, Xg2, Xg3, X1, X2, X3)``.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AntipodalToTarget, RequiresConstantSigma

ANTIPODAL_TARGET_TOL = 1e-9


class EnergyBreakdown(NamedTuple):
    e_k: float
    e_c: float
    e_total: float


class RendezvousCondition(enum.Enum):
    HOLDS_BY_GAIN = "holds_by_gain"
    HOLDS_BY_ENERGY = "holds_by_energy"
    FAILS = "fails"


@dataclass(frozen=True)
class SpectralSummary:
    eig_M: np.ndarray
    eig_Minf: np.ndarray
    mu: float
    mu_inf: float
    D_thm3: float
    D_thm3_literal_branch: bool
    mu_numeric: float
    mu_inf_numeric: float


def _require_constant(params):
    if getattr(params, "sigma_fn", None) is not None:
        raise RequiresConstantSigma("analysis needs a constant sigma")


def _pairwise_sq(x):
    d = x[:, None, :] - x[None, :, :]
    return np.sum(d * d, axis=-1)


def energy(s, params):
    """Kinetic + configuration energy of a structural state."""
    _require_constant(params)
    x, v, xg = s.x, s.v, s.x_gamma
    n = len(x)
    e_k = np.sum(v * v) / (2 * n)
    e_c = (params.sigma / (4 * n * n) * np.sum(_pairwise_sq(x))
           + params.c_q / (2 * n) * np.sum((x - xg) ** 2))
    return EnergyBreakdown(float(e_k), float(e_c), float(e_k + e_c))


def energy_threshold(params):
    """Initial-energy bound ``(sigma/2)(1 + c_q/sigma)^2`` for complete rendezvous."""
    _require_constant(params)
    return 0.5 * params.sigma * (1.0 + params.c_q / params.sigma) ** 2


def thm1_condition(s0, params):
    """Which sufficient condition for complete rendezvous holds at ``s0``, if any."""
    _require_constant(params)
    if params.sigma <= 0:
        raise ValueError("sigma must be positive")
    if params.c_q > params.sigma:
        return RendezvousCondition.HOLDS_BY_GAIN
    if energy(s0, params).e_total < energy_threshold(params):
        return RendezvousCondition.HOLDS_BY_ENERGY
    return RendezvousCondition.FAILS


def aux_functionals(s, params, A=None):
    """Quadratic functionals ``X`` and inhomogeneity ``F`` with ``dX/dt = M X + F``."""
    _require_constant(params)
    x, v, xg = s.x, s.v, s.x_gamma
    n = len(x)
    A = np.zeros_like(x) if A is None else np.asarray(A, dtype=float).reshape(n, 3)
    sigma, c_q = params.sigma, params.c_q

    dg = x - xg
    rg = np.sum(dg * dg, axis=1)  # |x_i - x_g|^2
    sg = np.sum(dg * v, axis=1)  # <x_i - x_g, v_i>
    vv = np.sum(v * v, axis=1)
    dxx = _pairwise_sq(x)  # |x_i - x_k|^2
    dvv = _pairwise_sq(v)
    dv = v[:, None, :] - v[None, :, :]
    dx = x[:, None, :] - x[None, :, :]
    dvx = np.sum(dv * dx, axis=-1)  # <v_i - v_k, x_i - x_k>
    xv = x @ v.T  # xv[i, k] = <x_i, v_k>
    dA = A[:, None, :] - A[None, :, :]

    X = np.array([
        rg.mean(), sg.mean(), vv.mean(),
        dxx.sum() / n**2, dvx.sum() / n**2, dvv.sum() / n**2,
    ])

    row = dxx.sum(axis=1)  # sum_j |x_i - x_j|^2
    Fg2 = (-np.sum(0.5 * vv * rg) / n
           + sigma / (4 * n**2) * np.sum(row * rg)
           + c_q / (4 * n) * np.sum(rg**2)
           + np.sum(dg * A) / n)
    Fg3 = 2.0 / n * np.sum(v * A)
    F2 = (-np.sum(0.5 * (vv[:, None] + vv[None, :]) * dxx) / n**2
          + sigma / (2 * n**3) * np.sum(row[:, None] * dxx)
          + c_q / (2 * n**2) * np.sum(rg[:, None] * dxx)
          + np.sum(dA * dx) / n**2)
    # sum_{i,k} |v_i|^2 <x_i, v_k> + |v_k|^2 <x_k, v_i> = 2 sum_{i,k} |v_i|^2 <x_i, v_k>
    F3 = (4.0 / n**2 * np.sum(vv[:, None] * xv)
          - 2.0 * sigma / n**3 * np.sum(row[:, None] * xv)
          - 2.0 * c_q / n**2 * np.sum(rg[:, None] * xv)
          + 2.0 / n**2 * np.sum(dA * dv))
    F = np.array([0.0, Fg2, Fg3, 0.0, F2, F3])
    return X, F


def matrix_M(params):
    """6x6 coefficient matrix of the quadratic functionals."""
    _require_constant(params)
    s, cq, cp = params.sigma, params.c_q, params.c_p
    return np.array([
        [0.0, 2.0, 0.0, 0.0, 0.0, 0.0],
        [-cq, -cp, 1.0, -s / 2, 0.0, 0.0],
        [0.0, -2 * cq, -2 * cp, 0.0, -s, 0.0],
        [0.0, 0.0, 0.0, 0.0, 2.0, 0.0],
        [0.0, 0.0, 0.0, -(cq + s), -cp, 1.0],
        [0.0, 0.0, 0.0, 0.0, -2 * (cq + s), -2 * cp],
    ])


def matrix_Minf(params):
    """3x3 coefficient matrix of the weighted per-agent functionals."""
    cq, cp = params.c_q, params.c_p
    return np.array([
        [0.0, 2.0, 0.0],
        [-cq, -cp, 1.0],
        [0.0, -2 * cq, -2 * cp],
    ])


def _weights(s, i, tol):
    d = s.x[i] - s.x_gamma
    r = d @ d
    if r >= 4.0 - tol:
        raise AntipodalToTarget(f"agent {i} is antipodal to the target (|x_i - x_g|^2 = {r!r})")
    return d, r, 4.0 - r


def weighted_functionals(s, params, A=None, i=0, tol=ANTIPODAL_TARGET_TOL):
    """Weighted functionals ``X_i`` and ``F_i`` with ``dX_i/dt = M_inf X_i + F_i``."""
    _require_constant(params)
    x, v = s.x, s.v
    n = len(x)
    a = np.zeros(3) if A is None else np.asarray(A, dtype=float).reshape(n, 3)[i]
    d, r, g = _weights(s, i, tol)
    vi = v[i]
    sv = d @ vi
    vv = vi @ vi
    Xi = np.array([4 * r / g, 16 * sv / g**2, 16 * vv / g**2])

    coop = np.sum(x @ d - (x @ x[i]) * (x[i] @ d))  # sum_j <x_i - x_g, x_j - <x_i,x_j> x_i>
    F2 = (-0.5 * vv * 16 * r / g**2
          + 16 * params.sigma / (n * g**2) * coop
          + 16 * (d @ a) / g**2
          + 64 * sv**2 / g**3)
    F3 = (32 * params.sigma / (n * g**2) * np.sum(x @ vi)
          + 32 * (vi @ a) / g**2
          + 64 * vv * sv / g**3)
    return Xi, np.array([0.0, F2, F3])


def weighted_functionals_all(s, params, A=None, tol=ANTIPODAL_TARGET_TOL):
    pairs = [weighted_functionals(s, params, A, i, tol) for i in range(s.n_agents)]
    return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])


def x_inf(s, params, tol=ANTIPODAL_TARGET_TOL):
    """``max_i |X_i|`` over agents."""
    Xs, _ = weighted_functionals_all(s, params, None, tol)
    return float(np.max(np.linalg.norm(Xs, axis=1)))


def eig_Minf_closed(c_q, c_p):
    r = np.sqrt(complex(c_p * c_p - 4 * c_q))
    return np.array([-c_p, -c_p - r, -c_p + r], dtype=complex)


def eig_M_closed(sigma, c_q, c_p):
    r1 = np.sqrt(complex(c_p * c_p - 4 * c_q))
    r2 = np.sqrt(complex(c_p * c_p - 4 * c_q - 4 * sigma))
    return np.array([-c_p, -c_p, -c_p - r1, -c_p + r1, -c_p - r2, -c_p + r2], dtype=complex)


def thm3_rate(c_q, c_p):
    """Rate constant of the practical-rendezvous bound, branches taken literally.

    The literal branch test ``c_p^2 >= -4 c_q`` always holds for ``c_q > 0``;
    the real part of ``c_p - sqrt(c_p^2 - 4 c_q)`` is then reported, which
    equals ``c_p`` whenever the square root is imaginary.
    Returns ``(value, literal_branch_taken)``.
    """
    if c_p * c_p >= -4 * c_q:
        return float((c_p - np.sqrt(complex(c_p * c_p - 4 * c_q))).real), True
    return float(c_p), False


def spectrum(params):
    _require_constant(params)
    eM = eig_M_closed(params.sigma, params.c_q, params.c_p)
    eI = eig_Minf_closed(params.c_q, params.c_p)
    numM = np.linalg.eigvals(matrix_M(params))
    numI = np.linalg.eigvals(matrix_Minf(params))
    D, literal = thm3_rate(params.c_q, params.c_p)
    return SpectralSummary(
        eig_M=eM, eig_Minf=eI,
        mu=float(-eM.real.max()), mu_inf=float(-eI.real.max()),
        D_thm3=D, D_thm3_literal_branch=literal,
        mu_numeric=float(-numM.real.max()), mu_inf_numeric=float(-numI.real.max()),
    )


def match_eigenvalues(a, b):
    """Largest distance after optimally pairing two eigenvalue lists."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def rendezvous_metrics(trajectory):
    """Per-sample ``d_max = max_i |q_i - q_g|`` and ``v_max = max_i |p_i - p_g|``.

    Accepts a :class:`~spheretrack.sim.Trajectory` or any iterable of
    :class:`~spheretrack.dynamics.SystemState`.
    """
    if hasattr(trajectory, "q") and hasattr(trajectory, "q_gamma"):
        q, p = np.asarray(trajectory.q), np.asarray(trajectory.p)
        qg, pg = np.asarray(trajectory.q_gamma), np.asarray(trajectory.p_gamma)
        if q.ndim == 2:
            q, p, qg, pg = q[None], p[None], qg[None], pg[None]
    else:
        states = list(trajectory)
        if not states:
            raise ValueError("empty trajectory")
        q = np.stack([s.q for s in states])
        p = np.stack([s.p for s in states])
        qg = np.stack([s.q_gamma for s in states])
        pg = np.stack([s.p_gamma for s in states])
    d = np.linalg.norm(q - qg[:, None, :], axis=-1).max(axis=1)
    v = np.linalg.norm(p - pg[:, None, :], axis=-1).max(axis=1)
    return d, v


def fit_exponential_rate(t, values, window=(40.0, 200.0)):
    """Least-squares slope of ``log(values)`` over ``window``; returns ``(rate, log_amp)``."""
    t = np.asarray(t)
    values = np.asarray(values)
    m = (t >= window[0]) & (t <= window[1]) & (values > 0)
    if m.sum() < 2:
        raise ValueError("not enough positive samples in the fitting window")
    slope, intercept = np.polyfit(t[m], np.log(values[m]), 1)
    return float(slope), float(intercept)


def dissipation_coefficient(t, e_total, e_k):
    """Fit ``dE/dt = -kappa * 2 E_k`` (i.e. ``-(kappa/N) sum |v_i|^2``) by least squares."""
    t = np.asarray(t)
    e = np.asarray(e_total)
    rate = np.gradient(e, t)
    two_ek = 2.0 * np.asarray(e_k)
    return float(-np.sum(rate * two_ek) / np.sum(two_ek * two_ek))
