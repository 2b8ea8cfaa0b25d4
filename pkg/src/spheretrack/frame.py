"""Co-rotating reference frame generated by the target's angular velocity.

The frame matrix ``S(t)`` solves ``dS/dt = skew(w(t)) S`` with ``S(0) = I``.
Ambient agent phases ``(q_i, p_i)`` and structural phases ``(x_i, v_i)`` are
related by ``q_i = S x_i`` and ``p_i = w x q_i + S v_i``.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import ControlMode, SystemState, angular_state, extra_control_u1, sigma_matrix
from .errors import NonTangentControl
from .geom import skew

FRAME_TOL = 1e-9
TANGENT_TOL = 1e-9


@dataclass
class FrameState:
    S: np.ndarray
    t: float = 0.0

    @classmethod
    def identity(cls, t=0.0):
        return cls(np.eye(3), t)

    def orthogonality_error(self):
        return float(np.max(np.abs(self.S.T @ self.S - np.eye(3))))


@dataclass
class StructuralState:
    x: np.ndarray
    v: np.ndarray
    x_gamma: np.ndarray

    def __post_init__(self):
        self.x = np.array(self.x, dtype=float).reshape(-1, 3)
        self.v = np.array(self.v, dtype=float).reshape(-1, 3)
        self.x_gamma = np.array(self.x_gamma, dtype=float).reshape(3)

    @property
    def n_agents(self):
        return len(self.x)


def orthonormalize(S):
    """One Newton-Schulz step towards the polar factor ``S (S^T S)^{-1/2}``."""
    return 0.5 * S @ (3.0 * np.eye(3) - S.T @ S)


def frame_step(frame, w, dt):
    """Advance ``S`` by one RK4 step of ``dS/dt = skew(w) S``.

    ``w`` is either a fixed 3-vector or a callable ``w(t)``; in the latter case
    the stage times of the RK4 tableau are honoured.
    """
    wf = w if callable(w) else (lambda _t, _w=np.asarray(w, dtype=float): _w)
    t, S = frame.t, frame.S

    def f(tt, SS):
        return skew(wf(tt)) @ SS

    k1 = f(t, S)
    k2 = f(t + dt / 2, S + dt / 2 * k1)
    k3 = f(t + dt / 2, S + dt / 2 * k2)
    k4 = f(t + dt, S + dt * k3)
    S_new = S + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return FrameState(orthonormalize(S_new), t + dt)


def to_structural(frame, state):
    """Map an ambient state into frame coordinates.

    ``w`` is the target angular velocity ``q_gamma x p_gamma`` at ``state.t``.
    """
    S = frame.S
    w = np.cross(state.q_gamma, state.p_gamma)
    x = state.q @ S  # rows of S^T q_i
    v = (state.p - np.cross(w, state.q)) @ S
    return StructuralState(x, v, S.T @ state.q_gamma)


def reconstruct(frame, s, w, t=None, p_gamma=None):
    """Inverse of :func:`to_structural`.

    The target velocity is recovered as ``w x q_gamma`` unless given.
    """
    S = frame.S
    q = s.x @ S.T
    p = np.cross(w, q) + s.v @ S.T
    qg = S @ s.x_gamma
    pg = np.cross(w, qg) if p_gamma is None else p_gamma
    return SystemState(frame.t if t is None else t, q, p, qg, pg)


def structural_rhs(s, params, A=None, tol=TANGENT_TOL):
    """Derivatives ``(dx, dv)`` of the structural system with control ``A``."""
    x, v, xg = s.x, s.v, s.x_gamma
    n = len(x)
    if A is None:
        A = np.zeros_like(x)
    A = np.asarray(A, dtype=float).reshape(n, 3)
    leak = np.abs(np.sum(A * x, axis=1))
    if leak.max() > tol * max(1.0, np.abs(A).max()):
        raise NonTangentControl(f"<A_i, x_i> = {leak.max():.3e} is not zero")

    xx = np.sum(x * x, axis=1)[:, None]
    dv = -np.sum(v * v, axis=1)[:, None] / xx * x
    sig = sigma_matrix(x, params)
    dv += (xx * (sig @ x) - np.sum(sig * (x @ x.T), axis=1)[:, None] * x) / n
    dv += params.c_q * (xx * xg - (x @ xg)[:, None] * x)
    dv += -params.c_p * v + A
    return v.copy(), dv


def structural_control(S, q, p, w, dw, control):
    """The ``A_i`` that makes the structural system match a given ``U_i`` mode.

    Full information gives ``A_i = 0``; zero control gives
    ``A_i = -S^T U1_i`` with ``U1_i`` from :func:`extra_control_u1`.
    """
    if ControlMode.parse(control) is ControlMode.FULL_INFO:
        return np.zeros_like(q)
    return -(extra_control_u1(q, p, w, dw) @ S)


def coupled_rhs(t, y, params, control, x_gamma):
    """RHS of the target + frame + structural system as one flat vector.

    Layout: ``q_gamma, p_gamma, S (row-major), x_1..x_N, v_1..v_N``.  The
    structural system sees the fixed point ``x_gamma`` (= ``q_gamma(0)``).
    """
    n = (len(y) - 15) // 6
    qg, pg = y[0:3], y[3:6]
    S = y[6:15].reshape(3, 3)
    x = y[15:15 + 3 * n].reshape(n, 3)
    v = y[15 + 3 * n:].reshape(n, 3)
    u = control(t)
    w, dw = angular_state(qg, pg, u)
    dpg = -(pg @ pg) / (qg @ qg) * qg + (qg @ qg) * u - (u @ qg) * qg
    if params.control is ControlMode.FULL_INFO:
        A = np.zeros_like(x)
    else:
        q = x @ S.T
        p = np.cross(w, q) + v @ S.T
        A = structural_control(S, q, p, w, dw, params.control)
    dx, dv = structural_rhs(StructuralState(x, v, x_gamma), params, A, tol=np.inf)
    return np.concatenate([pg, dpg, (skew(w) @ S).ravel(), dx.ravel(), dv.ravel()])

