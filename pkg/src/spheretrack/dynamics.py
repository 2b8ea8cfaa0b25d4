"""Right-hand sides of the target system and the multi-agent tracking system.

Agent states are stacked as arrays ``q, p`` of shape ``(N, 3)``.  These are
the readable reference implementations; :mod:`spheretrack._kernels` holds
compiled copies of the constant-sigma case used for long runs.
"""

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import AdmissibilityError, AntipodalSingularity
from .geom import ADMISSIBILITY_TOL, ANTIPODAL_TOL, tangent_project


class ControlMode(enum.Enum):
    FULL_INFO = "U1"  # uses target position, velocity and acceleration
    ZERO = "U2"  # U_i = 0

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {"U1": cls.FULL_INFO, "FULL_INFO": cls.FULL_INFO, "FULLINFO": cls.FULL_INFO,
                   "U2": cls.ZERO, "ZERO": cls.ZERO, "ZEROCONTROL": cls.ZERO}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown control mode {value!r}") from None


@dataclass(frozen=True)
class ModelParams:
    """Gains of the tracking system.

    ``sigma_fn``, when given, replaces the constant ``sigma`` and is evaluated
    on squared chordal distances ``|q_i - q_j|^2``.
    """

    sigma: float = 1.0
    c_q: float = 1.0
    c_p: float = 1.0
    psi: float = 0.0
    k0: float = 0.0
    control: ControlMode = ControlMode.FULL_INFO
    sigma_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "control", ControlMode.parse(self.control))
        if self.sigma_fn is None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.psi < 0 or self.k0 < 0:
            raise ValueError("psi and k0 must be nonnegative")

    @property
    def constant_sigma(self):
        return self.sigma_fn is None

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class PeriodicControl:
    """Raw target control ``u(t) = a (cos t, sin t, 1)``."""

    a: float = 0.5

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        one = np.ones_like(t)
        return self.a * np.stack([np.cos(t), np.sin(t), one], axis=-1)

    @property
    def bound(self):
        """sup |u(t)| = a * sqrt(2)."""
        return abs(self.a) * np.sqrt(2.0)


@dataclass(frozen=True)
class ZeroControl:
    """Free target: geodesic motion."""

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (3,))

    bound = 0.0


@dataclass
class SystemState:
    """Phase of N agents plus the target at time ``t``."""

    t: float
    q: np.ndarray
    p: np.ndarray
    q_gamma: np.ndarray
    p_gamma: np.ndarray

    def __post_init__(self):
        self.q = np.array(self.q, dtype=float).reshape(-1, 3)
        self.p = np.array(self.p, dtype=float).reshape(-1, 3)
        self.q_gamma = np.array(self.q_gamma, dtype=float).reshape(3)
        self.p_gamma = np.array(self.p_gamma, dtype=float).reshape(3)
        if self.q.shape != self.p.shape or len(self.q) < 1:
            raise ValueError("q and p must both have shape (N, 3) with N >= 1")

    @property
    def n_agents(self):
        return len(self.q)

    def check_admissible(self, tol=ADMISSIBILITY_TOL):
        """Raise :class:`AdmissibilityError` unless every phase is on T S^2."""
        qs = np.vstack([self.q_gamma, self.q])
        ps = np.vstack([self.p_gamma, self.p])
        norm_err = np.abs(np.linalg.norm(qs, axis=1) - 1.0)
        orth_err = np.abs(np.sum(qs * ps, axis=1))
        if norm_err.max() > tol or orth_err.max() > tol:
            raise AdmissibilityError(
                f"state not admissible: max ||q|-1| = {norm_err.max():.3e}, "
                f"max |<q,p>| = {orth_err.max():.3e} (tol {tol})")
        return self

    def projected(self):
        """Copy with q normalized and p projected onto the tangent plane."""
        def fix(q, p):
            q = q / np.linalg.norm(q, axis=-1, keepdims=True)
            p = p - np.sum(p * q, axis=-1, keepdims=True) * q
            return q, p

        q, p = fix(self.q, self.p)
        qg, pg = fix(self.q_gamma, self.p_gamma)
        return SystemState(self.t, q, p, qg, pg)

    def pack(self):
        return np.concatenate([self.q_gamma, self.p_gamma, self.q.ravel(), self.p.ravel()])

    @classmethod
    def unpack(cls, t, y):
        n = (len(y) - 6) // 6
        return cls(t, y[6:6 + 3 * n].reshape(n, 3), y[6 + 3 * n:6 + 6 * n].reshape(n, 3),
                   y[0:3], y[3:6])

    def copy(self):
        return SystemState(self.t, self.q.copy(), self.p.copy(),
                           self.q_gamma.copy(), self.p_gamma.copy())


def target_rhs(q_gamma, p_gamma, u_raw):
    """Time derivative of the target phase (geodesic + projected control)."""
    q = np.asarray(q_gamma, dtype=float)
    p = np.asarray(p_gamma, dtype=float)
    dp = -(p @ p) / (q @ q) * q + tangent_project(q, u_raw)
    return p.copy(), dp


def angular_state(q_gamma, p_gamma, u_raw):
    """Target angular velocity ``w = q x p`` and its derivative ``q x U``."""
    q = np.asarray(q_gamma, dtype=float)
    w = np.cross(q, p_gamma)
    dw = np.cross(q, tangent_project(q, u_raw))
    return w, dw


def extra_control_u1(q, p, w, dw, omit_tangential_term=False):
    """Full-information control cancelling the frame's fictitious forces.

    Returns ``2<w,q_i>(q_i x p_i) + dw x q_i - <w,q_i>(|q_i|^2 w - <w,q_i> q_i)`` per
    agent row.  The last (tangential) term is needed for the frame map to send
    the ambient system onto the structural one with ``A_i = 0``; pass
    ``omit_tangential_term=True`` to drop it.
    """
    q = np.atleast_2d(q)
    p = np.atleast_2d(p)
    wq = (q @ w)[:, None]
    out = 2.0 * wq * np.cross(q, p) + np.cross(dw, q)
    if not omit_tangential_term:
        out -= wq * (np.sum(q * q, axis=1)[:, None] * w - wq * q)
    return out


def sigma_matrix(q, params):
    n = len(q)
    if params.sigma_fn is None:
        return np.full((n, n), float(params.sigma))
    diff = q[:, None, :] - q[None, :, :]
    return np.asarray(params.sigma_fn(np.sum(diff * diff, axis=-1)), dtype=float)


def flocking_term(q, p, psi, antipodal_tol=ANTIPODAL_TOL):
    """``sum_j psi/N (R_{q_j -> q_i} p_j - p_i)`` with Rodrigues transport."""
    n = len(q)
    qi = q[:, None, :]  # target point z2
    qj = q[None, :, :]  # source point z1
    pj = p[None, :, :]
    if np.any(np.linalg.norm(qi + qj, axis=-1) < antipodal_tol):
        raise AntipodalSingularity("two agents are antipodal; flocking term undefined")
    c = np.sum(qi * qj, axis=-1, keepdims=True)
    nrm = np.cross(qj, qi)
    transported = (c * pj + qi * np.sum(qj * pj, axis=-1, keepdims=True)
                   - qj * np.sum(qi * pj, axis=-1, keepdims=True)
                   + nrm * np.sum(nrm * pj, axis=-1, keepdims=True) / (1.0 + c))
    diff = transported - p[:, None, :]
    diff[np.arange(n), np.arange(n)] = 0.0  # R_{q_i -> q_i} = I exactly
    return psi / n * np.sum(diff, axis=1)


def main_rhs(state, params, u_raw):
    """Derivatives ``(dq, dp)``, each ``(N, 3)``, of the agents in ``state``.

    ``u_raw`` is the raw target control at ``state.t``; it only enters through
    the full-information control ``U1``.
    """
    q, p = state.q, state.p
    qg, pg = state.q_gamma, state.p_gamma
    n = len(q)
    qq = np.sum(q * q, axis=1)[:, None]

    dp = -np.sum(p * p, axis=1)[:, None] / qq * q

    sig = sigma_matrix(q, params)
    gram = q @ q.T
    dp += (qq * (sig @ q) - np.sum(sig * gram, axis=1)[:, None] * q) / n

    dp += params.c_q * (qq * qg - (q @ qg)[:, None] * q)

    # P_{q_gamma -> q_i}(p_gamma), written out row-wise
    aligned = ((q @ qg)[:, None] * pg + q * (qg @ pg) - qg[None, :] * (q @ pg)[:, None])
    dp += params.c_p * (aligned - p)

    if params.control is ControlMode.FULL_INFO:
        w, dw = angular_state(qg, pg, u_raw)
        dp += extra_control_u1(q, p, w, dw)

    if params.psi > 0:
        dp += flocking_term(q, p, params.psi)

    if params.k0 > 0:
        dp += -params.k0 * (q - q / np.sqrt(qq))

    return p.copy(), dp


def system_rhs(t, y, params, control):
    """Flat-vector RHS for the coupled target + agents system."""
    state = SystemState.unpack(t, y)
    u = control(t)
    dqg, dpg = target_rhs(state.q_gamma, state.p_gamma, u)
    dq, dp = main_rhs(state, params, u)
    return np.concatenate([dqg, dpg, dq.ravel(), dp.ravel()])


def check_thm3_velocity_hypothesis(state, tol=1e-12):
    """Warn when some ``|p_i(0) - p_gamma(0)| == 2`` (excluded by the practical-rendezvous result)."""
    gaps = np.linalg.norm(state.p - state.p_gamma, axis=1)
    bad = np.flatnonzero(np.abs(gaps - 2.0) < tol)
    if bad.size:
        warnings.warn(f"agents {bad.tolist()} have |p_i(0) - p_gamma(0)| = 2", RuntimeWarning,
                      stacklevel=2)
    return bad.size == 0
