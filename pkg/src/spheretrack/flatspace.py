"""The Euclidean comparison model: agents tracking a target in R^3.

Centre-of-mass coordinates ``(q_c, p_c)`` carry the translational part and
deviations ``x_i = q_i - q_c`` the structural part.  The tracking error
``q_d = q_c - q_gamma`` obeys a damped oscillator with closed-form solution.
"""

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels
from .dynamics import ModelParams
from .errors import NonFiniteState, RepeatedRoot
from .scenarios import FIG1_P, FIG1_PG, FIG1_Q, FIG1_QG, target_control

REPEATED_ROOT_TOL = 1e-12
BOX_HALF_WIDTH = 5.0


class FlatControl(enum.Enum):
    MATCH_TARGET = "match"  # u_i = u_gamma
    ZERO = "zero"  # u_i = 0

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"match": cls.MATCH_TARGET, "match_target": cls.MATCH_TARGET,
                   "matchtarget": cls.MATCH_TARGET, "u1": cls.MATCH_TARGET,
                   "zero": cls.ZERO, "u2": cls.ZERO}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown flat control mode {value!r}") from None


@dataclass
class FlatState:
    q: np.ndarray
    p: np.ndarray
    q_gamma: np.ndarray
    p_gamma: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.q = np.array(self.q, dtype=float).reshape(-1, 3)
        self.p = np.array(self.p, dtype=float).reshape(-1, 3)
        self.q_gamma = np.array(self.q_gamma, dtype=float).reshape(3)
        self.p_gamma = np.array(self.p_gamma, dtype=float).reshape(3)
        for name in ("q", "p", "q_gamma", "p_gamma"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise NonFiniteState(f"{name} is not finite")

    @property
    def n_agents(self):
        return len(self.q)

    def pack(self):
        return np.concatenate([self.q_gamma, self.p_gamma, self.q.ravel(), self.p.ravel()])

    @classmethod
    def unpack(cls, t, y):
        n = (len(y) - 6) // 6
        return cls(y[6:6 + 3 * n].reshape(n, 3), y[6 + 3 * n:].reshape(n, 3), y[0:3], y[3:6], t)

    # ---- decomposition
    def center(self):
        return self.q.mean(axis=0), self.p.mean(axis=0)

    def deviations(self):
        qc, pc = self.center()
        return self.q - qc, self.p - pc

    def tracking_error(self):
        qc, pc = self.center()
        return qc - self.q_gamma, pc - self.p_gamma


def _sigma_matrix(q, params):
    n = len(q)
    if params.sigma_fn is None:
        return np.full((n, n), float(params.sigma))
    diff = q[:, None, :] - q[None, :, :]
    return np.asarray(params.sigma_fn(np.sum(diff * diff, axis=-1)), dtype=float)


def flat_rhs(state, params, u_gamma, u_mode=FlatControl.MATCH_TARGET):
    """Derivatives ``(dq, dp, dq_gamma, dp_gamma)``."""
    u_mode = FlatControl.parse(u_mode)
    u_gamma = np.asarray(u_gamma, dtype=float)
    q, p = state.q, state.p
    n = len(q)
    sig = _sigma_matrix(q, params)
    dp = (sig @ q - sig.sum(axis=1)[:, None] * q) / n
    dp += params.psi * (p.mean(axis=0) - p)
    dp += params.c_q * (state.q_gamma - q) + params.c_p * (state.p_gamma - p)
    if u_mode is FlatControl.MATCH_TARGET:
        dp = dp + u_gamma
    return p.copy(), dp, state.p_gamma.copy(), u_gamma.copy()


def translational_rhs(qd, pd, params, u_gamma, u_mode=FlatControl.MATCH_TARGET):
    """Tracking-error dynamics; valid for symmetric sigma."""
    forcing = 0.0 if FlatControl.parse(u_mode) is FlatControl.MATCH_TARGET else -np.asarray(u_gamma)
    return pd, -params.c_q * qd - params.c_p * pd + forcing


def structural_flat_rhs(x, v, params):
    """Deviation dynamics; independent of the target."""
    n = len(x)
    sig = _sigma_matrix(x, params)
    dv = (sig @ x - sig.sum(axis=1)[:, None] * x) / n - params.c_q * x - params.c_p * v
    return v.copy(), dv


def qd_closed_form(qd0, pd0, c_q, c_p, t, strict=False):
    """Tracking error ``q_d(t)`` of the matched-control model.

    Distinct roots use the two-exponential formula, evaluated in complex
    arithmetic when the roots are complex.  A repeated root (``c_p^2 = 4 c_q``)
    raises :class:`RepeatedRoot` if ``strict``; otherwise the limit form
    ``(q0 + (p0 + c_p q0 / 2) t) e^{-c_p t / 2}`` is returned.
    """
    qd0 = np.asarray(qd0, dtype=float)
    pd0 = np.asarray(pd0, dtype=float)
    disc = c_p * c_p - 4.0 * c_q
    if abs(disc) < REPEATED_ROOT_TOL:
        if strict:
            raise RepeatedRoot(f"c_p^2 - 4 c_q = {disc:.3e}")
        return (qd0 + (pd0 + 0.5 * c_p * qd0) * t) * math.exp(-0.5 * c_p * t)
    s = np.sqrt(complex(disc))
    e_minus = np.exp(0.5 * t * (-s - c_p))
    e_plus = np.exp(0.5 * t * (s - c_p))
    out = ((-c_p * qd0 + s * qd0 - 2 * pd0) * e_minus
           + (c_p * qd0 + s * qd0 + 2 * pd0) * e_plus) / (2 * s)
    return np.real(out)


@dataclass(frozen=True)
class XdSystem:
    M_d: np.ndarray
    eigenvalues: np.ndarray
    mu_d: float

    def bound(self, c_gamma):
        """Asymptotic bound on ``|X_d|`` for target accelerations bounded by ``c_gamma``."""
        return 10.0 * c_gamma ** 2 / self.mu_d ** 2


def xd_system(c_q, c_p):
    if c_q <= 0 or c_p <= 0:
        raise ValueError("need c_q, c_p > 0")
    M = np.array([[0.0, 2.0, 0.0], [-c_q, -c_p, 1.0], [0.0, -2 * c_q, -2 * c_p]])
    s = np.sqrt(complex(c_p * c_p - 4 * c_q))
    eig = np.array([-c_p, -c_p - s, -c_p + s])
    return XdSystem(M, eig, float(-eig.real.max()))


def xd_functionals(qd, pd):
    """``(|q_d|^2, <q_d, p_d>, |p_d|^2)``, vectorized over leading axes."""
    return np.stack([np.sum(qd * qd, -1), np.sum(qd * pd, -1), np.sum(pd * pd, -1)], axis=-1)


def wrap(q, half_width=BOX_HALF_WIDTH):
    """Map coordinates into the display box ``[-L, L)^3``."""
    return (np.asarray(q) + half_width) % (2 * half_width) - half_width


# --------------------------------------------------------------------------- simulation

def figure_initial_state():
    """Figure-1 initial data, reused unmodified in R^3."""
    return FlatState(FIG1_Q, FIG1_P, FIG1_QG, FIG1_PG)


@dataclass(frozen=True)
class FlatConfig:
    params: ModelParams
    t_end: float
    u_mode: FlatControl = FlatControl.MATCH_TARGET
    dt: float = 1e-3
    record_every: int = 100
    initial: Any = field(default_factory=figure_initial_state)
    control: Any = field(default_factory=target_control)
    half_width: float = BOX_HALF_WIDTH

    @classmethod
    def for_figure(cls, figure, **overrides):
        figure = str(figure)
        if figure not in ("7", "8"):
            raise KeyError(f"figure {figure!r} is not a flat-space experiment")
        kw = dict(params=ModelParams(sigma=1.0, c_q=5.0, c_p=0.1), t_end=300.0,
                  u_mode=FlatControl.MATCH_TARGET if figure == "7" else FlatControl.ZERO)
        kw.update(overrides)
        return cls(**kw)


@dataclass
class FlatTrajectory:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q_gamma: np.ndarray
    p_gamma: np.ndarray
    half_width: float = BOX_HALF_WIDTH

    def __len__(self):
        return len(self.t)

    def state(self, k):
        return FlatState(self.q[k], self.p[k], self.q_gamma[k], self.p_gamma[k], float(self.t[k]))

    def rendezvous(self):
        d = np.linalg.norm(self.q - self.q_gamma[:, None, :], axis=-1).max(axis=1)
        v = np.linalg.norm(self.p - self.p_gamma[:, None, :], axis=-1).max(axis=1)
        return d, v

    def tracking_error(self):
        return self.q.mean(axis=1) - self.q_gamma, self.p.mean(axis=1) - self.p_gamma

    def deviations(self):
        return self.q - self.q.mean(axis=1, keepdims=True), self.p - self.p.mean(axis=1, keepdims=True)

    def xd(self):
        return xd_functionals(*self.tracking_error())

    def wrapped(self):
        """Display coordinates ``(q, q_gamma)`` folded into the periodic box."""
        return wrap(self.q, self.half_width), wrap(self.q_gamma, self.half_width)


def run_flat(config):
    from .sim import sample_control, step_grid

    s0 = config.initial
    params = config.params
    nsteps, h = step_grid(config.t_end, config.dt)
    u = sample_control(config.control, s0.t, h, nsteps)
    n = s0.n_agents
    match = FlatControl.parse(config.u_mode) is FlatControl.MATCH_TARGET
    if params.constant_sigma:
        rec, nrec, status, failed = _kernels.integrate_flat(
            s0.pack(), h, nsteps, u, n, float(params.sigma), float(params.c_q),
            float(params.c_p), float(params.psi), match, config.record_every)
        if status != _kernels.OK:
            raise NonFiniteState(f"non-finite flat state at step {failed}")
        rec = rec[:nrec]
    else:
        rec = _run_flat_numpy(s0, params, u, h, nsteps, config)
    return FlatTrajectory(
        t=s0.t + h * config.record_every * np.arange(len(rec)),
        q_gamma=rec[:, 0:3], p_gamma=rec[:, 3:6],
        q=rec[:, 6:6 + 3 * n].reshape(-1, n, 3), p=rec[:, 6 + 3 * n:].reshape(-1, n, 3),
        half_width=config.half_width)


def _run_flat_numpy(s0, params, u, h, nsteps, config):
    def f(y, uk):
        dq, dp, dqg, dpg = flat_rhs(FlatState.unpack(0.0, y), params, uk, config.u_mode)
        return np.concatenate([dqg, dpg, dq.ravel(), dp.ravel()])

    y = s0.pack()
    rec = [y.copy()]
    for step in range(nsteps):
        ua, ub, uc = u[2 * step], u[2 * step + 1], u[2 * step + 2]
        k1 = f(y, ua)
        k2 = f(y + h / 2 * k1, ub)
        k3 = f(y + h / 2 * k2, ub)
        k4 = f(y + h * k3, uc)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (step + 1) % config.record_every == 0:
            rec.append(y.copy())
    return np.array(rec)
