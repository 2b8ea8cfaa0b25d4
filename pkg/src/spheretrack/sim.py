"""Fixed-step RK4 integration, trajectories, diagnostics and parameter sweeps."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from . import _kernels
from .analysis import aux_functionals, energy, rendezvous_metrics, x_inf
from .dynamics import (ControlMode, ModelParams, PeriodicControl, SystemState,
                       check_thm3_velocity_hypothesis, system_rhs)
from .errors import AntipodalSingularity, ConstraintBlowup, NonFiniteState, AntipodalToTarget
from .frame import FrameState, StructuralState, orthonormalize, to_structural
from .geom import skew
from .scenarios import figure_params, figure_t_end, initial_state, target_control

BLOWUP_TOL = 1e-2


def rk4_step(rhs, y, dt, t=0.0, args=()):
    """One classical Runge-Kutta step of ``dy/dt = rhs(t, y, *args)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    y = np.asarray(y, dtype=float)
    k1 = rhs(t, y, *args)
    k2 = rhs(t + dt / 2, y + dt / 2 * k1, *args)
    k3 = rhs(t + dt / 2, y + dt / 2 * k2, *args)
    k4 = rhs(t + dt, y + dt * k3, *args)
    out = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"non-finite state after step at t={t + dt}")
    return out


def integrate(rhs, y0, t_end, dt, t0=0.0, args=(), record_every=None):
    """Integrate to ``t_end`` with steps of at most ``dt``.

    The step is shrunk uniformly so that the grid lands on ``t_end``.  Returns
    ``(t, y)`` at ``t_end``, or the recorded arrays when ``record_every`` is set.
    """
    nsteps, h = step_grid(t_end - t0, dt)
    y = np.asarray(y0, dtype=float)
    ts, ys = [t0], [y]
    for k in range(nsteps):
        y = rk4_step(rhs, y, h, t0 + k * h, args)
        if record_every and (k + 1) % record_every == 0:
            ts.append(t0 + (k + 1) * h)
            ys.append(y)
    if record_every:
        return np.array(ts), np.array(ys)
    return t0 + nsteps * h, y


def step_grid(duration, dt):
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration < 0:
        raise ValueError("negative duration")
    nsteps = max(0, math.ceil(duration / dt - 1e-9))
    return nsteps, (duration / nsteps if nsteps else dt)


# --------------------------------------------------------------------------- config

@dataclass(frozen=True)
class FigureInitial:
    figure: str


@dataclass(frozen=True)
class RandomInitial:
    n: int


@dataclass(frozen=True)
class ExplicitInitial:
    state: SystemState


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    t_end: float
    dt: float = 1e-3
    record_every: int = 100
    renormalize: bool = False
    seed: int = 0
    initial: Any = FigureInitial("1")
    control: Any = field(default_factory=target_control)
    with_frame: bool = False
    blowup_tol: float = BLOWUP_TOL
    raise_on_blowup: bool = True

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("need dt > 0 and t_end >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def with_(self, **changes):
        return replace(self, **changes)

    @classmethod
    def for_figure(cls, figure, **overrides):
        kw = dict(params=figure_params(figure), t_end=figure_t_end(figure),
                  initial=FigureInitial(str(figure)))
        kw.update(overrides)
        return cls(**kw)


def random_initial_state(n, rng):
    """Uniform positions on the sphere; velocities from [-1,1]^3, tangent-projected."""
    from .geom import random_unit_vectors

    pts = random_unit_vectors(rng, n + 1)
    vel = rng.uniform(-1.0, 1.0, size=(n + 1, 3))
    vel -= np.sum(vel * pts, axis=1, keepdims=True) * pts
    return SystemState(0.0, pts[1:], vel[1:], pts[0], vel[0])


def build_initial_state(config):
    init = config.initial
    if isinstance(init, SystemState):
        init = ExplicitInitial(init)
    if isinstance(init, FigureInitial):
        return initial_state(init.figure)
    if isinstance(init, RandomInitial):
        return random_initial_state(init.n, np.random.default_rng(config.seed))
    if isinstance(init, ExplicitInitial):
        return init.state.copy().check_admissible()
    raise TypeError(f"unsupported initial condition {init!r}")


# --------------------------------------------------------------------------- results

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    d_max: float
    v_max: float
    e_k: float
    e_c: float
    norm_drift: float
    orth_drift: float
    X6: np.ndarray
    X_inf: float

    FIELDS = ("t", "d_max", "v_max", "e_k", "e_c", "norm_drift", "orth_drift",
              "Xg1", "Xg2", "Xg3", "X1", "X2", "X3", "X_inf")

    def as_row(self):
        return [self.t, self.d_max, self.v_max, self.e_k, self.e_c, self.norm_drift,
                self.orth_drift, *self.X6, self.X_inf]


@dataclass
class Trajectory:
    """Sampled solution of the tracking system.

    Arrays are indexed by sample first: ``q`` is ``(K, N, 3)``, ``q_gamma`` is
    ``(K, 3)`` and ``S`` (frame matrices, when integrated) is ``(K, 3, 3)``.
    """

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    q_gamma: np.ndarray
    p_gamma: np.ndarray
    params: ModelParams
    control: Any
    S: Optional[np.ndarray] = None
    status: str = "ok"

    def __len__(self):
        return len(self.t)

    @property
    def n_agents(self):
        return self.q.shape[1]

    def state(self, k):
        return SystemState(float(self.t[k]), self.q[k], self.p[k], self.q_gamma[k], self.p_gamma[k])

    def states(self):
        return [self.state(k) for k in range(len(self))]

    def structural(self, k):
        """Structural state at sample ``k`` (uses the integrated frame when present)."""
        frame = FrameState(self.S[k] if self.S is not None else np.eye(3), float(self.t[k]))
        return to_structural(frame, self.state(k))

    def angular_velocity(self):
        return np.cross(self.q_gamma, self.p_gamma)

    # ---- vectorized diagnostics
    def rendezvous(self):
        return rendezvous_metrics(self)

    def norm_drift(self):
        return np.abs(np.linalg.norm(self.q, axis=-1) - 1.0).max(axis=1)

    def orth_drift(self):
        return np.abs(np.sum(self.q * self.p, axis=-1)).max(axis=1)

    def energies(self):
        """``(e_k, e_c)`` per sample, computed from ambient data."""
        if not self.params.constant_sigma:
            nan = np.full(len(self), np.nan)
            return nan, nan
        w = self.angular_velocity()
        v = self.p - np.cross(w[:, None, :], self.q)
        n = self.n_agents
        e_k = np.sum(v * v, axis=(1, 2)) / (2 * n)
        d = self.q[:, :, None, :] - self.q[:, None, :, :]
        pair = np.sum(d * d, axis=(1, 2, 3))
        tg = np.sum((self.q - self.q_gamma[:, None, :]) ** 2, axis=(1, 2))
        e_c = self.params.sigma / (4 * n * n) * pair + self.params.c_q / (2 * n) * tg
        return e_k, e_c

    def aux_series(self):
        """``X`` (K, 6) of the quadratic functionals at every sample."""
        if not self.params.constant_sigma:
            return np.full((len(self), 6), np.nan)
        return np.array([aux_functionals(self.structural(k), self.params)[0]
                         for k in range(len(self))])

    def x_inf_series(self):
        if not self.params.constant_sigma:
            return np.full(len(self), np.nan)
        out = np.empty(len(self))
        for k in range(len(self)):
            try:
                out[k] = x_inf(self.structural(k), self.params)
            except AntipodalToTarget:
                out[k] = np.inf
        return out

    def diagnostics(self):
        d, v = self.rendezvous()
        e_k, e_c = self.energies()
        nd, od = self.norm_drift(), self.orth_drift()
        X6 = self.aux_series()
        xi = self.x_inf_series()
        return [DiagnosticsRecord(float(self.t[k]), float(d[k]), float(v[k]), float(e_k[k]),
                                  float(e_c[k]), float(nd[k]), float(od[k]), X6[k], float(xi[k]))
                for k in range(len(self))]

    def __iter__(self):
        return iter(zip(self.states(), self.diagnostics()))

    def value_at(self, series, time):
        """Sample of ``series`` at the recorded time closest to ``time``."""
        k = int(np.argmin(np.abs(self.t - time)))
        return series[k]


def sample_control(control, t0, h, nsteps):
    """Raw target control on the RK4 half-step grid, shape ``(2*nsteps + 1, 3)``."""
    times = t0 + 0.5 * h * np.arange(2 * nsteps + 1)
    try:
        u = np.asarray(control(times), dtype=float)
        if u.shape == (len(times), 3):
            return u
    except (TypeError, ValueError):
        pass
    return np.array([np.asarray(control(float(t)), dtype=float) for t in times])


def run_simulation(config):
    """Integrate the tracking system described by ``config``.

    Constant-sigma models go through the compiled RK4 loop; a ``sigma_fn``
    model falls back to the pure-numpy right-hand side.
    """
    state0 = build_initial_state(config)
    params = config.params
    if params.control is ControlMode.ZERO:
        check_thm3_velocity_hypothesis(state0)
    nsteps, h = step_grid(config.t_end, config.dt)
    n = state0.n_agents
    y0 = state0.pack()
    if config.with_frame:
        y0 = np.concatenate([y0, np.eye(3).ravel()])

    if params.constant_sigma:
        u = sample_control(config.control, state0.t, h, nsteps)
        rec, nrec, status, failed = _kernels.integrate_ambient(
            y0, h, nsteps, u, n, float(params.sigma), float(params.c_q), float(params.c_p),
            float(params.psi), float(params.k0), params.control is ControlMode.FULL_INFO,
            config.with_frame, config.record_every, config.renormalize, config.blowup_tol)
        rec = rec[:nrec]
    else:
        rec, status, failed = _integrate_numpy(y0, h, nsteps, config, n)
        nrec = len(rec)

    times = state0.t + h * config.record_every * np.arange(nrec)
    status_name = {_kernels.OK: "ok", _kernels.NON_FINITE: "non_finite",
                   _kernels.BLOWUP: "blowup", _kernels.ANTIPODAL: "antipodal"}[status]
    if status == _kernels.NON_FINITE:
        raise NonFiniteState(f"non-finite state at step {failed} (t = {failed * h:.6g})")
    if status == _kernels.ANTIPODAL:
        raise AntipodalSingularity(f"antipodal agents in flocking term at t = {failed * h:.6g}")
    if status == _kernels.BLOWUP and config.raise_on_blowup:
        raise ConstraintBlowup(
            f"agents left the sphere by more than {config.blowup_tol} at t = {(failed + 1) * h:.6g}",
            t=(failed + 1) * h)

    traj = Trajectory(
        t=times,
        q_gamma=rec[:, 0:3], p_gamma=rec[:, 3:6],
        q=rec[:, 6:6 + 3 * n].reshape(-1, n, 3),
        p=rec[:, 6 + 3 * n:6 + 6 * n].reshape(-1, n, 3),
        S=rec[:, 6 + 6 * n:].reshape(-1, 3, 3) if config.with_frame else None,
        params=params, control=config.control, status=status_name)
    return traj


def _integrate_numpy(y0, h, nsteps, config, n):
    params, control = config.params, config.control
    with_frame = config.with_frame

    def rhs(t, y):
        core = system_rhs(t, y[:6 + 6 * n], params, control)
        if not with_frame:
            return core
        w = np.cross(y[0:3], y[3:6])
        return np.concatenate([core, (skew(w) @ y[6 + 6 * n:].reshape(3, 3)).ravel()])

    y = y0.copy()
    rec = [y.copy()]
    for step in range(nsteps):
        y = rk4_step(rhs, y, h, step * h)
        if with_frame:
            y[6 + 6 * n:] = orthonormalize(y[6 + 6 * n:].reshape(3, 3)).ravel()
        if config.renormalize:
            s = SystemState.unpack(0.0, y[:6 + 6 * n]).projected()
            y[:6 + 6 * n] = s.pack()
        drift = np.abs(np.linalg.norm(y[6:6 + 3 * n].reshape(n, 3), axis=1) - 1).max()
        if (step + 1) % config.record_every == 0:
            rec.append(y.copy())
        if drift > config.blowup_tol:
            return np.array(rec), _kernels.BLOWUP, step
    return np.array(rec), _kernels.OK, nsteps


# --------------------------------------------------------------------------- structural runs

@dataclass
class StructuralTrajectory:
    t: np.ndarray
    q_gamma: np.ndarray
    p_gamma: np.ndarray
    S: np.ndarray
    x: np.ndarray
    v: np.ndarray
    x_gamma: np.ndarray

    def structural(self, k):
        return StructuralState(self.x[k], self.v[k], self.x_gamma)

    def ambient_positions(self):
        """``q_i = S x_i`` at every sample, shape ``(K, N, 3)``."""
        return np.einsum("kab,knb->kna", self.S, self.x)


def run_structural(config):
    """Integrate target + frame + structural system from the same initial data."""
    state0 = build_initial_state(config)
    params = config.params
    if not params.constant_sigma:
        raise NotImplementedError("structural runs support constant sigma only")
    n = state0.n_agents
    frame0 = FrameState.identity(state0.t)
    s0 = to_structural(frame0, state0)
    y0 = np.concatenate([state0.q_gamma, state0.p_gamma, np.eye(3).ravel(),
                         s0.x.ravel(), s0.v.ravel()])
    nsteps, h = step_grid(config.t_end, config.dt)
    u = sample_control(config.control, state0.t, h, nsteps)
    rec, nrec, status, failed = _kernels.integrate_structural(
        y0, h, nsteps, u, n, float(params.sigma), float(params.c_q), float(params.c_p),
        params.control is ControlMode.FULL_INFO, s0.x_gamma.copy(), config.record_every)
    if status != _kernels.OK:
        raise NonFiniteState(f"non-finite structural state at step {failed}")
    rec = rec[:nrec]
    return StructuralTrajectory(
        t=state0.t + h * config.record_every * np.arange(nrec),
        q_gamma=rec[:, 0:3], p_gamma=rec[:, 3:6], S=rec[:, 6:15].reshape(-1, 3, 3),
        x=rec[:, 15:15 + 3 * n].reshape(-1, n, 3), v=rec[:, 15 + 3 * n:].reshape(-1, n, 3),
        x_gamma=s0.x_gamma)


# --------------------------------------------------------------------------- sweeps

_PARAM_FIELDS = ("sigma", "c_q", "c_p", "psi", "k0")


def _apply(config, name, value):
    if name in _PARAM_FIELDS:
        return config.with_(params=config.params.with_(**{name: float(value)}))
    if name == "control":
        return config.with_(params=config.params.with_(control=value))
    if name == "a":
        return config.with_(control=PeriodicControl(float(value)))
    if name in ("dt", "t_end"):
        return config.with_(**{name: float(value)})
    if name == "seed":
        return config.with_(seed=int(value))
    raise KeyError(f"cannot sweep over {name!r}")


@dataclass(frozen=True)
class SweepRow:
    value: Any
    d_max: float
    v_max: float
    t_probe: float


def run_sweep(base, parameter, values, probe_time=None, max_workers=None):
    """One independent run per value; rows come back in input order.

    ``d_max`` is read at the recorded sample nearest ``probe_time``
    (default: the end of the run).
    """
    values = list(values)
    if not values:
        raise ValueError("values must be nonempty")
    probe = base.t_end if probe_time is None else float(probe_time)

    def one(value):
        cfg = _apply(base, parameter, value)
        if probe < cfg.t_end:
            cfg = cfg.with_(t_end=probe)
        traj = run_simulation(cfg)
        d, v = traj.rendezvous()
        k = int(np.argmin(np.abs(traj.t - probe)))
        return SweepRow(value, float(d[k]), float(v[k]), float(traj.t[k]))

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, values))
