"""Command-line front end: ``spheretrack <simulate|sweep|spectra|validate|decompose>``.

Configuration is flat ``key = value`` text with ``#`` comments.  Precedence,
lowest first: figure preset, ``--config`` file, ``--set`` overrides, then the
dedicated flags (``--dt``, ``--seed``, ``--flocking``).
"""

import argparse
import csv
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import fit_exponential_rate, spectrum, thm1_condition
from .dynamics import ControlMode, PeriodicControl
from .errors import ConfigError, SphereTrackError
from .flatspace import FlatConfig, FlatControl, run_flat, xd_system
from .frame import FrameState, to_structural
from .scenarios import FIG4B_CP_VALUES, FIG4B_PROBE_TIME, FIGURES, figure_params, figure_t_end
from .sim import (DiagnosticsRecord, FigureInitial, RandomInitial, SimConfig, run_simulation,
                  run_structural, run_sweep)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

FLAT_FIGURES = ("7", "8")


def _float(v):
    return float(v)


def _int(v):
    return int(v)


def _bool(v):
    key = str(v).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _floats(v):
    return [float(x) for x in str(v).replace(",", " ").split()]


def _initial(v):
    kind, _, arg = str(v).partition(":")
    kind = kind.strip().lower()
    if kind == "figure":
        return FigureInitial(arg.strip() or "1")
    if kind == "random":
        return RandomInitial(int(arg))
    raise ValueError("initial must be 'figure:<n>' or 'random:<N>'")


# key -> parser; every SimConfig / ModelParams field plus run-level options
KEYS = {
    "figure": str, "sigma": _float, "c_q": _float, "c_p": _float, "psi": _float, "k0": _float,
    "control": ControlMode.parse, "a": _float, "dt": _float, "t_end": _float,
    "record_every": _int, "renormalize": _bool, "seed": _int, "initial": _initial,
    "with_frame": _bool, "blowup_tol": _float, "raise_on_blowup": _bool,
    "flat": _bool, "u_mode": FlatControl.parse, "half_width": _float,
    "parameter": str, "values": _floats, "probe_time": _float,
}


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines into typed values; errors carry line numbers."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: expected key = value, got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = _convert(key, value, lineno, source)
    return out


def _convert(key, value, lineno=None, source="--set"):
    if key not in KEYS:
        raise ConfigError(f"{source}: unknown key {key!r}", lineno)
    try:
        return KEYS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: bad value for {key}: {exc}", lineno) from None


def collect_options(args):
    opts = {}
    if args.figure is not None:
        opts["figure"] = str(args.figure).lower()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        opts.update(parse_config_text(text, args.config))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        opts[key] = _convert(key, value)
    if args.dt is not None:
        opts["dt"] = args.dt
    if args.seed is not None:
        opts["seed"] = args.seed
    if args.flocking:
        key, _, value = args.flocking.partition("=")
        if key.strip() != "psi":
            raise ConfigError("--flocking expects psi=<x>")
        opts["psi"] = _convert("psi", value)
    if args.flat or opts.get("figure") in FLAT_FIGURES:
        opts["flat"] = True
    return opts


_PARAM_KEYS = ("sigma", "c_q", "c_p", "psi", "k0", "control")
_SIM_KEYS = ("dt", "t_end", "record_every", "renormalize", "seed", "initial", "with_frame",
             "blowup_tol", "raise_on_blowup")


def build_sim_config(opts):
    fig = opts.get("figure", "1")
    if fig not in FIGURES and fig not in ("2", "4", "4a"):
        raise ConfigError(f"unknown figure {fig!r}")
    try:
        params = figure_params(fig)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    params = params.with_(**{k: opts[k] for k in _PARAM_KEYS if k in opts})
    kw = {k: opts[k] for k in _SIM_KEYS if k in opts}
    kw.setdefault("t_end", figure_t_end(fig))
    kw.setdefault("initial", FigureInitial(fig))
    if "a" in opts:
        kw["control"] = PeriodicControl(opts["a"])
    try:
        return SimConfig(params=params, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def build_flat_config(opts):
    fig = opts.get("figure", "7")
    base = FlatConfig.for_figure(fig if fig in FLAT_FIGURES else "7")
    params = base.params.with_(**{k: opts[k] for k in _PARAM_KEYS if k in opts and k != "control"})
    kw = {k: opts[k] for k in ("dt", "t_end", "record_every", "u_mode", "half_width") if k in opts}
    if "control" in opts and "u_mode" not in opts:
        kw["u_mode"] = (FlatControl.MATCH_TARGET if opts["control"] is ControlMode.FULL_INFO
                        else FlatControl.ZERO)
    if "a" in opts:
        kw["control"] = PeriodicControl(opts["a"])
    try:
        return replace(base, params=params, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------- output

def _fmt(x):
    return "%.17g" % x


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def write_summary(path, items):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in items:
            if isinstance(value, (float, np.floating)):
                value = _fmt(value)
            fh.write(f"{key}={value}\n")


def trajectory_rows(t, q, p, q_gamma, p_gamma):
    """Rows ``t, agent_id, qx, qy, qz, px, py, pz`` with the target as agent 0."""
    for k in range(len(t)):
        tk = float(t[k])
        yield [tk, 0, *map(float, q_gamma[k]), *map(float, p_gamma[k])]
        for i in range(q.shape[1]):
            yield [tk, i + 1, *map(float, q[k, i]), *map(float, p[k, i])]


TRAJECTORY_HEADER = ["t", "agent_id", "qx", "qy", "qz", "px", "py", "pz"]


def _out_dir(args):
    path = args.out or "."
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from None
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path!r} is not writable")
    return path


# --------------------------------------------------------------------------- commands

def cmd_simulate(args, out=sys.stdout):
    opts = collect_options(args)
    outdir = _out_dir(args)
    if opts.get("flat"):
        return _simulate_flat(build_flat_config(opts), outdir, out)
    cfg = build_sim_config(opts)
    traj = run_simulation(cfg.with_(raise_on_blowup=False) if opts.get("figure") == "9" else cfg)
    write_csv(os.path.join(outdir, "trajectory.csv"), TRAJECTORY_HEADER,
              trajectory_rows(traj.t, traj.q, traj.p, traj.q_gamma, traj.p_gamma))
    write_csv(os.path.join(outdir, "diagnostics.csv"), DiagnosticsRecord.FIELDS,
              (rec.as_row() for rec in traj.diagnostics()))
    d, v = traj.rendezvous()
    items = [("model", "sphere"), ("status", traj.status), ("n_agents", traj.n_agents),
             ("t_end", float(traj.t[-1])), ("d_max_final", float(d[-1])),
             ("v_max_final", float(v[-1]))]
    try:
        rate, _ = fit_exponential_rate(traj.t, d, window=(40.0, float(traj.t[-1])))
        items.append(("envelope_fit_rate", rate))
    except ValueError:
        items.append(("envelope_fit_rate", "nan"))
    if cfg.params.constant_sigma and cfg.params.sigma > 0:
        s0 = to_structural(FrameState.identity(), traj.state(0))
        items.append(("thm1_condition", thm1_condition(s0, cfg.params).value))
        if cfg.params.c_q > 0 and cfg.params.c_p > 0:
            items.append(("mu", spectrum(cfg.params).mu))
    write_summary(os.path.join(outdir, "summary.txt"), items)
    for key, value in items:
        print(f"{key}={_fmt(value) if isinstance(value, float) else value}", file=out)
    return EXIT_OK


def _simulate_flat(cfg, outdir, out):
    tr = run_flat(cfg)
    qw, qgw = tr.wrapped()
    write_csv(os.path.join(outdir, "trajectory.csv"), TRAJECTORY_HEADER,
              trajectory_rows(tr.t, tr.q, tr.p, tr.q_gamma, tr.p_gamma))
    write_csv(os.path.join(outdir, "trajectory_wrapped.csv"), TRAJECTORY_HEADER,
              trajectory_rows(tr.t, qw, tr.p, qgw, tr.p_gamma))
    d, v = tr.rendezvous()
    X = tr.xd()
    write_csv(os.path.join(outdir, "diagnostics.csv"), ["t", "d_max", "v_max", "Xd1", "Xd2", "Xd3"],
              ([float(tr.t[k]), float(d[k]), float(v[k]), *map(float, X[k])] for k in range(len(tr))))
    items = [("model", "flat"), ("u_mode", cfg.u_mode.value), ("t_end", float(tr.t[-1])),
             ("d_max_final", float(d[-1])), ("v_max_final", float(v[-1])),
             ("xd_norm_final", float(np.linalg.norm(X[-1])))]
    if cfg.params.c_q > 0 and cfg.params.c_p > 0:
        items.append(("xd_bound", xd_system(cfg.params.c_q, cfg.params.c_p).bound(
            getattr(cfg.control, "bound", float("nan")))))
    write_summary(os.path.join(outdir, "summary.txt"), items)
    for key, value in items:
        print(f"{key}={_fmt(value) if isinstance(value, float) else value}", file=out)
    return EXIT_OK


def cmd_sweep(args, out=sys.stdout):
    opts = collect_options(args)
    outdir = _out_dir(args)
    fig = opts.get("figure", "1")
    if opts.get("flat"):
        parameter = opts.get("parameter", "c_p")
        base = build_flat_config(opts)
        values = opts.get("values", [getattr(base.params, parameter)])
        rows = []
        for value in values:
            tr = run_flat(replace(base, params=base.params.with_(**{parameter: value})))
            d, v = tr.rendezvous()
            rows.append([value, float(d[-1]), float(v[-1]), float(tr.t[-1])])
    else:
        if args.flocking and "parameter" not in opts:
            parameter = "psi"
            values = opts.get("values", [0.0, opts["psi"]])
        elif fig == "4b" and "parameter" not in opts:
            parameter, values = "c_p", opts.get("values", list(FIG4B_CP_VALUES))
            opts.setdefault("probe_time", FIG4B_PROBE_TIME)
        else:
            parameter = opts.get("parameter", "c_p")
            values = opts.get("values")
            if not values:
                raise ConfigError("sweep needs values (e.g. --set values=1,2,4)")
        base = build_sim_config(opts)
        if fig == "9":
            base = base.with_(raise_on_blowup=False)
        try:
            table = run_sweep(base, parameter, values, opts.get("probe_time"))
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        rows = [[float(r.value), r.d_max, r.v_max, r.t_probe] for r in table]
    write_csv(os.path.join(outdir, "sweep.csv"), [parameter, "d_max", "v_max", "t_probe"], rows)
    for row in rows:
        print(f"{parameter}={_fmt(row[0])} d_max={_fmt(row[1])} t={_fmt(row[3])}", file=out)
    return EXIT_OK


def cmd_spectra(args, out=sys.stdout):
    opts = collect_options(args)
    cfg = build_sim_config({**opts, "flat": False})
    try:
        s = spectrum(cfg.params)
    except SphereTrackError as exc:
        raise ConfigError(str(exc)) from None
    items = [("sigma", cfg.params.sigma), ("c_q", cfg.params.c_q), ("c_p", cfg.params.c_p)]
    items += [(f"eig_M_{k}", _complex(z)) for k, z in enumerate(s.eig_M)]
    items += [(f"eig_Minf_{k}", _complex(z)) for k, z in enumerate(s.eig_Minf)]
    items += [("mu", s.mu), ("mu_inf", s.mu_inf), ("D_thm3", s.D_thm3),
              ("D_thm3_literal_branch", s.D_thm3_literal_branch),
              ("mu_numeric", s.mu_numeric), ("mu_inf_numeric", s.mu_inf_numeric)]
    if args.out:
        write_summary(os.path.join(_out_dir(args), "spectra.txt"), items)
    for key, value in items:
        print(f"{key}={_fmt(value) if isinstance(value, float) else value}", file=out)
    return EXIT_OK


def _complex(z):
    return f"{_fmt(z.real)}{'+' if z.imag >= 0 else '-'}{_fmt(abs(z.imag))}j"


def cmd_validate(args, out=sys.stdout):
    from .validation import run_suites

    try:
        rows = run_suites(args.suite)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    lines = [r.line() for r in rows]
    if args.out:
        with open(os.path.join(_out_dir(args), "validation.txt"), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line, file=out)
    failed = sum(not r.passed for r in rows)
    print(f"summary=passed:{len(rows) - failed} failed:{failed}", file=out)
    return EXIT_VALIDATION if failed else EXIT_OK


def cmd_decompose(args, out=sys.stdout):
    opts = collect_options(args)
    outdir = _out_dir(args)
    opts.setdefault("t_end", 50.0)
    cfg = build_sim_config({**opts, "flat": False})
    amb = run_simulation(cfg)
    st = run_structural(cfg)
    err = np.linalg.norm(st.ambient_positions() - amb.q, axis=-1).max(axis=1)
    orth = np.abs(np.einsum("kab,kac->kbc", st.S, st.S) - np.eye(3)).max(axis=(1, 2))
    write_csv(os.path.join(outdir, "decompose.csv"), ["t", "max_q_minus_Sx", "frame_orth_drift"],
              ([float(st.t[k]), float(err[k]), float(orth[k])] for k in range(len(st.t))))
    items = [("t_end", float(st.t[-1])), ("max_q_minus_Sx", float(err.max())),
             ("frame_orth_drift", float(orth.max()))]
    write_summary(os.path.join(outdir, "summary.txt"), items)
    for key, value in items:
        print(f"{key}={_fmt(value)}", file=out)
    return EXIT_OK


# --------------------------------------------------------------------------- entry point

def build_parser():
    parser = argparse.ArgumentParser(prog="spheretrack",
                                     description="Target tracking on the unit sphere.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--figure", choices=["1", "2", "3", "4", "4a", "4b", "5", "6", "7", "8", "9"])
        p.add_argument("--config", help="key = value file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE")
        p.add_argument("--out", help="output directory (default: current directory)")
        p.add_argument("--seed", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--flat", action="store_true", help="use the R^3 comparison model")
        p.add_argument("--flocking", metavar="psi=X")

    for name, func, help_ in (("simulate", cmd_simulate, "run one experiment"),
                              ("sweep", cmd_sweep, "run a parameter sweep"),
                              ("spectra", cmd_spectra, "eigenvalues of the linear systems"),
                              ("decompose", cmd_decompose, "ambient vs frame+structural run")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.set_defaults(func=func)
    p = sub.add_parser("validate", help="run the self-check suites")
    p.add_argument("--suite", action="append", help="suite name (repeatable; default all)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SphereTrackError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
