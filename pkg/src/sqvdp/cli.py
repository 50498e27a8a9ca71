"""Command-line interface: ``sqvdp {steady,wigner,spectrum,classical,sweep}``.

Exit status is 0 on success, 1 on usage or configuration errors and 2 on
numerical failures.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import BACKEND, __version__, config
from .errors import ConfigError, VdPError
from .sweep import fmt

PLUMBING = ("command", "config", "out", "dump_config")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqvdp", description="Squeezing- and force-driven quantum van der Pol oscillator.")
    parser.add_argument("--version", action="version", version=f"sqvdp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in config.SPECIFIC:
        p = sub.add_parser(command, help=f"{command} computation")
        if command == "classical":
            p.add_argument("mode", nargs="?", default=argparse.SUPPRESS,
                           help="one of " + ", ".join(config.CLASSICAL_MODES))
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--dump-config", help="also write the effective configuration here")
        for opt in config.options(command):
            if opt.key == "mode":
                continue
            kw = dict(default=argparse.SUPPRESS, dest=opt.key, help=opt.help)
            if opt.parse is config._bool:
                kw.update(nargs="?", const="true")
            p.add_argument(opt.flag, **kw)
    return parser


# ---------------------------------------------------------------- output helpers


def _meta(command, cfg, extra=None):
    lines = [f"# sqvdp_version = {__version__}", f"# backend = {BACKEND}", f"# command = {command}"]
    lines += [f"# {k} = {config.format_value(v)}" for k, v in cfg.items()]
    lines += [f"# {k} = {fmt(v)}" for k, v in (extra or {}).items()]
    return lines


def _record(command, cfg, values):
    return "\n".join(_meta(command, cfg) + [f"{k} = {fmt(v)}" for k, v in values.items()]) + "\n"


def _table(command, cfg, header, rows, extra=None):
    lines = _meta(command, cfg, extra) + [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- commands


def _steady_state(cfg):
    from .liouvillian import assemble, residual_norm
    from .steady import steady_state

    params = config.system_params(cfg)
    rho, spec = steady_state(params, cfg["cutoff"])
    L = assemble(params, spec)
    return params, rho, L, residual_norm(L, rho)


def cmd_steady(cfg):
    from .observables import mandel_q
    from .steady import mean_number

    _, rho, _, resid = _steady_state(cfg)
    return _record("steady", cfg, {
        "n_bar": mean_number(rho), "q_mandel": mandel_q(rho),
        "cutoff_used": rho.shape[0], "residual": resid,
        "tail_population": rho[-1, -1].real})


def cmd_wigner(cfg):
    from .observables import default_wigner_extent, local_maxima, phase_distribution, wigner

    _, rho, _, _ = _steady_state(cfg)
    ext = cfg["extent"] if cfg["extent"] is not None else default_wigner_extent(rho)
    if cfg["points"] < 2 or ext <= 0:
        raise ConfigError("wigner needs points >= 2 and a positive extent")
    grid = np.linspace(-ext, ext, cfg["points"])
    field = wigner(rho, grid, grid)
    extra = {"normalization": field.normalization, "wigner_min": field.values.min(),
             "phase_maxima": len(local_maxima(phase_distribution(rho))),
             "cutoff_used": rho.shape[0]}
    X, Y = np.meshgrid(field.x, field.y)
    rows = zip(X.ravel(), Y.ravel(), field.values.ravel())
    return _table("wigner", cfg, ("x", "y", "W"), rows, extra)


def cmd_spectrum(cfg):
    from .dynamics import default_tau_grid
    from .observables import spectrum
    from .steady import mean_number

    params, rho, L, resid = _steady_state(cfg)
    if cfg["omega_max"] <= 0 or cfg["d_omega"] <= 0:
        raise ConfigError("omega_max and d_omega must be positive")
    tau = default_tau_grid(omega_max=max(8.0, cfg["omega_max"]), tau_max=cfg["tau_max"] / params.gamma1)
    res = spectrum(rho, L, tau_grid=tau, decay_tol=cfg["decay_tol"],
                   omega_max=cfg["omega_max"], d_omega=cfg["d_omega"])
    summary = {"n_bar": mean_number(rho), "omega_obs": res.omega_obs,
               "sigma_fwhm": res.sigma_fwhm, "multi_peak": res.multi_peak,
               "total_power": res.total_power, "coherent_weight": res.coherent_weight,
               "cutoff_used": rho.shape[0], "residual": resid}
    if cfg["curve"]:
        return _table("spectrum", cfg, ("omega", "S"), zip(res.omega, res.values), summary)
    return _record("spectrum", cfg, summary)


def cmd_classical(cfg):
    from . import classical as cl

    params = config.system_params(cfg)
    mode = cfg["mode"]
    if mode == "fixed-points":
        rows = []
        for fp in cl.fixed_points(params):
            x, y = fp.point.cartesian()
            e1, e2 = fp.jacobian_eigenvalues
            rows.append((fp.point.R, fp.point.phi, x, y, e1.real, e1.imag, e2.real, e2.imag,
                         fp.stability))
        header = ("R", "phi", "x", "y", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "stability")
        return _table("classical", cfg, header, rows, {"n_fixed": len(rows)})
    if mode == "nullclines":
        nc = cl.nullclines(params, n_r=cfg["grid"], n_phi=cfg["grid"])
        rows = []
        for kind, curves in (("dR", nc.r_curves), ("dphi", nc.phi_curves)):
            for k, c in enumerate(curves):
                xy = cl.Nullclines.to_cartesian([c])[0]
                rows += [(kind, k, R, phi, x, y) for (R, phi), (x, y) in zip(c, xy)]
        extra = {"intersections": len(nc.intersections())}
        return _table("classical", cfg, ("kind", "curve", "R", "phi", "x", "y"), rows, extra)
    if mode == "lock-phase":
        return _record("classical", cfg, {f"phi_{k}": v for k, v in cl.lock_phases(params).items()})
    if mode == "arnold":
        d = np.linspace(-cfg["delta_max"], cfg["delta_max"], cfg["count"])
        ab = cl.arnold_boundaries(d, params.gamma1, params.gamma2)
        return _table("classical", cfg, ("delta", "eta_min", "force_min"),
                      zip(ab.delta, ab.eta_min, ab.force_min))
    if mode == "pitchfork":
        return _record("classical", cfg, {"eta_c": cl.pitchfork_critical_eta(params)})
    if mode == "integrate":
        tr = cl.integrate(cl.PhasePoint(cfg["r_init"], cfg["phi_init"]), params, cfg["duration"],
                          dt_out=cfg["dt_out"])
        rows = zip(tr.t, tr.R, tr.phi, tr.R * np.cos(tr.phi), tr.R * np.sin(tr.phi))
        return _table("classical", cfg, ("t", "R", "phi", "x", "y"), rows,
                      {"converged": tr.converged})
    raise ConfigError(f"unknown classical mode {mode!r}")


def cmd_sweep(cfg):
    from .sweep import Axis, SweepSpec, run_sweep, to_csv

    axes = [Axis(cfg["axis1"], cfg["axis1_min"], cfg["axis1_max"], cfg["axis1_count"])]
    if cfg["axis2"]:
        axes.append(Axis(cfg["axis2"], cfg["axis2_min"], cfg["axis2_max"], cfg["axis2_count"]))
    spec = SweepSpec(axes=axes, task=cfg["task"], fixed=config.system_params(cfg),
                     cutoff=cfg["cutoff"], decay_tol=cfg["decay_tol"], tau_max=cfg["tau_max"],
                     classical_time=cfg["classical_time"])
    return to_csv(run_sweep(spec), {"seed": cfg["seed"]})


COMMANDS = {"steady": cmd_steady, "wigner": cmd_wigner, "spectrum": cmd_spectrum,
            "classical": cmd_classical, "sweep": cmd_sweep}


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


def run(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    args = vars(ns)
    overrides = {k: v for k, v in args.items() if k not in PLUMBING}
    file_values = config.read_file(args["config"]) if args.get("config") else {}
    cfg = config.resolve(ns.command, file_values, overrides)
    if cfg["cutoff"] is not None and cfg["cutoff"] < 2:
        raise ConfigError("cutoff must be at least 2")
    if args.get("dump_config"):
        _write(args["dump_config"], config.dump(ns.command, cfg))
    _write(args.get("out"), COMMANDS[ns.command](cfg))
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"sqvdp: usage error: {exc}", file=sys.stderr)
        return 1
    except VdPError as exc:
        print(f"sqvdp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
