"""Flat ``key = value`` configuration shared by every CLI subcommand.

Each option is both a config key and a ``--flag`` (underscores become dashes).
Precedence: built-in default, then config file, then command-line flag.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .errors import ConfigError
from .params import PARAM_NAMES, SystemParams

AUTO = "auto"


def _int_or_auto(text):
    if isinstance(text, str) and text.strip().lower() == AUTO:
        return None
    value = int(text)
    return value


def _float_or_auto(text):
    if isinstance(text, str) and text.strip().lower() == AUTO:
        return None
    return float(text)


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _str(text):
    return str(text).strip()


@dataclass(frozen=True)
class Option:
    key: str
    parse: object
    default: object
    help: str
    choices: tuple | None = None

    @property
    def flag(self) -> str:
        return "--" + self.key.replace("_", "-")


_PARAM_HELP = {
    "delta": "detuning in units of gamma1",
    "force": "harmonic drive strength F",
    "eta": "squeezing drive strength",
    "theta": "squeezing phase (wrapped into [0, 2pi))",
    "gamma1": "single-photon gain rate",
    "gamma2": "two-photon loss rate",
}
_PARAM_DEFAULTS = SystemParams().as_dict()

COMMON = tuple(Option(k, float, _PARAM_DEFAULTS[k], _PARAM_HELP[k]) for k in PARAM_NAMES) + (
    Option("cutoff", _int_or_auto, None, "Fock cutoff N, or 'auto'"),
    Option("seed", int, 0, "recorded in the output metadata; all algorithms are deterministic"),
)

CLASSICAL_MODES = ("fixed-points", "nullclines", "lock-phase", "arnold", "pitchfork", "integrate")

SPECIFIC = {
    "steady": (),
    "wigner": (
        Option("points", int, 201, "grid points per axis"),
        Option("extent", _float_or_auto, None, "half-width of the square grid, or 'auto'"),
    ),
    "spectrum": (
        Option("omega_max", float, 8.0, "largest |omega| reported"),
        Option("d_omega", float, 4e-3, "target frequency spacing"),
        Option("decay_tol", float, 1e-6, "relative decay of the connected correlation"),
        Option("tau_max", float, 200.0, "correlation horizon in units of 1/gamma1"),
        Option("curve", _bool, False, "emit the full spectrum as CSV"),
    ),
    "classical": (
        Option("mode", _str, "fixed-points", "analysis to run", CLASSICAL_MODES),
        Option("grid", int, 256, "nullcline grid per axis"),
        Option("r_init", float, 0.5, "initial amplitude for integrate"),
        Option("phi_init", float, 0.0, "initial phase for integrate"),
        Option("duration", float, 200.0, "integration time"),
        Option("dt_out", float, 0.1, "output spacing for integrate"),
        Option("delta_max", float, 2.0, "detuning range for arnold"),
        Option("count", int, 41, "samples for arnold"),
    ),
    "sweep": (
        Option("task", _str, "steady-observables", "per-point computation", None),
        Option("axis1", _str, "eta", "first swept parameter"),
        Option("axis1_min", float, 0.0, "first axis start"),
        Option("axis1_max", float, 1.0, "first axis stop"),
        Option("axis1_count", int, 5, "first axis points"),
        Option("axis2", _str, "", "second swept parameter (empty for 1-D)"),
        Option("axis2_min", float, 0.0, "second axis start"),
        Option("axis2_max", float, 1.0, "second axis stop"),
        Option("axis2_count", int, 5, "second axis points"),
        Option("decay_tol", float, 1e-6, "relative decay of the connected correlation"),
        Option("tau_max", float, 200.0, "correlation horizon in units of 1/gamma1"),
        Option("classical_time", float, 400.0, "integration time for arnold-classical"),
    ),
}


def options(command: str) -> tuple[Option, ...]:
    if command not in SPECIFIC:
        raise ConfigError(f"unknown command {command!r}")
    return COMMON + SPECIFIC[command]


def read_file(path) -> dict[str, str]:
    """Parse a flat config file; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return dict(parser["config"])


def resolve(command: str, file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Effective configuration: defaults, then file values, then overrides."""
    opts = {o.key: o for o in options(command)}
    cfg = {k: o.default for k, o in opts.items()}
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if key not in opts:
                raise ConfigError(f"unknown config key {key!r} for command {command!r}")
            opt = opts[key]
            try:
                value = opt.parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from None
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"{key!r} must be finite")
            if opt.choices and value not in opt.choices:
                raise ConfigError(f"{key!r} must be one of {', '.join(opt.choices)}")
            cfg[key] = value
    return cfg


def format_value(value) -> str:
    """Exact, re-parseable text for a config value."""
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump(command: str, cfg: dict) -> str:
    lines = [f"# effective configuration for: sqvdp {command}"]
    lines += [f"{o.key} = {format_value(cfg[o.key])}" for o in options(command)]
    return "\n".join(lines) + "\n"


def system_params(cfg: dict) -> SystemParams:
    return SystemParams(**{k: cfg[k] for k in PARAM_NAMES})
