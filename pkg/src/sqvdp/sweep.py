"""Parameter sweeps over one or two axes with deterministic CSV output."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _backend
from .errors import ConfigError, SweepError, VdPError
from .params import PARAM_NAMES, SystemParams

TASKS = ("steady-observables", "spectrum", "wigner", "classical-fixed-points",
         "arnold-quantum", "arnold-classical")

COLUMNS = {
    "steady-observables": ("n_bar", "q_mandel", "cutoff_used", "residual"),
    "spectrum": ("n_bar", "omega_obs", "sigma_fwhm", "multi_peak", "total_power",
                 "coherent_weight", "cutoff_used", "residual"),
    "wigner": ("n_bar", "wigner_min", "wigner_norm", "phase_maxima", "cutoff_used"),
    "classical-fixed-points": ("n_fixed", "n_stable", "n_unstable"),
    "arnold-quantum": ("omega_obs", "sigma_fwhm", "cutoff_used"),
    "arnold-classical": ("omega_cl", "locked"),
}


@dataclass(frozen=True)
class Axis:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.name not in PARAM_NAMES:
            raise ConfigError(f"unknown sweep axis {self.name!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError(f"axis {self.name} range must be finite")
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(f"axis {self.name} needs count >= 2")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, int(self.count))


@dataclass(frozen=True)
class SweepSpec:
    """Grid, task and fixed parameters of a sweep.

    ``cutoff=None`` selects the Fock cutoff per point automatically.
    """

    axes: tuple
    task: str
    fixed: SystemParams = field(default_factory=SystemParams)
    cutoff: int | None = None
    decay_tol: float = 1e-6
    tau_max: float = 200.0
    classical_time: float = 400.0

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 1 <= len(self.axes) <= 2:
            raise ConfigError("a sweep has one or two axes")
        if len({a.name for a in self.axes}) != len(self.axes):
            raise ConfigError("sweep axes must be distinct")
        if self.task not in TASKS:
            raise ConfigError(f"unknown sweep task {self.task!r}; choose from {', '.join(TASKS)}")

    def points(self):
        """``(index, params)`` pairs in lexicographic index order."""
        grids = [a.values for a in self.axes]
        for idx in np.ndindex(*[g.size for g in grids]):
            change = {a.name: float(g[i]) for a, g, i in zip(self.axes, grids, idx)}
            yield idx, self.fixed.replace(**change)

    @property
    def columns(self) -> tuple:
        return COLUMNS[self.task]


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list  # dicts with axis values, task columns and "error"

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)

    def grid(self, name: str) -> np.ndarray:
        shape = [int(a.count) for a in self.spec.axes]
        return self.column(name).reshape(shape)


# ---------------------------------------------------------------- per-point tasks


def _steady(params, spec):
    from .liouvillian import assemble, residual_norm
    from .steady import mean_number, steady_state

    rho, hs = steady_state(params, spec.cutoff)
    L = assemble(params, hs)
    return rho, L, {"n_bar": mean_number(rho), "cutoff_used": hs.cutoff,
                    "residual": residual_norm(L, rho)}


def _spectrum(params, spec):
    from .dynamics import default_tau_grid
    from .observables import spectrum

    rho, L, row = _steady(params, spec)
    res = spectrum(rho, L, tau_grid=default_tau_grid(tau_max=spec.tau_max / params.gamma1),
                   decay_tol=spec.decay_tol)
    row.update(omega_obs=res.omega_obs, sigma_fwhm=res.sigma_fwhm,
               multi_peak=int(res.multi_peak), total_power=res.total_power,
               coherent_weight=res.coherent_weight)
    return row


def _task_steady(params, spec):
    from .observables import mandel_q

    rho, _, row = _steady(params, spec)
    row["q_mandel"] = mandel_q(rho)
    return row


def _task_wigner(params, spec):
    from .observables import local_maxima, phase_distribution, wigner

    rho, _, row = _steady(params, spec)
    field_ = wigner(rho, points=101, validate=False)
    row.update(wigner_min=float(field_.values.min()), wigner_norm=field_.normalization,
               phase_maxima=len(local_maxima(phase_distribution(rho))))
    return row


def _task_fixed_points(params, spec):
    from .classical import fixed_points

    fps = fixed_points(params)
    stable = sum(f.is_stable for f in fps)
    return {"n_fixed": len(fps), "n_stable": stable, "n_unstable": len(fps) - stable}


def _task_arnold_classical(params, spec):
    from .classical import PhasePoint, integrate

    tr = integrate(PhasePoint(params.r0, 0.0), params, spec.classical_time)
    if tr.converged:
        return {"omega_cl": 0.0, "locked": 1}
    return {"omega_cl": _winding_rate(tr.t, tr.phi_unwrapped), "locked": 0}


def _winding_rate(t, phi):
    """Mean frequency over whole 2pi windings in the second half.

    Sign follows the spectral axis, where a free oscillator sits at +delta.
    """
    half = int(np.searchsorted(t, t[-1] / 2.0))
    t, phi = t[half:], phi[half:]
    turns = int(abs(phi[-1] - phi[0]) // (2.0 * math.pi))
    if turns == 0:
        return float(-(phi[-1] - phi[0]) / (t[-1] - t[0]))
    sign = math.copysign(1.0, phi[-1] - phi[0])
    target = phi[0] + sign * 2.0 * math.pi * turns
    # phase is monotone over a drifting orbit's full turns; interpolate the crossing
    k = int(np.argmax(sign * (phi - target) >= 0))
    w = (target - phi[k - 1]) / (phi[k] - phi[k - 1])
    t_end = t[k - 1] + w * (t[k] - t[k - 1])
    return float(-sign * 2.0 * math.pi * turns / (t_end - t[0]))


_TASKS = {
    "steady-observables": _task_steady,
    "spectrum": _spectrum,
    "wigner": _task_wigner,
    "classical-fixed-points": _task_fixed_points,
    "arnold-quantum": _spectrum,
    "arnold-classical": _task_arnold_classical,
}


def evaluate_point(spec: SweepSpec, params: SystemParams) -> dict:
    """One grid point; numeric failures become an error code in the row."""
    try:
        row = _TASKS[spec.task](params, spec)
        row = {k: row[k] for k in spec.columns}
        row["error"] = ""
    except VdPError as exc:
        row = {k: math.nan for k in spec.columns}
        row["error"] = type(exc).__name__
    return row


def _worker(args):
    spec, params = args
    return evaluate_point(spec, params)


def worker_count(default: int | None = None) -> int:
    env = os.environ.get("VDP_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"VDP_WORKERS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("VDP_WORKERS must be at least 1")
        return n
    if default is not None:
        return default
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate every grid point; rows come back in index order.

    ``workers`` defaults to ``VDP_WORKERS`` or the available parallelism.
    """
    workers = worker_count() if workers is None else workers
    pts = list(spec.points())
    jobs = [(spec, p) for _, p in pts]
    if workers <= 1 or len(jobs) == 1:
        results = [_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_worker, jobs, chunksize=1))
    rows = []
    for (idx, params), res in zip(pts, results):
        row = {"i": idx[0], "j": idx[1] if len(idx) > 1 else 0}
        row.update({a.name: getattr(params, a.name) for a in spec.axes})
        row.update(res)
        rows.append(row)
    if all(r["error"] for r in rows):
        raise SweepError(f"all {len(rows)} sweep points failed "
                         f"(first error: {rows[0]['error']})")
    return SweepResult(spec=spec, rows=rows)


# ---------------------------------------------------------------- output


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return "%.12g" % value


def metadata_lines(meta: dict) -> list[str]:
    # shortest round-trip repr so a header can be turned back into a config
    return [f"# {k} = {v!r}" if isinstance(v, float) else f"# {k} = {fmt(v)}"
            for k, v in meta.items()]


def sweep_metadata(spec: SweepSpec) -> dict:
    meta = {"sqvdp_version": __version__, "backend": _backend.NAME, "task": spec.task}
    for n, a in enumerate(spec.axes, 1):
        meta.update({f"axis{n}": a.name, f"axis{n}_min": a.start, f"axis{n}_max": a.stop,
                     f"axis{n}_count": int(a.count)})
    for name in PARAM_NAMES:
        if name not in {a.name for a in spec.axes}:
            meta[name] = getattr(spec.fixed, name)
    meta.update(cutoff="auto" if spec.cutoff is None else int(spec.cutoff),
                decay_tol=spec.decay_tol, tau_max=spec.tau_max,
                classical_time=spec.classical_time)
    return meta


def to_csv(result: SweepResult, extra_meta: dict | None = None) -> str:
    meta = sweep_metadata(result.spec)
    meta.update(extra_meta or {})
    header = ["i", "j"] + [a.name for a in result.spec.axes] + list(result.spec.columns) + ["error"]
    lines = metadata_lines(meta) + [",".join(header)]
    for row in result.rows:
        lines.append(",".join(fmt(row[h]) for h in header))
    return "\n".join(lines) + "\n"
