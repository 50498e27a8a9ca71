"""Master-equation time evolution and two-time correlations.

One adaptive Dormand-Prince 5(4) integrator (see ``_backend``) serves both
``evolve`` and the quantum-regression correlation, so it works on general
complex matrices, not just density matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DimensionError, NoConvergenceError, PreconditionError, StiffnessError
from .fock import annihilation
from .liouvillian import Liouvillian, residual_norm, trace_row, unvec, vec
from .steady import RESIDUAL_TOL


@dataclass(frozen=True)
class Controls:
    """Step-size control for the integrator.

    ``h0=None`` picks ``1 / ||L||_1`` (inside the explicit stability region).
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    h0: float | None = None
    hmin: float = 1e-12
    max_steps: int = 50_000_000


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), N, N)
    n_steps: int


@dataclass(frozen=True)
class Correlation:
    """``g(tau) = <b^dag(tau) b(0)>`` on a uniform grid.

    ``coherent`` is the stationary limit ``|<b>|^2``; ``derivatives[k]`` is the
    ``k``-th derivative at ``tau = 0`` of the connected part ``g - coherent``.
    """

    tau: np.ndarray
    g: np.ndarray
    coherent: complex
    derivatives: np.ndarray
    decayed: bool
    n_steps: int

    @property
    def dt(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def connected(self) -> np.ndarray:
        return self.g - self.coherent

    @property
    def n_bar(self) -> float:
        return float(self.g[0].real)


def _csr(L: Liouvillian):
    A = L.matrix.tocsr()
    A.sort_indices()
    return A


def _h0(L: Liouvillian, controls: Controls, dt: float) -> float:
    if controls.h0 is not None:
        return controls.h0
    norm = float(abs(L.matrix).sum(axis=0).max())
    return min(dt, 1.0 / max(norm, 1e-12))


def propagate(L: Liouvillian, v0, times, obs=None, *, controls: Controls | None = None,
              stop_tol=0.0, stop_ref=0.0, stop_window=0, store_states=False, kernels=None):
    """Low-level driver around the backend integrator (vectorised states)."""
    controls = controls or Controls()
    kernels = kernels or _backend.kernels
    A = _csr(L)
    times = np.ascontiguousarray(times, dtype=float)
    if obs is None:
        obs = np.zeros((0, L.dim), dtype=complex)
    obs = np.ascontiguousarray(np.atleast_2d(obs), dtype=complex)
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0
    out = kernels.dopri_linear(
        A.indptr.astype(np.intc), A.indices.astype(np.intc), A.data.astype(complex),
        np.ascontiguousarray(v0, dtype=complex), times, obs,
        controls.atol, controls.rtol, _h0(L, controls, dt), controls.hmin,
        int(controls.max_steps), float(stop_tol), complex(stop_ref), int(stop_window),
        bool(store_states))
    values, states, done, nsteps, nrej, status = out
    if status == 2:
        raise StiffnessError(f"step size fell below {controls.hmin:g} at t={times[done - 1]:.6g}")
    if status == 3:
        raise NoConvergenceError(f"step budget {controls.max_steps} exhausted")
    return values[:, :done], states[:done], times[:done], nsteps


def evolve(rho0, L: Liouvillian, duration: float, controls: Controls | None = None,
           samples: int | None = None):
    """Evolve ``rho0`` for ``duration`` (units of ``1/gamma1``).

    Returns the final matrix, or a :class:`Trajectory` sampled at ``samples``
    equally spaced times when given. ``rho0`` may be any complex matrix.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (L.n, L.n):
        raise DimensionError(f"state of shape {rho0.shape} does not match cutoff {L.n}")
    if duration < 0:
        raise PreconditionError("duration must be non-negative")
    if duration == 0:
        if samples:
            return Trajectory(np.zeros(1), rho0[None].copy(), 0)
        return rho0.copy()
    times = np.linspace(0.0, duration, samples if samples else 2)
    _, states, times, nsteps = propagate(L, vec(rho0), times, controls=controls,
                                         store_states=True)
    mats = np.stack([unvec(s, L.n) for s in states])
    if samples:
        return Trajectory(times, mats, nsteps)
    return mats[-1]


def default_tau_grid(omega_max: float = 8.0, oversample: float = 4.0,
                     tau_max: float = 200.0) -> np.ndarray:
    """Uniform grid resolving ``|omega| <= omega_max`` with the given oversampling."""
    dt = math.pi / (oversample * omega_max)
    return dt * np.arange(int(math.floor(tau_max / dt + 1e-9)) + 1)


def correlation_bdag_b(rho_ss, L: Liouvillian, tau_grid=None, *, decay_tol: float = 1e-6,
                       stop_span: float = 2.0, n_derivatives: int = 9,
                       controls: Controls | None = None, residual_tol: float = RESIDUAL_TOL,
                       kernels=None) -> Correlation:
    """Stationary correlation by the quantum regression theorem.

    ``V(0) = b rho_ss`` is evolved with ``L`` and ``g(tau) = Tr[b^dag V(tau)]``
    recorded on ``tau_grid`` (default :func:`default_tau_grid` with
    ``tau_max = 200 / gamma1``). Integration stops once
    ``|g - |<b>|^2| <= decay_tol * |g(0)|`` has held over ``stop_span``.
    """
    rho_ss = np.asarray(rho_ss, dtype=complex)
    if rho_ss.shape != (L.n, L.n):
        raise DimensionError(f"state of shape {rho_ss.shape} does not match cutoff {L.n}")
    resid = residual_norm(L, rho_ss)
    if resid > residual_tol:
        raise PreconditionError(f"rho_ss is not stationary (residual {resid:.3g})")
    if tau_grid is None:
        g1 = L.params.gamma1 if L.params is not None else 1.0
        tau_grid = default_tau_grid(tau_max=200.0 / g1)
    tau_grid = np.asarray(tau_grid, dtype=float)
    dt = tau_grid[1] - tau_grid[0]
    if tau_grid[0] != 0 or np.any(np.abs(np.diff(tau_grid) - dt) > 1e-9 * max(dt, 1.0)):
        raise PreconditionError("tau grid must be uniform and start at 0")

    b = annihilation(L.n)
    obs = vec(b.conj())[None, :]  # obs @ vec(X) == Tr(b^dag X)
    v0 = vec(b @ rho_ss)
    mean_b = complex(trace_row(L.n) @ v0)
    coherent = complex(abs(mean_b) ** 2)
    g0 = complex(obs[0] @ v0)
    window = max(1, int(math.ceil(stop_span / dt)))
    values, _, tau, nsteps = propagate(
        L, v0, tau_grid, obs, controls=controls, stop_tol=decay_tol * abs(g0),
        stop_ref=coherent, stop_window=window, kernels=kernels)
    g = values[0]
    decayed = abs(g[-1] - coherent) <= decay_tol * abs(g0)

    # derivatives of the connected part at tau = 0: Tr[b^dag L^k (b - <b>) rho]
    w = v0 - mean_b * vec(rho_ss)
    ders = np.empty(n_derivatives + 1, dtype=complex)
    for k in range(n_derivatives + 1):
        ders[k] = obs[0] @ w
        w = L.matrix @ w
    return Correlation(tau=tau, g=g, coherent=coherent, derivatives=ders,
                       decayed=bool(decayed), n_steps=int(nsteps))


def reverse_correlation(rho_ss, L: Liouvillian, tau_grid, controls: Controls | None = None):
    """``Tr[b e^{L tau}(rho_ss b^dag)] = <b^dag(0) b(tau)>``.

    By stationarity this is ``g(-tau)``, which must equal ``conj(g(tau))``.
    """
    b = annihilation(L.n)
    obs = vec(b.T)[None, :]
    v0 = vec(np.asarray(rho_ss) @ b.conj().T)
    values, _, tau, _ = propagate(L, v0, tau_grid, obs, controls=controls)
    return values[0]
