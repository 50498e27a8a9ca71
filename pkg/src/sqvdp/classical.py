"""Mean-field amplitude-phase dynamics of the driven van der Pol oscillator.

With ``<b> = R e^{i phi}``::

    dR/dt   = gamma1/2 R - gamma2 R^3 - F cos(phi) - 2 eta R cos(2 phi - theta)
    dphi/dt = -delta + F sin(phi) / R + 2 eta sin(2 phi - theta)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from skimage.measure import find_contours

from . import _backend
from .errors import NoLockError, PhaseSingularityError, PreconditionError
from .params import TWO_PI, SystemParams

R_MIN = 1e-9

STABLE_NODE = "stable-node"
STABLE_SPIRAL = "stable-spiral"
UNSTABLE_NODE = "unstable-node"
UNSTABLE_SPIRAL = "unstable-spiral"
SADDLE = "saddle"
UNRESOLVED = "unresolved"


def wrap_phase(phi):
    r = np.mod(phi, TWO_PI)
    return np.where(r >= TWO_PI, 0.0, r)


@dataclass(frozen=True)
class PhasePoint:
    R: float
    phi: float

    def __post_init__(self):
        if self.R < 0:
            raise PreconditionError(f"amplitude must be non-negative, got {self.R}")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "phi", float(wrap_phase(self.phi)))

    def cartesian(self) -> tuple[float, float]:
        return self.R * math.cos(self.phi), self.R * math.sin(self.phi)


@dataclass(frozen=True)
class FixedPoint:
    point: PhasePoint
    jacobian_eigenvalues: tuple[complex, complex]
    stability: str

    @property
    def is_stable(self) -> bool:
        return self.stability in (STABLE_NODE, STABLE_SPIRAL)


def _pvec(params: SystemParams):
    return (params.delta, params.force, params.eta, params.theta, params.gamma1, params.gamma2)


def rhs(p: PhasePoint, params: SystemParams, r_min: float = R_MIN) -> tuple[float, float]:
    if params.force != 0.0 and p.R <= r_min:
        raise PhaseSingularityError(f"phase velocity diverges at R={p.R:g} with F != 0")
    a = 2.0 * p.phi - params.theta
    dR = (0.5 * params.gamma1 * p.R - params.gamma2 * p.R ** 3
          - params.force * math.cos(p.phi) - 2.0 * params.eta * p.R * math.cos(a))
    dphi = -params.delta + 2.0 * params.eta * math.sin(a)
    if params.force != 0.0:
        dphi += params.force * math.sin(p.phi) / p.R
    return dR, dphi


def jacobian(p: PhasePoint, params: SystemParams) -> np.ndarray:
    """Analytic 2x2 Jacobian of ``(dR/dt, dphi/dt)`` with respect to ``(R, phi)``."""
    a, b, c, d = _backend.python.classical_jacobian(p.R, p.phi, _pvec(params))
    return np.array([[a, b], [c, d]])


def classify(eigenvalues, tol: float = 1e-9) -> str:
    l1, l2 = eigenvalues
    re = (l1.real, l2.real)
    if min(abs(r) for r in re) < tol:
        return UNRESOLVED
    if re[0] < 0 and re[1] < 0:
        return STABLE_SPIRAL if abs(l1.imag) > 1e-12 else STABLE_NODE
    if re[0] > 0 and re[1] > 0:
        return UNSTABLE_SPIRAL if abs(l1.imag) > 1e-12 else UNSTABLE_NODE
    return SADDLE


@dataclass(frozen=True)
class ClassicalTrajectory:
    t: np.ndarray
    R: np.ndarray
    phi_unwrapped: np.ndarray
    converged: bool

    @property
    def phi(self) -> np.ndarray:
        return wrap_phase(self.phi_unwrapped)

    @property
    def final(self) -> PhasePoint:
        return PhasePoint(self.R[-1], self.phi_unwrapped[-1])


def integrate(p0: PhasePoint, params: SystemParams, duration: float = 1000.0, *,
              dt_out: float = 0.1, rtol: float = 1e-11, atol: float = 1e-13,
              conv_tol: float = 1e-10, r_min: float = R_MIN, max_steps: int = 10_000_000,
              kernels=None) -> ClassicalTrajectory:
    """Adaptive Dormand-Prince integration of the amplitude-phase flow.

    Stops early once ``|rhs| < conv_tol``; ``converged`` reports whether that
    happened within ``duration``.
    """
    kernels = kernels or _backend.kernels
    if p0.R <= r_min:
        raise PreconditionError(f"initial amplitude must exceed {r_min:g}")
    t, R, phi, status = kernels.classical_dopri(
        p0.R, p0.phi, _pvec(params), float(duration), float(dt_out), atol, rtol,
        1e-3, conv_tol, r_min, int(max_steps))
    if status == 2:
        raise PhaseSingularityError(f"trajectory reached R={R[-1]:.3g} at t={t[-1]:.4g}")
    return ClassicalTrajectory(t=t, R=R, phi_unwrapped=phi, converged=status == 1)


def _dedup(points, tol):
    kept = []
    for R, phi in points:
        for KR, Kphi in kept:
            dphi = abs((phi - Kphi + math.pi) % TWO_PI - math.pi)
            if math.hypot(R - KR, dphi) < tol:
                break
        else:
            kept.append((R, phi))
    return kept


def default_r_max(params: SystemParams) -> float:
    return 3.0 * params.r0 + 3.0


def fixed_points(params: SystemParams, *, grid: int = 24, r_min: float = R_MIN,
                 r_max: float | None = None, tol: float = 1e-12, max_iter: int = 60,
                 dedup: float = 1e-6, kernels=None) -> list[FixedPoint]:
    """All fixed points with ``r_min < R <= r_max`` by multistart Newton.

    Starts form a ``grid x grid`` lattice over ``(R, phi)``; roots closer than
    ``dedup`` are merged. Sorted by phase, then amplitude.
    """
    kernels = kernels or _backend.kernels
    r_max = default_r_max(params) if r_max is None else r_max
    Rs = r_max * (np.arange(grid) + 0.5) / grid
    phis = TWO_PI * np.arange(grid) / grid
    RR, PP = np.meshgrid(Rs, phis, indexing="ij")
    starts = np.column_stack([RR.ravel(), PP.ravel()])
    roots, ok = kernels.newton_multistart(starts, _pvec(params), tol, max_iter, r_min, r_max)
    found = [(float(R), float(wrap_phase(phi))) for (R, phi), good in zip(roots, ok) if good]
    out = []
    for R, phi in sorted(_dedup(found, dedup), key=lambda rp: (round(rp[1], 9), rp[0])):
        pt = PhasePoint(R, phi)
        eig = np.linalg.eigvals(jacobian(pt, params))
        eig = tuple(sorted((complex(e) for e in eig), key=lambda z: (z.real, z.imag)))
        out.append(FixedPoint(point=pt, jacobian_eigenvalues=eig, stability=classify(eig)))
    return out


# ---------------------------------------------------------------- nullclines


@dataclass(frozen=True)
class Nullclines:
    """Zero-level curves as lists of ``(k, 2)`` arrays of ``(R, phi)``."""

    r_curves: list
    phi_curves: list
    r_grid: np.ndarray
    phi_grid: np.ndarray

    @staticmethod
    def to_cartesian(curves):
        return [np.column_stack([c[:, 0] * np.cos(c[:, 1]), c[:, 0] * np.sin(c[:, 1])])
                for c in curves]

    def intersections(self, merge: float | None = None) -> np.ndarray:
        """Crossings of the two families, wrapped in phase and merged."""
        if merge is None:
            merge = 3.0 * max(self.r_grid[1] - self.r_grid[0], self.phi_grid[1] - self.phi_grid[0])
        pts = []
        for a in self.r_curves:
            for b in self.phi_curves:
                pts.extend(_polyline_crossings(a, b))
        pts = [(R, float(wrap_phase(phi))) for R, phi in pts]
        return np.array(_dedup(pts, merge)).reshape(-1, 2)


def _polyline_crossings(a, b):
    """Proper intersections between polylines ``a`` and ``b``."""
    if len(a) < 2 or len(b) < 2:
        return []
    p, r = a[:-1], a[1:] - a[:-1]
    q, s = b[:-1], b[1:] - b[:-1]
    # bounding-box prefilter keeps the pairwise test cheap
    alo, ahi = np.minimum(a[:-1], a[1:]), np.maximum(a[:-1], a[1:])
    blo, bhi = np.minimum(b[:-1], b[1:]), np.maximum(b[:-1], b[1:])
    overlap = ((alo[:, None, 0] <= bhi[None, :, 0]) & (blo[None, :, 0] <= ahi[:, None, 0])
               & (alo[:, None, 1] <= bhi[None, :, 1]) & (blo[None, :, 1] <= ahi[:, None, 1]))
    ii, jj = np.nonzero(overlap)
    out = []
    for i, j in zip(ii, jj):
        denom = r[i, 0] * s[j, 1] - r[i, 1] * s[j, 0]
        if denom == 0:
            continue
        qp = q[j] - p[i]
        t = (qp[0] * s[j, 1] - qp[1] * s[j, 0]) / denom
        u = (qp[0] * r[i, 1] - qp[1] * r[i, 0]) / denom
        if 0 <= t <= 1 and 0 <= u <= 1:
            out.append(tuple(p[i] + t * r[i]))
    return out


def nullclines(params: SystemParams, *, n_r: int = 256, n_phi: int = 256,
               r_max: float | None = None, r_floor: float | None = None) -> Nullclines:
    """Zero contours of ``dR/dt`` and ``dphi/dt`` by marching squares.

    The phase axis is padded by a few cells on both sides so curves crossing
    ``phi = 0`` are not cut at the boundary.
    """
    if n_r < 128 or n_phi < 128:
        raise PreconditionError("nullcline grid must be at least 128 x 128")
    r_max = default_r_max(params) if r_max is None else r_max
    r_floor = r_max / (4.0 * n_r) if r_floor is None else r_floor
    Rg = np.linspace(r_floor, r_max, n_r)
    dphi = TWO_PI / n_phi
    pad = 4
    Pg = dphi * np.arange(-pad, n_phi + pad + 1)
    RR, PP = np.meshgrid(Rg, Pg, indexing="ij")
    a = 2.0 * PP - params.theta
    dR = (0.5 * params.gamma1 * RR - params.gamma2 * RR ** 3
          - params.force * np.cos(PP) - 2.0 * params.eta * RR * np.cos(a))
    dP = -params.delta + params.force * np.sin(PP) / RR + 2.0 * params.eta * np.sin(a)

    def curves(field):
        out = []
        for c in find_contours(field, 0.0):
            R = np.interp(c[:, 0], np.arange(n_r), Rg)
            phi = np.interp(c[:, 1], np.arange(Pg.size), Pg)
            out.append(np.column_stack([R, phi]))
        return out

    return Nullclines(r_curves=curves(dR), phi_curves=curves(dP), r_grid=Rg, phi_grid=Pg)


# ---------------------------------------------------------------- locking


def squeezing_lock_phase(params: SystemParams, branch: int = 0) -> float:
    """Closed-form locked phase for the squeezing-only drive.

    ``phi = (pi + theta)/2 - asin(delta / (2 eta)) / 2``; ``branch=1`` returns
    the companion solution shifted by ``pi``. Wrapped into ``[0, 2pi)``.
    """
    if params.eta <= 0:
        raise PreconditionError("squeezing lock phase needs eta > 0")
    ratio = params.delta / (2.0 * params.eta)
    if abs(ratio) > 1.0:
        raise NoLockError(f"eta={params.eta} below the Arnold boundary |delta|/2={abs(params.delta) / 2}")
    phi = 0.5 * (math.pi + params.theta) - 0.5 * math.asin(ratio) + math.pi * branch
    return float(wrap_phase(phi))


def lock_phases(params: SystemParams) -> dict[str, float]:
    return {"primary": squeezing_lock_phase(params, 0),
            "companion": squeezing_lock_phase(params, 1)}


@dataclass(frozen=True)
class ArnoldBoundaries:
    delta: np.ndarray
    eta_min: np.ndarray    # squeezing drive: |delta| / 2
    force_min: np.ndarray  # harmonic drive: |delta| R0


def arnold_boundaries(delta, gamma1: float = 1.0, gamma2: float = 3.0) -> ArnoldBoundaries:
    delta = np.asarray(delta, dtype=float)
    r0 = math.sqrt(gamma1 / (2.0 * gamma2))
    return ArnoldBoundaries(delta=delta, eta_min=0.5 * np.abs(delta),
                            force_min=np.abs(delta) * r0)


def pitchfork_critical_eta(params: SystemParams) -> float:
    """Squeezing at which the phase-``pi`` fixed point loses stability.

    Solves ``(gamma1/2 - 2 eta) R - gamma2 R^3 + F = 0`` together with the
    marginal condition ``F = 4 eta R`` (resonant drive, ``theta = 0``).
    """
    if params.delta != 0 or params.theta != 0:
        raise PreconditionError("pitchfork analysis requires delta = 0 and theta = 0")
    F, g1, g2 = params.force, params.gamma1, params.gamma2
    if F <= 0:
        raise PreconditionError("pitchfork analysis requires F > 0")

    def amplitude_balance(eta):
        R = F / (4.0 * eta)
        return (0.5 * g1 - 2.0 * eta) * R - g2 * R ** 3 + F

    lo, hi = 1e-12, 1.0
    while amplitude_balance(lo) > 0:
        lo *= 1e-3
    while amplitude_balance(hi) < 0:
        hi *= 2.0
    return brentq(amplitude_balance, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
