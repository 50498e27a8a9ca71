"""Operator algebra on a truncated Fock space.

Operators and density matrices are plain dense ``numpy`` arrays in the
number basis ``|0>, ..., |N-1>`` (ascending). Only superoperators are sparse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DimensionError, FockRangeError, PreconditionError
from .params import SystemParams


@dataclass(frozen=True)
class HilbertSpec:
    """Truncated Fock space of dimension ``cutoff``."""

    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise DimensionError(f"cutoff must be an integer >= 2, got {self.cutoff!r}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    @property
    def dim(self) -> int:
        return self.cutoff


def as_spec(spec) -> HilbertSpec:
    return spec if isinstance(spec, HilbertSpec) else HilbertSpec(int(spec))


def annihilation(spec) -> np.ndarray:
    n = as_spec(spec).cutoff
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def creation(spec) -> np.ndarray:
    return annihilation(spec).conj().T


def number(spec) -> np.ndarray:
    n = as_spec(spec).cutoff
    return np.diag(np.arange(n, dtype=float)).astype(complex)


def identity(spec) -> np.ndarray:
    return np.eye(as_spec(spec).cutoff, dtype=complex)


def build_hamiltonian(params: SystemParams, spec) -> np.ndarray:
    """Rotating-frame Hamiltonian with harmonic and squeezing drives.

    ``H = delta n + i F (b - b^dag) + i eta (b^2 e^{-i theta} - b^dag^2 e^{i theta})``
    """
    b = annihilation(spec)
    bd = b.conj().T
    b2 = b @ b
    bd2 = bd @ bd
    ph = np.exp(1j * params.theta)
    H = (
        params.delta * (bd @ b)
        + 1j * params.force * (b - bd)
        + 1j * params.eta * (b2 * np.conj(ph) - bd2 * ph)
    )
    # remove rounding asymmetry so the Hermitian invariant holds exactly
    return 0.5 * (H + H.conj().T)


def fock_state(n: int, spec) -> np.ndarray:
    spec = as_spec(spec)
    if not 0 <= n < spec.cutoff:
        raise FockRangeError(f"Fock index {n} outside [0, {spec.cutoff})")
    rho = np.zeros((spec.cutoff, spec.cutoff), dtype=complex)
    rho[n, n] = 1.0
    return rho


def coherent_state(alpha: complex, spec) -> np.ndarray:
    """Truncated (and renormalised) coherent-state density matrix."""
    if alpha == 0:
        return fock_state(0, spec)
    n = np.arange(as_spec(spec).cutoff)
    log_mag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    psi = np.exp(log_mag) * np.exp(1j * np.angle(alpha) * n)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def thermal_state(nbar: float, spec) -> np.ndarray:
    n = np.arange(as_spec(spec).cutoff)
    if nbar <= 0:
        return fock_state(0, spec)
    p = (nbar / (1.0 + nbar)) ** n
    return np.diag(p / p.sum()).astype(complex)


def expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    op = np.asarray(op)
    rho = np.asarray(rho)
    if op.ndim != 2 or op.shape != rho.shape or op.shape[0] != op.shape[1]:
        raise DimensionError(f"operator {op.shape} and state {rho.shape} do not match")
    # Tr(A rho) without forming the product
    return complex(np.sum(op * rho.T))


def density_diagnostics(rho: np.ndarray) -> dict[str, float]:
    """Physicality measures used by the steady-state certificate."""
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return {
        "hermiticity_error": herm,
        "trace_error": float(abs(np.trace(rho) - 1.0)),
        "min_eigenvalue": float(evals[0]),
        "tail_population": float(rho[-1, -1].real),
    }


def check_density_matrix(rho, *, tail_tol=None, herm_tol=1e-12, trace_tol=1e-10,
                         eig_tol=1e-10) -> dict[str, float]:
    d = density_diagnostics(rho)
    problems = []
    if d["hermiticity_error"] > herm_tol:
        problems.append(f"not Hermitian ({d['hermiticity_error']:.3g})")
    if d["trace_error"] > trace_tol:
        problems.append(f"trace off by {d['trace_error']:.3g}")
    if d["min_eigenvalue"] < -eig_tol:
        problems.append(f"negative eigenvalue {d['min_eigenvalue']:.3g}")
    if tail_tol is not None and d["tail_population"] > tail_tol:
        problems.append(f"truncation tail {d['tail_population']:.3g}")
    if problems:
        raise PreconditionError("invalid density matrix: " + ", ".join(problems))
    return d
