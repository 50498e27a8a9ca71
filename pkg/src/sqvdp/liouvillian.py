"""Sparse Liouvillian of the driven van der Pol master equation.

Vectorisation is column stacking, ``vec(rho)[i + N*j] = rho[i, j]``, so that
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError
from .fock import HilbertSpec, annihilation, as_spec, build_hamiltonian
from .params import SystemParams


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise DimensionError(f"vector of length {v.size} is not a vectorised square matrix")
    return v.reshape(n, n, order="F")


def trace_row(n: int) -> np.ndarray:
    """Row vector ``t`` with ``t @ vec(X) == trace(X)``."""
    return vec(np.eye(n))


def sprepost(a, b) -> sp.csc_matrix:
    """Superoperator of ``rho -> a @ rho @ b``."""
    return sp.kron(sp.csr_matrix(b).T, sp.csr_matrix(a), format="coo").tocsc()


def spre(a) -> sp.csc_matrix:
    return sprepost(a, np.eye(a.shape[0]))


def spost(b) -> sp.csc_matrix:
    return sprepost(np.eye(b.shape[0]), b)


def hamiltonian_term(H) -> sp.csc_matrix:
    """``rho -> -i [H, rho]``."""
    return (-1j * (spre(H) - spost(H))).tocsc()


def dissipator(op) -> sp.csc_matrix:
    """``rho -> O rho O^dag - {O^dag O, rho} / 2``."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"dissipator needs a square operator, got {op.shape}")
    opd = op.conj().T
    odo = opd @ op
    terms = sprepost(op, opd) - 0.5 * spre(odo) - 0.5 * spost(odo)
    return sp.csc_matrix(terms)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    matrix: sp.csc_matrix
    spec: HilbertSpec
    params: SystemParams | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.spec.cutoff


def assemble(params: SystemParams, spec) -> Liouvillian:
    """Generator ``-i[H_tot, .] + gamma1 D[b^dag] + gamma2 D[b^2]``."""
    spec = as_spec(spec)
    b = annihilation(spec)
    H = build_hamiltonian(params, spec)
    L = (
        hamiltonian_term(H)
        + params.gamma1 * dissipator(b.conj().T)
        + params.gamma2 * dissipator(b @ b)
    )
    L = sp.csc_matrix(L)
    L.eliminate_zeros()
    L.sort_indices()
    return Liouvillian(matrix=L, spec=spec, params=params)


def apply(L: Liouvillian, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (L.n, L.n):
        raise DimensionError(f"state of shape {rho.shape} does not match cutoff {L.n}")
    return unvec(L.matrix @ vec(rho), L.n)


def residual_norm(L: Liouvillian, rho: np.ndarray) -> float:
    """Entrywise 1-norm of ``L(rho)``."""
    return float(np.sum(np.abs(L.matrix @ vec(rho))))
