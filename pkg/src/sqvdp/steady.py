"""Steady state of the Liouvillian and automatic Fock-cutoff selection."""
from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (DegenerateSteadyStateError, NoConvergenceError,
                     PreconditionError, SolverError)
from .fock import HilbertSpec, density_diagnostics, number
from .liouvillian import Liouvillian, assemble, residual_norm, trace_row, unvec
from .params import SystemParams

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
EIG_TOL = 1e-10


def _bordered(L: sp.csc_matrix, n: int) -> sp.csc_matrix:
    """Replace the first row of ``L`` by the trace functional."""
    dim = L.shape[0]
    keep = np.ones(dim)
    keep[0] = 0.0
    cols = np.flatnonzero(trace_row(n))
    first = sp.csc_matrix((np.ones(cols.size, dtype=complex), (np.zeros(cols.size, dtype=int), cols)),
                          shape=(dim, dim))
    return (sp.diags(keep) @ L + first).tocsc()


def _finish(v: np.ndarray, n: int) -> np.ndarray:
    rho = unvec(v, n)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _inverse_iteration(L: sp.csc_matrix, n: int, k: int = 1, iters: int = 30):
    """Subspace inverse iteration for the ``k`` eigenvalues of ``L`` nearest 0.

    Returns ``(vectors, residuals)`` with columns sorted by residual.
    """
    dim = L.shape[0]
    scale = abs(L).sum(axis=0).max()
    shift = 1e-9 * max(scale, 1.0)
    lu = spla.splu((L - shift * sp.identity(dim, format="csc")).tocsc())
    rng = np.random.default_rng(12345)
    Q = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    Q[:, 0] += trace_row(n)
    Q, _ = np.linalg.qr(Q)
    for _ in range(iters):
        Q, _ = np.linalg.qr(lu.solve(Q))
    # Rayleigh-Ritz on the converged subspace
    H = Q.conj().T @ (L @ Q)
    w, V = np.linalg.eig(H)
    X = Q @ V
    X /= np.linalg.norm(X, axis=0)
    res = np.linalg.norm(L @ X, axis=0)
    order = np.argsort(res)
    return X[:, order], res[order]


def solve(L: Liouvillian, *, residual_tol: float = RESIDUAL_TOL,
          degeneracy_tol: float = 1e-8) -> np.ndarray:
    """Unique steady state of ``L`` by a bordered sparse LU solve.

    The first equation is replaced by ``trace(rho) = 1``. If the factorisation
    fails, inverse iteration near zero is tried; a second (near-)null vector
    raises :class:`DegenerateSteadyStateError`. The result is certified: its
    residual, trace, Hermiticity and smallest eigenvalue are checked and a
    failure raises rather than being repaired.
    """
    n = L.n
    A = _bordered(L.matrix, n)
    rhs = np.zeros(L.dim, dtype=complex)
    rhs[0] = 1.0
    rho = None
    try:
        v = spla.splu(A).solve(rhs)
        if np.all(np.isfinite(v)):
            rho = _finish(v, n)
    except RuntimeError as exc:  # exactly singular factor
        log.debug("bordered LU failed: %s", exc)
    if rho is None or residual_norm(L, rho) > residual_tol:
        X, res = _inverse_iteration(L.matrix, n, k=2)
        scale = max(abs(L.matrix).sum(axis=0).max(), 1.0)
        if res[1] <= degeneracy_tol * scale:
            raise DegenerateSteadyStateError(
                f"Liouvillian has at least two null vectors (residuals {res[0]:.3g}, {res[1]:.3g})",
                residual=float(res[1]))
        tr = trace_row(n) @ X[:, 0]
        if abs(tr) < 1e-14:
            raise SolverError("null vector has zero trace", residual=float(res[0]))
        rho = _finish(X[:, 0] / tr, n)
    resid = residual_norm(L, rho)
    if resid > residual_tol:
        raise SolverError(f"steady-state residual {resid:.3g} exceeds {residual_tol:g}",
                          residual=resid)
    diag = density_diagnostics(rho)
    if diag["min_eigenvalue"] < -EIG_TOL:
        raise SolverError(f"steady state has eigenvalue {diag['min_eigenvalue']:.3g}",
                          residual=resid)
    return rho


def mean_number(rho: np.ndarray) -> float:
    return float(np.dot(np.arange(rho.shape[0]), np.diag(rho).real))


def _observables(rho):
    from .observables import mandel_q
    return mean_number(rho), mandel_q(rho)


def auto_cutoff(params: SystemParams, tail_tol: float = 1e-8, obs_tol: float = 1e-6, *,
                start: int = 16, ceiling: int = 256) -> tuple[np.ndarray, HilbertSpec]:
    """Smallest cutoff on a doubling schedule whose state is converged.

    A cutoff ``N`` is accepted when the population of its top level is at most
    ``tail_tol`` and the mean number and Mandel Q change by at most ``obs_tol``
    on doubling to ``2N``. At the ceiling only the tail condition is checked.
    """
    if not (0 < tail_tol <= 1) or not (0 < obs_tol < 1):
        raise PreconditionError("tolerances must lie in (0, 1)")
    n = start
    prev = None
    while n <= ceiling:
        spec = HilbertSpec(n)
        rho = prev[0] if prev is not None and prev[1].cutoff == n else solve(assemble(params, spec))
        tail = rho[-1, -1].real
        if tail <= tail_tol:
            if n * 2 > ceiling:
                return rho, spec
            big = HilbertSpec(2 * n)
            rho_big = solve(assemble(params, big))
            a, b = _observables(rho), _observables(rho_big)
            if abs(a[0] - b[0]) <= obs_tol and abs(a[1] - b[1]) <= obs_tol:
                return rho, spec
            prev = (rho_big, big)
        else:
            prev = None
        n *= 2
    raise NoConvergenceError(
        f"no converged Fock cutoff up to {ceiling} for {params}")


def steady_state(params: SystemParams, cutoff: int | None = None, **kwargs):
    """Steady state at a fixed ``cutoff``, or chosen by :func:`auto_cutoff`."""
    if cutoff is None:
        return auto_cutoff(params, **kwargs)
    spec = HilbertSpec(cutoff)
    return solve(assemble(params, spec)), spec


def smallest_singular_values(L: Liouvillian, k: int = 2) -> np.ndarray:
    """Dense SVD; intended for small cutoffs in checks."""
    return np.linalg.svd(L.matrix.toarray(), compute_uv=False)[::-1][:k]


def number_commutator(rho: np.ndarray) -> float:
    nop = number(rho.shape[0])
    return float(np.max(np.abs(nop @ rho - rho @ nop)))
