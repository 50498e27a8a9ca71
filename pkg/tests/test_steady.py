import numpy as np
import pytest

from sqvdp import SystemParams, assemble, auto_cutoff, solve, steady_state
from sqvdp.errors import DegenerateSteadyStateError, NoConvergenceError
from sqvdp.fock import HilbertSpec, density_diagnostics, number
from sqvdp.liouvillian import Liouvillian, dissipator, hamiltonian_term, residual_norm
from sqvdp.steady import mean_number, number_commutator


def rate_equation_populations(gamma1, gamma2, n):
    """Stationary populations of the undriven model from its classical rate matrix."""
    W = np.zeros((n, n))
    for k in range(n):
        if k + 1 < n:
            W[k + 1, k] += gamma1 * (k + 1)   # gain k -> k+1
            W[k, k] -= gamma1 * (k + 1)
        if k >= 2:
            W[k - 2, k] += gamma2 * k * (k - 1)  # two-photon loss k -> k-2
            W[k, k] -= gamma2 * k * (k - 1)
    A = W.copy()
    A[0, :] = 1.0
    rhs = np.zeros(n)
    rhs[0] = 1.0
    return np.linalg.solve(A, rhs)


@pytest.mark.parametrize("gamma2", [0.5, 3.0, 50.0])
def test_undriven_matches_rate_equations(gamma2):
    n = 40
    rho = solve(assemble(SystemParams(gamma2=gamma2, delta=0.4), n))
    p = rate_equation_populations(1.0, gamma2, n)
    np.testing.assert_allclose(np.diag(rho).real, p, atol=1e-11)
    assert np.abs(rho - np.diag(np.diag(rho))).max() <= 1e-12


def test_certificate_on_driven_state(mixed_params):
    rho, spec = steady_state(mixed_params)
    L = assemble(mixed_params, spec)
    assert residual_norm(L, rho) <= 1e-10
    d = density_diagnostics(rho)
    assert d["trace_error"] <= 1e-12
    assert d["min_eigenvalue"] >= -1e-10
    assert d["tail_population"] <= 1e-8


def test_phase_invariant_state_commutes_with_number():
    rho = solve(assemble(SystemParams(delta=0.9), 20))
    assert number_commutator(rho) <= 1e-12


def test_degenerate_kernel_detected():
    spec = HilbertSpec(6)
    with pytest.raises(DegenerateSteadyStateError):
        solve(Liouvillian(hamiltonian_term(number(6)), spec))
    with pytest.raises(DegenerateSteadyStateError):
        solve(Liouvillian(dissipator(number(6)), spec))


def test_auto_cutoff_grows_with_photon_number():
    _, small = auto_cutoff(SystemParams(gamma2=3))
    _, big = auto_cutoff(SystemParams(gamma2=0.05))
    assert small.cutoff == 16 and big.cutoff > small.cutoff


def test_auto_cutoff_is_converged():
    params = SystemParams(eta=1.2, force=0.5, delta=0.3)
    rho, spec = auto_cutoff(params)
    rho2 = solve(assemble(params, 2 * spec.cutoff))
    assert abs(mean_number(rho) - mean_number(rho2)) <= 1e-6


def test_auto_cutoff_documented_cases():
    rho, spec = auto_cutoff(SystemParams(force=1.0, delta=1.0, gamma2=3.0))
    assert spec.cutoff <= 32 and rho[-1, -1].real <= 1e-8
    _, spec = auto_cutoff(SystemParams(gamma2=1e4))
    assert spec.cutoff == 16
    _, spec = auto_cutoff(SystemParams(eta=1.0), tail_tol=1.0)
    assert spec.cutoff == 16


def test_auto_cutoff_ceiling():
    with pytest.raises(NoConvergenceError):
        auto_cutoff(SystemParams(gamma2=0.01), ceiling=16)


def test_explicit_cutoff():
    rho, spec = steady_state(SystemParams(), cutoff=7)
    assert rho.shape == (7, 7) and spec.cutoff == 7
