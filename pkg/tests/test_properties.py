import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from sqvdp import SystemParams, assemble, solve
from sqvdp.classical import PhasePoint, jacobian, rhs
from sqvdp.fock import density_diagnostics
from sqvdp.liouvillian import residual_norm, trace_row
from sqvdp.observables import phase_distribution, wigner_at

finite = dict(allow_nan=False, allow_infinity=False)
params_st = st.builds(
    SystemParams,
    delta=st.floats(-2, 2, **finite),
    force=st.floats(0, 1.5, **finite),
    eta=st.floats(0, 1.5, **finite),
    theta=st.floats(-10, 10, **finite),
    gamma1=st.floats(0.2, 2, **finite),
    gamma2=st.floats(0.5, 5, **finite),
)


@settings(max_examples=30, deadline=None)
@given(params_st)
def test_theta_always_wrapped(p):
    assert 0.0 <= p.theta < 2 * math.pi


@settings(max_examples=25, deadline=None)
@given(params_st)
def test_generator_preserves_trace(p):
    L = assemble(p, 10)
    assert np.abs(trace_row(10) @ L.matrix).max() <= 1e-12


@settings(max_examples=20, deadline=None)
@given(params_st)
def test_steady_state_is_physical(p):
    L = assemble(p, 20)
    rho = solve(L)
    d = density_diagnostics(rho)
    assert residual_norm(L, rho) <= 1e-10
    assert d["trace_error"] <= 1e-12 and d["min_eigenvalue"] >= -1e-10


@settings(max_examples=20, deadline=None)
@given(params_st, st.integers(0, 2 ** 32 - 1))
def test_wigner_real_and_bounded(p, seed):
    rho = solve(assemble(p, 12))
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=20) + 1j * rng.normal(size=20)
    W = wigner_at(rho, pts)
    assert np.all(np.isfinite(W))
    assert np.all(np.abs(W) <= 2 / math.pi + 1e-12)


@settings(max_examples=20, deadline=None)
@given(params_st)
def test_phase_distribution_is_probability(p):
    rho = solve(assemble(p, 12))
    phi, P = phase_distribution(rho, 256)
    assert P.min() >= -1e-12
    assert abs(P.sum() * (phi[1] - phi[0]) - 1.0) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(params_st, st.floats(0.05, 3, **finite), st.floats(-20, 20, **finite))
def test_flow_is_phase_periodic(p, R, phi):
    a = rhs(PhasePoint(R, phi), p)
    b = rhs(PhasePoint(R, phi + 2 * math.pi), p)
    np.testing.assert_allclose(a, b, atol=1e-9)
    np.testing.assert_allclose(jacobian(PhasePoint(R, phi), p),
                               jacobian(PhasePoint(R, phi + 2 * math.pi), p), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100, **finite))
def test_phase_point_wrapped(phi):
    assert 0.0 <= PhasePoint(1.0, phi).phi < 2 * math.pi
