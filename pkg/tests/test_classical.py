import math

import numpy as np
import pytest

from sqvdp import SystemParams
from sqvdp.classical import (SADDLE, STABLE_NODE, STABLE_SPIRAL, UNRESOLVED, PhasePoint,
                             arnold_boundaries, classify, fixed_points, integrate, jacobian,
                             lock_phases, nullclines, pitchfork_critical_eta, rhs,
                             squeezing_lock_phase)
from sqvdp.errors import NoLockError, PhaseSingularityError, PreconditionError

FIG1 = SystemParams(force=1.0, delta=1.0, theta=math.pi / 4, gamma2=3.0)


def test_rhs_singular_only_with_force():
    with pytest.raises(PhaseSingularityError):
        rhs(PhasePoint(0.0, 1.0), FIG1)
    dR, dphi = rhs(PhasePoint(0.0, 1.0), SystemParams(eta=1, delta=0.3))
    assert dR == 0.0 and dphi == pytest.approx(-0.3 + 2 * math.sin(2.0))


def test_phase_point_wraps():
    assert PhasePoint(1.0, -0.5).phi == pytest.approx(2 * math.pi - 0.5)
    with pytest.raises(PreconditionError):
        PhasePoint(-1.0, 0.0)


@pytest.mark.parametrize("p", [PhasePoint(0.7, 0.3), PhasePoint(1.3, 4.0), PhasePoint(0.2, 2.2)])
def test_jacobian_matches_finite_differences(p):
    params = SystemParams(force=0.8, delta=0.4, eta=1.1, theta=0.6, gamma2=2.0)
    J = jacobian(p, params)
    h = 1e-6
    fd = np.empty((2, 2))
    for k, (dr, dq) in enumerate([(h, 0.0), (0.0, h)]):
        plus = rhs(PhasePoint(p.R + dr, p.phi + dq), params)
        minus = rhs(PhasePoint(p.R - dr, p.phi - dq), params)
        fd[:, k] = (np.array(plus) - np.array(minus)) / (2 * h)
    np.testing.assert_allclose(J, fd, atol=1e-7)


def test_classification():
    assert classify((-1 + 0j, -2 + 0j)) == STABLE_NODE
    assert classify((-1 - 1j, -1 + 1j)) == STABLE_SPIRAL
    assert classify((-1 + 0j, 2 + 0j)) == SADDLE
    assert classify((0 + 1j, 0 - 1j)) == UNRESOLVED


def test_undriven_limit_cycle_has_no_fixed_point_away_from_origin():
    assert fixed_points(SystemParams(delta=0.5)) == []


@pytest.mark.parametrize("eta,count", [(0.0, 1), (1.0, 1), (1.5, 3)])
def test_fixed_point_counts(eta, count):
    fps = fixed_points(FIG1.replace(eta=eta))
    assert len(fps) == count
    for fp in fps:
        assert np.hypot(*rhs(fp.point, FIG1.replace(eta=eta))) < 1e-10


def test_three_point_case_stability():
    fps = fixed_points(FIG1.replace(eta=1.5))
    assert sorted(f.is_stable for f in fps) == [False, True, True]
    assert [f.stability for f in fps if not f.is_stable] == [SADDLE]


def test_nullcline_intersections_match_fixed_points():
    for eta in (0.0, 1.0, 1.5):
        params = FIG1.replace(eta=eta)
        nc = nullclines(params)
        X = nc.intersections()
        fps = fixed_points(params)
        assert len(X) == len(fps)
        for fp in fps:
            d = np.hypot(X[:, 0] - fp.point.R,
                         np.angle(np.exp(1j * (X[:, 1] - fp.point.phi))))
            assert d.min() < 0.05


def test_nullcline_grid_floor():
    with pytest.raises(PreconditionError):
        nullclines(FIG1, n_r=64)


def test_cartesian_export():
    nc = nullclines(FIG1.replace(eta=1.0))
    xy = nc.to_cartesian(nc.r_curves)
    for c, p in zip(nc.r_curves, xy):
        np.testing.assert_allclose(np.hypot(p[:, 0], p[:, 1]), c[:, 0], rtol=1e-12)


def test_lock_phase_formula_and_branches():
    params = SystemParams(eta=1.0, delta=0.5, theta=0.4)
    phi = squeezing_lock_phase(params)
    expected = 0.5 * (math.pi + 0.4) - 0.5 * math.asin(0.25)
    assert phi == pytest.approx(expected % (2 * math.pi))
    both = lock_phases(params)
    assert (both["companion"] - both["primary"]) % (2 * math.pi) == pytest.approx(math.pi)
    for branch in (0, 1):
        p = squeezing_lock_phase(params, branch)
        assert rhs(PhasePoint(1.0, p), params)[1] == pytest.approx(0.0, abs=1e-14)


def test_lock_phase_errors():
    with pytest.raises(NoLockError):
        squeezing_lock_phase(SystemParams(eta=0.2, delta=0.5))
    with pytest.raises(PreconditionError):
        squeezing_lock_phase(SystemParams(eta=0.0, delta=0.0))


def test_integrate_locks_and_drifts():
    locked = integrate(PhasePoint(0.3, 1.0), SystemParams(eta=1.0, delta=0.5))
    assert locked.converged
    phi = locked.final.phi
    assert min(abs(phi - squeezing_lock_phase(SystemParams(eta=1.0, delta=0.5), b)) for b in (0, 1)) < 1e-8
    drift = integrate(PhasePoint(0.3, 1.0), SystemParams(eta=0.2, delta=0.5), 200.0)
    assert not drift.converged
    assert abs(drift.phi_unwrapped[-1] - drift.phi_unwrapped[0]) > 2 * math.pi


def test_integrate_hits_singularity():
    # strong resonant force drives the amplitude through zero from the wrong side
    params = SystemParams(force=5.0, gamma2=3.0)
    with pytest.raises(PhaseSingularityError):
        integrate(PhasePoint(0.05, 0.0), params, 10.0)


def test_undriven_integration_reaches_limit_cycle():
    params = SystemParams(delta=0.7)
    tr = integrate(PhasePoint(0.1, 0.0), params, 60.0)
    assert tr.R[-1] == pytest.approx(params.r0, rel=1e-8)
    rate = (tr.phi_unwrapped[-1] - tr.phi_unwrapped[-101]) / (tr.t[-1] - tr.t[-101])
    assert rate == pytest.approx(-0.7, rel=1e-9)


def test_arnold_boundaries():
    ab = arnold_boundaries([-1.0, 0.0, 0.6], gamma1=1.0, gamma2=3.0)
    np.testing.assert_allclose(ab.eta_min, [0.5, 0.0, 0.3])
    np.testing.assert_allclose(ab.force_min, np.array([1.0, 0.0, 0.6]) * math.sqrt(1 / 6))


def test_squeezing_boundary_separates_locking():
    for delta in (0.4, 1.0):
        inside = SystemParams(delta=delta, eta=0.5 * delta * 1.02)
        outside = SystemParams(delta=delta, eta=0.5 * delta * 0.98)
        assert integrate(PhasePoint(0.4, 0.0), inside, 3000.0).converged
        assert not integrate(PhasePoint(0.4, 0.0), outside, 3000.0).converged


def test_pitchfork_root_and_bifurcation():
    params = SystemParams(force=1.0, gamma2=3.0)
    eta_c = pitchfork_critical_eta(params)
    R = 1.0 / (4 * eta_c)
    assert (0.5 - 2 * eta_c) * R - 3.0 * R ** 3 + 1.0 == pytest.approx(0.0, abs=1e-12)
    below = fixed_points(params.replace(eta=0.98 * eta_c))
    above = fixed_points(params.replace(eta=1.02 * eta_c))
    assert len(below) == 1 and below[0].is_stable
    assert len(above) == 3 and sum(f.is_stable for f in above) == 2


def test_pitchfork_small_force_limit():
    # marginal condition gives eta_c ~ F sqrt(gamma2 / (8 gamma1)) as F -> 0
    for F in (1e-3, 1e-4):
        eta_c = pitchfork_critical_eta(SystemParams(force=F, gamma2=3.0))
        assert eta_c == pytest.approx(F * math.sqrt(3.0 / 8.0), rel=2e-3)


def test_pitchfork_preconditions():
    for bad in (SystemParams(force=1, delta=0.1), SystemParams(force=1, theta=0.2),
                SystemParams(force=0)):
        with pytest.raises(PreconditionError):
            pitchfork_critical_eta(bad)
