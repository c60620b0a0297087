import math

import numpy as np
import pytest

from tfstar import (BulkEvent, BulkOptions, initial_signs, integrate_bulk,
                    series_start)
from tfstar.bulk import BulkState, bulk_rhs, phi_psi
from tfstar.constants import ConstantSet, derive_coefficients
from tfstar.errors import NonPositiveInput


def test_initial_signs_inside_window(coeffs, windows):
    for ratio in np.linspace(windows.central_lo * 1.01,
                             windows.central_hi * 0.99, 7):
        chk = initial_signs(ratio, 1.0, coeffs)
        assert chk.ok
        assert chk.phi0 < 0.0 and chk.psi0 < 0.0


def test_initial_signs_boundary_rejected(coeffs, windows):
    chk = initial_signs(windows.central_hi, 1.0, coeffs)  # phi(0) = 0
    assert not chk.ok
    assert "phi" in chk.reason


def test_initial_signs_zero_gravity_equal_centers():
    c = ConstantSet(h=3.7, c=10.0, G=0.0, q=1.0, m_e=1.0, m_p=2.0,
                    k_e=1.0, k_p=1.0)
    k = derive_coefficients(c)
    chk = initial_signs(1.0, 1.0, k)
    assert not chk.ok  # phi(0) = psi(0) = 0


def test_initial_signs_positive_inputs(coeffs):
    with pytest.raises(NonPositiveInput):
        initial_signs(-1.0, 1.0, coeffs)


def test_series_start_limits(coeffs):
    phi0, psi0 = phi_psi(1.0, 0.95, coeffs)
    assert phi0 < 0.0
    for h in (1e-3, 1e-5, 1e-7):
        st = series_start(1.0, 0.95, h, coeffs)
        assert st.u_p < 1.0  # phi(0) < 0 pulls the proton density down
        assert st.u_p == pytest.approx(1.0 + phi0 * h * h / 6.0, rel=1e-15)
        assert st.du_p == pytest.approx(phi0 * h / 3.0, rel=1e-15)
    st = series_start(1.0, 0.95, 1e-12, coeffs)
    assert st.u_p == pytest.approx(1.0, abs=1e-20)
    assert st.du_e == pytest.approx(0.0, abs=1e-12)


def test_series_start_ode_residual_vanishes_with_h(coeffs):
    # residual of u'' + (2/r)u' = phi at r=h using the truncated expansion
    alpha, beta = 1.0, 0.95
    phi0, psi0 = phi_psi(alpha, beta, coeffs)
    prev = None
    for h in (1e-2, 1e-3, 1e-4):
        st = series_start(alpha, beta, h, coeffs)
        lhs = phi0 / 3.0 + (2.0 / h) * st.du_p
        rhs = coeffs.F * st.u_p**1.5 - coeffs.E * st.u_e**1.5
        res = abs(lhs - rhs)
        assert res < 10.0 * h  # O(h) bound from the spec'd expansion order
        if prev is not None:
            assert res < prev
        prev = res


def test_bulk_rhs_vacuum_stationary(coeffs):
    st = BulkState(r=1.0, u_e=0.0, u_p=0.0, du_e=0.0, du_p=0.0)
    d = bulk_rhs(st, coeffs)
    assert d.du_p == 0.0 and d.du_e == 0.0


def test_bulk_rhs_balanced_proton_force(coeffs):
    u_e = (coeffs.F / coeffs.E) ** (2.0 / 3.0)  # F u_p^1.5 = E u_e^1.5 at u_p=1
    st = BulkState(r=2.0, u_e=u_e, u_p=1.0, du_e=0.0, du_p=0.3)
    d = bulk_rhs(st, coeffs)
    assert d.du_p == pytest.approx(-2.0 / 2.0 * 0.3, abs=1e-12)


def test_bulk_rhs_desk_value(coeffs):
    st = BulkState(r=1.0, u_e=1.0, u_p=1.0, du_e=0.0, du_p=0.0)
    d = bulk_rhs(st, coeffs)
    assert d.du_p == pytest.approx(coeffs.F - coeffs.E, rel=1e-15)
    assert d.du_p < 0.0


def test_both_vanish_branches_occur(consts, coeffs):
    # electron-first on the low-beta side, proton-first on the high side
    out_lo = integrate_bulk(1.0, 0.85, coeffs)
    out_hi = integrate_bulk(1.0, 1.0, coeffs)
    assert out_lo.event == BulkEvent.VANISH_E
    assert out_hi.event == BulkEvent.VANISH_P


def test_vanish_event_state(coeffs):
    out = integrate_bulk(1.0, 1.0, coeffs)
    st = out.state_at_event
    assert out.event == BulkEvent.VANISH_P
    assert abs(st.u_p) < 1e-10
    assert st.u_e > 0.0
    assert out.r_p == pytest.approx(out.event_radius)


def test_special_ray_simultaneous(coeffs, kd):
    out = integrate_bulk(1.0, kd ** (2.0 / 3.0), coeffs)
    assert out.event == BulkEvent.SIMULTANEOUS_VANISH
    assert abs(out.r_e - out.r_p) < 1e-6 * out.event_radius


def test_sign_structure_never_both_increasing(coeffs):
    for beta in (0.83, 0.9085, 1.05):
        out = integrate_bulk(1.0, beta, coeffs)
        rs = np.linspace(out.trajectory.r_start, out.event_radius, 801)
        Y = out.trajectory.sample(rs)
        both_up = (Y[:, 1] > 1e-12) & (Y[:, 3] > 1e-12)
        assert not both_up.any()


def test_turning_point_monotonicity(coeffs):
    # after the turning radius the increasing density never decreases again
    out = integrate_bulk(1.0, 0.83, coeffs)
    assert out.event == BulkEvent.VANISH_E
    assert out.turning_radius is not None
    rs = np.linspace(out.turning_radius * 1.001, out.event_radius, 400)
    du_p = out.trajectory.sample(rs)[:, 1]
    assert np.all(du_p > -1e-9)


def test_increasing_density_stays_bounded(coeffs):
    # the rising species is bounded by a modest multiple of its turning value
    out = integrate_bulk(1.0, 0.83, coeffs)
    rs = np.linspace(out.turning_radius, out.event_radius, 400)
    u_p = out.trajectory.sample(rs)[:, 0]
    u_turn = out.trajectory.sample(np.array([out.turning_radius]))[0, 0]
    assert np.max(u_p) < 20.0 * u_turn


def test_comparison_no_crossing(coeffs):
    # equal alpha, beta1 > beta2: electron curves keep their order
    o1 = integrate_bulk(1.0, 0.95, coeffs)
    o2 = integrate_bulk(1.0, 0.90, coeffs)
    r_end = min(o1.event_radius, o2.event_radius) * 0.999
    rs = np.linspace(o1.trajectory.r_start, r_end, 500)
    u1 = o1.trajectory.sample(rs)[:, 2]
    u2 = o2.trajectory.sample(rs)[:, 2]
    assert np.all(u1 - u2 > -1e-10)


def test_halving_tolerance_regression(coeffs):
    # local well-posedness: solutions move by O(tol) under tolerance halving
    fine = 5e-11
    o1 = integrate_bulk(1.0, 0.95, coeffs, BulkOptions(rtol=2 * fine))
    o2 = integrate_bulk(1.0, 0.95, coeffs, BulkOptions(rtol=fine))
    rs = np.linspace(o1.trajectory.r_start,
                     min(o1.event_radius, o2.event_radius) * 0.999, 300)
    gap = np.max(np.abs(o1.trajectory.sample(rs) - o2.trajectory.sample(rs)))
    assert gap < 10.0 * fine * 100.0  # generous constant, scale ~ alpha


def test_rejects_outside_window(coeffs):
    with pytest.raises(NonPositiveInput):
        integrate_bulk(1.0, 3.0, coeffs)
