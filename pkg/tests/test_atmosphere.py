import math

import numpy as np
import pytest

from tfstar import (AtmosphereKind, AtmoOptions, critical_slope,
                    decaying_reference, integrate_atmosphere, tail_mass)
from tfstar.errors import EnvelopeFitFailure, InvalidHandoff


def test_decaying_reference_values():
    assert decaying_reference(2.0, 1.0) == pytest.approx(9.0, rel=1e-15)
    assert decaying_reference(1.0, 12.0) == pytest.approx(1.0, rel=1e-15)


def test_decaying_reference_solves_ode():
    # v'' + (2/r)v' - D v^(3/2) = 0 identically
    D = 3.0
    r = np.linspace(0.5, 20.0, 101)
    v = decaying_reference(r, D)
    C = 144.0 / D**2
    lhs = 20.0 * C / r**6 + (2.0 / r) * (-4.0 * C / r**5)
    assert np.max(np.abs(lhs - D * v**1.5) / (D * v**1.5)) < 1e-12


def test_zero_slope_unbounded_immediately(coeffs):
    out = integrate_atmosphere(1.0, 1.0, 0.0, coeffs.D_p)
    assert out.kind == AtmosphereKind.UNBOUNDED
    assert out.r_end == 1.0


def test_exact_critical_initial_data(coeffs):
    D = coeffs.D_p
    R0 = 1.5
    a = 144.0 / (D * D * R0**4)
    b = -4.0 * a / R0
    out = integrate_atmosphere(R0, a, b, D)
    assert out.kind == AtmosphereKind.CRITICAL_DECAY
    # one decade of radius, before float drift along the saddle grows
    rs = np.linspace(R0, 10.0 * R0, 400)
    u = out.trajectory.sample(rs)[:, 0]
    dev = np.max(np.abs(u * rs**4 * D * D / 144.0 - 1.0))
    assert dev < 1e-4
    assert out.tail is not None


def test_steep_slope_compact_near_R0(coeffs):
    out = integrate_atmosphere(1.0, 1.0, -50.0, coeffs.D_p)
    assert out.kind == AtmosphereKind.COMPACT
    assert out.R1 < 1.05


def test_critical_slope_exact_reference(coeffs):
    D = coeffs.D_p
    for R0 in (0.7, 1.7):
        a = 144.0 / (D * D * R0**4)
        b_hat = critical_slope(R0, a, D, tol=1e-13)
        assert b_hat == pytest.approx(-4.0 * a / R0, rel=1e-11)


def test_trichotomy_around_critical_slope(coeffs):
    D = coeffs.D_e
    R0, a = 1.3, 0.9
    b_hat = critical_slope(R0, a, D, tol=1e-12)
    delta = 1e-6 * abs(b_hat)
    below = integrate_atmosphere(R0, a, b_hat - delta, D)
    above = integrate_atmosphere(R0, a, b_hat + delta, D)
    assert below.kind == AtmosphereKind.COMPACT
    assert above.kind == AtmosphereKind.UNBOUNDED


def test_above_reference_stays_below_matched_envelope(coeffs):
    # a > v(R0): the decaying solution obeys u <= (a R0^4) / r^4
    D = coeffs.D_p
    R0 = 1.0
    a = 2.0 * decaying_reference(R0, D)
    b_hat = critical_slope(R0, a, D, tol=1e-12)
    out = integrate_atmosphere(R0, a, b_hat, D)
    rs = np.linspace(R0 * 1.01, out.r_end, 500)
    u = out.trajectory.sample(rs)[:, 0]
    assert np.all(u <= a * R0**4 / rs**4 * (1.0 + 1e-9))


def test_scaled_critical_stays_critical(coeffs):
    # the solution-scaling map u -> lam u(lam^(1/4) r) preserves criticality
    D = coeffs.D_p
    R0, a = 1.1, 0.8
    b_hat = critical_slope(R0, a, D, tol=1e-13)
    lam = 2.0
    s = lam**0.25
    b_scaled = critical_slope(R0 / s, lam * a, D, tol=1e-13)
    assert b_scaled == pytest.approx(lam * s * b_hat, rel=1e-9)


def test_slope_ordering(coeffs):
    D = coeffs.D_p
    R0, a = 1.0, 1.0
    b_hat = critical_slope(R0, a, D)
    slopes = [b_hat * f for f in (2.0, 1.5, 1.2)]  # more negative first
    radii = [integrate_atmosphere(R0, a, b, D).R1 for b in slopes]
    assert radii[0] < radii[1] < radii[2]


def test_no_oscillation(coeffs):
    # once du >= 0 with u > 0, du never dips negative again
    D = coeffs.D_p
    out = integrate_atmosphere(1.0, 1.0, -0.5, D,
                               AtmoOptions(blowup_cap_factor=1e4))
    assert out.kind == AtmosphereKind.UNBOUNDED
    rs = np.linspace(1.0, out.r_end, 800)
    Y = out.trajectory.sample(rs)
    turned = np.flatnonzero(Y[:, 1] >= 0.0)
    if len(turned):
        assert np.all(Y[turned[0]:, 1] >= -1e-12)


def test_unbounded_exceeds_any_cap(coeffs):
    # run past the conclusive turning point: u still blows through the cap
    D = coeffs.D_p
    out = integrate_atmosphere(1.0, 1.0, -0.5, D,
                               AtmoOptions(blowup_cap_factor=1e5,
                                           stop_at_turning=False,
                                           r_max_factor=1e4))
    assert out.kind == AtmosphereKind.UNBOUNDED
    assert out.blowup
    u_end = out.trajectory.sample(np.array([out.r_end]))[0, 0]
    assert u_end > 1e4


def test_tail_mass_exact_reference():
    # oracle: integral of 4 pi r^2 (C/r^4)^(3/2) dr from R = 4 pi C^(3/2)/(3 R^3)
    D = 2.0
    C = 144.0 / D**2
    r = np.geomspace(1.0, 30.0, 500)
    u = C / r**4
    mass, tail = tail_mass(r, u)
    R = r[-1]
    assert mass == pytest.approx(4.0 * math.pi * C**1.5 / (3.0 * R**3), rel=1e-12)
    assert tail.c == pytest.approx(C, rel=1e-12)
    # doubling the cutoff reduces the tail by 8x
    r2 = np.geomspace(1.0, 60.0, 500)
    mass2, _ = tail_mass(r2, C / r2**4)
    assert mass / mass2 == pytest.approx(8.0, rel=1e-10)


def test_tail_mass_rejects_compact(interior_solution):
    prof = interior_solution.profile
    i0 = prof.i_bulk_end
    with pytest.raises(EnvelopeFitFailure):
        tail_mass(prof.r[i0:], prof.u_e[i0:])


def test_invalid_handoff():
    with pytest.raises(InvalidHandoff):
        integrate_atmosphere(1.0, -1.0, -1.0, 2.0)
    with pytest.raises(InvalidHandoff):
        critical_slope(-1.0, 1.0, 2.0)
