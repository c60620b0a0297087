import math

import numpy as np
import pytest

from tfstar import (AtmoSpecies, SupportKind, apply_scaling, counts,
                    invert_counts, regime_sweep, solve_profile)
from tfstar.errors import Inadmissible, InadmissibleRatio
from tfstar.profiles import RadialProfile
from tfstar.shoot import InvertOptions


def test_special_ray_classification(consts, kd):
    sol = solve_profile(1.0, kd ** (2.0 / 3.0), consts)
    assert sol.species == AtmoSpecies.SPECIAL
    assert sol.support == SupportKind.COMPACT
    # pointwise proportionality makes the count ratio exactly k_d
    assert sol.counts.ratio == pytest.approx(kd, rel=1e-8)


def test_regime_flip_across_special(consts, kd):
    beta_star = kd ** (2.0 / 3.0)
    lo = solve_profile(1.0, beta_star * (1.0 - 2e-5), consts)
    hi = solve_profile(1.0, beta_star * (1.0 + 2e-5), consts)
    assert lo.species == AtmoSpecies.PROTON      # electrons vanished first
    assert hi.species == AtmoSpecies.ELECTRON
    assert lo.counts.ratio < kd < hi.counts.ratio


def test_inadmissible_gate(consts):
    with pytest.raises(Inadmissible):
        solve_profile(1.0, 3.0, consts)


def test_counts_uniform_ball_oracle():
    # u^(3/2) = c on [0, R]: N = (4/3) pi R^3 c
    R, c = 1.7, 0.6
    r = np.linspace(1e-9, R, 4097)
    u = np.full_like(r, c ** (2.0 / 3.0))
    prof = RadialProfile(r=r, u_e=u, u_p=np.zeros_like(r),
                         du_e=np.zeros_like(r), du_p=np.zeros_like(r),
                         i_bulk_end=len(r) - 1, survivor=None, R0=R, R1=R)
    got = counts(prof, quad_tol=1e-6)  # uniform density has no vanish cusp
    assert got.N_e == pytest.approx(4.0 / 3.0 * math.pi * R**3 * c, rel=1e-6)


def test_counts_refinement_converged(interior_solution):
    assert interior_solution.counts.err < 1e-8


def test_counts_positive_finite(interior_solution, windows):
    c = interior_solution.counts
    assert 0.0 < c.N_e < math.inf and 0.0 < c.N_p < math.inf
    assert windows.ratio_lo <= c.ratio <= windows.ratio_hi


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_apply_scaling_counts_law(interior_solution, lam):
    scaled = apply_scaling(interior_solution, lam)
    base = interior_solution.counts
    assert scaled.species == interior_solution.species
    assert scaled.support == interior_solution.support
    # change-of-variables oracle: N -> lam^(3/4) N for both species
    assert scaled.counts.N_e / base.N_e == pytest.approx(lam**0.75, rel=1e-8)
    assert scaled.counts.N_p / base.N_p == pytest.approx(lam**0.75, rel=1e-8)
    assert scaled.counts.ratio == pytest.approx(base.ratio, rel=1e-10)
    assert scaled.R0 == pytest.approx(interior_solution.R0 / lam**0.25, rel=1e-12)


def test_apply_scaling_identity(interior_solution):
    same = apply_scaling(interior_solution, 1.0)
    assert same.counts.N_e == pytest.approx(interior_solution.counts.N_e, rel=1e-14)
    assert np.array_equal(same.profile.r, interior_solution.profile.r)


def test_scaled_profile_satisfies_system(consts, coeffs, interior_solution):
    # re-solve at the scaled central pair and compare pointwise
    lam = 2.0
    scaled = apply_scaling(interior_solution, lam)
    direct = solve_profile(scaled.alpha, scaled.beta, consts)
    rs = np.linspace(scaled.profile.r[0] * 2.0, scaled.R0 * 0.999, 200)
    a = scaled.profile
    b = direct.profile
    for arr_a, arr_b in ((a.u_e, b.u_e), (a.u_p, b.u_p)):
        ia = np.interp(rs, a.r, arr_a)
        ib = np.interp(rs, b.r, arr_b)
        assert np.max(np.abs(ia - ib)) < 1e-6 * lam


def test_scaled_profile_residual(interior_solution, coeffs):
    # finite-difference residual of the scaled arrays against the system
    from tfstar.shoot import bulk_residual

    scaled = apply_scaling(interior_solution, 2.0)
    assert bulk_residual(scaled.profile, coeffs) < 1e-6


def test_compact_window_brackets_special(window_at_1, kd):
    beta_lo, beta_hi = window_at_1
    assert beta_lo < kd ** (2.0 / 3.0) < beta_hi


def test_sweep_structure_and_endpoints(consts, window_at_1, windows, kd):
    beta_lo, beta_hi = window_at_1
    grid = np.concatenate([
        np.linspace(0.82, beta_lo - 1e-4, 3),          # non-integrable side
        np.linspace(beta_lo + 1e-6, beta_hi - 1e-6, 7),  # compact band
        np.linspace(beta_hi + 1e-4, 1.09, 3),          # non-integrable side
    ])
    res = regime_sweep(1.0, grid, consts, workers=2)
    kinds = [row.classification for row in res.rows]
    assert all(k == "non_integrable" for k in kinds[:3])
    assert all(k == "non_integrable" for k in kinds[-3:])
    inner = kinds[3:-3]
    assert all(k in ("proton/compact", "electron/compact", "special/compact")
               for k in inner)
    # both vanish branches occur across the compact band
    assert any(k == "proton/compact" for k in inner)
    assert any(k == "electron/compact" for k in inner)
    # the observed ordering has the proton atmosphere on the low-beta side
    # (the mirror of the sketch in the planning notes); report, don't fail
    flips = sum(1 for k1, k2 in zip(inner, inner[1:]) if k1 != k2)
    assert flips <= 2

    # monotone ratio across the compact rows backs the inversion bisection
    ratios = [row.ratio for row in res.rows[3:-3]]
    assert all(r2 > r1 for r1, r2 in zip(ratios, ratios[1:]))

    # endpoints are critical and carry tails
    assert res.endpoint_lo.support == SupportKind.CRITICAL
    assert res.endpoint_hi.support == SupportKind.CRITICAL
    assert res.endpoint_lo.profile.tail is not None
    # their count ratios approach the closed-form bounds (tested at 1% in
    # the acceptance suite; sanity margin here)
    assert res.endpoint_lo.counts.ratio == pytest.approx(windows.ratio_lo, rel=0.02)
    assert res.endpoint_hi.counts.ratio == pytest.approx(windows.ratio_hi, rel=0.02)


def test_sweep_scales_with_alpha(consts, window_at_1):
    from tfstar import compact_window

    beta_lo, beta_hi = window_at_1
    lam = 2.0
    lo2, hi2 = compact_window(lam, consts)
    assert lo2 == pytest.approx(lam * beta_lo, rel=1e-7)
    assert hi2 == pytest.approx(lam * beta_hi, rel=1e-7)


def test_invert_roundtrip_single(consts, interior_solution):
    target = interior_solution.counts
    alpha, beta = invert_counts(target.N_e, target.N_p, consts)
    sol = solve_profile(alpha, beta, consts)
    assert sol.counts.N_e == pytest.approx(target.N_e, rel=1e-6)
    assert sol.counts.N_p == pytest.approx(target.N_p, rel=1e-6)
    # canonical pair is scaling-equivalent to the original
    assert beta / alpha == pytest.approx(
        interior_solution.beta / interior_solution.alpha, rel=1e-9)


def test_invert_special_ratio_lands_on_ray(consts, kd):
    alpha, beta = invert_counts(kd * 5.0, 5.0, consts)
    assert beta / alpha == pytest.approx(kd ** (2.0 / 3.0), rel=1e-7)


def test_invert_rejects_outside_window(consts):
    with pytest.raises(InadmissibleRatio):
        invert_counts(2.0, 1.0, consts)


def test_invert_boundary_flag(consts, windows):
    with pytest.raises(InadmissibleRatio):
        invert_counts(windows.ratio_lo, 1.0, consts)
    alpha, beta = invert_counts(
        windows.ratio_lo, 1.0, consts,
        inv=InvertOptions(allow_boundary=True))
    sol = solve_profile(alpha, beta, consts)
    assert sol.support == SupportKind.CRITICAL
    assert sol.counts.ratio == pytest.approx(windows.ratio_lo, rel=0.01)
