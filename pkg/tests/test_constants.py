import math

import pytest

from tfstar import (ConstantSet, RatioVerdict, check_ratio, derive_coefficients,
                    desk_constants, load_constants, ratio_window)
from tfstar.errors import InadmissibleConstants, NonPositiveInput

TWELVE_PI = 12.0 * math.pi


def make(G=0.05, k_e=1.0, k_p=0.5, m_e=1.0, m_p=2.0, q=1.0, c=10.0, h=3.7):
    return ConstantSet(h=h, c=c, G=G, q=q, m_e=m_e, m_p=m_p, k_e=k_e, k_p=k_p)


def test_desk_coefficients_closed_form(coeffs):
    # direct arithmetic on the closed forms with the desk numbers
    assert coeffs.F == pytest.approx(TWELVE_PI / 2.5 * 0.8, rel=1e-15)
    assert coeffs.B == pytest.approx(TWELVE_PI / 5.0 * 0.95, rel=1e-15)
    assert coeffs.E == pytest.approx(TWELVE_PI / 2.5 * 1.1, rel=1e-15)
    assert coeffs.A == pytest.approx(TWELVE_PI / 5.0 * 1.1, rel=1e-15)
    assert coeffs.D_e == coeffs.B
    assert coeffs.D_p == coeffs.F


def test_desk_h_reproduces_prefactors(consts):
    from tfstar.constants import kinetic_prefactor

    assert kinetic_prefactor(consts.h, consts.m_e) == pytest.approx(1.0, rel=1e-14)
    assert kinetic_prefactor(consts.h, consts.m_p) == pytest.approx(0.5, rel=1e-14)


def test_zero_gravity_degenerates():
    c = make(G=0.0, k_p=1.0, m_p=2.0)
    k = derive_coefficients(c)
    assert k.A == k.B == k.E == k.F


def test_gravity_dominant_rejected():
    with pytest.raises(InadmissibleConstants):
        derive_coefficients(make(G=0.3))  # G m_p^2 = 1.2 > q^2


def test_invariant_ordering(coeffs):
    assert coeffs.F < coeffs.E
    assert coeffs.B < coeffs.A
    assert coeffs.E * coeffs.A > coeffs.B * coeffs.F


@pytest.mark.parametrize("G,mp,ke,kp", [
    (0.01, 1.5, 1.0, 0.7), (0.2, 2.0, 2.0, 0.9), (0.002, 10.0, 0.3, 0.05),
])
def test_invariant_ordering_other_sets(G, mp, ke, kp):
    c = make(G=G, m_p=mp, k_e=ke, k_p=kp)
    if c.q**2 <= G * mp**2:
        pytest.skip("outside screened regime")
    k = derive_coefficients(c)
    assert k.F < k.E and k.B < k.A and k.E * k.A > k.B * k.F


def test_ratio_window_desk(windows):
    assert windows.ratio_lo == pytest.approx(0.8 / 1.1, rel=1e-15)
    assert windows.ratio_hi == pytest.approx(1.1 / 0.95, rel=1e-15)
    assert windows.central_lo == pytest.approx((0.95 / 1.1) ** (2 / 3), rel=1e-14)
    assert windows.central_hi == pytest.approx((1.1 / 0.8) ** (2 / 3), rel=1e-14)


def test_ratio_window_zero_gravity():
    w = ratio_window(make(G=0.0, k_p=1.0))
    assert w.ratio_lo == w.ratio_hi == 1.0


def test_window_shrinks_monotonically_with_G():
    widths = [ratio_window(make(G=G)).ratio_hi - ratio_window(make(G=G)).ratio_lo
              for G in (0.2, 0.1, 0.05, 0.01, 0.001)]
    assert all(w1 > w2 > 0.0 for w1, w2 in zip(widths, widths[1:]))


def test_window_brackets_unity(windows):
    assert windows.ratio_lo < 1.0 < windows.ratio_hi
    assert windows.central_lo < 1.0 < windows.central_hi


def test_central_window_ordering_when_prefactors_differ():
    w = ratio_window(make(k_e=0.2, k_p=3.0, m_p=1.5))
    assert w.central_lo < w.central_hi


def test_check_ratio(windows):
    assert check_ratio(2.0, 2.0, windows) == RatioVerdict.ADMISSIBLE
    assert check_ratio(windows.ratio_hi, 1.0, windows) == RatioVerdict.BOUNDARY
    assert check_ratio(2.0, 1.0, windows) == RatioVerdict.INADMISSIBLE
    with pytest.raises(NonPositiveInput):
        check_ratio(-1.0, 1.0, windows)


def test_constants_validation():
    with pytest.raises(InadmissibleConstants):
        make(m_p=0.5).validate()  # m_p < m_e
    with pytest.raises(InadmissibleConstants):
        ConstantSet(h=1, c=1, G=0.01, q=-1, m_e=1, m_p=2, k_e=1, k_p=1).validate()


def test_json_roundtrip(tmp_path, consts):
    path = tmp_path / "consts.json"
    path.write_text(
        '{"h": %r, "c": 10.0, "G": 0.05, "q": 1.0, "m_e": 1.0, "m_p": 2.0,'
        ' "k_e": 1.0, "k_p": 0.5}' % consts.h
    )
    loaded = load_constants(path)
    assert loaded == consts


def test_json_missing_key(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"h": 1.0}')
    with pytest.raises(InadmissibleConstants):
        load_constants(path)


def test_desk_constants_valid():
    desk_constants().validate()
