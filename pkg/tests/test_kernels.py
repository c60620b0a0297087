import math

import numpy as np
import pytest

from tfstar import _kernels as K


def test_dense_output_matrix_matches_scipy():
    # transcription guard: the embedded Shampine interpolant coefficients
    from scipy.integrate import RK45

    assert np.allclose(K.DENSE_P, RK45.P, rtol=0, atol=1e-15)


def test_lane_emden_n1_analytic():
    h = 1e-8
    y0 = [1 - h * h / 6, -h / 3]
    tr = K.integrate(K.SYS_LANE, [1.0], y0, h, 10.0, rtol=1e-12, atol=1e-14)
    assert tr.status == K.STATUS_EVENT0
    assert tr.r_event == pytest.approx(math.pi, abs=1e-10)
    rs = np.linspace(0.2, 3.0, 57)
    theta = tr.sample(rs)[:, 0]
    assert np.max(np.abs(theta - np.sin(rs) / rs)) < 1e-10


def test_tolerance_scaling():
    h = 1e-8
    y0 = [1 - h * h / 6, -h / 3]
    errs = []
    for rtol in (1e-6, 1e-9, 1e-12):
        tr = K.integrate(K.SYS_LANE, [1.0], y0, h, 10.0, rtol=rtol, atol=1e-15)
        errs.append(abs(tr.r_event - math.pi))
    assert errs[0] > errs[2]
    assert errs[2] < 1e-10


def test_event_interpolation_accuracy():
    # atmosphere from the exact decaying reference: u(r) = C/r^4 never hits 0,
    # but a clearly sub-critical slope closes where the dense output says
    D = 2.0
    tr = K.integrate(K.SYS_ATMO, [D], [1.0, -5.0], 1.0, 50.0,
                     rtol=1e-12, atol=1e-15, cap=1e6)
    assert tr.status == K.STATUS_EVENT0
    u_at_event = tr.sample(np.array([tr.r_event]))[0, 0]
    assert abs(u_at_event) < 1e-12


def test_blowup_reports_cap():
    D = 2.0
    tr = K.integrate(K.SYS_ATMO, [D], [1.0, 0.5], 1.0, 1e4,
                     rtol=1e-9, atol=1e-12, cap=1e3)
    assert tr.status == K.STATUS_EVENT2  # hit the cap going up


def test_turning_radius_recorded(coeffs):
    # near the window edge one derivative turns positive before the vanish
    from tfstar.bulk import integrate_bulk

    out = integrate_bulk(1.0, 0.8120, coeffs)
    assert out.turning_radius is not None
    assert 0.0 < out.turning_radius < out.event_radius


def test_max_steps_status():
    tr = K.integrate(K.SYS_LANE, [1.0], [1.0, 0.0], 1e-8, 10.0,
                     rtol=1e-12, atol=1e-15, max_steps=8)
    assert tr.status == K.STATUS_MAXSTEPS


def test_sample_matches_nodes():
    h = 1e-8
    tr = K.integrate(K.SYS_LANE, [1.5], [1 - h * h / 6, -h / 3], h, 3.0,
                     rtol=1e-10, atol=1e-14)
    got = tr.sample(tr.ts[1:-1])
    assert np.allclose(got, tr.ys[1:-1], rtol=0, atol=1e-13)
