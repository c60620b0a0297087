"""Adaptive Dormand-Prince 4(5) integration kernels for the radial systems.

Every hot inner loop of the package lives in this module.  The functions are
compiled with numba when it is importable; setting ``TFSTAR_JIT=0`` in the
environment forces the pure-Python/NumPy fallback (same code path, no
compilation).  ``scripts/bench_jit.py`` compares the two.

The stepper is the standard Dormand-Prince embedded 5(4) pair with the
Shampine quartic interpolant for dense output.  Events are located by
bisection on the interpolant of the affected component.
"""

from __future__ import annotations

import math
import os

import numpy as np

JIT_ENABLED = os.environ.get("TFSTAR_JIT", "1").strip().lower() not in (
    "0", "false", "no", "off",
)

if JIT_ENABLED:
    try:
        from numba import njit as _njit

        def _jit(func):
            return _njit(cache=True, nogil=True)(func)

    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False

if not JIT_ENABLED:

    def _jit(func):
        return func


# System identifiers (params layout in parentheses)
SYS_BULK = 0      # (F, E, A, B)           y = [u_p, du_p, u_e, du_e]
SYS_ATMO = 1      # (D, stop_at_turning)   y = [u, du]
SYS_LANE = 2      # (n,)                   y = [theta, dtheta]
SYS_REL = 3       # (Cpp, Cpe, Cep, Cee)   y = [w_p, dw_p, w_e, dw_e], w = y_f - 1
SYS_RELATMO = 4   # (Css,)                 y = [w, dw]
SYS_CHANDRA = 5   # (level,)               y = [y, dy], level = 1/y0

# Driver status codes
STATUS_RMAX = 0
STATUS_EVENT0 = 1
STATUS_EVENT1 = 2
STATUS_EVENT2 = 3
STATUS_UNDERFLOW = -1
STATUS_MAXSTEPS = -2

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5, _C6 = 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# error weights: 5th-order minus embedded 4th-order
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
)

# Shampine dense-output matrix: y(t0 + th*h) = y0 + h * sum_s K[s] * poly_s(th),
# poly_s(th) = sum_j P[s, j] * th^(j+1)
DENSE_P = np.array([
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
])


@_jit
def _pc15(x):
    """Clamped 3/2 power; keeps the right-hand sides real during bracketing."""
    if x <= 0.0:
        return 0.0
    return x * math.sqrt(x)


@_jit
def _rhs(kind, r, y, params, out):
    inv = 2.0 / r
    if kind == SYS_BULK:
        F = params[0]; E = params[1]; A = params[2]; B = params[3]
        gp = _pc15(y[0])
        ge = _pc15(y[2])
        out[0] = y[1]
        out[1] = -inv * y[1] + F * gp - E * ge
        out[2] = y[3]
        out[3] = -inv * y[3] - A * gp + B * ge
    elif kind == SYS_ATMO:
        out[0] = y[1]
        out[1] = -inv * y[1] + params[0] * _pc15(y[0])
    elif kind == SYS_LANE:
        th = y[0]
        p = 0.0 if th <= 0.0 else th ** params[0]
        out[0] = y[1]
        out[1] = -inv * y[1] - p
    elif kind == SYS_REL:
        gp = _pc15(y[0] * (y[0] + 2.0))
        ge = _pc15(y[2] * (y[2] + 2.0))
        out[0] = y[1]
        out[1] = -inv * y[1] + params[0] * gp - params[1] * ge
        out[2] = y[3]
        out[3] = -inv * y[3] - params[2] * gp + params[3] * ge
    elif kind == SYS_RELATMO:
        out[0] = y[1]
        out[1] = -inv * y[1] + params[0] * _pc15(y[0] * (y[0] + 2.0))
    else:  # SYS_CHANDRA
        lvl = params[0]
        out[0] = y[1]
        out[1] = -inv * y[1] - _pc15(y[0] * y[0] - lvl * lvl)


@_jit
def _n_events(kind):
    if kind == SYS_BULK or kind == SYS_REL:
        return 2
    if kind == SYS_ATMO or kind == SYS_RELATMO:
        return 3
    return 1


@_jit
def _event_value(kind, iev, y, cap, params):
    """Signed event functions; a terminal event fires on the stated crossing.

    BULK/REL:   ev0 = u_p (w_p) down, ev1 = u_e (w_e) down
    ATMO/RELATMO: ev0 = u down, ev1 = du up, ev2 = cap - u down (blowup cap)
    LANE:       ev0 = theta down
    CHANDRA:    ev0 = y - level down
    """
    if kind == SYS_BULK or kind == SYS_REL:
        if iev == 0:
            return y[0]
        return y[2]
    if kind == SYS_ATMO or kind == SYS_RELATMO:
        if iev == 0:
            return y[0]
        if iev == 1:
            if kind == SYS_ATMO and params[1] < 0.5:
                return -1.0  # turning stop disabled; never crosses upward
            return y[1]
        return cap - y[0]
    if kind == SYS_LANE:
        return y[0]
    return y[0] - params[0]


@_jit
def _event_direction(kind, iev):
    """-1 for downward crossings, +1 for upward."""
    if (kind == SYS_ATMO or kind == SYS_RELATMO) and iev == 1:
        return 1
    return -1


@_jit
def _dense_eval(y0, h, K, n, th, out):
    for j in range(n):
        acc = 0.0
        for s in range(7):
            p = th * (DENSE_P[s, 0] + th * (DENSE_P[s, 1] + th * (DENSE_P[s, 2] + th * DENSE_P[s, 3])))
            acc += K[s, j] * p
        out[j] = y0[j] + h * acc


@_jit
def _bisect_event(kind, iev, y0, h, K, n, va, cap, params, scratch):
    """Locate the crossing of event ``iev`` inside the step; returns theta."""
    lo = 0.0
    hi = 1.0
    sa = va
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        _dense_eval(y0, h, K, n, mid, scratch)
        vm = _event_value(kind, iev, scratch, cap, params)
        if (sa > 0.0 and vm > 0.0) or (sa < 0.0 and vm < 0.0):
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return hi


@_jit
def _drive(kind, params, y0, n, r0, r_max, rtol, atol, h0, max_step, cap,
           max_steps, ts, hs, ys, ks, yev):
    """Integrate one radial system with events.

    Fills ``ts[0..m]``, per-step sizes ``hs[0..m-1]``, states ``ys`` and
    stage arrays ``ks``; returns (status, m, r_event, turning0, turning1).
    Turning radii record the first upward crossing of du_p / du_e (bulk only).
    """
    nev = _n_events(kind)
    y = np.empty(n)
    ynew = np.empty(n)
    ystage = np.empty(n)
    f = np.empty(n)
    K = np.empty((7, n))
    scratch = np.empty(n)
    ev_old = np.empty(3)
    ev_new = np.empty(3)

    for j in range(n):
        y[j] = y0[j]
    r = r0
    _rhs(kind, r, y, params, f)

    m = 0
    ts[0] = r
    for j in range(n):
        ys[0, j] = y[j]

    turning0 = -1.0
    turning1 = -1.0
    status = STATUS_RMAX
    r_event = r_max

    h = h0
    if h > max_step:
        h = max_step
    hmin = 1e-15 * (r_max - r0) + 1e-300

    for iev in range(nev):
        ev_old[iev] = _event_value(kind, iev, y, cap, params)

    while True:
        if r >= r_max:
            status = STATUS_RMAX
            r_event = r
            break
        if m >= max_steps - 1:
            status = STATUS_MAXSTEPS
            r_event = r
            break
        if h < hmin:
            status = STATUS_UNDERFLOW
            r_event = r
            break
        if r + h > r_max:
            h = r_max - r

        # stages
        for j in range(n):
            K[0, j] = f[j]
        for j in range(n):
            ystage[j] = y[j] + h * _A21 * K[0, j]
        _rhs(kind, r + _C2 * h, ystage, params, K[1])
        for j in range(n):
            ystage[j] = y[j] + h * (_A31 * K[0, j] + _A32 * K[1, j])
        _rhs(kind, r + _C3 * h, ystage, params, K[2])
        for j in range(n):
            ystage[j] = y[j] + h * (_A41 * K[0, j] + _A42 * K[1, j] + _A43 * K[2, j])
        _rhs(kind, r + _C4 * h, ystage, params, K[3])
        for j in range(n):
            ystage[j] = y[j] + h * (_A51 * K[0, j] + _A52 * K[1, j] + _A53 * K[2, j] + _A54 * K[3, j])
        _rhs(kind, r + _C5 * h, ystage, params, K[4])
        for j in range(n):
            ystage[j] = y[j] + h * (_A61 * K[0, j] + _A62 * K[1, j] + _A63 * K[2, j]
                                    + _A64 * K[3, j] + _A65 * K[4, j])
        _rhs(kind, r + _C6 * h, ystage, params, K[5])
        for j in range(n):
            ynew[j] = y[j] + h * (_B1 * K[0, j] + _B3 * K[2, j] + _B4 * K[3, j]
                                  + _B5 * K[4, j] + _B6 * K[5, j])
        _rhs(kind, r + h, ynew, params, K[6])

        # embedded error estimate
        err = 0.0
        for j in range(n):
            e = h * (_E1 * K[0, j] + _E3 * K[2, j] + _E4 * K[3, j]
                     + _E5 * K[4, j] + _E6 * K[5, j] + _E7 * K[6, j])
            ay = abs(y[j])
            an = abs(ynew[j])
            sc = atol + rtol * (ay if ay > an else an)
            q = e / sc
            err += q * q
        err = math.sqrt(err / n)

        if err > 1.0:
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
            continue

        # accepted: check events over this step
        hit = -1
        th_hit = 2.0
        for iev in range(nev):
            ev_new[iev] = _event_value(kind, iev, ynew, cap, params)
            d = _event_direction(kind, iev)
            crossed = (d < 0 and ev_old[iev] > 0.0 and ev_new[iev] <= 0.0) or \
                      (d > 0 and ev_old[iev] < 0.0 and ev_new[iev] >= 0.0)
            if not crossed:
                continue
            th = _bisect_event(kind, iev, y, h, K, n, ev_old[iev], cap, params, scratch)
            if th < th_hit:
                th_hit = th
                hit = iev

        # bulk turning radii (non-terminal): first upward crossing of du
        if kind == SYS_BULK:
            if turning0 < 0.0 and y[1] < 0.0 and ynew[1] >= 0.0:
                turning0 = r + h * _bisect_turn(kind, 1, y, h, K, n, params, scratch)
            if turning1 < 0.0 and y[3] < 0.0 and ynew[3] >= 0.0:
                turning1 = r + h * _bisect_turn(kind, 3, y, h, K, n, params, scratch)

        if hit >= 0:
            r_event = r + th_hit * h
            _dense_eval(y, h, K, n, th_hit, scratch)
            m += 1
            ts[m] = r_event
            hs[m - 1] = h
            for j in range(n):
                ys[m, j] = scratch[j]
                for s in range(7):
                    ks[m - 1, s, j] = K[s, j]
            for j in range(n):
                yev[j] = scratch[j]
            status = STATUS_EVENT0 + hit
            break

        # store accepted step
        m += 1
        ts[m] = r + h
        hs[m - 1] = h
        for j in range(n):
            ys[m, j] = ynew[j]
            for s in range(7):
                ks[m - 1, s, j] = K[s, j]

        r += h
        for j in range(n):
            y[j] = ynew[j]
            f[j] = K[6, j]
        for iev in range(nev):
            ev_old[iev] = ev_new[iev]

        fac = 5.0 if err == 0.0 else 0.9 * err ** -0.2
        if fac > 5.0:
            fac = 5.0
        h *= fac
        if h > max_step:
            h = max_step

    return status, m, r_event, turning0, turning1


@_jit
def _bisect_turn(kind, comp, y0, h, K, n, params, scratch):
    """Bisect the upward zero crossing of state component ``comp``."""
    lo = 0.0
    hi = 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        _dense_eval(y0, h, K, n, mid, scratch)
        if scratch[comp] < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


@_jit
def _sample(ts, hs, ys, ks, m, n, qs, out):
    """Evaluate the dense output at sorted query radii ``qs``."""
    scratch = np.empty(n)
    i = 0
    for k in range(qs.shape[0]):
        q = qs[k]
        while i < m - 1 and q > ts[i + 1]:
            i += 1
        th = (q - ts[i]) / hs[i]
        if th < 0.0:
            th = 0.0
        _dense_eval(ys[i], hs[i], ks[i], n, th, scratch)
        for j in range(n):
            out[k, j] = scratch[j]


class Trajectory:
    """Accepted-step mesh plus dense-output coefficients for one integration."""

    __slots__ = ("kind", "ts", "hs", "ys", "ks", "status", "r_event",
                 "turning_p", "turning_e", "n")

    def __init__(self, kind, ts, hs, ys, ks, status, r_event, turning_p, turning_e):
        self.kind = kind
        self.ts = ts
        self.hs = hs
        self.ys = ys
        self.ks = ks
        self.status = status
        self.r_event = r_event
        self.turning_p = turning_p
        self.turning_e = turning_e
        self.n = ys.shape[1]

    @property
    def r_start(self) -> float:
        return float(self.ts[0])

    @property
    def r_end(self) -> float:
        return float(self.ts[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.ys[-1]

    @property
    def n_steps(self) -> int:
        return self.ts.shape[0] - 1

    def sample(self, rs: np.ndarray) -> np.ndarray:
        """Dense-output states at sorted radii inside [r_start, r_end]."""
        rs = np.ascontiguousarray(rs, dtype=np.float64)
        out = np.empty((rs.shape[0], self.n))
        if self.n_steps == 0:
            out[:] = self.ys[0]
            return out
        _sample(self.ts, self.hs, self.ys, self.ks, self.ts.shape[0], self.n, rs, out)
        return out


def integrate(kind, params, y0, r0, r_max, rtol=1e-10, atol=1e-14,
              first_step=None, max_step=None, cap=np.inf, max_steps=60000):
    """Run the jitted driver and wrap the result.

    Interpretation of the terminal status is left to the callers (the same
    code serves the bulk, atmosphere, Lane-Emden, and relativistic systems).
    """
    params = np.asarray(params, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    n = y0.shape[0]
    if first_step is None:
        first_step = 1e-6 * (r_max - r0)
    if max_step is None:
        max_step = (r_max - r0) / 16.0
    ts = np.empty(max_steps + 1)
    hs = np.empty(max_steps)
    ys = np.empty((max_steps + 1, n))
    ks = np.empty((max_steps, 7, n))
    yev = np.empty(n)
    status, m, r_event, t0, t1 = _drive(
        kind, params, y0, n, float(r0), float(r_max), float(rtol), float(atol),
        float(first_step), float(max_step), float(cap), max_steps,
        ts, hs, ys, ks, yev,
    )
    return Trajectory(
        kind,
        ts[: m + 1].copy(),
        hs[:m].copy() if m > 0 else np.empty(0),
        ys[: m + 1].copy(),
        ks[:m].copy() if m > 0 else np.empty((0, 7, n)),
        int(status),
        float(r_event),
        float(t0),
        float(t1),
    )
