"""Coupled two-species integration from the center out to the first vanish.

With spherical symmetry and rho_f = u_f^(3/2) the system is

    u_p'' = -(2/r) u_p' + F u_p^(3/2) - E u_e^(3/2)
    u_e'' = -(2/r) u_e' - A u_p^(3/2) + B u_e^(3/2)

started from u_p(0)=alpha, u_e(0)=beta, u'(0)=0.  Only starts with
phi(0) = F alpha^(3/2) - E beta^(3/2) < 0 and
psi(0) = B beta^(3/2) - A alpha^(3/2) < 0 can decay, which pins the
central ratio to the window ((B/A)^(2/3), (E/F)^(2/3)).

Integration continues through a derivative turning point (at most one
species may turn increasing) until the decreasing species vanishes.  The
origin is handled by a second-order Taylor start, never by evaluating the
2/r term at r=0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .constants import CoefficientSet
from .errors import NonPositiveInput, NumericalBlowup


class BulkEvent(enum.Enum):
    VANISH_E = "vanish_e"
    VANISH_P = "vanish_p"
    SIMULTANEOUS_VANISH = "simultaneous_vanish"
    RADIUS_CAP = "radius_cap"


@dataclass(frozen=True)
class BulkState:
    r: float
    u_e: float
    u_p: float
    du_e: float
    du_p: float


@dataclass(frozen=True)
class SignCheck:
    ok: bool
    phi0: float
    psi0: float
    reason: str | None = None


@dataclass
class BulkOutcome:
    event: BulkEvent
    event_radius: float
    state_at_event: BulkState
    trajectory: K.Trajectory
    r_e: float | None          # electron vanish radius (may be extrapolated)
    r_p: float | None
    turning_radius: float | None

    @property
    def survivor(self) -> str | None:
        if self.event == BulkEvent.VANISH_E:
            return "p"
        if self.event == BulkEvent.VANISH_P:
            return "e"
        return None

    def handoff(self, coeffs: CoefficientSet) -> tuple[float, float, float]:
        """(a, b, D) for the atmospheric continuation of the survivor."""
        s = self.state_at_event
        if self.event == BulkEvent.VANISH_E:
            return s.u_p, s.du_p, coeffs.D_p
        if self.event == BulkEvent.VANISH_P:
            return s.u_e, s.du_e, coeffs.D_e
        raise ValueError(f"no atmospheric hand-off for event {self.event}")


@dataclass(frozen=True)
class BulkOptions:
    rtol: float = 1e-11
    atol: float = 1e-14
    r_max: float | None = None       # default: 200 * length scale
    vanish_tol: float = 1e-10
    simultaneous_tol: float = 1e-6   # |R_e - R_p| < tol * R_e
    h_start_factor: float = 1e-6
    max_steps: int = 60000


def phi_psi(alpha: float, beta: float, coeffs: CoefficientSet) -> tuple[float, float]:
    phi0 = coeffs.F * alpha**1.5 - coeffs.E * beta**1.5
    psi0 = coeffs.B * beta**1.5 - coeffs.A * alpha**1.5
    return phi0, psi0


def initial_signs(alpha: float, beta: float, coeffs: CoefficientSet) -> SignCheck:
    """Both origin source terms must be strictly negative for decaying starts."""
    if alpha <= 0.0 or beta <= 0.0:
        raise NonPositiveInput("central values must be strictly positive")
    phi0, psi0 = phi_psi(alpha, beta, coeffs)
    bad = []
    if phi0 >= 0.0:
        bad.append(f"phi(0)={phi0:.3g}")
    if psi0 >= 0.0:
        bad.append(f"psi(0)={psi0:.3g}")
    if bad:
        return SignCheck(False, phi0, psi0, "nonnegative " + " and ".join(bad))
    return SignCheck(True, phi0, psi0)


def length_scale(alpha: float, beta: float, coeffs: CoefficientSet) -> float:
    """Characteristic radius 1/sqrt(C_max * sqrt(u_max)) of the coupled system."""
    cmax = max(coeffs.A, coeffs.B, coeffs.E, coeffs.F)
    return 1.0 / math.sqrt(cmax * math.sqrt(max(alpha, beta)))


def series_start(alpha: float, beta: float, h_start: float,
                 coeffs: CoefficientSet) -> BulkState:
    """Second-order Taylor state at r=h_start.

    u_f(h) = u_f(0) + (rhs_f(0)/6) h^2 with u_f'(h) = rhs_f(0) h / 3; the
    coefficient is verified by substituting the expansion into the system.
    """
    phi0, psi0 = phi_psi(alpha, beta, coeffs)
    return BulkState(
        r=h_start,
        u_p=alpha + phi0 * h_start**2 / 6.0,
        du_p=phi0 * h_start / 3.0,
        u_e=beta + psi0 * h_start**2 / 6.0,
        du_e=psi0 * h_start / 3.0,
    )


def bulk_rhs(state: BulkState, coeffs: CoefficientSet) -> BulkState:
    """Right-hand side of the first-order system at one state (clamped powers)."""
    gp = max(state.u_p, 0.0) ** 1.5
    ge = max(state.u_e, 0.0) ** 1.5
    return BulkState(
        r=state.r,
        u_p=state.du_p,
        du_p=-2.0 / state.r * state.du_p + coeffs.F * gp - coeffs.E * ge,
        u_e=state.du_e,
        du_e=-2.0 / state.r * state.du_e - coeffs.A * gp + coeffs.B * ge,
    )


def integrate_bulk(alpha: float, beta: float, coeffs: CoefficientSet,
                   opts: BulkOptions = BulkOptions()) -> BulkOutcome:
    """Integrate outward until one species vanishes (or both together)."""
    check = initial_signs(alpha, beta, coeffs)
    if not check.ok:
        raise NonPositiveInput(f"inadmissible start: {check.reason}")

    L = length_scale(alpha, beta, coeffs)
    r_max = opts.r_max if opts.r_max is not None else 200.0 * L
    h0 = opts.h_start_factor * L
    start = series_start(alpha, beta, h0, coeffs)
    y0 = np.array([start.u_p, start.du_p, start.u_e, start.du_e])

    traj = K.integrate(
        K.SYS_BULK, [coeffs.F, coeffs.E, coeffs.A, coeffs.B], y0,
        h0, r_max, rtol=opts.rtol, atol=opts.atol,
        first_step=h0, max_step=L / 2.0, max_steps=opts.max_steps,
    )
    if traj.status in (K.STATUS_UNDERFLOW, K.STATUS_MAXSTEPS):
        raise NumericalBlowup(
            f"bulk integration stalled at r={traj.r_end:.6g} (status {traj.status})"
        )

    y = traj.y_end
    state = BulkState(r=traj.r_end, u_p=y[0], du_p=y[1], u_e=y[2], du_e=y[3])
    turning = None
    for t in (traj.turning_p, traj.turning_e):
        if t > 0.0 and (turning is None or t < turning):
            turning = t

    if traj.status == K.STATUS_RMAX:
        return BulkOutcome(BulkEvent.RADIUS_CAP, traj.r_end, state, traj,
                           None, None, turning)

    r_ev = traj.r_event
    if traj.status == K.STATUS_EVENT0:      # u_p crossed zero
        first = "p"
        other_u, other_du = y[2], y[3]
    else:                                   # u_e crossed zero
        first = "e"
        other_u, other_du = y[0], y[1]

    # extrapolated vanish radius of the other species, for the simultaneity test
    r_other = None
    if other_u <= opts.vanish_tol:
        r_other = r_ev
    elif other_du < 0.0:
        r_other = r_ev + other_u / (-other_du)

    r_p = r_ev if first == "p" else r_other
    r_e = r_ev if first == "e" else r_other

    if r_other is not None and abs(r_other - r_ev) < opts.simultaneous_tol * r_ev:
        return BulkOutcome(BulkEvent.SIMULTANEOUS_VANISH, r_ev, state, traj,
                           r_e, r_p, turning)
    event = BulkEvent.VANISH_P if first == "p" else BulkEvent.VANISH_E
    return BulkOutcome(event, r_ev, state, traj, r_e, r_p, turning)
