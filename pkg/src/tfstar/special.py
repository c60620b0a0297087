"""Proportional special solutions and the Lane-Emden reduction.

Assuming rho_e = k * rho_p in the coupled elliptic system with kinetic
exponent d/3 forces k to solve

    H_d(k) = E k^(d/3) + B k - F k^((d-3)/3) - A = 0,

whose unique root on (0, E/F) actually lies in (F/E, min(A/B, E/F)); the
bracket endpoints have H_d(0) < 0 and H_d(E/F) = (E/F)^((d-3)/3)(E^2-F^2)/F
+ (BE-AF)/F > 0.  The sign k_d > F/E makes the proton-equation coefficient
F - E k_d negative, so the proton profile reduces to the Lane-Emden
equation of index 3/(d-3); the model case d=5 gives index 3/2, whose
solutions have compact support.  These are the only solutions whose two
densities vanish at the same radius, which is asserted downstream by
re-integration rather than trusted.

Sign conventions here are pinned by that closure test: the constructed
profile must satisfy the bulk system to 1e-6 and re-integrate to a
simultaneous vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .constants import CoefficientSet
from .errors import NonPositiveInput, NoRootInBracket
from .profiles import RadialProfile

LANE_EMDEN_RTOL = 1e-12
LANE_EMDEN_ATOL = 1e-15


def proportionality_equation(k: float, d: float, coeffs: CoefficientSet) -> float:
    """H_d(k) for the electron-to-proton density ratio k."""
    e3 = (d - 3.0) / 3.0
    return (coeffs.E * k ** (d / 3.0) + coeffs.B * k
            - coeffs.F * k**e3 - coeffs.A)


def solve_kd(d: float, coeffs: CoefficientSet, tol: float = 1e-14) -> float:
    """Root of the proportionality equation on (0, E/F); unique for 3 < d < 6."""
    if not 3.0 < d < 6.0:
        raise NonPositiveInput(f"kinetic exponent parameter d={d} outside (3, 6)")
    hi = coeffs.E / coeffs.F
    lo = 1e-14
    f_lo = proportionality_equation(lo, d, coeffs)
    f_hi = proportionality_equation(hi, d, coeffs)
    if f_lo == 0.0:
        return lo
    if f_lo * f_hi > 0.0:
        raise NoRootInBracket(
            f"H_d has no sign change on (0, E/F): H({lo:.3g})={f_lo:.3g}, "
            f"H({hi:.3g})={f_hi:.3g}"
        )
    return float(brentq(proportionality_equation, lo, hi, args=(d, coeffs),
                        xtol=tol, rtol=4.0 * np.finfo(float).eps))


@dataclass
class LaneEmdenSolution:
    n: float
    xi1: float | None                # first zero; None when none exists (n >= 5)
    dtheta_at_zero: float | None
    trajectory: K.Trajectory

    def theta(self, xi: np.ndarray) -> np.ndarray:
        return self.trajectory.sample(np.asarray(xi, dtype=float))[:, 0]


def lane_emden(n: float, xi_max: float = 50.0,
               rtol: float = LANE_EMDEN_RTOL) -> LaneEmdenSolution:
    """Integrate theta'' + (2/xi) theta' = -theta^n from theta(0)=1, theta'(0)=0.

    Runs to the first zero for indices below 5; for n >= 5 there is no finite
    zero and the profile is returned out to xi_max.
    """
    if n < 1.0:
        raise NonPositiveInput(f"index n={n} below the covered range [1, inf)")
    h = 1e-8
    y0 = np.array([1.0 - h * h / 6.0 + n * h**4 / 120.0,
                   -h / 3.0 + n * h**3 / 30.0])
    traj = K.integrate(K.SYS_LANE, [float(n)], y0, h, xi_max,
                       rtol=rtol, atol=LANE_EMDEN_ATOL,
                       first_step=h, max_step=xi_max / 256.0)
    if traj.status == K.STATUS_EVENT0:
        return LaneEmdenSolution(n, traj.r_event, float(traj.y_end[1]), traj)
    return LaneEmdenSolution(n, None, None, traj)


@dataclass(frozen=True)
class SpecialSolution:
    d: float
    k_d: float                 # rho_e / rho_p, constant on the shared support
    lane_emden_index: float    # 3 / (d - 3)
    alpha: float               # u_p(0)
    beta: float                # u_e(0) = k_d^(2/3) alpha
    coefficient: float         # E k_d - F > 0; proton equation reads Du = -(coeff) u^(3/2)
    scale_radius: float        # L with u_p(r) = alpha * theta(r / L)
    xi1: float
    radius: float              # shared support radius L * xi1

    @property
    def u_ratio(self) -> float:
        """u_e / u_p = k_d^(2/3)."""
        return self.k_d ** (2.0 / 3.0)


def special_profile(alpha: float, coeffs: CoefficientSet,
                    n_samples: int = 4097,
                    h_start_factor: float = 1e-6,
                    ) -> tuple[SpecialSolution, RadialProfile]:
    """Construct the d=5 proportional solution with proton central value alpha.

    Both species share the scaled index-3/2 Lane-Emden shape and vanish at
    the same radius.
    """
    if alpha <= 0.0:
        raise NonPositiveInput("alpha must be strictly positive")
    k_d = solve_kd(5.0, coeffs)
    c = coeffs.E * k_d - coeffs.F
    L = 1.0 / math.sqrt(c * math.sqrt(alpha))
    le = lane_emden(1.5)
    radius = L * le.xi1

    r = np.linspace(h_start_factor * L, radius, n_samples)
    states = le.trajectory.sample(r / L)
    theta = np.clip(states[:, 0], 0.0, None)
    dtheta = states[:, 1]
    u_p = alpha * theta
    du_p = alpha / L * dtheta
    ratio = k_d ** (2.0 / 3.0)

    sol = SpecialSolution(
        d=5.0, k_d=k_d, lane_emden_index=1.5,
        alpha=alpha, beta=ratio * alpha,
        coefficient=c, scale_radius=L, xi1=le.xi1, radius=radius,
    )
    prof = RadialProfile(
        r=r, u_e=ratio * u_p, u_p=u_p, du_e=ratio * du_p, du_p=du_p,
        i_bulk_end=n_samples - 1, survivor=None, R0=radius, R1=radius,
    )
    return sol, prof
