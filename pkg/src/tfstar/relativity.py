"""Special-relativistic kinetic energy, the y-variable system, and mass limits.

The relativity factors y_f^2 = 1 + (3/pi)^(2/3) (h/2 m_f c)^2 rho_f^(2/3)
turn the relativistic Euler-Lagrange equations into

    Lap y_p = C_pp (y_p^2-1)^(3/2) - C_pe (y_e^2-1)^(3/2)
    Lap y_e = -C_ep (y_p^2-1)^(3/2) + C_ee (y_e^2-1)^(3/2)

valid on each species' support; the state actually integrated is w = y - 1
to keep the vanishing events (y -> 1) well conditioned at small densities.

The kinetic energy density is (pi m^4 c^5 / 3 h^3) A(alpha_f rho^(1/3))
with A(z) = 8 z^3 [(z^2+1)^(1/2) - 1] - z (2z^2-3)(z^2+1)^(1/2) - 3 asinh z,
identically equal to m c^2 int_0^rho [sqrt(1 + lam theta^(2/3)) - 1] dtheta
(the rest-mass term subtracted); A ~ (12/5) z^5 at small z recovers the
nonrelativistic k_f rho^(5/3) form and A ~ 6 z^4 at large z drives the
finite critical mass.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .constants import ConstantSet, ratio_window
from .errors import (InadmissibleRatio, InvalidHandoff, NonIntegrable,
                     NonPositiveInput, NumericalBlowup)
from .profiles import RadialProfile
from .shoot import ParticleCounts, counts

# small-z series of A(z): sum c_k z^(2k+5)
_A_SERIES = np.array([
    12.0 / 5.0, -3.0 / 7.0, 1.0 / 6.0, -15.0 / 176.0, 21.0 / 416.0,
    -21.0 / 640.0, 99.0 / 4352.0, -1287.0 / 77824.0, 715.0 / 57344.0,
])
_A_SERIES_CUT = 0.03

# small-R kinetic coefficient of the uniform ball: K = KAPPA * h * c * sum N^(4/3)
BALL_KINETIC_KAPPA = 3.0 ** (5.0 / 3.0) / (2.0 ** (11.0 / 3.0) * math.pi ** (2.0 / 3.0))


def chandrasekhar_A(z):
    """Relativistic kinetic kernel A(z); series branch below z=0.03.

    The direct form loses all digits near zero (the O(z) and O(z^3) pieces
    cancel), so small arguments use the frozen Taylor series.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = z < _A_SERIES_CUT
    if np.any(small):
        z2 = z[small] ** 2
        acc = np.zeros_like(z2)
        for c in _A_SERIES[::-1]:
            acc = acc * z2 + c
        out[small] = acc * z[small] ** 5
    if np.any(~small):
        zb = z[~small]
        root = np.sqrt(zb * zb + 1.0)
        out[~small] = (8.0 * zb**3 * (zb * zb / (root + 1.0))
                       - zb * (2.0 * zb * zb - 3.0) * root
                       - 3.0 * np.arcsinh(zb))
    return float(out[0]) if scalar else out


def momentum_scale(consts: ConstantSet, mass: float) -> float:
    """alpha_f = (h / m c) (3/8pi)^(1/3); z = alpha_f rho^(1/3)."""
    return consts.h / (mass * consts.c) * (3.0 / (8.0 * math.pi)) ** (1.0 / 3.0)


def relativity_factor_coeff(consts: ConstantSet, mass: float) -> float:
    """lam_f with y^2 = 1 + lam_f rho^(2/3); equals alpha_f^2."""
    return (3.0 / math.pi) ** (2.0 / 3.0) * (consts.h / (2.0 * mass * consts.c)) ** 2


def _kin_prefactor(consts: ConstantSet, mass: float) -> float:
    return math.pi * mass**4 * consts.c**5 / (3.0 * consts.h**3)


def rel_kinetic_energy(r: np.ndarray, rho: np.ndarray, mass: float,
                       consts: ConstantSet) -> float:
    """4 pi int r^2 (pi m^4 c^5 / 3h^3) A(alpha rho^(1/3)) dr on a uniform grid."""
    from .profiles import simpson_uniform

    r = np.asarray(r, dtype=float)
    rho = np.clip(np.asarray(rho, dtype=float), 0.0, None)
    alpha = momentum_scale(consts, mass)
    g = 4.0 * math.pi * r * r * _kin_prefactor(consts, mass) \
        * chandrasekhar_A(alpha * rho ** (1.0 / 3.0))
    return float(simpson_uniform(g, r[1] - r[0]))


def rel_kinetic_energy_integrand_form(r: np.ndarray, rho: np.ndarray,
                                      mass: float, consts: ConstantSet,
                                      n_nodes: int = 64) -> float:
    """Independent route: m c^2 int [sqrt(1 + lam theta^(2/3)) - 1] dtheta.

    The theta integral is done by Gauss-Legendre after theta = s^3 (which
    removes the fractional power); agreement with the A-form to 1e-8 is the
    dual-formula check.
    """
    from .profiles import simpson_uniform

    r = np.asarray(r, dtype=float)
    rho = np.clip(np.asarray(rho, dtype=float), 0.0, None)
    lam = relativity_factor_coeff(consts, mass)
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    inner = np.zeros_like(rho)
    pos = rho > 0.0
    if np.any(pos):
        s_hi = rho[pos] ** (1.0 / 3.0)
        s = 0.5 * s_hi[:, None] * (nodes[None, :] + 1.0)
        w = 0.5 * s_hi[:, None] * weights[None, :]
        f = (np.sqrt(1.0 + lam * s * s) - 1.0) * 3.0 * s * s
        inner[pos] = np.sum(w * f, axis=1)
    g = 4.0 * math.pi * r * r * mass * consts.c**2 * inner
    return float(simpson_uniform(g, r[1] - r[0]))


def y_system_coefficients(consts: ConstantSet) -> tuple[float, float, float, float]:
    """(C_pp, C_pe, C_ep, C_ee) of the two-fluid y-variable system."""
    q2 = consts.q**2
    cross = q2 + consts.G * consts.m_p * consts.m_e
    dens_p = (math.pi / 3.0) * (2.0 * consts.m_p * consts.c / consts.h) ** 3
    dens_e = (math.pi / 3.0) * (2.0 * consts.m_e * consts.c / consts.h) ** 3
    ep = 4.0 * math.pi / (consts.m_p * consts.c**2)
    ee = 4.0 * math.pi / (consts.m_e * consts.c**2)
    return (
        ep * (q2 - consts.G * consts.m_p**2) * dens_p,
        ep * cross * dens_e,
        ee * cross * dens_p,
        ee * (q2 - consts.G * consts.m_e**2) * dens_e,
    )


class RelEvent(enum.Enum):
    VANISH_E = "vanish_e"
    VANISH_P = "vanish_p"
    SIMULTANEOUS_VANISH = "simultaneous_vanish"


@dataclass
class RelSolution:
    event: RelEvent
    survivor: str | None
    R0: float
    R1: float
    profile: RadialProfile        # converted to u-variables, rho = u^(3/2)
    counts: ParticleCounts
    y_p0: float
    y_e0: float


@dataclass(frozen=True)
class RelOptions:
    rtol: float = 1e-11
    atol: float = 1e-14
    r_max: float | None = None
    simultaneous_tol: float = 1e-6
    n_bulk: int = 4097
    n_atmo: int = 4097
    blowup_cap_factor: float = 1e6


def _rel_length_scale(cs, w0) -> float:
    rhs = max(cs) * max(w0 * (w0 + 2.0), 1e-30) ** 1.5
    return math.sqrt(max(w0, 1e-30) / rhs)


def integrate_rel_profile(rho_p0: float, rho_e0: float, consts: ConstantSet,
                          opts: RelOptions = RelOptions()) -> RelSolution:
    """Two-fluid y-system solve with vanishing events at y_f = 1.

    After the first vanish the survivor continues in its single-species
    equation until its own compact closure; an unbounded continuation (the
    analogue of the nonrelativistic slope excess) raises NonIntegrable.
    """
    if rho_p0 < 0.0 or rho_e0 < 0.0 or (rho_p0 == 0.0 and rho_e0 == 0.0):
        raise NonPositiveInput("need at least one positive central density")
    lam_p = relativity_factor_coeff(consts, consts.m_p)
    lam_e = relativity_factor_coeff(consts, consts.m_e)
    w_p0 = math.sqrt(1.0 + lam_p * rho_p0 ** (2.0 / 3.0)) - 1.0
    w_e0 = math.sqrt(1.0 + lam_e * rho_e0 ** (2.0 / 3.0)) - 1.0
    cs = y_system_coefficients(consts)

    if rho_p0 == 0.0 or rho_e0 == 0.0:
        # reduces to the lone-species equation Lap y = +C (y^2-1)^(3/2),
        # which is repulsive at the center since q^2 > G m_f^2
        surv = "p" if rho_e0 == 0.0 else "e"
        raise NonIntegrable(
            f"single-fluid reduction for species {surv!r} is repulsive; "
            "no bound configuration without the opposite species"
        )

    traj, first, R0, r_other = _rel_bulk(w_p0, w_e0, cs, opts)
    yend = traj.y_end
    if abs(r_other - R0) < opts.simultaneous_tol * R0:
        profile = _rel_profile(traj, None, None, consts, opts)
        return RelSolution(RelEvent.SIMULTANEOUS_VANISH, None, R0, R0, profile,
                           counts(profile), 1.0 + w_p0, 1.0 + w_e0)

    surv = "e" if first == "p" else "p"
    w_h = yend[2] if surv == "e" else yend[0]
    dw_h = yend[3] if surv == "e" else yend[1]
    atraj, R1 = _single_fluid(surv, w_h, dw_h, R0, consts, cs, opts)
    profile = _rel_profile(traj, atraj, surv, consts, opts)
    event = RelEvent.VANISH_P if first == "p" else RelEvent.VANISH_E
    return RelSolution(event, surv, R0, R1, profile, counts(profile),
                       1.0 + w_p0, 1.0 + w_e0)


def _rel_bulk(w_p0: float, w_e0: float, cs, opts: RelOptions):
    """Two-fluid y-system integration to the first vanish.

    Returns (trajectory, first-vanished species, vanish radius, extrapolated
    vanish radius of the other species).
    """
    gp0 = (w_p0 * (w_p0 + 2.0)) ** 1.5
    ge0 = (w_e0 * (w_e0 + 2.0)) ** 1.5
    rhs_p0 = cs[0] * gp0 - cs[1] * ge0
    rhs_e0 = -cs[2] * gp0 + cs[3] * ge0
    if rhs_p0 >= 0.0 or rhs_e0 >= 0.0:
        raise NonIntegrable(
            "central y-curvatures are not both negative; no decaying start"
        )
    L = _rel_length_scale(cs, max(w_p0, w_e0))
    r_max = opts.r_max if opts.r_max is not None else 200.0 * L
    h0 = 1e-6 * L
    y0 = np.array([
        w_p0 + rhs_p0 * h0 * h0 / 6.0, rhs_p0 * h0 / 3.0,
        w_e0 + rhs_e0 * h0 * h0 / 6.0, rhs_e0 * h0 / 3.0,
    ])
    traj = K.integrate(K.SYS_REL, cs, y0, h0, r_max, rtol=opts.rtol,
                       atol=opts.atol, first_step=h0, max_step=L / 2.0)
    if traj.status in (K.STATUS_UNDERFLOW, K.STATUS_MAXSTEPS):
        raise NumericalBlowup(f"y-system integration stalled at r={traj.r_end:.6g}")
    if traj.status == K.STATUS_RMAX:
        raise NumericalBlowup("y-system hit the radius cap without a vanish")
    R0 = traj.r_event
    yend = traj.y_end
    if traj.status == K.STATUS_EVENT0:
        first, other_w, other_dw = "p", yend[2], yend[3]
    else:
        first, other_w, other_dw = "e", yend[0], yend[1]
    r_other = R0 + other_w / (-other_dw) if other_dw < 0.0 else math.inf
    return traj, first, R0, r_other


def rel_balanced_center(rho_p0: float, consts: ConstantSet,
                        opts: RelOptions = RelOptions(),
                        spread: float = 0.08) -> RelSolution:
    """Electron central density making both species vanish together.

    The relativistic system has no exactly proportional solutions, but the
    transition between electron-first and proton-first vanishing is
    continuous; bisecting it lands on a simultaneous vanish within the
    detection tolerance.  Seeds from the nonrelativistic proportional ratio.
    """
    from .constants import derive_coefficients
    from .special import solve_kd

    lam_p = relativity_factor_coeff(consts, consts.m_p)
    lam_e = relativity_factor_coeff(consts, consts.m_e)
    cs = y_system_coefficients(consts)
    w_p0 = math.sqrt(1.0 + lam_p * rho_p0 ** (2.0 / 3.0)) - 1.0

    def first_vanished(rho_e0: float) -> str:
        w_e0 = math.sqrt(1.0 + lam_e * rho_e0 ** (2.0 / 3.0)) - 1.0
        return _rel_bulk(w_p0, w_e0, cs, opts)[1]

    seed = solve_kd(5.0, derive_coefficients(consts)) * rho_p0
    lo, hi = seed * (1.0 - spread), seed * (1.0 + spread)
    # electrons vanish first at low rho_e0, protons at high
    if first_vanished(lo) != "e" or first_vanished(hi) != "p":
        raise NumericalBlowup("balanced-center seed bracket failed")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if first_vanished(mid) == "e":
            lo = mid
        else:
            hi = mid
    return integrate_rel_profile(rho_p0, 0.5 * (lo + hi), consts, opts)


def _single_fluid(surv, w0, dw0, R0, consts, cs, opts: RelOptions):
    css = cs[0] if surv == "p" else cs[3]
    if dw0 >= 0.0:
        raise NonIntegrable(
            f"surviving {surv} y-profile is nondecreasing at hand-off"
        )
    r_max = 400.0 * R0
    traj = K.integrate(K.SYS_RELATMO, [css], np.array([w0, dw0]), R0, r_max,
                       rtol=opts.rtol, atol=opts.atol, first_step=1e-8 * R0,
                       max_step=(r_max - R0) / 64.0,
                       cap=opts.blowup_cap_factor * max(w0, 1e-30))
    if traj.status == K.STATUS_EVENT0:
        return traj, traj.r_event
    raise NonIntegrable(
        f"surviving {surv} y-profile fails to close (status {traj.status})"
    )


def _rel_profile(traj, atraj, surv, consts, opts: RelOptions) -> RadialProfile:
    """Convert w = y - 1 trajectories to the u-variable profile format."""
    lam_p = relativity_factor_coeff(consts, consts.m_p)
    lam_e = relativity_factor_coeff(consts, consts.m_e)

    def convert(w, dw, lam):
        u = w * (w + 2.0) / lam
        du = 2.0 * (w + 1.0) * dw / lam
        return np.clip(u, 0.0, None), du

    rb = np.linspace(traj.r_start, traj.r_end, opts.n_bulk)
    Yb = traj.sample(rb)
    u_p, du_p = convert(Yb[:, 0], Yb[:, 1], lam_p)
    u_e, du_e = convert(Yb[:, 2], Yb[:, 3], lam_e)
    if atraj is None:
        return RadialProfile(r=rb, u_e=u_e, u_p=u_p, du_e=du_e, du_p=du_p,
                             i_bulk_end=len(rb) - 1, survivor=None,
                             R0=traj.r_end, R1=traj.r_end)
    ra = np.linspace(atraj.r_start, atraj.r_end, opts.n_atmo)
    Ya = atraj.sample(ra)
    lam_s = lam_p if surv == "p" else lam_e
    u_s, du_s = convert(Ya[1:, 0], Ya[1:, 1], lam_s)
    zeros = np.zeros(opts.n_atmo - 1)
    if surv == "p":
        u_pa, du_pa, u_ea, du_ea = u_s, du_s, zeros, zeros
    else:
        u_ea, du_ea, u_pa, du_pa = u_s, du_s, zeros, zeros
    return RadialProfile(
        r=np.concatenate([rb, ra[1:]]),
        u_e=np.concatenate([u_e, u_ea]), u_p=np.concatenate([u_p, u_pa]),
        du_e=np.concatenate([du_e, du_ea]), du_p=np.concatenate([du_p, du_pa]),
        i_bulk_end=len(rb) - 1, survivor=surv,
        R0=traj.r_end, R1=atraj.r_end,
    )


def proportional_fit_residual(profile: RadialProfile,
                              floor: float = 1e-2) -> tuple[float, float]:
    """Best constant k in rho_e ~ k rho_p and its worst relative miss.

    No relativistic solution admits a constant-proportion fit; the returned
    deviation stays above ~1e-3 for genuinely relativistic profiles.
    """
    rho_e = profile.rho_e
    rho_p = profile.rho_p
    mask = (rho_p > floor * rho_p.max()) & (rho_e > 0.0)
    k = float(np.sum(rho_e[mask] * rho_p[mask]) / np.sum(rho_p[mask] ** 2))
    dev = float(np.max(np.abs(rho_e[mask] / rho_p[mask] - k)) / k)
    return k, dev


@dataclass
class ChandraSolution:
    y0: float
    r_crossing: float           # first crossing of y = 1/y0
    trajectory: K.Trajectory

    def y(self, r):
        return self.trajectory.sample(np.asarray(r, dtype=float))[:, 0]


def chandra_single_fluid(y0: float, r_max: float = 50.0,
                         rtol: float = 1e-12) -> ChandraSolution:
    """Normalized single-fluid equation (1/r^2)(r^2 y')' = -(y^2 - 1/y0^2)^(3/2).

    Starts from y(0) = 1, y'(0) = 0 and stops at the first crossing of
    y = 1/y0 (vanishing density).  y0 -> infinity approaches the index-3
    polytrope; y0 -> 1 is the nonrelativistic index-3/2 regime.
    """
    if y0 <= 1.0:
        raise NonPositiveInput("need y0 > 1 for a nonempty star")
    level = 1.0 / y0
    g0 = (1.0 - level * level) ** 1.5
    h = 1e-8
    ystart = np.array([1.0 - g0 * h * h / 6.0, -g0 * h / 3.0])
    traj = K.integrate(K.SYS_CHANDRA, [level], ystart, h, r_max,
                       rtol=rtol, atol=1e-15, first_step=h,
                       max_step=r_max / 512.0)
    if traj.status != K.STATUS_EVENT0:
        raise NumericalBlowup(
            f"no crossing of y=1/y0 before r={r_max} (status {traj.status})"
        )
    return ChandraSolution(y0, traj.r_event, traj)


class BallVerdict(enum.Enum):
    BOUNDED_BELOW = "bounded_below"
    UNBOUNDED_BELOW = "unbounded_below"


@dataclass
class BallEnergyReport:
    N_e: float
    N_p: float
    R_grid: np.ndarray
    energies: np.ndarray
    slope_1_over_R: float        # fitted coefficient of 1/R as R -> 0
    verdict: BallVerdict
    crossover_radii: list[float]  # sign changes of E^S(R) on the grid


def uniform_ball_energy(N_e: float, N_p: float, R: float,
                        consts: ConstantSet) -> float:
    """Exact E^S of the uniform-ball pair rho_f = 3 N_f / (4 pi R^3) on B_R.

    Potential part (3/10R)(Q^2 - G M^2) with Q = q (N_p - N_e) and
    M = m_p N_p + m_e N_e; kinetic part from the exact A-form.
    """
    if R <= 0.0:
        raise NonPositiveInput("ball radius must be strictly positive")
    Q = consts.q * (N_p - N_e)
    M = consts.m_p * N_p + consts.m_e * N_e
    pot = 3.0 / (10.0 * R) * (Q * Q - consts.G * M * M)
    kin = 0.0
    for N, mass in ((N_e, consts.m_e), (N_p, consts.m_p)):
        if N <= 0.0:
            continue
        beta = (3.0 * N / (4.0 * math.pi)) ** (1.0 / 3.0)
        z = momentum_scale(consts, mass) * beta / R
        kin += 4.0 / 3.0 * math.pi * R**3 * _kin_prefactor(consts, mass) \
            * chandrasekhar_A(z)
    return kin + pot


def ball_kinetic_coefficient(N_e: float, N_p: float, consts: ConstantSet) -> float:
    """Small-R limit K with kinetic ~ K / R; from A(z) ~ 6 z^4."""
    return BALL_KINETIC_KAPPA * consts.h * consts.c * (N_e ** (4.0 / 3.0)
                                                       + N_p ** (4.0 / 3.0))


def ball_scan(N_e: float, N_p: float, consts: ConstantSet,
              R_grid: np.ndarray | None = None) -> BallEnergyReport:
    """E^S over an R grid with the fitted 1/R slope deciding the verdict."""
    if R_grid is None:
        R_grid = np.geomspace(1e-4, 10.0, 81)
    R_grid = np.asarray(R_grid, dtype=float)
    energies = np.array([uniform_ball_energy(N_e, N_p, R, consts) for R in R_grid])
    # E*R is linear in R as R -> 0; the intercept is the 1/R coefficient
    mask = R_grid <= R_grid[0] * 10.0
    coeff = np.polyfit(R_grid[mask], energies[mask] * R_grid[mask], 1)
    slope = float(coeff[1])
    crossings = [float(0.5 * (R_grid[i] + R_grid[i + 1]))
                 for i in range(len(R_grid) - 1)
                 if energies[i] == 0.0 or (energies[i] < 0.0) != (energies[i + 1] < 0.0)]
    verdict = BallVerdict.UNBOUNDED_BELOW if slope < 0.0 else BallVerdict.BOUNDED_BELOW
    return BallEnergyReport(N_e, N_p, R_grid, energies, slope, verdict, crossings)


@dataclass
class CriticalMassReport:
    ratio_pn: float              # N_p / N_e
    N_e_threshold: float
    below: BallEnergyReport      # scan at 0.5 * threshold
    above: BallEnergyReport      # scan at 2.0 * threshold


def critical_mass_scan(ratio_pn: float, consts: ConstantSet,
                       rel_tol: float = 1e-10) -> CriticalMassReport:
    """Threshold electron count N_e* above which the ball energy is unbounded below.

    For fixed composition r = N_p/N_e the 1/R coefficient is
    K - (3/10)(G M^2 - Q^2); K grows like N^(4/3) and the potential like N^2,
    so bisection on its sign locates the threshold.
    """
    if ratio_pn <= 0.0:
        raise NonPositiveInput("composition ratio must be strictly positive")
    windows = ratio_window(consts)
    ne_over_np = 1.0 / ratio_pn
    if not (windows.ratio_lo <= ne_over_np <= windows.ratio_hi):
        raise InadmissibleRatio(
            f"N_e/N_p={ne_over_np:.6g} outside the admissibility window"
        )

    def coeff(N_e: float) -> float:
        N_p = ratio_pn * N_e
        Q = consts.q * (N_p - N_e)
        M = consts.m_p * N_p + consts.m_e * N_e
        return ball_kinetic_coefficient(N_e, N_p, consts) \
            - 0.3 * (consts.G * M * M - Q * Q)

    lo, hi = 1.0, 2.0
    while coeff(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-12:
            raise NumericalBlowup("no bounded-below regime found")
    while coeff(hi) >= 0.0:
        hi *= 2.0
        if hi > 1e30:
            raise NumericalBlowup("no unbounded-below regime found")
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if coeff(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    n_star = 0.5 * (lo + hi)
    return CriticalMassReport(
        ratio_pn=ratio_pn,
        N_e_threshold=n_star,
        below=ball_scan(0.5 * n_star, 0.5 * n_star * ratio_pn, consts),
        above=ball_scan(2.0 * n_star, 2.0 * n_star * ratio_pn, consts),
    )


def rel_existence_bound(consts: ConstantSet, K_lions: float = 1.0) -> float:
    """Closed-form bound on (m_p N_p + m_e N_e)^(2/3) for minimizer existence."""
    if K_lions <= 0.0:
        raise NonPositiveInput("K_lions must be strictly positive")
    return (math.pi * 2.0 ** (2.0 / 3.0) * consts.h * consts.c
            * (3.0 / (8.0 * math.pi)) ** (4.0 / 3.0)
            / (consts.G * K_lions * consts.m_p ** (4.0 / 3.0)))
