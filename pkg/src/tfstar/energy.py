"""Energy functional evaluation and Euler-Lagrange certification.

All double integrals reduce to nested one-dimensional cumulative
quadratures through the shell theorem: for a radial density,

    B rho(r) = M(r)/r + S(r),
    M(r) = 4 pi int_0^r s^2 rho ds,   S(r) = 4 pi int_r^R s rho ds,

with the analytic r^-4 envelope supplying the pieces beyond the grid for
critically decaying profiles.  The multiplier functions

    lambda_p(r) = (5/3) k_p rho_p^(2/3) + q^2 B[rho_p - rho_e]
                  - G m_p B[m_p rho_p + m_e rho_e]

(and the electron analogue with the electric sign flipped) are constant on
their supports for genuine solutions; their sampled flatness is the
certificate that a computed profile is a critical point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ConstantSet
from .errors import QuadratureNotConverged
from .profiles import RadialProfile, TailInfo, cumulative_simpson_uniform


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic_e: float
    kinetic_p: float
    electric: float
    gravitational: float

    @property
    def kinetic(self) -> float:
        return self.kinetic_e + self.kinetic_p

    @property
    def potential(self) -> float:
        return self.electric + self.gravitational

    @property
    def total(self) -> float:
        return self.kinetic + self.electric + self.gravitational

    def to_dict(self) -> dict:
        return {
            "kinetic_e": self.kinetic_e, "kinetic_p": self.kinetic_p,
            "electric": self.electric, "gravitational": self.gravitational,
            "total": self.total,
        }


@dataclass
class MultiplierEstimate:
    r_p: np.ndarray
    lambda_p: np.ndarray
    r_e: np.ndarray
    lambda_e: np.ndarray

    @property
    def mean_p(self) -> float:
        return float(np.mean(self.lambda_p))

    @property
    def mean_e(self) -> float:
        return float(np.mean(self.lambda_e))

    @property
    def rel_std_p(self) -> float:
        return float(np.std(self.lambda_p) / abs(self.mean_p))

    @property
    def rel_std_e(self) -> float:
        return float(np.std(self.lambda_e) / abs(self.mean_e))


def _segments(profile: RadialProfile) -> list[slice]:
    i0 = profile.i_bulk_end
    segs = [slice(0, i0 + 1)]
    if profile.has_atmosphere:
        segs.append(slice(i0, len(profile.r)))
    return segs


class PotentialProfile:
    """B rho on the profile grid, with enclosed mass and tail bookkeeping."""

    def __init__(self, r: np.ndarray, phi: np.ndarray, total: float,
                 tail_amp: float, r_last: float):
        self.r = r
        self.phi = phi
        self.total = total          # 4 pi int r^2 rho dr over everything
        self._tail_amp = tail_amp   # envelope amplitude of rho ~ amp / r^6
        self._r_last = r_last

    def exterior(self, r: float) -> float:
        """Potential beyond the last grid point (shell theorem + envelope)."""
        if self._tail_amp == 0.0:
            return self.total / r
        # enclosed part: total already includes the tail mass out to infinity;
        # subtract the mass beyond r, add the local outer integral
        m_beyond = 4.0 * math.pi * self._tail_amp / (3.0 * r**3)
        s_beyond = 4.0 * math.pi * self._tail_amp / (4.0 * r**4)
        return (self.total - m_beyond) / r + s_beyond


def radial_potential(profile: RadialProfile, rho: np.ndarray,
                     tail_amp: float = 0.0) -> PotentialProfile:
    """Cumulative-quadrature potential of a (signed) radial density.

    ``rho`` is sampled on ``profile.r``; ``tail_amp`` is the amplitude of an
    attached rho ~ amp / r^6 envelope (density of a critical u ~ c / r^4).
    """
    r = profile.r
    n = len(r)
    M = np.zeros(n)
    Srev = np.zeros(n)
    m_off = 4.0 / 3.0 * math.pi * r[0] ** 3 * rho[0]  # center cell, rho ~ const
    for seg in _segments(profile):
        rs = r[seg]
        h = rs[1] - rs[0]
        M[seg] = m_off + 4.0 * math.pi * cumulative_simpson_uniform(rs * rs * rho[seg], h)
        m_off = M[seg][-1]
    s_off = 0.0
    if tail_amp != 0.0:
        s_off = 4.0 * math.pi * tail_amp / (4.0 * r[-1] ** 4)
    for seg in reversed(_segments(profile)):
        rs = r[seg]
        h = rs[1] - rs[0]
        cum = 4.0 * math.pi * cumulative_simpson_uniform(rs * rho[seg], h)
        Srev[seg] = s_off + (cum[-1] - cum)
        s_off = Srev[seg][0]
    total = M[-1]
    if tail_amp != 0.0:
        total += 4.0 * math.pi * tail_amp / (3.0 * r[-1] ** 3)
    return PotentialProfile(r, M / r + Srev, total, tail_amp, r[-1])


def _integral(profile: RadialProfile, g: np.ndarray) -> float:
    """integral of 4 pi r^2 g dr over the profile grid (per-segment Simpson)."""
    from .profiles import simpson_uniform

    out = 0.0
    for seg in _segments(profile):
        rs = profile.r[seg]
        out += simpson_uniform(4.0 * math.pi * rs * rs * g[seg], rs[1] - rs[0])
    return out


def _tail_amps(profile: RadialProfile) -> tuple[float, float]:
    """rho-envelope amplitudes (electron, proton) for an attached tail."""
    if profile.tail is None:
        return 0.0, 0.0
    amp = profile.tail.c ** 1.5
    if profile.survivor == "e":
        return amp, 0.0
    return 0.0, amp


def evaluate_energy(profile: RadialProfile, consts: ConstantSet,
                    quad_tol: float | None = None) -> EnergyBreakdown:
    """Kinetic, electric, and gravitational energy of a profile.

    kinetic_f = k_f int rho_f^(5/3);  electric and gravitational terms carry
    the 1/2 self-interaction prefactor.  Tail envelopes contribute their
    leading-order corrections for critical profiles.
    """
    rho_e = profile.rho_e
    rho_p = profile.rho_p
    amp_e, amp_p = _tail_amps(profile)

    kin_e = consts.k_e * _integral(profile, np.clip(profile.u_e, 0, None) ** 2.5)
    kin_p = consts.k_p * _integral(profile, np.clip(profile.u_p, 0, None) ** 2.5)
    if profile.tail is not None:
        # int 4 pi r^2 (c/r^4)^(5/2) dr beyond the grid
        k_s = consts.k_e if profile.survivor == "e" else consts.k_p
        tail_kin = 4.0 * math.pi * profile.tail.c ** 2.5 / (7.0 * profile.r[-1] ** 7)
        if profile.survivor == "e":
            kin_e += k_s * tail_kin
        else:
            kin_p += k_s * tail_kin

    charge = rho_p - rho_e
    mass = consts.m_p * rho_p + consts.m_e * rho_e
    pot_c = radial_potential(profile, charge, amp_p - amp_e)
    pot_g = radial_potential(profile, mass,
                             consts.m_p * amp_p + consts.m_e * amp_e)
    electric = 0.5 * consts.q**2 * _integral(profile, charge * pot_c.phi)
    grav = -0.5 * consts.G * _integral(profile, mass * pot_g.phi)
    if profile.tail is not None:
        # leading tail-by-core interaction: rho_tail(r) * (enclosed total)/r
        amp = amp_e + amp_p
        sgn = -1.0 if profile.survivor == "e" else 1.0
        m_s = consts.m_e if profile.survivor == "e" else consts.m_p
        outer = 4.0 * math.pi * amp / (4.0 * profile.r[-1] ** 4)
        electric += 0.5 * consts.q**2 * sgn * pot_c.total * outer
        grav -= 0.5 * consts.G * m_s * pot_g.total * outer

    result = EnergyBreakdown(kin_e, kin_p, electric, grav)
    if quad_tol is not None:
        coarse = evaluate_energy(_decimate(profile), consts)
        scale = max(abs(result.total), abs(result.kinetic))
        err = abs(result.total - coarse.total) / scale
        if err > quad_tol:
            raise QuadratureNotConverged(
                f"energy refinement estimate {err:.3g} exceeds {quad_tol:.3g}"
            )
    return result


def _decimate(profile: RadialProfile) -> RadialProfile:
    i0 = profile.i_bulk_end
    idx = np.concatenate([np.arange(0, i0 + 1, 2),
                          np.arange(i0 + 2, len(profile.r), 2)])
    if idx[-1] != len(profile.r) - 1:
        idx = np.append(idx, len(profile.r) - 1)
    return RadialProfile(
        r=profile.r[idx], u_e=profile.u_e[idx], u_p=profile.u_p[idx],
        du_e=profile.du_e[idx], du_p=profile.du_p[idx],
        i_bulk_end=i0 // 2, survivor=profile.survivor,
        R0=profile.R0, R1=profile.R1, tail=profile.tail,
    )


def dilated_profile(profile: RadialProfile, lam: float) -> RadialProfile:
    """Mass-preserving spread-out map rho(x) -> rho(x/lam)/lam^3 (u -> u/lam^2)."""
    tail = None
    if profile.tail is not None:
        tail = TailInfo(c=profile.tail.c * lam**2,
                        r_start=profile.tail.r_start * lam,
                        deviation=profile.tail.deviation)
    return RadialProfile(
        r=profile.r * lam,
        u_e=profile.u_e / lam**2, u_p=profile.u_p / lam**2,
        du_e=profile.du_e / lam**3, du_p=profile.du_p / lam**3,
        i_bulk_end=profile.i_bulk_end, survivor=profile.survivor,
        R0=profile.R0 * lam,
        R1=None if profile.R1 is None else profile.R1 * lam,
        tail=tail,
    )


def dilation_scan(profile: RadialProfile, lam_list, consts: ConstantSet,
                  ) -> list[tuple[float, EnergyBreakdown]]:
    """Energies of the dilation family; kinetic terms go as lam^-2, potential as lam^-1."""
    return [(lam, evaluate_energy(dilated_profile(profile, lam), consts))
            for lam in lam_list]


def el_residual(profile: RadialProfile, consts: ConstantSet,
                interior: tuple[float, float] = (0.0, 0.98),
                ) -> MultiplierEstimate:
    """Sampled multiplier functions on each species' support interior.

    Flat (relative std below 1e-5) with negative means certifies a solution;
    an arbitrary density profile shows order-1e-2 or larger variation.
    """
    rho_e = profile.rho_e
    rho_p = profile.rho_p
    amp_e, amp_p = _tail_amps(profile)
    pot_c = radial_potential(profile, rho_p - rho_e, amp_p - amp_e)
    pot_g = radial_potential(profile, consts.m_p * rho_p + consts.m_e * rho_e,
                             consts.m_p * amp_p + consts.m_e * amp_e)
    r = profile.r
    q2 = consts.q**2

    def support_mask(name: str) -> np.ndarray:
        u, _ = profile.species(name)
        if profile.survivor == name or profile.survivor is None:
            r_max = r[-1]
        else:
            r_max = profile.R0
        lo, hi = interior
        return (r >= lo * r_max) & (r <= hi * r_max) & (u > 0.0)

    mask_p = support_mask("p")
    mask_e = support_mask("e")
    lam_p = (5.0 / 3.0 * consts.k_p * np.clip(profile.u_p[mask_p], 0, None)
             + q2 * pot_c.phi[mask_p]
             - consts.G * consts.m_p * pot_g.phi[mask_p])
    lam_e = (5.0 / 3.0 * consts.k_e * np.clip(profile.u_e[mask_e], 0, None)
             - q2 * pot_c.phi[mask_e]
             - consts.G * consts.m_e * pot_g.phi[mask_e])
    return MultiplierEstimate(r_p=r[mask_p], lambda_p=lam_p,
                              r_e=r[mask_e], lambda_e=lam_e)
