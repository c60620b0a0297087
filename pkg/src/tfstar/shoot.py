"""End-to-end profile construction, counts, scaling, and count inversion.

A full solution is bulk integration to the first vanishing radius followed
by the atmospheric continuation of the survivor.  Solutions inherit the
scaling structure u -> lambda * u(lambda^(1/4) r): counts scale by a common
factor lambda^(3/4), so N_e/N_p depends only on beta/alpha and the inversion
splits into a ratio bisection at alpha=1 plus one scaling step.

For each alpha the compact-support interval [beta_lo, beta_hi] is a narrow
band around the proportional (special) ratio; outside it the surviving
atmosphere is unbounded and the configuration carries no finite counts.
The band endpoints are critical solutions whose r^-4 tails carry the count
ratio exactly to the closed-form admissibility bounds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .atmosphere import (AtmosphereKind, AtmosphereOutcome, AtmoOptions,
                         critical_slope, integrate_atmosphere)
from .bulk import BulkEvent, BulkOptions, BulkOutcome, integrate_bulk, initial_signs
from .constants import ConstantSet, derive_coefficients, ratio_window
from .errors import (Inadmissible, InadmissibleRatio, NonIntegrable,
                     NonPositiveInput, NumericalBlowup, QuadratureNotConverged,
                     RatioNotBracketed)
from .profiles import (RadialProfile, TailInfo, center_cell, segment_number,
                       tail_number)


class AtmoSpecies(enum.Enum):
    SPECIAL = "special"
    PROTON = "proton"
    ELECTRON = "electron"


class SupportKind(enum.Enum):
    COMPACT = "compact"
    CRITICAL = "critical"


@dataclass(frozen=True)
class ParticleCounts:
    N_e: float
    N_p: float
    err: float   # relative quadrature refinement estimate

    @property
    def ratio(self) -> float:
        return self.N_e / self.N_p


@dataclass
class FullSolution:
    species: AtmoSpecies
    support: SupportKind
    alpha: float
    beta: float
    R0: float
    R1: float | None
    profile: RadialProfile
    counts: ParticleCounts
    b_handoff: float | None = None
    b_hat: float | None = None

    @property
    def classification(self) -> str:
        return f"{self.species.value}/{self.support.value}"


@dataclass(frozen=True)
class ShootOptions:
    bulk: BulkOptions = BulkOptions()
    atmo: AtmoOptions = AtmoOptions()
    n_bulk: int = 4097
    n_atmo: int = 4097
    critical_tol: float = 1e-8      # |b - b_hat| < tol*|b_hat| classifies critical
    borderline_factor: float = 8.0  # atmosphere decisions beyond this consult b_hat
    critical_r_factor: float = 40.0  # integrate the critical tail out to this * R0
    quad_tol: float = 1e-8


def counts(profile: RadialProfile, quad_tol: float = 1e-8) -> ParticleCounts:
    """Particle numbers N_f = 4 pi integral r^2 u_f^(3/2) dr by composite quadrature.

    The refinement estimate compares against the half-resolution grid and
    must come in below ``quad_tol`` (relative).
    """

    def vanishes(u_seg: np.ndarray) -> bool:
        # cusp handling only where the data actually reach zero at the edge
        peak = float(np.max(u_seg))
        return peak > 0.0 and u_seg[-1] < 1e-6 * peak

    def one(stride: int) -> tuple[float, float]:
        i0 = profile.i_bulk_end
        rb = profile.r[: i0 + 1 : stride]
        if rb[-1] != profile.r[i0]:
            rb = np.append(rb, profile.r[i0])
        out = []
        for name in ("e", "p"):
            u, _ = profile.species(name)
            ub = u[: i0 + 1 : stride]
            if len(ub) != len(rb):
                ub = np.append(ub, u[i0])
            may_cusp = profile.survivor is None or name != profile.survivor
            total = center_cell(rb[0], ub[0])
            total += segment_number(rb, ub, cusp_end=may_cusp and vanishes(ub))
            if profile.survivor == name and profile.has_atmosphere:
                ra = profile.r[i0::stride]
                ua = u[i0::stride]
                if ra[-1] != profile.r[-1]:
                    ra = np.append(ra, profile.r[-1])
                    ua = np.append(ua, u[-1])
                compact = profile.tail is None
                total += segment_number(ra, ua, cusp_end=compact and vanishes(ua))
                if profile.tail is not None:
                    total += tail_number(profile.tail)
            out.append(total)
        return out[0], out[1]

    ne, np_ = one(1)
    ne2, np2 = one(2)
    err = max(abs(ne - ne2) / max(ne, 1e-300), abs(np_ - np2) / max(np_, 1e-300))
    if err > quad_tol:
        raise QuadratureNotConverged(
            f"count refinement estimate {err:.3g} exceeds {quad_tol:.3g}"
        )
    return ParticleCounts(N_e=ne, N_p=np_, err=err)


def _build_profile(bulk_out: BulkOutcome, atmo_traj, atmo_r_end, survivor,
                   tail: TailInfo | None, opts: ShootOptions) -> RadialProfile:
    R0 = bulk_out.event_radius
    rb = np.linspace(bulk_out.trajectory.r_start, R0, opts.n_bulk)
    yb = bulk_out.trajectory.sample(rb)
    u_p, du_p, u_e, du_e = yb[:, 0], yb[:, 1], yb[:, 2], yb[:, 3]

    if atmo_traj is None:
        return RadialProfile(r=rb, u_e=u_e, u_p=u_p, du_e=du_e, du_p=du_p,
                             i_bulk_end=opts.n_bulk - 1, survivor=survivor,
                             R0=R0, R1=R0 if tail is None else None, tail=tail)

    # long near-critical atmospheres need proportionally finer sampling to
    # hold the quadrature refinement estimate at 1e-8
    stretch = min(8, max(1, int((atmo_r_end - R0) / (4.0 * R0)) + 1))
    n_atmo = (opts.n_atmo - 1) * stretch + 1
    ra = np.linspace(R0, atmo_r_end, n_atmo)
    ya = atmo_traj.sample(ra)
    zero = np.zeros(n_atmo - 1)
    if survivor == "p":
        u_p_a, du_p_a = ya[1:, 0], ya[1:, 1]
        u_e_a, du_e_a = zero, zero
    else:
        u_e_a, du_e_a = ya[1:, 0], ya[1:, 1]
        u_p_a, du_p_a = zero, zero
    return RadialProfile(
        r=np.concatenate([rb, ra[1:]]),
        u_e=np.concatenate([u_e, u_e_a]),
        u_p=np.concatenate([u_p, u_p_a]),
        du_e=np.concatenate([du_e, du_e_a]),
        du_p=np.concatenate([du_p, du_p_a]),
        i_bulk_end=opts.n_bulk - 1,
        survivor=survivor,
        R0=R0,
        R1=atmo_r_end if tail is None else None,
        tail=tail,
    )


def _critical_trajectory(R0, a, b_hat, D, opts: ShootOptions):
    """Track the decaying solution out to the tail radius and fit its envelope."""
    r_v = opts.critical_r_factor * R0
    traj = K.integrate(K.SYS_ATMO, [D, 1.0], np.array([a, b_hat]), R0, r_v,
                       rtol=opts.atmo.rtol, atol=opts.atmo.atol,
                       first_step=1e-8 * R0, max_step=(r_v - R0) / 64.0,
                       cap=opts.atmo.blowup_cap_factor * a,
                       max_steps=opts.atmo.max_steps)
    r_end = traj.r_end
    rs = np.linspace(max(R0, r_end / 10.0), r_end, 257)
    u = np.clip(traj.sample(rs)[:, 0], 0.0, None)
    w = u * rs**4
    c = float(np.mean(w))
    dev = float(np.max(np.abs(w - c)) / c) if c > 0 else math.inf
    return traj, TailInfo(c=c, r_start=float(r_end), deviation=dev)


def solve_profile(alpha: float, beta: float, consts: ConstantSet,
                  opts: ShootOptions = ShootOptions()) -> FullSolution:
    """Bulk + atmosphere solve with regime classification and counts."""
    coeffs = derive_coefficients(consts)
    sign = initial_signs(alpha, beta, coeffs)
    if not sign.ok:
        raise Inadmissible(f"central pair ({alpha}, {beta}): {sign.reason}")

    bulk_out = integrate_bulk(alpha, beta, coeffs, opts.bulk)
    if bulk_out.event == BulkEvent.RADIUS_CAP:
        raise NumericalBlowup("bulk integration hit the radius cap without a vanish")

    if bulk_out.event == BulkEvent.SIMULTANEOUS_VANISH:
        profile = _build_profile(bulk_out, None, None, None, None, opts)
        return FullSolution(
            species=AtmoSpecies.SPECIAL, support=SupportKind.COMPACT,
            alpha=alpha, beta=beta, R0=bulk_out.event_radius,
            R1=bulk_out.event_radius, profile=profile,
            counts=counts(profile, opts.quad_tol),
        )

    survivor = bulk_out.survivor
    species = AtmoSpecies.PROTON if survivor == "p" else AtmoSpecies.ELECTRON
    R0 = bulk_out.event_radius
    a, b, D = bulk_out.handoff(coeffs)

    outcome = integrate_atmosphere(R0, a, b, D, opts.atmo)
    borderline = (
        outcome.kind == AtmosphereKind.CRITICAL_DECAY
        or outcome.kind == AtmosphereKind.UNBOUNDED
        or outcome.r_end > opts.borderline_factor * R0
    )

    b_hat = None
    if borderline:
        b_hat = critical_slope(R0, a, D, tol=1e-13, opts=opts.atmo)
        if abs(b - b_hat) <= opts.critical_tol * abs(b_hat):
            traj, tail = _critical_trajectory(R0, a, b_hat, D, opts)
            profile = _build_profile(bulk_out, traj, traj.r_end, survivor, tail, opts)
            return FullSolution(
                species=species, support=SupportKind.CRITICAL,
                alpha=alpha, beta=beta, R0=R0, R1=None, profile=profile,
                counts=counts(profile, opts.quad_tol),
                b_handoff=b, b_hat=b_hat,
            )
        if b > b_hat:
            raise NonIntegrable(
                f"surviving {species.value} atmosphere is unbounded "
                f"(b={b:.6g} > b_hat={b_hat:.6g})"
            )
        if outcome.kind != AtmosphereKind.COMPACT:
            # compact side of the slope but undecided at the default horizon
            wide = replace(opts.atmo, r_max_factor=opts.atmo.bisect_r_max_factor)
            outcome = integrate_atmosphere(R0, a, b, D, wide)
            if outcome.kind != AtmosphereKind.COMPACT:
                raise NumericalBlowup(
                    f"trajectory below the critical slope failed to close "
                    f"by r={outcome.r_end:.6g}"
                )

    profile = _build_profile(bulk_out, outcome.trajectory, outcome.r_end,
                             survivor, None, opts)
    return FullSolution(
        species=species, support=SupportKind.COMPACT,
        alpha=alpha, beta=beta, R0=R0, R1=outcome.r_end, profile=profile,
        counts=counts(profile, opts.quad_tol),
        b_handoff=b, b_hat=b_hat,
    )


def bulk_residual(profile: RadialProfile, coeffs, floor: float = 1e-4) -> float:
    """Sup-norm residual of the coupled system on the bulk samples.

    du/dr is differenced on the uniform grid, so the region where a density
    vanishes (unbounded third derivative) is masked by ``floor`` relative to
    the central values.
    """
    i0 = profile.i_bulk_end
    r = profile.r[: i0 + 1]
    h = r[1] - r[0]
    u_p, u_e = profile.u_p[: i0 + 1], profile.u_e[: i0 + 1]
    du_p, du_e = profile.du_p[: i0 + 1], profile.du_e[: i0 + 1]
    gp = np.clip(u_p, 0.0, None) ** 1.5
    ge = np.clip(u_e, 0.0, None) ** 1.5
    res_p = np.gradient(du_p, h, edge_order=2) \
        - (-2.0 / r * du_p + coeffs.F * gp - coeffs.E * ge)
    res_e = np.gradient(du_e, h, edge_order=2) \
        - (-2.0 / r * du_e - coeffs.A * gp + coeffs.B * ge)
    mask = (u_p > floor * u_p[0]) & (u_e > floor * u_e[0])
    mask[:4] = False
    mask[-4:] = False
    return float(max(np.max(np.abs(res_p[mask])), np.max(np.abs(res_e[mask]))))


def apply_scaling(solution: FullSolution, lam: float) -> FullSolution:
    """Map a solution through u -> lam * u(lam^(1/4) r); classification survives.

    Radii scale by lam^(-1/4) and both counts by lam^(3/4), so the ratio is
    untouched.
    """
    if lam <= 0.0:
        raise Inadmissible("scaling factor must be strictly positive")
    a = lam**0.25
    p = solution.profile
    tail = None
    if p.tail is not None:
        # u*r^4 is invariant under the solution scaling, so c carries over
        tail = TailInfo(c=p.tail.c, r_start=p.tail.r_start / a,
                        deviation=p.tail.deviation)
    prof = RadialProfile(
        r=p.r / a,
        u_e=lam * p.u_e, u_p=lam * p.u_p,
        du_e=lam * a * p.du_e, du_p=lam * a * p.du_p,
        i_bulk_end=p.i_bulk_end, survivor=p.survivor,
        R0=p.R0 / a, R1=None if p.R1 is None else p.R1 / a, tail=tail,
    )
    return FullSolution(
        species=solution.species, support=solution.support,
        alpha=lam * solution.alpha, beta=lam * solution.beta,
        R0=solution.R0 / a, R1=None if solution.R1 is None else solution.R1 / a,
        profile=prof, counts=counts(prof),
        b_handoff=None if solution.b_handoff is None else lam * a * solution.b_handoff,
        b_hat=None if solution.b_hat is None else lam * a * solution.b_hat,
    )


def _is_compact_start(alpha, beta, coeffs, atmo_opts: AtmoOptions) -> bool:
    """Cheap predicate: does (alpha, beta) close at finite radius?"""
    try:
        out = integrate_bulk(alpha, beta, coeffs)
    except (NumericalBlowup, NonPositiveInput):
        return False
    if out.event == BulkEvent.SIMULTANEOUS_VANISH:
        return True
    if out.event == BulkEvent.RADIUS_CAP:
        return False
    a, b, D = out.handoff(coeffs)
    wide = replace(atmo_opts, r_max_factor=atmo_opts.bisect_r_max_factor)
    return integrate_atmosphere(out.event_radius, a, b, D, wide).kind \
        == AtmosphereKind.COMPACT


def compact_window(alpha: float, consts: ConstantSet,
                   opts: ShootOptions = ShootOptions()) -> tuple[float, float]:
    """[beta_lo, beta_hi] producing compact support at this alpha.

    Bisects between the always-compact proportional ratio and the central
    window edges (where the initial signs fail); the endpoints are the
    critical-solution parameters.
    """
    from .special import solve_kd  # local import to avoid a cycle

    coeffs = derive_coefficients(consts)
    windows = ratio_window(consts)
    beta_star = solve_kd(5.0, coeffs) ** (2.0 / 3.0) * alpha
    edges = []
    for lo, hi, rising in (
        (alpha / windows.central_hi * (1.0 + 1e-12), beta_star, True),
        (beta_star, alpha / windows.central_lo * (1.0 - 1e-12), False),
    ):
        a_bad, a_good = (lo, hi) if rising else (hi, lo)
        for _ in range(80):
            mid = 0.5 * (a_bad + a_good)
            if mid == a_bad or mid == a_good:
                break
            if _is_compact_start(alpha, mid, coeffs, opts.atmo):
                a_good = mid
            else:
                a_bad = mid
        edges.append(a_good)
    return edges[0], edges[1]


@dataclass
class SweepRow:
    beta: float
    classification: str       # "proton/compact", ..., or "non_integrable"
    N_e: float
    N_p: float
    ratio: float
    R0: float
    R1: float | None


@dataclass
class SweepResult:
    alpha: float
    rows: list[SweepRow]
    beta_lo: float
    beta_hi: float
    endpoint_lo: FullSolution
    endpoint_hi: FullSolution


def _classify_row(alpha, beta, consts, opts) -> SweepRow:
    try:
        sol = solve_profile(alpha, beta, consts, opts)
    except (NonIntegrable, Inadmissible, NumericalBlowup) as exc:
        kind = "inadmissible" if isinstance(exc, Inadmissible) else "non_integrable"
        return SweepRow(beta, kind, math.nan, math.nan, math.nan, math.nan, None)
    return SweepRow(beta, sol.classification, sol.counts.N_e, sol.counts.N_p,
                    sol.counts.ratio, sol.R0, sol.R1)


def regime_sweep(alpha: float, beta_grid, consts: ConstantSet,
                 opts: ShootOptions = ShootOptions(),
                 workers: int = 1) -> SweepResult:
    """Classify a beta grid and refine the compact-window endpoints.

    NonIntegrable entries are recorded, not fatal.  The refined endpoints are
    solved as critical solutions (tail included), whose count ratios
    reproduce the closed-form admissibility bounds.
    """
    beta_grid = list(beta_grid)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda b: _classify_row(alpha, b, consts, opts), beta_grid))
    else:
        rows = [_classify_row(alpha, b, consts, opts) for b in beta_grid]

    beta_lo, beta_hi = compact_window(alpha, consts, opts)
    endpoint_lo = solve_profile(alpha, beta_lo, consts, opts)
    endpoint_hi = solve_profile(alpha, beta_hi, consts, opts)
    return SweepResult(alpha, rows, beta_lo, beta_hi, endpoint_lo, endpoint_hi)


@dataclass(frozen=True)
class InvertOptions:
    ratio_tol: float = 1e-9      # relative tolerance on the matched count ratio
    allow_boundary: bool = False  # map window endpoints to critical solutions
    boundary_tol: float = 1e-9
    max_iter: int = 200
    monotone_probes: int = 7


def invert_counts(N_e: float, N_p: float, consts: ConstantSet,
                  opts: ShootOptions = ShootOptions(),
                  inv: InvertOptions = InvertOptions(),
                  ) -> tuple[float, float]:
    """Central densities (alpha, beta) whose solution carries the given counts.

    Stage 1 bisects beta at alpha=1 until the count ratio matches N_e/N_p;
    stage 2 rescales by the common count factor (lambda^(3/4) law).  The
    returned pair is the canonical representative with alpha = lambda.
    """
    from .constants import RatioVerdict, check_ratio

    windows = ratio_window(consts)
    target = N_e / N_p
    verdict = check_ratio(N_e, N_p, windows, inv.boundary_tol)
    if verdict == RatioVerdict.INADMISSIBLE:
        raise InadmissibleRatio(
            f"N_e/N_p={target:.6g} outside [{windows.ratio_lo:.6g}, "
            f"{windows.ratio_hi:.6g}]"
        )
    if verdict == RatioVerdict.BOUNDARY and not inv.allow_boundary:
        raise InadmissibleRatio(
            "requested ratio sits on the admissibility boundary; the matching "
            "solutions are critical (pass allow_boundary=True)"
        )

    beta_lo, beta_hi = compact_window(1.0, consts, opts)
    if verdict == RatioVerdict.BOUNDARY:
        hit_hi = abs(target - windows.ratio_hi) < abs(target - windows.ratio_lo)
        beta = beta_hi if hit_hi else beta_lo
        sol = solve_profile(1.0, beta, consts, opts)
    else:
        cache: dict[float, FullSolution] = {}

        def ratio_at(b: float) -> float:
            if b not in cache:
                cache[b] = solve_profile(1.0, b, consts, opts)
            return cache[b].counts.ratio

        # monotonicity is a working hypothesis: verify on a probe grid and
        # fall back to a bracketing scan if it fails
        probes = np.linspace(beta_lo, beta_hi, inv.monotone_probes)
        vals = [ratio_at(b) for b in probes]
        monotone = all(v2 > v1 for v1, v2 in zip(vals, vals[1:]))
        if not (vals[0] <= target <= vals[-1]):
            raise RatioNotBracketed(
                f"ratio target {target:.8g} outside achieved range "
                f"[{vals[0]:.8g}, {vals[-1]:.8g}]"
            )
        if monotone:
            i = int(np.searchsorted(vals, target))
            lo, hi = probes[max(i - 1, 0)], probes[min(i, len(probes) - 1)]
        else:
            pairs = [(probes[i], probes[i + 1]) for i in range(len(probes) - 1)
                     if min(vals[i], vals[i + 1]) <= target <= max(vals[i], vals[i + 1])]
            lo, hi = pairs[0]
        v_lo = ratio_at(lo)
        for _ in range(inv.max_iter):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            v = ratio_at(mid)
            if abs(v - target) <= inv.ratio_tol * target:
                lo = hi = mid
                break
            if (v < target) == (v_lo < target):
                lo, v_lo = mid, v
            else:
                hi = mid
        beta = 0.5 * (lo + hi) if lo != hi else lo
        sol = cache.get(beta) or solve_profile(1.0, beta, consts, opts)

    lam = (N_p / sol.counts.N_p) ** (4.0 / 3.0)
    return lam, lam * beta
