"""Command-line entry point: solver pipelines, sweeps, persistence, plots.

Every run writes its data files plus a manifest.json recording the config
echo, solver provenance, per-file records, and wall-clock timings.  CSV
numbers are printed with 17 significant digits so identical configurations
reproduce byte-identical data files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import _kernels
from .atmosphere import AtmoOptions, integrate_atmosphere, tail_mass
from .constants import (ConstantSet, derive_coefficients, desk_constants,
                        load_constants, ratio_window)
from .energy import el_residual, evaluate_energy
from .errors import (Inadmissible, InadmissibleRatio, NonIntegrable,
                     RatioNotBracketed, TfstarError)
from .profiles import RadialProfile
from .relativity import (ball_scan, chandra_single_fluid, critical_mass_scan,
                         integrate_rel_profile)
from .shoot import (ShootOptions, invert_counts, regime_sweep, solve_profile)
from .special import special_profile

_FMT = "%.17g"
_EXIT_DOMAIN = 2
INTEGRATOR_NAME = "dormand-prince-4(5), quartic dense output"


def _f(v) -> str:
    return _FMT % v


class RunContext:
    """Output directory, config echo, and the growing manifest."""

    def __init__(self, args: argparse.Namespace, consts: ConstantSet):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.consts = consts
        self.t0 = time.perf_counter()
        self.manifest: dict = {
            "tool": "tfstar",
            "version": __version__,
            "command": args.command,
            "argv": sys.argv[1:],
            "constants": consts.to_dict(),
            "integrator": INTEGRATOR_NAME,
            "tolerance": args.tol,
            "workers": getattr(args, "workers", 1),
            "seed": getattr(args, "seed", None),
            "jit_enabled": _kernels.JIT_ENABLED,
            "outputs": [],
        }

    def record(self, path: Path, kind: str) -> None:
        data = path.read_bytes()
        self.manifest["outputs"].append({
            "path": path.name,
            "kind": kind,
            "bytes": len(data),
            "sha256": hashlib.sha256(data).hexdigest(),
        })

    def write_profile(self, profile: RadialProfile, stem: str) -> Path:
        path = self.out / f"{stem}.csv"
        profile.to_csv(path)
        self.record(path, "profile_csv")
        emit_plot_data(profile, "profile", self.out, stem)
        self.record(self.out / f"{stem}_plot.csv", "plot_csv")
        self.record(self.out / f"{stem}.svg", "plot_svg")
        return path

    def finish(self, summary: dict) -> None:
        self.manifest["summary"] = summary
        self.manifest["wall_time_s"] = time.perf_counter() - self.t0
        path = self.out / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _svg_polyline(xs, ys, x_range, y_range, color) -> str:
    w, h, pad = 640.0, 440.0, 40.0
    x0, x1 = x_range
    y0, y1 = y_range
    sx = (w - 2 * pad) / (x1 - x0 if x1 > x0 else 1.0)
    sy = (h - 2 * pad) / (y1 - y0 if y1 > y0 else 1.0)
    pts = " ".join(
        f"{pad + (x - x0) * sx:.2f},{h - pad - (y - y0) * sy:.2f}"
        for x, y in zip(xs, ys)
    )
    return (f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{pts}"/>')


def emit_plot_data(profile: RadialProfile, kind: str, out_dir: Path,
                   stem: str) -> None:
    """Columnar plot data plus a minimal hand-emitted SVG line chart."""
    out_dir = Path(out_dir)
    rho_e = profile.rho_e
    rho_p = profile.rho_p
    with open(out_dir / f"{stem}_plot.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("r,rho_e,rho_p,rho_ratio\n")
        for i in range(len(profile.r)):
            ratio = rho_e[i] / rho_p[i] if rho_p[i] > 0.0 else math.nan
            fh.write(",".join(_f(v) for v in
                              (profile.r[i], rho_e[i], rho_p[i], ratio)) + "\n")

    step = max(1, len(profile.r) // 512)
    xs = profile.r[::step]
    top = max(rho_e.max(), rho_p.max(), 1e-300)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" width="640" height="440" '
        'viewBox="0 0 640 440">',
        '<rect width="640" height="440" fill="white"/>',
        '<line x1="40" y1="400" x2="600" y2="400" stroke="black"/>',
        '<line x1="40" y1="40" x2="40" y2="400" stroke="black"/>',
        _svg_polyline(xs, rho_e[::step], (xs[0], xs[-1]), (0.0, top), "#1f77b4"),
        _svg_polyline(xs, rho_p[::step], (xs[0], xs[-1]), (0.0, top), "#d62728"),
        '<text x="480" y="30" fill="#1f77b4" font-size="14">rho_e</text>',
        '<text x="540" y="30" fill="#d62728" font-size="14">rho_p</text>',
        f'<text x="300" y="430" font-size="13">r (max {xs[-1]:.6g})</text>',
        "</svg>",
    ]
    with open(out_dir / f"{stem}.svg", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _solution_summary(sol) -> dict:
    return {
        "classification": sol.classification,
        "alpha": sol.alpha,
        "beta": sol.beta,
        "R0": sol.R0,
        "R1": sol.R1,
        "N_e": sol.counts.N_e,
        "N_p": sol.counts.N_p,
        "ratio": sol.counts.ratio,
        "tail": None if sol.profile.tail is None else {
            "c": sol.profile.tail.c,
            "r_start": sol.profile.tail.r_start,
            "deviation": sol.profile.tail.deviation,
        },
    }


def _shoot_opts(args) -> ShootOptions:
    if args.tol is None:
        return ShootOptions()
    from dataclasses import replace

    from .bulk import BulkOptions
    return ShootOptions(bulk=BulkOptions(rtol=args.tol),
                        atmo=replace(AtmoOptions(), rtol=args.tol))


def _cmd_solve(args, ctx: RunContext) -> dict:
    sol = solve_profile(args.alpha, args.beta, ctx.consts, _shoot_opts(args))
    ctx.write_profile(sol.profile, "solve_profile")
    summary = _solution_summary(sol)
    eb = evaluate_energy(sol.profile, ctx.consts)
    summary["energy"] = eb.to_dict()
    print(f"solve: {sol.classification} R0={sol.R0:.6g} "
          f"N_e={sol.counts.N_e:.8g} N_p={sol.counts.N_p:.8g} "
          f"E={eb.total:.6g}")
    return summary


def _cmd_invert(args, ctx: RunContext) -> dict:
    alpha, beta = invert_counts(args.ne, args.np, ctx.consts, _shoot_opts(args))
    sol = solve_profile(alpha, beta, ctx.consts, _shoot_opts(args))
    ctx.write_profile(sol.profile, "invert_profile")
    summary = _solution_summary(sol)
    summary["target_N_e"] = args.ne
    summary["target_N_p"] = args.np
    summary["roundtrip_rel_err"] = max(
        abs(sol.counts.N_e - args.ne) / args.ne,
        abs(sol.counts.N_p - args.np) / args.np,
    )
    print(f"invert: alpha={alpha:.10g} beta={beta:.10g} "
          f"roundtrip={summary['roundtrip_rel_err']:.3g}")
    return summary


def _cmd_sweep(args, ctx: RunContext) -> dict:
    betas = np.linspace(args.beta_min, args.beta_max, args.points)
    res = regime_sweep(args.alpha, betas, ctx.consts, _shoot_opts(args),
                       workers=args.workers)
    path = ctx.out / "sweep.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("beta,classification,N_e,N_p,ratio,R0,R1\n")
        for row in res.rows:
            fh.write(",".join([
                _f(row.beta), row.classification, _f(row.N_e), _f(row.N_p),
                _f(row.ratio), _f(row.R0),
                _f(row.R1) if row.R1 is not None else "inf",
            ]) + "\n")
    ctx.record(path, "sweep_csv")
    windows = ratio_window(ctx.consts)
    summary = {
        "alpha": args.alpha,
        "beta_lo": res.beta_lo,
        "beta_hi": res.beta_hi,
        "endpoint_lo": _solution_summary(res.endpoint_lo),
        "endpoint_hi": _solution_summary(res.endpoint_hi),
        "ratio_window": [windows.ratio_lo, windows.ratio_hi],
        "n_rows": len(res.rows),
    }
    print(f"sweep: window [{res.beta_lo:.10g}, {res.beta_hi:.10g}] "
          f"endpoint ratios ({res.endpoint_lo.counts.ratio:.6g}, "
          f"{res.endpoint_hi.counts.ratio:.6g})")
    return summary


def _cmd_special(args, ctx: RunContext) -> dict:
    coeffs = derive_coefficients(ctx.consts)
    sol, prof = special_profile(args.alpha, coeffs)
    ctx.write_profile(prof, "special_profile")
    summary = {
        "k_d": sol.k_d,
        "d": sol.d,
        "lane_emden_index": sol.lane_emden_index,
        "xi1": sol.xi1,
        "scale_radius": sol.scale_radius,
        "radius": sol.radius,
        "alpha": sol.alpha,
        "beta": sol.beta,
        "u_ratio": sol.u_ratio,
    }
    print(f"special: k_d={sol.k_d:.10g} xi1={sol.xi1:.10g} R={sol.radius:.6g}")
    return summary


def _cmd_atmosphere(args, ctx: RunContext) -> dict:
    coeffs = derive_coefficients(ctx.consts)
    D = args.dcoef if args.dcoef is not None else (
        coeffs.D_e if args.species == "e" else coeffs.D_p)
    opts = AtmoOptions() if args.tol is None else AtmoOptions(rtol=args.tol)
    out = integrate_atmosphere(args.r0, args.a, args.b, D, opts)
    summary = {
        "kind": out.kind.value,
        "R0": out.R0, "a": out.a, "b": out.b, "D": out.D,
        "r_end": out.r_end,
        "blowup": out.blowup,
    }
    if out.trajectory is not None:
        rs = np.linspace(out.R0, out.r_end, 2049)
        u = np.clip(out.trajectory.sample(rs)[:, 0], 0.0, None)
        du = out.trajectory.sample(rs)[:, 1]
        zeros = np.zeros_like(rs)
        if args.species == "e":
            prof = RadialProfile(rs, u, zeros, du, zeros, len(rs) - 1, "e",
                                 out.R0, out.R1)
        else:
            prof = RadialProfile(rs, zeros, u, zeros, du, len(rs) - 1, "p",
                                 out.R0, out.R1)
        ctx.write_profile(prof, "atmosphere_profile")
        if out.kind.value == "critical_decay":
            mass, tail = tail_mass(rs, u, envelope_tol=math.inf)
            summary["tail_mass"] = mass
            summary["envelope_c"] = tail.c
            summary["envelope_deviation"] = tail.deviation
    print(f"atmosphere: {out.kind.value} r_end={out.r_end:.6g}")
    return summary


def _cmd_energy(args, ctx: RunContext) -> dict:
    prof = RadialProfile.from_csv(args.profile)
    eb = evaluate_energy(prof, ctx.consts)
    est = el_residual(prof, ctx.consts)
    summary = {
        "energy": eb.to_dict(),
        "multipliers": {
            "lambda_e_mean": est.mean_e, "lambda_e_rel_std": est.rel_std_e,
            "lambda_p_mean": est.mean_p, "lambda_p_rel_std": est.rel_std_p,
        },
    }
    if args.control:
        rng = np.random.default_rng(args.seed)
        bump = 1.0 + 0.05 * np.sin(3.0 * prof.r / prof.r[-1] * math.pi
                                   + rng.uniform(0.0, math.pi))
        ctrl = RadialProfile(
            r=prof.r, u_e=prof.u_e * bump, u_p=prof.u_p * bump,
            du_e=prof.du_e, du_p=prof.du_p, i_bulk_end=prof.i_bulk_end,
            survivor=prof.survivor, R0=prof.R0, R1=prof.R1, tail=prof.tail,
        )
        cest = el_residual(ctrl, ctx.consts)
        summary["control"] = {
            "lambda_e_rel_std": cest.rel_std_e,
            "lambda_p_rel_std": cest.rel_std_p,
            "seed": args.seed,
        }
    print(f"energy: total={eb.total:.8g} electric={eb.electric:.6g} "
          f"rel_std=({est.rel_std_e:.3g}, {est.rel_std_p:.3g})")
    return summary


def _cmd_rel_solve(args, ctx: RunContext) -> dict:
    sol = integrate_rel_profile(args.rho_p0, args.rho_e0, ctx.consts)
    ctx.write_profile(sol.profile, "rel_profile")
    summary = {
        "event": sol.event.value,
        "survivor": sol.survivor,
        "R0": sol.R0, "R1": sol.R1,
        "N_e": sol.counts.N_e, "N_p": sol.counts.N_p,
        "ratio": sol.counts.ratio,
        "y_p0": sol.y_p0, "y_e0": sol.y_e0,
    }
    print(f"rel-solve: {sol.event.value} R0={sol.R0:.6g} "
          f"ratio={sol.counts.ratio:.8g}")
    return summary


def _cmd_chandra(args, ctx: RunContext) -> dict:
    sol = chandra_single_fluid(args.y0)
    rs = np.linspace(sol.trajectory.r_start, sol.r_crossing, 2049)
    ys = sol.trajectory.sample(rs)
    path = ctx.out / "chandra_profile.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("r,y,dy\n")
        for i in range(len(rs)):
            fh.write(",".join(_f(v) for v in (rs[i], ys[i, 0], ys[i, 1])) + "\n")
    ctx.record(path, "chandra_csv")
    summary = {"y0": args.y0, "r_crossing": sol.r_crossing}
    print(f"chandra: y0={args.y0:.6g} first crossing at r={sol.r_crossing:.10g}")
    return summary


def _ball_report_dict(rep) -> dict:
    return {
        "N_e": rep.N_e, "N_p": rep.N_p,
        "slope_1_over_R": rep.slope_1_over_R,
        "verdict": rep.verdict.value,
        "crossover_radii": rep.crossover_radii,
    }


def _write_ball_csv(rep, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("R,E_S\n")
        for R, E in zip(rep.R_grid, rep.energies):
            fh.write(f"{_f(R)},{_f(E)}\n")


def _cmd_critical_mass(args, ctx: RunContext) -> dict:
    rep = critical_mass_scan(args.ratio, ctx.consts)
    for tag, sub in (("below", rep.below), ("above", rep.above)):
        path = ctx.out / f"ball_scan_{tag}.csv"
        _write_ball_csv(sub, path)
        ctx.record(path, "ball_scan_csv")
    summary = {
        "ratio_pn": rep.ratio_pn,
        "N_e_threshold": rep.N_e_threshold,
        "below": _ball_report_dict(rep.below),
        "above": _ball_report_dict(rep.above),
    }
    print(f"critical-mass: ratio={args.ratio:.6g} N_e*={rep.N_e_threshold:.8g}")
    return summary


def _cmd_ball_scan(args, ctx: RunContext) -> dict:
    grid = np.geomspace(args.r_min, args.r_max, args.points)
    rep = ball_scan(args.ne, args.np, ctx.consts, grid)
    path = ctx.out / "ball_scan.csv"
    _write_ball_csv(rep, path)
    ctx.record(path, "ball_scan_csv")
    summary = _ball_report_dict(rep)
    print(f"ball-scan: verdict={rep.verdict.value} "
          f"slope={rep.slope_1_over_R:.6g}")
    return summary


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfstar",
        description="Two-fluid Thomas-Fermi stellar ground-state solver.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--constants", default=None, metavar="JSON",
                       help="constants file (fallback: $TFSTAR_CONSTANTS, "
                            "then built-in desk units)")
        p.add_argument("--out", default="tfstar_out", metavar="DIR")
        p.add_argument("--tol", type=float, default=None,
                       help="integrator relative tolerance override")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("solve", help="solve a central-density pair")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    common(p)

    p = sub.add_parser("invert", help="recover central densities from counts")
    p.add_argument("--ne", type=float, required=True)
    p.add_argument("--np", type=float, required=True)
    common(p)

    p = sub.add_parser("sweep", help="classify a beta grid at fixed alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--points", type=int, default=21)
    common(p)

    p = sub.add_parser("special", help="proportional special solution")
    p.add_argument("--alpha", type=float, default=1.0)
    common(p)

    p = sub.add_parser("atmosphere", help="exterior problem from a hand-off")
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--species", choices=["e", "p"], default="p")
    p.add_argument("--dcoef", type=float, default=None,
                   help="override the atmospheric coefficient D")
    common(p)

    p = sub.add_parser("energy", help="energy breakdown of a profile CSV")
    p.add_argument("--profile", required=True, metavar="CSV")
    p.add_argument("--control", action="store_true",
                   help="also evaluate a seeded perturbed non-solution control")
    common(p)

    p = sub.add_parser("rel-solve", help="special-relativistic two-fluid solve")
    p.add_argument("--rho-p0", dest="rho_p0", type=float, required=True)
    p.add_argument("--rho-e0", dest="rho_e0", type=float, required=True)
    common(p)

    p = sub.add_parser("chandra", help="normalized single-fluid equation")
    p.add_argument("--y0", type=float, required=True)
    common(p)

    p = sub.add_parser("critical-mass", help="ball-energy threshold scan")
    p.add_argument("--ratio", type=float, required=True,
                   help="composition ratio N_p/N_e")
    common(p)

    p = sub.add_parser("ball-scan", help="uniform-ball energy vs radius")
    p.add_argument("--ne", type=float, required=True)
    p.add_argument("--np", type=float, required=True)
    p.add_argument("--r-min", type=float, default=1e-4)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=81)
    common(p)

    return parser


_HANDLERS = {
    "solve": _cmd_solve,
    "invert": _cmd_invert,
    "sweep": _cmd_sweep,
    "special": _cmd_special,
    "atmosphere": _cmd_atmosphere,
    "energy": _cmd_energy,
    "rel-solve": _cmd_rel_solve,
    "chandra": _cmd_chandra,
    "critical-mass": _cmd_critical_mass,
    "ball-scan": _cmd_ball_scan,
}


def _resolve_constants(args) -> ConstantSet:
    path = args.constants or os.environ.get("TFSTAR_CONSTANTS")
    if path:
        return load_constants(path)
    return desk_constants()


def run(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        consts = _resolve_constants(args)
        ctx = RunContext(args, consts)
        summary = _HANDLERS[args.command](args, ctx)
        ctx.finish(summary)
        return 0
    except (Inadmissible, InadmissibleRatio, NonIntegrable,
            RatioNotBracketed) as exc:
        print(f"tfstar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _EXIT_DOMAIN
    except TfstarError as exc:
        print(f"tfstar: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
