"""Discretized radial profiles, CSV persistence, and quadrature primitives.

A profile holds two uniform sample segments: the bulk region [r_min, R0]
where both transformed densities are tracked, and (when present) the
atmosphere region [R0, R_last] where only the surviving species is nonzero.
Densities are rho_f = u_f^(3/2).

The quadrature helpers know about the (R - r)^(3/2) behaviour of rho at a
vanishing radius: composite Simpson is used away from the support edge and
the final two intervals are integrated with the linear-vanish model, which
keeps refinement error well below 1e-8 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = "r,u_e,u_p,du_e,du_p,rho_e,rho_p"
_FMT = "%.17g"


@dataclass(frozen=True)
class TailInfo:
    """Analytic r^-4 envelope attached past the last computed radius."""

    c: float          # fitted envelope constant, u ~ c / r^4
    r_start: float    # radius where the envelope takes over
    deviation: float  # max relative deviation of u*r^4 from c over the fit window


@dataclass
class RadialProfile:
    r: np.ndarray
    u_e: np.ndarray
    u_p: np.ndarray
    du_e: np.ndarray
    du_p: np.ndarray
    i_bulk_end: int               # index of the R0 sample
    survivor: str | None          # 'e' / 'p' for atmosphere profiles, None otherwise
    R0: float
    R1: float | None              # support radius; None when a tail is attached
    tail: TailInfo | None = field(default=None)

    @property
    def rho_e(self) -> np.ndarray:
        return np.clip(self.u_e, 0.0, None) ** 1.5

    @property
    def rho_p(self) -> np.ndarray:
        return np.clip(self.u_p, 0.0, None) ** 1.5

    @property
    def has_atmosphere(self) -> bool:
        return self.i_bulk_end < len(self.r) - 1

    def species(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        if name == "e":
            return self.u_e, self.du_e
        if name == "p":
            return self.u_p, self.du_p
        raise ValueError(f"unknown species {name!r}")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# i_bulk_end={self.i_bulk_end}\n")
            fh.write(f"# survivor={self.survivor or '-'}\n")
            fh.write(f"# R0={_FMT % self.R0}\n")
            fh.write(f"# R1={_FMT % self.R1 if self.R1 is not None else 'inf'}\n")
            if self.tail is not None:
                fh.write(
                    f"# tail_c={_FMT % self.tail.c} tail_r={_FMT % self.tail.r_start} "
                    f"tail_dev={_FMT % self.tail.deviation}\n"
                )
            fh.write(CSV_HEADER + "\n")
            rho_e = self.rho_e
            rho_p = self.rho_p
            for i in range(len(self.r)):
                row = (self.r[i], self.u_e[i], self.u_p[i], self.du_e[i],
                       self.du_p[i], rho_e[i], rho_p[i])
                fh.write(",".join(_FMT % v for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RadialProfile":
        meta: dict[str, str] = {}
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if "=" in tok:
                            k, v = tok.split("=", 1)
                            meta[k] = v
                    continue
                if line.startswith("r,"):
                    continue
                rows.append([float(x) for x in line.split(",")])
        data = np.asarray(rows)
        survivor = meta.get("survivor", "-")
        tail = None
        if "tail_c" in meta:
            tail = TailInfo(float(meta["tail_c"]), float(meta["tail_r"]),
                            float(meta.get("tail_dev", 0.0)))
        r1 = meta.get("R1", "inf")
        return cls(
            r=data[:, 0], u_e=data[:, 1], u_p=data[:, 2],
            du_e=data[:, 3], du_p=data[:, 4],
            i_bulk_end=int(meta.get("i_bulk_end", len(rows) - 1)),
            survivor=None if survivor == "-" else survivor,
            R0=float(meta.get("R0", data[-1, 0])),
            R1=None if r1 == "inf" else float(r1),
            tail=tail,
        )


def simpson_uniform(y: np.ndarray, h: float) -> float:
    """Composite Simpson on a uniform grid with an odd number of points."""
    n = len(y)
    if n < 2:
        return 0.0
    if n == 2:
        return 0.5 * h * (y[0] + y[1])
    if n % 2 == 0:
        # Simpson on the leading odd block, 3/8-style correction on the last cell
        core = simpson_uniform(y[:-1], h)
        return core + h / 12.0 * (-y[-3] + 8.0 * y[-2] + 5.0 * y[-1])
    return h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2]))


def cumulative_simpson_uniform(y: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid via local quadratic increments.

    Node i gains the integral of the parabola through (i-2, i-1, i) over the
    last cell (the leading cell uses the forward parabola), exact for
    quadratics and third-order accurate per cell.
    """
    n = len(y)
    out = np.zeros(n)
    if n < 2:
        return out
    if n == 2:
        out[1] = 0.5 * h * (y[0] + y[1])
        return out
    incr = np.empty(n - 1)
    incr[0] = h / 12.0 * (5.0 * y[0] + 8.0 * y[1] - y[2])
    incr[1:] = h / 12.0 * (-y[:-2] + 8.0 * y[1:-1] + 5.0 * y[2:])
    out[1:] = np.cumsum(incr)
    return out


def vanish_cell(r_a: float, r_end: float, u_a: float) -> float:
    """integral of 4 pi r^2 u^(3/2) over [r_a, r_end] with u ~ s*(r_end - r).

    The slope is fixed by matching u(r_a); exact for a linearly vanishing u.
    """
    T = r_end - r_a
    if T <= 0.0 or u_a <= 0.0:
        return 0.0
    s = u_a / T
    s32 = s * math.sqrt(s)
    T52 = T ** 2.5
    return 4.0 * math.pi * s32 * (
        r_end**2 * (2.0 / 5.0) * T52
        - 2.0 * r_end * (2.0 / 7.0) * T52 * T
        + (2.0 / 9.0) * T52 * T * T
    )


def segment_number(r: np.ndarray, u: np.ndarray, cusp_end: bool) -> float:
    """integral of 4 pi r^2 u^(3/2) over one uniform segment."""
    if len(r) < 2:
        return 0.0
    h = r[1] - r[0]
    g = 4.0 * math.pi * r * r * np.clip(u, 0.0, None) ** 1.5
    if not cusp_end or len(r) < 5:
        return simpson_uniform(g, h)
    return simpson_uniform(g[:-2], h) + vanish_cell(r[-3], r[-1], max(u[-3], 0.0))


def center_cell(r0: float, u0: float) -> float:
    """integral of 4 pi r^2 u^(3/2) over [0, r0] with u ~ const = u0."""
    return 4.0 / 3.0 * math.pi * r0**3 * max(u0, 0.0) ** 1.5


def tail_number(tail: TailInfo) -> float:
    """integral of 4 pi r^2 (c/r^4)^(3/2) beyond r_start: 4 pi c^(3/2) / (3 R^3)."""
    return 4.0 * math.pi * tail.c**1.5 / (3.0 * tail.r_start**3)
