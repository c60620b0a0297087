"""Model constants, derived ODE coefficients, and admissibility windows.

Everything works in a self-consistent nondimensional unit system.  The
default "desk" set keeps every derived coefficient O(1-10); true physical
values are out of scope (they make the coupled integrations badly scaled).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InadmissibleConstants, NonPositiveInput

# (3/pi)^(2/3), the phase-space factor shared by both kinetic prefactors
_PHASE = (3.0 / math.pi) ** (2.0 / 3.0)


def kinetic_prefactor(h: float, mass: float) -> float:
    """k = (3 h^2 / 40 m) * (3/pi)^(2/3) for one species."""
    return 3.0 * h * h / (40.0 * mass) * _PHASE


@dataclass(frozen=True)
class ConstantSet:
    """Physical/model constants plus the per-species kinetic prefactors.

    ``k_e`` and ``k_p`` may be pinned directly (overriding the h-based
    formula) so unit-system experiments decouple from the value of h.
    """

    h: float
    c: float
    G: float
    q: float
    m_e: float
    m_p: float
    k_e: float
    k_p: float

    def validate(self) -> "ConstantSet":
        for name in ("h", "c", "q", "m_e", "m_p", "k_e", "k_p"):
            if getattr(self, name) <= 0.0:
                raise InadmissibleConstants(f"{name} must be strictly positive")
        if self.G < 0.0:
            raise InadmissibleConstants("G must be nonnegative")
        if self.m_p <= self.m_e:
            raise InadmissibleConstants("m_p must exceed m_e")
        if self.q**2 <= self.G * self.m_p**2:
            raise InadmissibleConstants("need q^2 > G*m_p^2 (screened gravity)")
        if self.q**2 <= self.G * self.m_e**2:
            raise InadmissibleConstants("need q^2 > G*m_e^2")
        return self

    @classmethod
    def create(
        cls,
        h: float,
        c: float,
        G: float,
        q: float,
        m_e: float,
        m_p: float,
        k_e: float | None = None,
        k_p: float | None = None,
    ) -> "ConstantSet":
        if k_e is None:
            k_e = kinetic_prefactor(h, m_e)
        if k_p is None:
            k_p = kinetic_prefactor(h, m_p)
        return cls(h=h, c=c, G=G, q=q, m_e=m_e, m_p=m_p, k_e=k_e, k_p=k_p).validate()

    @classmethod
    def from_dict(cls, data: dict) -> "ConstantSet":
        required = ("h", "c", "G", "q", "m_e", "m_p")
        missing = [k for k in required if k not in data]
        if missing:
            raise InadmissibleConstants(f"constants file missing keys: {missing}")
        return cls.create(
            h=float(data["h"]),
            c=float(data["c"]),
            G=float(data["G"]),
            q=float(data["q"]),
            m_e=float(data["m_e"]),
            m_p=float(data["m_p"]),
            k_e=float(data["k_e"]) if "k_e" in data else None,
            k_p=float(data["k_p"]) if "k_p" in data else None,
        )

    def to_dict(self) -> dict:
        return {
            "h": self.h, "c": self.c, "G": self.G, "q": self.q,
            "m_e": self.m_e, "m_p": self.m_p, "k_e": self.k_e, "k_p": self.k_p,
        }


def load_constants(path: str | Path) -> ConstantSet:
    """Read a constants JSON file (keys h, c, G, q, m_e, m_p, optional k_e, k_p)."""
    with open(path, "r", encoding="utf-8") as fh:
        return ConstantSet.from_dict(json.load(fh))


def desk_constants() -> ConstantSet:
    """Default nondimensional set: q=1, G=0.05, m_e=1, m_p=2, k_e=1, k_p=1/2, c=10.

    h is chosen so the h-based prefactor formula reproduces k_e=1, k_p=1/2
    exactly; the relativistic pieces thereby stay consistent with the
    nonrelativistic ones.
    """
    h = math.sqrt(40.0 / (3.0 * _PHASE))
    return ConstantSet(h=h, c=10.0, G=0.05, q=1.0, m_e=1.0, m_p=2.0, k_e=1.0, k_p=0.5)


@dataclass(frozen=True)
class CoefficientSet:
    """Bulk ODE coefficients; the atmospheric coefficients are D_e=B, D_p=F."""

    A: float
    B: float
    E: float
    F: float

    @property
    def D_e(self) -> float:
        return self.B

    @property
    def D_p(self) -> float:
        return self.F

    def validate(self, allow_degenerate: bool = False) -> "CoefficientSet":
        if min(self.A, self.B, self.E, self.F) <= 0.0:
            raise InadmissibleConstants("coefficients must be strictly positive")
        if allow_degenerate:
            ok = self.E >= self.F and self.A >= self.B and self.E * self.A >= self.B * self.F
        else:
            ok = self.E > self.F and self.A > self.B and self.E * self.A > self.B * self.F
        if not ok:
            raise InadmissibleConstants("coefficient ordering E>F, A>B, E*A>B*F violated")
        return self


def derive_coefficients(consts: ConstantSet) -> CoefficientSet:
    """Closed-form bulk coefficients from the constant set.

    A = (12pi/5k_e)(q^2 + G m_p m_e)   B = (12pi/5k_e)(q^2 - G m_e^2)
    E = (12pi/5k_p)(q^2 + G m_p m_e)   F = (12pi/5k_p)(q^2 - G m_p^2)

    With G=0 the orderings degenerate to equalities (A=B, E=F), which is
    accepted so the zero-gravity limit can be exercised.
    """
    consts.validate()
    ce = 12.0 * math.pi / (5.0 * consts.k_e)
    cp = 12.0 * math.pi / (5.0 * consts.k_p)
    q2 = consts.q**2
    cross = consts.G * consts.m_p * consts.m_e
    coeffs = CoefficientSet(
        A=ce * (q2 + cross),
        B=ce * (q2 - consts.G * consts.m_e**2),
        E=cp * (q2 + cross),
        F=cp * (q2 - consts.G * consts.m_p**2),
    )
    return coeffs.validate(allow_degenerate=(consts.G == 0.0))


@dataclass(frozen=True)
class AdmissibilityWindows:
    """Closed-form windows for N_e/N_p and for the central ratio alpha/beta."""

    ratio_lo: float
    ratio_hi: float
    central_lo: float
    central_hi: float

    def contains_ratio(self, ratio: float) -> bool:
        return self.ratio_lo < ratio < self.ratio_hi

    def contains_central(self, alpha: float, beta: float) -> bool:
        return self.central_lo < alpha / beta < self.central_hi


def ratio_window(consts: ConstantSet) -> AdmissibilityWindows:
    """Particle-count and central-ratio admissibility windows.

    ratio_lo = (1 - G m_p^2/q^2) / (1 + G m_e m_p/q^2)
    ratio_hi = (1 + G m_e m_p/q^2) / (1 - G m_e^2/q^2)
    central window = ((B/A)^(2/3), (E/F)^(2/3))

    The count bounds are exactly F/E and A/B, which is how the window
    endpoints reappear as critical-solution count ratios.
    """
    coeffs = derive_coefficients(consts)
    q2 = consts.q**2
    cross = consts.G * consts.m_e * consts.m_p / q2
    return AdmissibilityWindows(
        ratio_lo=(1.0 - consts.G * consts.m_p**2 / q2) / (1.0 + cross),
        ratio_hi=(1.0 + cross) / (1.0 - consts.G * consts.m_e**2 / q2),
        central_lo=(coeffs.B / coeffs.A) ** (2.0 / 3.0),
        central_hi=(coeffs.E / coeffs.F) ** (2.0 / 3.0),
    )


class RatioVerdict(enum.Enum):
    ADMISSIBLE = "admissible"
    BOUNDARY = "boundary"
    INADMISSIBLE = "inadmissible"


def check_ratio(
    N_e: float,
    N_p: float,
    windows: AdmissibilityWindows,
    boundary_tol: float = 1e-9,
) -> RatioVerdict:
    """Classify N_e/N_p against the window, with a relative boundary band."""
    if N_e <= 0.0 or N_p <= 0.0:
        raise NonPositiveInput("particle counts must be strictly positive")
    ratio = N_e / N_p
    for edge in (windows.ratio_lo, windows.ratio_hi):
        if abs(ratio - edge) <= boundary_tol * abs(edge):
            return RatioVerdict.BOUNDARY
    if windows.ratio_lo < ratio < windows.ratio_hi:
        return RatioVerdict.ADMISSIBLE
    return RatioVerdict.INADMISSIBLE
