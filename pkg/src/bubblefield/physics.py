"""Medium and bubble parameters under the critical scaling, and every
derived constant of the dominant-field formula.

Units are SI throughout. The bubble density and bulk modulus are stored in
scaled form: rho_c = rho_c_bar * delta**2 and k_c = k_c_bar * delta**2.
"""

from __future__ import annotations

import json
import math
import warnings
from fractions import Fraction
from dataclasses import asdict, dataclass, replace

import numpy as np

from .potentials import ShapeFactors


@dataclass(frozen=True)
class MediumBubbleSpec:
    rho_m: float
    k_m: float
    delta: float
    rho_c_bar: float
    k_c_bar: float
    z: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(c) for c in self.z))
        if len(self.z) != 3:
            raise ValueError("z must be a 3-vector")
        for name in ("rho_m", "k_m", "delta", "rho_c_bar", "k_c_bar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if self.delta > 1:
            raise ValueError("delta must be <= 1 (asymptotic regime)")
        if self.delta > 0.1:
            warnings.warn(f"delta={self.delta:g} is outside the small-bubble regime (> 0.1)",
                          stacklevel=2)

    @property
    def rho_c(self) -> float:
        return self.rho_c_bar * self.delta**2

    @property
    def k_c(self) -> float:
        return self.k_c_bar * self.delta**2

    @property
    def center(self) -> np.ndarray:
        return np.array(self.z)

    def with_(self, **changes) -> "MediumBubbleSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z"] = list(self.z)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MediumBubbleSpec":
        return cls(rho_m=float(d["rho_m"]), k_m=float(d["k_m"]), delta=float(d["delta"]),
                   rho_c_bar=float(d["rho_c_bar"]), k_c_bar=float(d["k_c_bar"]),
                   z=tuple(d.get("z", (0.0, 0.0, 0.0))))


def minnaert_frequency(k_c_bar: float, rho_m: float, A_dB: float) -> float:
    """omega_M = sqrt(2 k_c_bar / (A_dB rho_m)), independent of delta."""
    if not (k_c_bar > 0 and rho_m > 0 and A_dB > 0):
        raise ValueError("minnaert_frequency needs positive arguments")
    return math.sqrt(2.0 * k_c_bar / (A_dB * rho_m))


@dataclass(frozen=True)
class DerivedConstants:
    """Constants of the dominant scattered field.

    ``prefactor`` is the leading-order amplitude omega_M rho_m |B| delta /
    (4 pi k_c_bar). ``p`` uses the exact contrast alpha (not its leading
    term 1/rho_c), so ``p**-0.5`` differs from ``omega_M`` at O(delta^2).
    The coefficient D multiplying the boundary flux of the incident wave is
    assembled three ways: ``D_exact`` from alpha p^(-1/2) rho_c/k_c c0^2 with
    the exact alpha and p; ``D_alpha_lead`` from the same expression with
    alpha replaced by 1/rho_c; ``D_leading`` from the closed form in terms of
    omega_M. ``prefactor_route`` is ``D_leading * (rho_m/k_m) |Omega|``.
    """

    c0: float
    alpha: float
    beta: float
    gamma: float
    omega_M: float
    A_dOmega: float
    vol_Omega: float
    p: float
    prefactor: float
    D_exact: float
    D_alpha_lead: float
    D_leading: float
    prefactor_route: float

    @property
    def omega_p(self) -> float:
        return self.p**-0.5

    def to_dict(self) -> dict:
        d = asdict(self)
        d["omega_p"] = self.omega_p
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def derive_constants(spec: MediumBubbleSpec, factors: ShapeFactors) -> DerivedConstants:
    """Assemble all constants from the medium/bubble parameters and the shape
    factors of the reference (unit-scale) surface B."""
    if not factors.A_dB > 0:
        raise ValueError("A_dB must be positive")
    d = spec.delta
    rho_c, k_c = spec.rho_c, spec.k_c
    c0 = math.sqrt(spec.k_m / spec.rho_m)
    alpha = 1.0 / rho_c - 1.0 / spec.rho_m
    beta = 1.0 / k_c - 1.0 / spec.k_m
    gamma = beta - alpha * rho_c / k_c
    wM = minnaert_frequency(spec.k_c_bar, spec.rho_m, factors.A_dB)
    A_dO = d**2 * factors.A_dB
    vol_O = d**3 * factors.vol_B
    p = 0.5 * alpha * spec.rho_m * (rho_c / k_c) * A_dO
    prefactor = wM * spec.rho_m * factors.vol_B * d / (4.0 * math.pi * spec.k_c_bar)
    D_exact = alpha * spec.rho_m * p**-0.5 / (4.0 * math.pi) * (rho_c / k_c) * c0**2
    a_lead = 1.0 / rho_c
    p_lead = 0.5 * a_lead * spec.rho_m * (rho_c / k_c) * A_dO
    D_alpha_lead = a_lead * spec.rho_m * p_lead**-0.5 / (4.0 * math.pi) * (rho_c / k_c) * c0**2
    D_leading = (c0**2 / (4.0 * math.pi)) / d**2 * (spec.rho_m / spec.k_c_bar) * wM
    route = D_leading * (spec.rho_m / spec.k_m) * vol_O
    return DerivedConstants(c0=c0, alpha=alpha, beta=beta, gamma=gamma, omega_M=wM,
                            A_dOmega=A_dO, vol_Omega=vol_O, p=p, prefactor=prefactor,
                            D_exact=D_exact, D_alpha_lead=D_alpha_lead, D_leading=D_leading, prefactor_route=route)


def contrast_identity_residual(spec: MediumBubbleSpec, exact: bool = True) -> float:
    """Relative residual of 1 - gamma k_c rho_m / rho_c = (k_c / rho_c) / c0^2.

    With ``exact=True`` the inputs are converted to rationals and the
    algebra is carried out without rounding, so any nonzero result is a
    genuine mismatch. In floating point, gamma is the difference of two
    O(1/k_c) terms and the residual grows like eps * rho_m / rho_c.
    """
    num = Fraction if exact else float
    rho_m, k_m = num(spec.rho_m), num(spec.k_m)
    d2 = num(spec.delta) ** 2
    rho_c, k_c = num(spec.rho_c_bar) * d2, num(spec.k_c_bar) * d2
    alpha = 1 / rho_c - 1 / rho_m
    beta = 1 / k_c - 1 / k_m
    gamma = beta - alpha * rho_c / k_c
    lhs = 1 - gamma * k_c * rho_m / rho_c
    rhs = (k_c / rho_c) * rho_m / k_m
    return float(abs(lhs - rhs) / abs(rhs))


def load_config(path) -> tuple[MediumBubbleSpec, dict]:
    """Read a run config: the MediumBubbleSpec fields plus ``x0`` and ``pulse``. Returns the
    spec and the raw dict (for the pulse and any extra keys)."""
    with open(path) as fh:
        raw = json.load(fh)
    return MediumBubbleSpec.from_dict(raw), raw
