"""Causal point-source incident waves u_i(x, t) = lam(t - |x - x0|/c0) / |x - x0|.

The time profile ``lam`` is a compactly supported C-infinity bump, so zero
initial data hold exactly and every convolution has finite support. The
``delta_front`` kind is an idealized impulsive front with no pointwise
values; only the closed-form secondary wave in :mod:`bubblefield.field`
uses it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

KINDS = ("smooth_bump", "delta_front")

# exp(-1/w) underflows to zero below this w; derivatives would be 0 * inf
_W_MIN = 1.0 / 700.0


@dataclass(frozen=True)
class IncidentPulse:
    kind: str = "smooth_bump"
    T_p: float = 1.0
    amplitude: float = 1.0
    x0: tuple = (-5.0, 0.0, 0.0)
    delay: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"pulse kind must be one of {KINDS}")
        object.__setattr__(self, "x0", tuple(float(c) for c in self.x0))
        if len(self.x0) != 3:
            raise ValueError("x0 must be a 3-vector")
        if self.kind == "smooth_bump" and not self.T_p > 0:
            raise ValueError("T_p must be positive")
        if self.delay < 0:
            raise ValueError("delay must be >= 0 (causal profile)")

    @property
    def source(self) -> np.ndarray:
        return np.array(self.x0)

    @property
    def support(self) -> tuple[float, float]:
        return (self.delay, self.delay + self.T_p)

    def scaled(self, factor: float) -> "IncidentPulse":
        return IncidentPulse(self.kind, self.T_p, self.amplitude * factor, self.x0, self.delay)

    def shifted(self, dt: float) -> "IncidentPulse":
        return IncidentPulse(self.kind, self.T_p, self.amplitude, self.x0, self.delay + dt)

    def to_dict(self) -> dict:
        if self.kind == "delta_front":
            return {"kind": "delta_front"}
        d = {"kind": self.kind, "T_p": self.T_p, "amplitude": self.amplitude}
        if self.delay:
            d["delay"] = self.delay
        return d

    @classmethod
    def from_dict(cls, d: dict, x0: Sequence[float] = (-5.0, 0.0, 0.0)) -> "IncidentPulse":
        kind = d.get("kind", "smooth_bump")
        if kind == "delta_front":
            return cls(kind="delta_front", x0=tuple(x0))
        return cls(kind=kind, T_p=float(d["T_p"]), amplitude=float(d.get("amplitude", 1.0)),
                   x0=tuple(x0), delay=float(d.get("delay", 0.0)))


def lambda_derivs(pulse: IncidentPulse, t):
    """(lam, lam', lam'') of amplitude * exp(-1/(s(1 - s))), s = (t - delay)/T_p,
    zero outside 0 < s < 1. Vectorized over ``t``."""
    if pulse.kind != "smooth_bump":
        raise ValueError("delta_front has no pointwise derivatives")
    t = np.asarray(t, dtype=np.float64)
    s = (t - pulse.delay) / pulse.T_p
    w = s * (1.0 - s)
    ok = w > _W_MIN
    ws = np.where(ok, w, 0.5)
    dw = 1.0 - 2.0 * s
    phi1 = dw / ws**2
    phi2 = -2.0 / ws**2 - 2.0 * dw**2 / ws**3
    lam = np.where(ok, pulse.amplitude * np.exp(-1.0 / ws), 0.0)
    lam1 = lam * phi1 / pulse.T_p
    lam2 = lam * (phi1**2 + phi2) / pulse.T_p**2
    if lam.ndim == 0:
        return float(lam), float(lam1), float(lam2)
    return lam, lam1, lam2


def _dist(pulse: IncidentPulse, x) -> np.ndarray:
    r = np.linalg.norm(np.asarray(x, dtype=np.float64) - pulse.source, axis=-1)
    if np.any(r == 0):
        raise ValueError("incident field is singular at the source point x0")
    return r


def u_i(pulse: IncidentPulse, c0: float, x, t):
    r = _dist(pulse, x)
    return lambda_derivs(pulse, np.asarray(t) - r / c0)[0] / r


def u_i_t(pulse: IncidentPulse, c0: float, x, t):
    r = _dist(pulse, x)
    return lambda_derivs(pulse, np.asarray(t) - r / c0)[1] / r


def u_i_tt(pulse: IncidentPulse, c0: float, x, t):
    r = _dist(pulse, x)
    return lambda_derivs(pulse, np.asarray(t) - r / c0)[2] / r


def grad_u_i(pulse: IncidentPulse, c0: float, x, t) -> np.ndarray:
    """Spatial gradient at points ``x`` (shape (..., 3)) and one time ``t``:
    -(lam'(tau)/(c0 r) + lam(tau)/r^2) (x - x0)/r with tau = t - r/c0."""
    x = np.asarray(x, dtype=np.float64)
    r = _dist(pulse, x)
    lam, lam1, _ = lambda_derivs(pulse, t - r / c0)
    radial = -(lam1 / (c0 * r) + lam / r**2)
    return (radial / r)[..., None] * (x - pulse.source)
