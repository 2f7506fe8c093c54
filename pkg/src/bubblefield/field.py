"""Dominant scattered field near a resonating bubble and its split into a
primary (time-shifted incident) and secondary (ringing) reflected wave.

    u_s(x, t) = prefactor * Q(x) * int_0^s sin(omega_M (s - tau)) u_i_tt(z, tau) dtau,
    s = t - |x - z| / c0.

Integrating by parts twice with zero initial data gives

    int_0^s sin(w(s - tau)) f'' dtau = w f(s) - w^2 int_0^s sin(w(s - tau)) f dtau,

so u_s = U1 - U2 with U1 = w * prefactor * Q * u_i(z, s) and
U2 = w^2 * prefactor * Q * int sin(...) u_i(z, tau) dtau. The pair of signs
is exported as ``SIGN_PAIR`` and re-derived numerically by
:func:`bubblefield.validation.decomposition_sign_oracle`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .geometry import SurfaceMesh, distance_to_surface, is_exterior
from .incident import IncidentPulse, lambda_derivs
from .physics import DerivedConstants, MediumBubbleSpec
from .potentials import single_layer_mean

SIGN_PAIR = (1, -1)
DEFAULT_DT = 2e-3
# convolution sub-intervals per pulse duration; keeps the Simpson error of
# the bump convolutions near 1e-10 independent of T_p
STEPS_PER_PULSE = 500
CSV_HEADER = ["x", "y", "z", "t", "u_s", "u1", "u2", "q_eff"]


def _simpson(g: np.ndarray, h: float) -> float:
    return h / 3.0 * (g[0] + g[-1] + 4.0 * g[1:-1:2].sum() + 2.0 * g[2:-1:2].sum())


def sine_convolution(omega: float, f: Callable, s: float, dt: float = DEFAULT_DT,
                     support: tuple | None = None) -> float:
    """int_0^s sin(omega (s - tau)) f(tau) dtau by composite Simpson.

    The interval (clipped to ``support`` when f is known to vanish outside
    it) is split into the smallest even number of equal steps no longer than
    ``dt``, so the grid ends exactly on s and f is only ever sampled at
    exact values. ``f`` must accept an array of times. Returns 0 for s <= 0.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    a, b = 0.0, float(s)
    if support is not None:
        a, b = max(a, support[0]), min(b, support[1])
    if b <= a:
        return 0.0
    n = max(2, math.ceil((b - a) / dt))
    n += n % 2
    tau = np.linspace(a, b, n + 1)
    return float(_simpson(np.sin(omega * (s - tau)) * f(tau), (b - a) / n))


@dataclass(frozen=True)
class FieldRequest:
    """Points (m) and a uniform time grid t0, t0 + dt, ... <= t1 (s)."""

    points: np.ndarray
    t0: float
    t1: float
    dt: float
    want_decomposition: bool = True

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if pts.shape[1] != 3:
            raise ValueError("points must be 3-vectors")
        object.__setattr__(self, "points", pts)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t0 < 0:
            raise ValueError("t0 must be >= 0")
        if self.t1 < self.t0:
            raise ValueError("t1 must be >= t0")

    @property
    def times(self) -> np.ndarray:
        n = int(math.floor((self.t1 - self.t0) / self.dt + 1e-9))
        return self.t0 + self.dt * np.arange(n + 1)


@dataclass(frozen=True)
class FieldSample:
    point: tuple
    time: float
    u_s: float
    u1: float
    u2: float
    q_effective: float


@dataclass
class FieldGrid:
    """Field values on a (point, time) grid; arrays are (n_points, n_times)."""

    points: np.ndarray
    times: np.ndarray
    u_s: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    Q: np.ndarray
    q_eff: np.ndarray
    sign_pair: tuple = SIGN_PAIR
    meta: dict = dc_field(default_factory=dict)

    def samples(self) -> list[FieldSample]:
        out = []
        for i, x in enumerate(self.points):
            for j, t in enumerate(self.times):
                out.append(FieldSample(tuple(x), float(t), float(self.u_s[i, j]),
                                       float(self.u1[i, j]), float(self.u2[i, j]),
                                       float(self.q_eff[i])))
        return out

    def recombined(self) -> np.ndarray:
        s1, s2 = self.sign_pair
        return s1 * self.u1 + s2 * self.u2


def q_effective(dist: float, delta: float) -> float:
    """log_delta of the standoff distance; NaN when delta = 1."""
    if delta == 1.0 or dist <= 0:
        return float("nan")
    return math.log(dist) / math.log(delta) + 0.0  # no signed zero


def check_exterior(bubble_mesh: SurfaceMesh, points: np.ndarray) -> None:
    for i, x in enumerate(np.atleast_2d(points)):
        if not is_exterior(bubble_mesh, x):
            raise ValueError(f"point {i} at {tuple(float(c) for c in x)} is not exterior to the "
                             "bubble; the interior estimate is not available")


class _Kernel:
    """Retarded data of one incident pulse seen from the bubble centre."""

    def __init__(self, spec: MediumBubbleSpec, constants: DerivedConstants,
                 pulse: IncidentPulse, quad_dt: float):
        if pulse.kind != "smooth_bump":
            raise ValueError("evaluate_dominant needs a smooth_bump pulse; use delta_front_u2")
        self.pulse = pulse
        self.c0 = constants.c0
        self.w = constants.omega_M
        self.r0 = float(np.linalg.norm(spec.center - pulse.source))
        if self.r0 == 0:
            raise ValueError("source x0 coincides with the bubble centre")
        self.lag = self.r0 / self.c0
        lo, hi = pulse.support
        self.support = (self.lag + lo, self.lag + hi)
        self.dt = quad_dt

    def ui(self, tau):
        return lambda_derivs(self.pulse, np.asarray(tau) - self.lag)[0] / self.r0

    def ui_tt(self, tau):
        return lambda_derivs(self.pulse, np.asarray(tau) - self.lag)[2] / self.r0

    def main(self, s: float) -> float:
        return sine_convolution(self.w, self.ui_tt, s, self.dt, self.support)

    def ringing(self, s: float) -> float:
        return sine_convolution(self.w, self.ui, s, self.dt, self.support)


def _quad_dt(request_dt: float, pulse: IncidentPulse) -> float:
    return min(request_dt, pulse.T_p / STEPS_PER_PULSE)


def evaluate_dominant(spec: MediumBubbleSpec, constants: DerivedConstants, factors,
                      bubble_mesh: SurfaceMesh, pulse: IncidentPulse,
                      request: FieldRequest) -> FieldGrid:
    """Dominant field u_s on the request grid; U1, U2 too if requested.

    Q(x) is the mean single-layer kernel over the scaled bubble mesh. The
    convolution step is the request dt, capped at T_p / STEPS_PER_PULSE.
    ``factors`` is accepted for interface symmetry (the constants already
    carry everything derived from it).
    """
    pts = request.points
    check_exterior(bubble_mesh, pts)
    times = request.times
    ker = _Kernel(spec, constants, pulse, _quad_dt(request.dt, pulse))
    z = spec.center
    P, T = len(pts), len(times)
    u_s = np.zeros((P, T))
    u1 = np.full((P, T), np.nan)
    u2 = np.full((P, T), np.nan)
    Q = np.array([single_layer_mean(bubble_mesh, x) for x in pts])
    q_eff = np.array([q_effective(distance_to_surface(bubble_mesh, x), spec.delta) for x in pts])
    pre = constants.prefactor
    w = ker.w
    for i, x in enumerate(pts):
        R = float(np.linalg.norm(x - z))
        s_all = times - R / ker.c0
        amp = pre * Q[i]
        conv = np.array([ker.main(s) for s in s_all])
        u_s[i] = amp * conv
        if request.want_decomposition:
            u1[i] = w * amp * ker.ui(np.maximum(s_all, 0.0)) * (s_all > 0)
            u2[i] = w**2 * amp * np.array([ker.ringing(s) for s in s_all])
    R_all = np.linalg.norm(pts - z, axis=1)
    meta = {
        "sign_pair": list(SIGN_PAIR),
        "quad_dt": ker.dt,
        "arrival_at_z": ker.lag,
        "u1_gain_Q": (w * pre * Q).tolist(),
        "u1_gain_sphere": (w * pre / R_all).tolist(),
    }
    return FieldGrid(pts, times, u_s, u1, u2, Q, q_eff, SIGN_PAIR, meta)


def decompose(spec, constants, factors, bubble_mesh, pulse, request) -> tuple[np.ndarray, np.ndarray]:
    """(U1, U2) on the request grid; u_s = SIGN_PAIR[0] U1 + SIGN_PAIR[1] U2."""
    req = FieldRequest(request.points, request.t0, request.t1, request.dt, True)
    g = evaluate_dominant(spec, constants, factors, bubble_mesh, pulse, req)
    return g.u1, g.u2


def delta_front_u2(spec: MediumBubbleSpec, constants: DerivedConstants, bubble_mesh: SurfaceMesh,
                   pulse: IncidentPulse, x: Sequence[float], t):
    """Secondary wave for an impulsive front from x0:

    omega_M^2 prefactor Q(x) sin(omega_M (t - |x - z|/c0 - |z - x0|/c0)) / |z - x0|,

    multiplied by the Heaviside step of the phase (zero before arrival).
    """
    x = np.asarray(x, dtype=np.float64)
    check_exterior(bubble_mesh, x)
    z = spec.center
    r0 = float(np.linalg.norm(z - pulse.source))
    if r0 == 0:
        raise ValueError("source x0 coincides with the bubble centre")
    c0, w = constants.c0, constants.omega_M
    s = np.asarray(t, dtype=np.float64) - (float(np.linalg.norm(x - z)) + r0) / c0
    Q = single_layer_mean(bubble_mesh, x)
    out = np.where(s > 0, w**2 * constants.prefactor * Q * np.sin(w * s) / r0, 0.0)
    return float(out) if out.ndim == 0 else out


def write_csv(grid: FieldGrid, path) -> None:
    """One row per (point, time); 17 significant digits."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for i, x in enumerate(grid.points):
            for j, t in enumerate(grid.times):
                wr.writerow([fmt(x[0]), fmt(x[1]), fmt(x[2]), fmt(t), fmt(grid.u_s[i, j]),
                             fmt(grid.u1[i, j]), fmt(grid.u2[i, j]), fmt(grid.q_eff[i])])
