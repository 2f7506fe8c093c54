"""Inverse design: pick k_c_bar or delta so the peak near-bubble pressure
hits a target.

The objective is the max of |u_s| (or of one component) over a time grid
at one probe point placed at distance delta**q outside the bubble along a
fixed direction. ``window="late"`` starts the grid after the pulse has
swept past the probe, where only the ringing term survives.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .field import FieldRequest, evaluate_dominant
from .geometry import SurfaceMesh, scale_translate
from .incident import IncidentPulse
from .physics import MediumBubbleSpec, derive_constants
from .potentials import ShapeFactors, shape_factors

FREE_PARAMETERS = ("k_c_bar", "delta")
WINDOWS = ("full", "late")
COMPONENTS = ("u_s", "u1", "u2")
MAX_ITER = 200
SCAN_POINTS = 16


class TuningError(RuntimeError):
    pass


def ray_exit(mesh: SurfaceMesh, origin, direction) -> float:
    """Largest ray parameter at which origin + t * direction crosses the mesh
    (Moller-Trumbore over all faces)."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    tri = mesh.triangles
    e1, e2 = tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]
    pv = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pv)
    ok = np.abs(det) > 1e-300
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tv = o - tri[:, 0]
    u = np.einsum("ij,ij->i", tv, pv) * inv
    qv = np.cross(tv, e1)
    v = (qv @ d) * inv
    t = np.einsum("ij,ij->i", e2, qv) * inv
    eps = 1e-12
    hit = ok & (u >= -eps) & (v >= -eps) & (u + v <= 1 + eps) & (t > 0)
    if not hit.any():
        raise ValueError("probe ray does not cross the bubble surface")
    return float(t[hit].max())


def probe_point(bubble_mesh: SurfaceMesh, z, delta: float, q: float, direction=(1.0, 0.0, 0.0)) -> np.ndarray:
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    z = np.asarray(z, dtype=np.float64)
    return z + (ray_exit(bubble_mesh, z, d) + delta**q) * d


def peak_pressure(spec: MediumBubbleSpec, factors: ShapeFactors, pulse: IncidentPulse,
                  standoff_q: float, time_horizon: float, *, mesh: SurfaceMesh,
                  dt: float = 0.05, direction=(1.0, 0.0, 0.0), window: str = "full",
                  component: str = "u_s") -> float:
    """max_t |component(x_probe, t)| on a grid of step ``dt`` covering
    ``time_horizon`` seconds from the arrival of the pulse at the probe
    (``window="full"``) or from the moment it has passed (``"late"``).

    ``mesh`` is the reference surface B; it is scaled to the bubble here.
    """
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    if component not in COMPONENTS:
        raise ValueError(f"component must be one of {COMPONENTS}")
    if not 0 <= standoff_q <= 1:
        raise ValueError("standoff_q must lie in [0, 1]")
    C = derive_constants(spec, factors)
    bubble = scale_translate(mesh, spec.delta, spec.z)
    x = probe_point(bubble, spec.z, spec.delta, standoff_q, direction)
    r0 = float(np.linalg.norm(spec.center - pulse.source))
    R = float(np.linalg.norm(x - spec.center))
    t0 = (r0 + R) / C.c0 + pulse.delay
    if window == "late":
        t0 += pulse.T_p
    req = FieldRequest([x], t0, t0 + time_horizon, dt, component != "u_s")
    g = evaluate_dominant(spec, C, factors, bubble, pulse, req)
    vals = {"u_s": g.u_s, "u1": g.u1, "u2": g.u2}[component]
    return float(np.max(np.abs(vals)))


@dataclass
class TuningProblem:
    target_peak: float
    standoff_q: float
    free_parameter: str
    bounds: tuple
    fixed: MediumBubbleSpec
    pulse: IncidentPulse
    mesh: SurfaceMesh
    tolerance: float = 1e-6
    factors: Optional[ShapeFactors] = None
    time_horizon: float = 30.0
    dt: float = 0.05
    window: str = "full"
    component: str = "u_s"
    direction: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        lo, hi = self.bounds
        if not (lo > 0 and hi > lo):
            raise ValueError("bounds must satisfy 0 < lo < hi")
        if not self.target_peak > 0:
            raise ValueError("target_peak must be positive")
        if self.free_parameter not in FREE_PARAMETERS:
            raise ValueError(f"free_parameter must be one of {FREE_PARAMETERS}")
        if self.free_parameter == "delta" and hi > 1:
            raise ValueError("delta bounds must stay <= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.factors is None:
            self.factors = shape_factors(self.mesh)

    def peak(self, theta: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = replace(self.fixed, **{self.free_parameter: float(theta)})
        return peak_pressure(spec, self.factors, self.pulse, self.standoff_q, self.time_horizon,
                             mesh=self.mesh, dt=self.dt, direction=self.direction,
                             window=self.window, component=self.component)


@dataclass
class TuningResult:
    parameter: str
    value: float
    achieved_peak: float
    iterations: int
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "value": self.value,
                "achieved_peak": self.achieved_peak, "iterations": self.iterations,
                "warnings": list(self.warnings)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _bisect(g, a, b, ga, xtol, maxiter):
    for it in range(1, maxiter + 1):
        m = 0.5 * (a + b)
        gm = g(m)
        if gm == 0 or b - a < xtol:
            return m, it
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b), maxiter


def tune(problem: TuningProblem, scan: bool = True) -> TuningResult:
    """Root of peak(theta) - target on the bounds by Brent's method, with
    bisection as the fallback.

    A 16-point geometric scan of the bounds looks for extra sign changes;
    if there is more than one the first bracket is used and a warning is
    attached to the result.
    """
    P = problem
    lo, hi = map(float, P.bounds)
    g = lambda th: P.peak(th) - P.target_peak
    notes = []
    g_lo, g_hi = g(lo), g(hi)
    if (g_lo > 0) == (g_hi > 0) and g_lo != 0 and g_hi != 0:
        raise TuningError(f"target unattainable in bounds: peak({lo:g})={g_lo + P.target_peak:.6g}, "
                          f"peak({hi:g})={g_hi + P.target_peak:.6g}, target={P.target_peak:.6g}")
    a, b = lo, hi
    if scan:
        th = np.geomspace(lo, hi, SCAN_POINTS)
        gv = np.array([g_lo] + [g(t) for t in th[1:-1]] + [g_hi])
        flips = np.nonzero(np.sign(gv[:-1]) * np.sign(gv[1:]) < 0)[0]
        if len(flips) > 1:
            notes.append(f"non-monotone objective: {len(flips)} sign changes on a "
                         f"{SCAN_POINTS}-point scan; returning the first bracketed root")
        if len(flips):
            a, b = float(th[flips[0]]), float(th[flips[0] + 1])
    # the peak is at worst ~linear in theta, so pin theta well below tolerance
    xtol = 1e-3 * P.tolerance * a
    try:
        root, info = brentq(g, a, b, xtol=xtol, rtol=1e-3 * P.tolerance, maxiter=MAX_ITER,
                            full_output=True)
        iters = info.iterations
    except RuntimeError:
        notes.append("Brent iteration did not converge; fell back to bisection")
        root, iters = _bisect(g, a, b, g(a), xtol, MAX_ITER)
    achieved = P.peak(root)
    if abs(achieved - P.target_peak) > P.tolerance * P.target_peak:
        notes.append(f"achieved peak misses target by {abs(achieved / P.target_peak - 1):.3g} (relative)")
    return TuningResult(P.free_parameter, float(root), achieved, int(iters), notes)
