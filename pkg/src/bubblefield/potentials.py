"""Boundary integrals over triangulated surfaces.

Provides the mean single-layer kernel Q(x), the shape profile
A(y) = int (x - y).nu_x / |x - y| dsigma_x and its surface mean A_dB, and the
two Gauss identities (flux of x - y, normalized solid angle).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .geometry import SurfaceMesh, area, distance_to_surface, triangle_solid_angles
from .quadrature import RULES, QuadratureConfig, curved_points, map_points, subdivision_centroids

# beyond this many panel diameters the 7-point rule is more accurate than the
# closed form, whose edge terms cancel as (distance/diameter)**2
FAR_FIELD_RATIO = 50.0

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BUBBLE_THREADS", "1")))
    except ValueError:
        return 1


def _panel_diameters(tri: np.ndarray) -> np.ndarray:
    e = np.stack([tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 1], tri[:, 0] - tri[:, 2]], 1)
    return np.linalg.norm(e, axis=2).max(axis=1)


# 1/r over a flat triangle -------------------------------------------------------


def _analytic_inv_r(tri: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Closed-form int_T dS/|x - y| for triangles (m, 3, 3), any x (on or
    off the panel). Edge-by-edge line/angle decomposition."""
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    n = np.cross(v1 - v0, v2 - v0)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    d = np.einsum("ij,ij->i", x - v0, n)
    ad = np.abs(d)
    total = np.zeros(len(tri))
    for a, b in ((v0, v1), (v1, v2), (v2, v0)):
        e = b - a
        L = np.linalg.norm(e, axis=1)
        lhat = e / L[:, None]
        uhat = np.cross(lhat, n)
        ra, rb = a - x, b - x
        t0 = np.einsum("ij,ij->i", ra, uhat)
        lm = np.einsum("ij,ij->i", ra, lhat)
        lp = lm + L
        Rm = np.linalg.norm(ra, axis=1)
        Rp = np.linalg.norm(rb, axis=1)
        R02 = t0 * t0 + d * d
        s = (lp + lm) / (Rp + Rm)
        with np.errstate(divide="ignore", invalid="ignore"):
            # both forms of ln((Rp + lp)/(Rm + lm)); pick the one without cancellation
            f_pos = np.log1p(L * (1.0 + s) / (Rm + lm))
            f_neg = np.log1p(L * (1.0 - s) / (Rp - lp))
            f = np.where(s >= 0, f_pos, f_neg)
            line = np.where(np.abs(t0) > 1e-14 * L, t0 * f, 0.0)
            beta = (np.arctan(t0 * lp / (R02 + ad * Rp))
                    - np.arctan(t0 * lm / (R02 + ad * Rm)))
            ang = np.where((R02 > 0) & (ad > 0), ad * beta, 0.0)
        total += line - ang
    return total


def _regular_inv_r(tri: np.ndarray, x: np.ndarray, order: int = 7) -> np.ndarray:
    bary, w = RULES[order]
    pts = map_points(tri, bary)
    r = np.linalg.norm(pts - x, axis=2)
    areas = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    return areas * (w / r).sum(axis=1)


def panel_potentials(tri: np.ndarray, x: Sequence[float]) -> np.ndarray:
    """int_T dS/|x - y| for each triangle in ``tri`` (shape (m, 3, 3))."""
    x = np.asarray(x, dtype=np.float64)
    tri = np.asarray(tri, dtype=np.float64)
    # local frame keeps the difference vectors well conditioned
    origin = tri[:, 0].mean(axis=0)
    tri, x = tri - origin, x - origin
    diam = _panel_diameters(tri)
    if np.any(diam <= 0) or np.any(
        np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1) <= 0
    ):
        raise ValueError("degenerate triangle")
    far = np.linalg.norm(tri.mean(axis=1) - x, axis=1) > FAR_FIELD_RATIO * diam
    out = np.empty(len(tri))
    if np.any(far):
        out[far] = _regular_inv_r(tri[far], x)
    if np.any(~far):
        out[~far] = _analytic_inv_r(tri[~far], x)
    return out


def panel_potential(triangle: Sequence[Sequence[float]], x: Sequence[float]) -> float:
    """Integral of 1/|x - y| over one flat triangle; exact for x anywhere,
    including on the panel itself."""
    return float(panel_potentials(np.asarray(triangle, dtype=np.float64)[None], x)[0])


def single_layer_mean(mesh: SurfaceMesh, x: Sequence[float]) -> float:
    """Q(x) = (1/|S|) int_S dsigma_y / |x - y| for x off the surface."""
    x = np.asarray(x, dtype=np.float64)
    if distance_to_surface(mesh, x) <= 1e-12 * mesh.diameter:
        raise ValueError("on-surface evaluation: x lies on the mesh")
    # sum in a fixed order; far panels dominate the count but not the value
    return float(np.sum(panel_potentials(mesh.triangles, x)) / area(mesh))


# A(y) and the shape factor --------------------------------------------------------

GEOMETRIES = ("curved", "flat")


def panel_nodes(mesh: SurfaceMesh, geometry: str = "curved") -> np.ndarray:
    """(m, 6, 3) quadratic-panel nodes; ``"flat"`` puts the edge nodes at the
    chord midpoints so the map is affine."""
    if geometry == "curved":
        return mesh.quadratic_nodes()
    if geometry == "flat":
        t = mesh.triangles
        return np.concatenate([t, 0.5 * (t + t[:, [1, 2, 0]])], axis=1)
    raise ValueError(f"geometry must be one of {GEOMETRIES}")


@njit(cache=True)
def _a_sum(X, WJ, LX, LWJ, cent, rad2, y0, y1, y2):
    # sum over panels of (x - y).J / |x - y|; panels whose centroid is within
    # the near radius use the subdivision leaves instead of the regular rule
    n, nq = X.shape[0], X.shape[1]
    nl = LX.shape[1]
    total = 0.0
    for p in range(n):
        cx = cent[p, 0] - y0
        cy = cent[p, 1] - y1
        cz = cent[p, 2] - y2
        if cx * cx + cy * cy + cz * cz < rad2[p]:
            P, W, m = LX, LWJ, nl
        else:
            P, W, m = X, WJ, nq
        acc = 0.0
        for j in range(m):
            dx = P[p, j, 0] - y0
            dy = P[p, j, 1] - y1
            dz = P[p, j, 2] - y2
            r = np.sqrt(dx * dx + dy * dy + dz * dz)
            if r > 0.0:
                acc += (dx * W[p, j, 0] + dy * W[p, j, 1] + dz * W[p, j, 2]) / r
        total += acc
    return total


class _AEvaluator:
    """Precomputed panel data for repeated A(y) evaluations on one mesh."""

    def __init__(self, mesh: SurfaceMesh, cfg: QuadratureConfig, geometry: str = "curved"):
        self.cfg = cfg
        self.origin = mesh.vertices.mean(axis=0)
        nodes = panel_nodes(mesh, geometry) - self.origin
        bary, w = RULES[cfg.regular_order]
        x, J = curved_points(nodes, bary)
        wq = 0.5 * w
        self.panel_areas = (np.linalg.norm(J, axis=2) * wq).sum(axis=1)
        self.panel_volumes = (np.einsum("mqd,mqd->mq", x, J) * wq).sum(axis=1) / 3.0
        self.X = np.ascontiguousarray(x)
        self.WJ = np.ascontiguousarray(J * wq[None, :, None])
        leaves = subdivision_centroids(cfg.singular_subdivision_depth)
        xl, Jl = curved_points(nodes, leaves)
        self.leaf_x = np.ascontiguousarray(xl)
        self.leaf_wJ = np.ascontiguousarray(Jl * (0.5 / len(leaves)))
        self.centroids = np.ascontiguousarray(nodes[:, :3].mean(axis=1))
        self.panel_centroids = curved_points(nodes, RULES[1][0])[0][:, 0] + self.origin
        self.radius2 = (cfg.near_singular_threshold * _panel_diameters(nodes[:, :3])) ** 2

    def one(self, y: np.ndarray) -> float:
        return _a_sum(self.X, self.WJ, self.leaf_x, self.leaf_wJ, self.centroids,
                      self.radius2, float(y[0]), float(y[1]), float(y[2]))

    def __call__(self, ys: np.ndarray) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=np.float64)) - self.origin
        return np.array([self.one(y) for y in ys])

    def many(self, ys: np.ndarray) -> np.ndarray:
        ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
        nt = _threads()
        if nt == 1 or len(ys) < 64:
            return self(ys)
        # disjoint slices -> deterministic regardless of scheduling
        bounds = np.linspace(0, len(ys), nt + 1).astype(int)
        parts = [ys[bounds[i]:bounds[i + 1]] for i in range(nt)]
        with ThreadPoolExecutor(nt) as pool:
            return np.concatenate(list(pool.map(self, parts)))


def A_of_y(mesh: SurfaceMesh, y: Sequence[float], cfg: QuadratureConfig = QuadratureConfig(),
           geometry: str = "curved") -> float:
    """A(y) = int_S (x - y).nu_x / |x - y| dsigma_x for y on the surface.

    The integrand is bounded, so panels close to y are handled by uniform
    4**depth subdivision with a centroid rule on the leaves.
    """
    return float(_AEvaluator(mesh, cfg, geometry)(y)[0])


def A_profile(mesh: SurfaceMesh, cfg: QuadratureConfig = QuadratureConfig(),
              points: np.ndarray | None = None, geometry: str = "curved") -> np.ndarray:
    """A(y) at every mesh vertex, or at ``points`` if given."""
    ev = _AEvaluator(mesh, cfg, geometry)
    return ev.many(mesh.vertices if points is None else points)


@dataclass(frozen=True)
class ShapeFactors:
    A_dB: float
    area_B: float
    vol_B: float
    A_profile: np.ndarray

    def to_dict(self) -> dict:
        return {
            "A_dB": float(self.A_dB),
            "area_B": float(self.area_B),
            "vol_B": float(self.vol_B),
            "A_profile": [float(a) for a in self.A_profile],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeFactors":
        return cls(float(d["A_dB"]), float(d["area_B"]), float(d["vol_B"]),
                   np.asarray(d.get("A_profile", []), dtype=np.float64))


def shape_factors(mesh: SurfaceMesh, cfg: QuadratureConfig = QuadratureConfig(),
                  collocation: str = "vertex", geometry: str = "curved") -> ShapeFactors:
    """A_dB = (1/|S|) int_S A(y) dsigma_y, together with |S| and the volume.

    ``geometry="curved"`` integrates over quadratic panels rebuilt from the
    vertex normals; ``"flat"`` uses the triangles as they are. Area and
    volume come from the same representation.

    ``collocation="vertex"`` samples A at vertices, weighted by one third of
    the incident panel areas; ``"centroid"`` samples at the panel centroids
    (mapped onto the panel) weighted by panel area, as a cross-check.
    """
    ev = _AEvaluator(mesh, cfg, geometry)
    if collocation == "vertex":
        prof = ev.many(mesh.vertices)
        w = np.zeros(mesh.n_vertices)
        for k in range(3):
            np.add.at(w, mesh.faces[:, k], ev.panel_areas / 3.0)
    elif collocation == "centroid":
        prof = ev.many(ev.panel_centroids)
        w = ev.panel_areas
    else:
        raise ValueError("collocation must be 'vertex' or 'centroid'")
    S = float(ev.panel_areas.sum())
    A = float(np.dot(w, prof) / S)
    if not A > 0:
        raise ValueError(f"non-positive shape factor A_dB={A:.6g}")
    return ShapeFactors(A, S, float(ev.panel_volumes.sum()), prof)


# Gauss identities ------------------------------------------------------------------


def gauss_solid_angle(mesh: SurfaceMesh, y: Sequence[float], cfg: QuadratureConfig | None = None) -> float:
    """(1/4pi) int_S (x - y).nu_x / |x - y|^3 dsigma_x.

    Evaluated panel-by-panel with the exact solid angle of a flat triangle,
    so the result is 1 inside, 0 outside and 1/2 at a face interior point.
    ``cfg`` is accepted for interface symmetry and unused.
    """
    r = mesh.triangles - np.asarray(y, dtype=np.float64)
    return float(triangle_solid_angles(r).sum() / (4.0 * np.pi))


def flux_identity(mesh: SurfaceMesh, y: Sequence[float]) -> float:
    """int_S (x - y).nu_x dsigma_x; linear integrand, so the centroid rule is exact."""
    y = np.asarray(y, dtype=np.float64)
    return float(np.einsum("ij,ij->", mesh.face_centroids - y, mesh.area_vectors))
