"""Closed triangulated surfaces: construction, I/O, similarity maps and
integral properties.

Meshes are immutable value objects. Faces are vertex-index triples ordered
counter-clockwise when seen from outside, so that the right-hand normal
points out of the enclosed body.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

MAX_SUBDIVISIONS = 7


class MeshError(ValueError):
    """Raised for meshes that fail the closed/orientable/outward checks."""


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    vertices: np.ndarray
    faces: np.ndarray
    label: Optional[str] = None
    normals: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError("vertices must have shape (n, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError("faces must have shape (m, 3)")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if self.normals is not None:
            n = np.array(self.normals, dtype=np.float64)
            if n.shape != v.shape:
                raise MeshError("normals must match the vertex array shape")
            n /= np.linalg.norm(n, axis=1, keepdims=True)
            n.setflags(write=False)
            object.__setattr__(self, "normals", n)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def triangles(self) -> np.ndarray:
        """(m, 3, 3) array of face corner coordinates."""
        if "tri" not in self._cache:
            t = self.vertices[self.faces]
            t.setflags(write=False)
            self._cache["tri"] = t
        return self._cache["tri"]

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted index pairs."""
        if "edges" not in self._cache:
            e = np.sort(self._directed_edges(), axis=1)
            self._cache["edges"] = np.unique(e, axis=0)
        return self._cache["edges"]

    def _directed_edges(self) -> np.ndarray:
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    @property
    def area_vectors(self) -> np.ndarray:
        """Per-face normal scaled by face area."""
        if "avec" not in self._cache:
            t = self.triangles
            a = 0.5 * np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
            a.setflags(write=False)
            self._cache["avec"] = a
        return self._cache["avec"]

    @property
    def face_areas(self) -> np.ndarray:
        if "areas" not in self._cache:
            self._cache["areas"] = np.linalg.norm(self.area_vectors, axis=1)
        return self._cache["areas"]

    @property
    def face_normals(self) -> np.ndarray:
        return self.area_vectors / self.face_areas[:, None]

    @property
    def face_centroids(self) -> np.ndarray:
        return self.triangles.mean(axis=1)

    @property
    def vertex_areas(self) -> np.ndarray:
        """Barycentric lumped area: one third of each incident face."""
        if "vareas" not in self._cache:
            w = np.zeros(self.n_vertices)
            third = self.face_areas / 3.0
            for k in range(3):
                np.add.at(w, self.faces[:, k], third)
            self._cache["vareas"] = w
        return self._cache["vareas"]

    @property
    def vertex_normals(self) -> np.ndarray:
        """Unit vertex normals: the exact ones when the mesh was built from an
        analytic surface, otherwise angle-weighted averages of face normals."""
        if self.normals is not None:
            return self.normals
        if "vnormals" not in self._cache:
            t = self.triangles
            n = np.zeros_like(self.vertices)
            fn = self.face_normals
            for k in range(3):
                a = t[:, (k + 1) % 3] - t[:, k]
                b = t[:, (k + 2) % 3] - t[:, k]
                ang = np.arctan2(np.linalg.norm(np.cross(a, b), axis=1),
                                 np.einsum("ij,ij->i", a, b))
                np.add.at(n, self.faces[:, k], ang[:, None] * fn)
            n /= np.linalg.norm(n, axis=1, keepdims=True)
            n.setflags(write=False)
            self._cache["vnormals"] = n
        return self._cache["vnormals"]

    def quadratic_nodes(self) -> np.ndarray:
        """(m, 6, 3) nodes of curved quadratic panels: the three corners,
        then edge points for edges 01, 12, 20.

        Each edge point lifts the chord midpoint along the mean normal by the
        sagitta of the circular arc whose end normals match the vertex
        normals, so spheres are reproduced to O(h^4) at the edge points.
        """
        if "qnodes" not in self._cache:
            V, N, f = self.vertices, self.vertex_normals, self.faces
            mids = []
            for i, j in ((0, 1), (1, 2), (2, 0)):
                x0, x1, n0, n1 = V[f[:, i]], V[f[:, j]], N[f[:, i]], N[f[:, j]]
                d = x1 - x0
                chord = np.linalg.norm(d, axis=1)
                theta = np.arccos(np.clip(np.einsum("ij,ij->i", n0, n1), -1.0, 1.0))
                sign = np.sign(np.einsum("ij,ij->i", n1 - n0, d))
                nbar = n0 + n1
                nbar /= np.linalg.norm(nbar, axis=1, keepdims=True)
                sag = sign * 0.5 * chord * np.tan(0.25 * theta)
                mids.append(0.5 * (x0 + x1) + sag[:, None] * nbar)
            q = np.concatenate([self.triangles, np.stack(mids, 1)], axis=1)
            q.setflags(write=False)
            self._cache["qnodes"] = q
        return self._cache["qnodes"]

    @property
    def diameter(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_faces

    def validate(self) -> "SurfaceMesh":
        """Check closedness, orientation consistency, non-degeneracy and
        outward orientation. Returns self so calls can be chained."""
        f = self.faces
        if f.size and (f.min() < 0 or f.max() >= self.n_vertices):
            raise MeshError("face index out of range")
        if np.any(self.face_areas <= 0.0):
            raise MeshError("degenerate triangle (zero area)")
        directed = Counter(map(tuple, self._directed_edges().tolist()))
        for (a, b), n in directed.items():
            if n > 1:
                raise MeshError(f"non-orientable or non-manifold edge ({a}, {b})")
            if (b, a) not in directed:
                raise MeshError(f"open surface: boundary edge ({a}, {b})")
        vol = volume(self)
        if vol <= 0.0:
            raise MeshError(f"negative volume ({vol:.6g}): faces are inward-oriented")
        return self


# construction ---------------------------------------------------------------


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    p = (1.0 + 5.0**0.5) / 2.0
    v = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(v: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # 4-way split; midpoints shared through an edge -> new-index map
    edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1).T + len(v)
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    a, b, c = f.T
    ab, bc, ca = inv.T
    nf = np.concatenate(
        [
            np.stack([a, ab, ca], 1),
            np.stack([b, bc, ab], 1),
            np.stack([c, ca, bc], 1),
            np.stack([ab, bc, ca], 1),
        ]
    )
    return np.vstack([v, mid]), nf


def make_icosphere(radius: float = 1.0, subdivisions: int = 3,
                   center: Sequence[float] = (0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Geodesic sphere: an icosahedron refined by repeated 4-way splitting,
    with new vertices projected back onto the sphere.

    The result has ``20 * 4**subdivisions`` faces and every vertex lies at
    distance ``radius`` from ``center``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 <= subdivisions <= MAX_SUBDIVISIONS:
        raise ValueError(f"subdivisions must be in [0, {MAX_SUBDIVISIONS}]")
    v, f = _icosahedron()
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
    n = v.copy()
    v = radius * v + np.asarray(center, dtype=np.float64)
    return SurfaceMesh(v, f, label=f"icosphere(r={radius:g}, n={subdivisions})", normals=n)


def make_ellipsoid(radii: Sequence[float], subdivisions: int = 3) -> SurfaceMesh:
    """Unit icosphere stretched along the coordinate axes."""
    r = np.asarray(radii, dtype=np.float64)
    if r.shape != (3,) or np.any(r <= 0):
        raise ValueError("ellipsoid radii must be three positive numbers")
    s = make_icosphere(1.0, subdivisions)
    v = s.vertices * r
    return SurfaceMesh(v, s.faces, label="ellipsoid(%g,%g,%g; n=%d)" % (*r, subdivisions),
                       normals=v / r**2)


def scale_translate(mesh: SurfaceMesh, delta: float,
                    z: Sequence[float] = (0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Similarity map ``v -> delta * v + z``; the bubble is ``delta*B + z``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    v = delta * mesh.vertices + np.asarray(z, dtype=np.float64)
    return SurfaceMesh(v, mesh.faces.copy(), label=mesh.label, normals=mesh.normals)


# integral properties ----------------------------------------------------------


def area(mesh: SurfaceMesh) -> float:
    return float(mesh.face_areas.sum())


def volume(mesh: SurfaceMesh) -> float:
    """(1/3) of the flux of x through the surface; exact on flat panels."""
    c = mesh.face_centroids
    return float(np.einsum("ij,ij->", c, mesh.area_vectors) / 3.0)


def volume_tetrahedra(mesh: SurfaceMesh) -> float:
    """Sum of signed tetrahedra spanned by the origin and each face."""
    t = mesh.triangles
    return float(np.einsum("ij,ij->", t[:, 0], np.cross(t[:, 1], t[:, 2])) / 6.0)


def centroid(mesh: SurfaceMesh) -> np.ndarray:
    """Centroid of the enclosed volume (not of the surface)."""
    t = mesh.triangles
    # tetrahedra with apex at a reference point near the body
    ref = mesh.vertices.mean(axis=0)
    a, b, c = t[:, 0] - ref, t[:, 1] - ref, t[:, 2] - ref
    vols = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    cents = (a + b + c) / 4.0
    return ref + (vols[:, None] * cents).sum(axis=0) / vols.sum()


def face_normal(mesh: SurfaceMesh, index: int) -> np.ndarray:
    return mesh.face_normals[index].copy()


def point_triangle_distance(p: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Euclidean distance from point ``p`` to each triangle in ``tri``
    (shape (m, 3, 3)). Region-based closest-point search."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        denom = va + vb + vc
        v = vb / denom
        w = vc / denom
        closest = a + ab * v[:, None] + ac * w[:, None]

        t_ab = d1 / (d1 - d3)
        m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
        closest[m] = (a + ab * t_ab[:, None])[m]
        t_ac = d2 / (d2 - d6)
        m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
        closest[m] = (a + ac * t_ac[:, None])[m]
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        m = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
        closest[m] = (b + (c - b) * t_bc[:, None])[m]

    m = (d1 <= 0) & (d2 <= 0)
    closest[m] = a[m]
    m = (d3 >= 0) & (d4 <= d3)
    closest[m] = b[m]
    m = (d6 >= 0) & (d5 <= d6)
    closest[m] = c[m]
    return np.linalg.norm(p - closest, axis=1)


def distance_to_surface(mesh: SurfaceMesh, x: Sequence[float]) -> float:
    return float(point_triangle_distance(np.asarray(x, float), mesh.triangles).min())


def winding_number(mesh: SurfaceMesh, x: Sequence[float]) -> float:
    """Total solid angle of the surface seen from ``x`` divided by 4*pi:
    1 inside, 0 outside, 1/2 on a flat face."""
    r = mesh.triangles - np.asarray(x, dtype=np.float64)
    return float(triangle_solid_angles(r).sum() / (4.0 * np.pi))


def triangle_solid_angles(r: np.ndarray) -> np.ndarray:
    """Signed solid angles of triangles with corners ``r`` (shape (..., 3, 3))
    relative to the origin (Van Oosterom-Strackee formula)."""
    d = np.linalg.norm(r, axis=-1)
    r0, r1, r2 = r[..., 0, :], r[..., 1, :], r[..., 2, :]
    num = np.einsum("...i,...i->...", r0, np.cross(r1, r2))
    den = (
        d[..., 0] * d[..., 1] * d[..., 2]
        + np.einsum("...i,...i->...", r0, r1) * d[..., 2]
        + np.einsum("...i,...i->...", r1, r2) * d[..., 0]
        + np.einsum("...i,...i->...", r2, r0) * d[..., 1]
    )
    # a panel containing the origin subtends no solid angle (principal value);
    # arctan2(+-0, den < 0) would return +-pi there
    flat = np.abs(num) <= 1e-14 * d[..., 0] * d[..., 1] * d[..., 2]
    return np.where(flat, 0.0, 2.0 * np.arctan2(num, den))


def is_exterior(mesh: SurfaceMesh, x: Sequence[float], tol: float = 1e-12) -> bool:
    """True when ``x`` is outside the body and off the surface."""
    if distance_to_surface(mesh, x) <= tol * mesh.diameter:
        return False
    return winding_number(mesh, x) < 0.5


# file formats ---------------------------------------------------------------


def _tokens(path: Path):
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    lines = list(_tokens(Path(path)))
    if not lines or not lines[0].startswith("OFF"):
        raise MeshError(f"{path}: missing OFF header")
    head = lines[0][3:].split()
    rest = lines[1:]
    if not head:
        head, rest = rest[0].split(), rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
        verts = np.array([[float(x) for x in rest[i].split()[:3]] for i in range(nv)])
        faces = []
        for line in rest[nv:nv + nf]:
            parts = line.split()
            if int(parts[0]) != 3:
                raise MeshError(f"{path}: only triangular faces are supported")
            faces.append([int(p) for p in parts[1:4]])
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: cannot parse OFF data ({exc})") from exc
    if len(faces) != nf:
        raise MeshError(f"{path}: expected {nf} faces, found {len(faces)}")
    return verts.reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    try:
        for line in _tokens(Path(path)):
            parts = line.split()
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"{path}: only triangular faces are supported")
                faces.append([i - 1 for i in idx])
    except ValueError as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: cannot parse OBJ data ({exc})") from exc
    return np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def load_mesh(path, format: Optional[str] = None) -> SurfaceMesh:
    """Read an OFF or OBJ file and validate it. Invalid meshes are rejected,
    never repaired."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).upper()
    if fmt == "OFF":
        v, f = read_off(path)
    elif fmt == "OBJ":
        v, f = read_obj(path)
    else:
        raise MeshError(f"unsupported mesh format {fmt!r}")
    return SurfaceMesh(v, f, label=path.name).validate()


def format_off(mesh: SurfaceMesh) -> str:
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {len(mesh.edges)}"]
    out += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    out += ["3 %d %d %d" % tuple(f) for f in mesh.faces]
    return "\n".join(out) + "\n"


def write_off(mesh: SurfaceMesh, path) -> None:
    Path(path).write_text(format_off(mesh))
