"""Batch front end: ``bubblefield {mesh,factors,field,tune,validate}``.

Exit codes: 0 success, 1 usage error, 2 invalid input or failed
validation, 3 numerical failure (no bracket, oracle abort).
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from .field import FieldRequest, evaluate_dominant, write_csv
from .incident import IncidentPulse
from .physics import MediumBubbleSpec, derive_constants
from .potentials import shape_factors
from .quadrature import QuadratureConfig
from .tuner import TuningError, TuningProblem, tune
from .validation import SUITES, OracleAbort, reports_to_json, run_suite

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _floats(text: str, n: int | None = None) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _ints(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _check_out(path) -> Path:
    p = Path(path)
    if not p.parent.exists() or not p.parent.is_dir():
        raise InputError(f"output directory {p.parent} does not exist")
    return p


# config ------------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Parsed run config. ``mesh_source`` is {"shape": "icosphere", "subdiv": n},
    {"shape": "ellipsoid", "radii": [a, b, c], "subdiv": n} or {"path": file}."""

    spec: MediumBubbleSpec
    pulse: IncidentPulse
    mesh_source: dict = field(default_factory=lambda: {"shape": "icosphere", "subdiv": 3})
    quadrature: QuadratureConfig = QuadratureConfig()
    output_dir: str = "."

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise InputError(f"config file {path} not found")
        except json.JSONDecodeError as e:
            raise InputError(f"config {path} is not valid JSON: {e}")
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                spec = MediumBubbleSpec.from_dict(raw)
            pulse = IncidentPulse.from_dict(raw.get("pulse", {"kind": "smooth_bump", "T_p": 1.0}),
                                            raw.get("x0", (-5.0, 0.0, 0.0)))
            quad = QuadratureConfig(**raw.get("quadrature", {}))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"invalid config {path}: {e}")
        src = dict(raw.get("mesh", {"shape": "icosphere", "subdiv": 3}))
        if "path" in src:
            p = Path(src["path"])
            if not p.is_absolute():
                src["path"] = str(path.parent / p)
            if not Path(src["path"]).exists():
                raise InputError(f"mesh file {src['path']} not found")
        return cls(spec, pulse, src, quad, raw.get("output_dir", "."))

    def reference_mesh(self) -> geo.SurfaceMesh:
        return build_mesh(self.mesh_source)


def build_mesh(src: dict) -> geo.SurfaceMesh:
    try:
        if "path" in src:
            return geo.load_mesh(src["path"])
        shape = src.get("shape", "icosphere")
        n = int(src.get("subdiv", 3))
        if shape == "icosphere":
            return geo.make_icosphere(float(src.get("radius", 1.0)), n)
        if shape == "ellipsoid":
            return geo.make_ellipsoid(src.get("radii", (2.0, 1.0, 1.0)), n)
    except (OSError, ValueError) as e:
        raise InputError(str(e))
    raise InputError(f"unknown mesh shape {shape!r}")


def read_points(path) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise InputError(f"points file {p} not found")
    rows = []
    for k, line in enumerate(p.read_text().splitlines()):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            vals = [float(v) for v in parts]
        except ValueError:
            if not rows and k == 0:
                continue  # header
            raise InputError(f"{p}:{k + 1}: cannot parse {line!r}")
        if len(vals) != 3:
            raise InputError(f"{p}:{k + 1}: expected 3 columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise InputError(f"{p}: no points")
    return np.array(rows)


# subcommands -------------------------------------------------------------------------


def cmd_mesh(a) -> int:
    if a.input:
        mesh = build_mesh({"path": a.input})
    elif a.shape == "icosphere":
        mesh = build_mesh({"shape": "icosphere", "subdiv": a.subdiv, "radius": a.radius})
    else:
        if a.radii is None:
            raise InputError("--shape ellipsoid needs --radii a,b,c")
        if min(a.radii) <= 0:
            raise InputError("ellipsoid radii must be positive")
        mesh = build_mesh({"shape": "ellipsoid", "subdiv": a.subdiv, "radii": a.radii})
    out = _check_out(a.out) if a.out else None
    if out:
        geo.write_off(mesh, out)
    info = {"V": mesh.n_vertices, "E": len(mesh.edges), "F": mesh.n_faces,
            "area": geo.area(mesh), "volume": geo.volume(mesh)}
    print(json.dumps(info))
    return EXIT_OK


def _quad_from_args(a) -> QuadratureConfig:
    try:
        return QuadratureConfig(a.order, a.depth, a.threshold)
    except ValueError as e:
        raise InputError(str(e))


def cmd_factors(a) -> int:
    mesh = build_mesh({"path": a.mesh})
    cfg = _quad_from_args(a)
    out = _check_out(a.out) if a.out else None
    F = shape_factors(mesh, cfg, collocation=a.collocation, geometry=a.geometry)
    text = F.to_json()
    if out:
        out.write_text(text + "\n")
    print(text)
    return EXIT_OK


def _versions() -> dict:
    import numba
    import scipy
    return {"bubblefield": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def cmd_field(a) -> int:
    cfg = RunConfig.from_file(a.config)
    pulse = cfg.pulse
    if pulse.kind != "smooth_bump":
        raise InputError("field needs a smooth_bump pulse")
    if a.amplitude is not None:
        pulse = IncidentPulse(pulse.kind, pulse.T_p, a.amplitude, pulse.x0, pulse.delay)
    pts = read_points(a.points)
    try:
        req = FieldRequest(pts, a.t0, a.t1, a.dt, a.decompose)
    except ValueError as e:
        raise InputError(str(e))
    out = _check_out(a.out)
    B = cfg.reference_mesh()
    bubble = geo.scale_translate(B, cfg.spec.delta, cfg.spec.z)
    for i, x in enumerate(req.points):
        if not geo.is_exterior(bubble, x):
            raise InputError(f"point {i} {tuple(float(c) for c in x)} is not exterior to the bubble")
    F = shape_factors(B, cfg.quadrature)
    C = derive_constants(cfg.spec, F)
    grid = evaluate_dominant(cfg.spec, C, F, bubble, pulse, req)
    write_csv(grid, out)
    meta = {
        "spec": cfg.spec.to_dict(),
        "pulse": pulse.to_dict(),
        "x0": list(pulse.x0),
        "mesh_source": cfg.mesh_source,
        "shape_factors": {k: v for k, v in F.to_dict().items() if k != "A_profile"},
        "constants": C.to_dict(),
        "sign_pair": list(grid.sign_pair),
        "Q": grid.Q.tolist(),
        **{k: v for k, v in grid.meta.items() if k != "sign_pair"},
        "versions": _versions(),
    }
    Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_tune(a) -> int:
    cfg = RunConfig.from_file(a.config)
    out = _check_out(a.out) if a.out else None
    B = cfg.reference_mesh()
    try:
        prob = TuningProblem(a.target, a.q, a.free, (a.lo, a.hi), cfg.spec, cfg.pulse, B,
                             tolerance=a.tol, factors=shape_factors(B, cfg.quadrature),
                             time_horizon=a.horizon, dt=a.dt, window=a.window,
                             component=a.component, direction=a.direction)
    except ValueError as e:
        raise InputError(str(e))
    res = tune(prob)
    text = res.to_json()
    if out:
        out.write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_validate(a) -> int:
    if any(L < 0 or L > 7 for L in a.mesh_levels):
        raise InputError("mesh levels must lie in [0, 7]")
    reports = run_suite(a.suite, a.mesh_levels)
    print(reports_to_json(reports, indent=2))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bubblefield", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("mesh", help="build or re-write a closed surface mesh")
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--shape", choices=("icosphere", "ellipsoid"))
    g.add_argument("--in", dest="input", metavar="FILE")
    m.add_argument("--subdiv", type=int, default=3)
    m.add_argument("--radius", type=float, default=1.0)
    m.add_argument("--radii", type=lambda s: _floats(s, 3))
    m.add_argument("--out", metavar="FILE")
    m.set_defaults(func=cmd_mesh)

    f = sub.add_parser("factors", help="shape factors A_dB, |dB|, |B| of a mesh")
    f.add_argument("--mesh", required=True)
    f.add_argument("--order", type=int, default=7)
    f.add_argument("--depth", type=int, default=3)
    f.add_argument("--threshold", type=float, default=2.0)
    f.add_argument("--collocation", choices=("vertex", "centroid"), default="vertex")
    f.add_argument("--geometry", choices=("curved", "flat"), default="curved")
    f.add_argument("--out")
    f.set_defaults(func=cmd_factors)

    fl = sub.add_parser("field", help="dominant scattered field on a point/time grid")
    fl.add_argument("--config", required=True)
    fl.add_argument("--points", required=True, help="CSV of x,y,z rows")
    fl.add_argument("--t0", type=float, default=0.0)
    fl.add_argument("--t1", type=float, required=True)
    fl.add_argument("--dt", type=float, required=True)
    fl.add_argument("--decompose", action="store_true")
    fl.add_argument("--amplitude", type=float, help="override the pulse amplitude")
    fl.add_argument("--out", required=True)
    fl.set_defaults(func=cmd_field)

    t = sub.add_parser("tune", help="match a target peak pressure")
    t.add_argument("--config", required=True)
    t.add_argument("--target", type=float, required=True)
    t.add_argument("--q", type=float, required=True)
    t.add_argument("--free", choices=("k_c_bar", "delta"), required=True)
    t.add_argument("--lo", type=float, required=True)
    t.add_argument("--hi", type=float, required=True)
    t.add_argument("--tol", type=float, default=1e-6)
    t.add_argument("--horizon", type=float, default=30.0)
    t.add_argument("--dt", type=float, default=0.05)
    t.add_argument("--window", choices=("full", "late"), default="full")
    t.add_argument("--component", choices=("u_s", "u1", "u2"), default="u_s")
    t.add_argument("--direction", type=lambda s: _floats(s, 3), default=(1.0, 0.0, 0.0))
    t.add_argument("--out")
    t.set_defaults(func=cmd_tune)

    v = sub.add_parser("validate", help="run oracle suites; nonzero exit on failure")
    v.add_argument("--suite", choices=SUITES, default="all")
    v.add_argument("--mesh-levels", type=_ints, default=(2, 3, 4))
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (TuningError, OracleAbort) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        # component invariants (mesh checks, exterior points, ...)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
