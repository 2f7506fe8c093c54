"""Time trace of u_s, U1 and U2 at a few probe points; writes a CSV and
prints peak values."""

import argparse

import numpy as np

from bubblefield import geometry as geo
from bubblefield.field import FieldRequest, evaluate_dominant, write_csv
from bubblefield.incident import IncidentPulse
from bubblefield.physics import MediumBubbleSpec, derive_constants
from bubblefield.potentials import shape_factors


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta", type=float, default=1e-2)
    ap.add_argument("--k-c-bar", type=float, default=1.0)
    ap.add_argument("--subdiv", type=int, default=3)
    ap.add_argument("--t1", type=float, default=40.0)
    ap.add_argument("--dt", type=float, default=0.02)
    ap.add_argument("--out", default="field_trace.csv")
    a = ap.parse_args()
    ref = geo.make_icosphere(1.0, a.subdiv)
    F = shape_factors(ref)
    spec = MediumBubbleSpec(1.0, 1.0, a.delta, 1.0, a.k_c_bar)
    C = derive_constants(spec, F)
    bubble = geo.scale_translate(ref, a.delta, spec.z)
    pts = [[a.delta + a.delta**q, 0.0, 0.0] for q in (0.0, 0.5, 1.0)]
    g = evaluate_dominant(spec, C, F, bubble, IncidentPulse(), FieldRequest(pts, 0.0, a.t1, a.dt))
    write_csv(g, a.out)
    print(f"omega_M = {C.omega_M:.6g}, prefactor = {C.prefactor:.6g}")
    for i, x in enumerate(g.points):
        print(f"x = {np.array2string(x, precision=4)}: max|u_s| = {np.max(np.abs(g.u_s[i])):.4e}, "
              f"max|U1| = {np.max(np.abs(g.u1[i])):.4e}, max|U2| = {np.max(np.abs(g.u2[i])):.4e}")
    print(f"wrote {a.out}")


if __name__ == "__main__":
    main()
