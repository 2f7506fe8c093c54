"""Peak |u_s| at standoff delta**q against bubble size delta; the fitted
log-log slope should approach 1 - q."""

import argparse

import numpy as np

from bubblefield import geometry as geo
from bubblefield.field import FieldRequest, evaluate_dominant
from bubblefield.incident import IncidentPulse
from bubblefield.physics import MediumBubbleSpec, derive_constants
from bubblefield.potentials import shape_factors
from bubblefield.tuner import probe_point
from bubblefield.validation import fit_order


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--qs", default="0,0.25,0.5,0.75,1")
    ap.add_argument("--deltas", default="1e-2,1e-3,1e-4")
    ap.add_argument("--subdiv", type=int, default=3)
    ap.add_argument("--horizon", type=float, default=40.0)
    ap.add_argument("--dt", type=float, default=0.05)
    a = ap.parse_args()
    qs = [float(s) for s in a.qs.split(",")]
    deltas = [float(s) for s in a.deltas.split(",")]
    ref = geo.make_icosphere(1.0, a.subdiv)
    F = shape_factors(ref)
    pulse = IncidentPulse()
    base = MediumBubbleSpec(1.0, 1.0, deltas[0], 1.0, 1.0)
    print(f"{'q':>5} " + " ".join(f"{'d=' + format(d, 'g'):>12}" for d in deltas) + f" {'slope':>8} {'1-q':>6}")
    for q in qs:
        peaks = []
        for d in deltas:
            spec = base.with_(delta=d)
            C = derive_constants(spec, F)
            bubble = geo.scale_translate(ref, d, spec.z)
            x = probe_point(bubble, spec.z, d, q)
            g = evaluate_dominant(spec, C, F, bubble, pulse,
                                  FieldRequest([x], 0.0, a.horizon, a.dt, False))
            peaks.append(float(np.max(np.abs(g.u_s))))
        print(f"{q:>5g} " + " ".join(f"{p:>12.4e}" for p in peaks)
              + f" {fit_order(deltas, peaks):>8.4f} {1 - q:>6.2f}")


if __name__ == "__main__":
    main()
