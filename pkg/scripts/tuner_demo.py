"""Peak-pressure curve against k_c_bar, then a round trip: pick a target
from a known k_c_bar and recover it with the tuner."""

import argparse

import numpy as np

from bubblefield import geometry as geo
from bubblefield.incident import IncidentPulse
from bubblefield.physics import MediumBubbleSpec
from bubblefield.potentials import shape_factors
from bubblefield.tuner import TuningProblem, peak_pressure, tune


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", type=float, default=0.5)
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=2.0)
    ap.add_argument("--theta", type=float, default=1.3, help="k_c_bar used to build the target")
    ap.add_argument("--window", choices=("full", "late"), default="late")
    ap.add_argument("--subdiv", type=int, default=3)
    a = ap.parse_args()
    mesh = geo.make_icosphere(1.0, a.subdiv)
    F = shape_factors(mesh)
    spec = MediumBubbleSpec(1.0, 1.0, 1e-2, 1.0, 1.0)
    pulse = IncidentPulse()
    print(f"{'k_c_bar':>8} {'peak':>12}")
    for k in np.geomspace(a.lo, a.hi, 7):
        p = peak_pressure(spec.with_(k_c_bar=k), F, pulse, a.q, 30.0, mesh=mesh, window=a.window)
        print(f"{k:>8.4f} {p:>12.5e}")
    target = peak_pressure(spec.with_(k_c_bar=a.theta), F, pulse, a.q, 30.0, mesh=mesh, window=a.window)
    res = tune(TuningProblem(target, a.q, "k_c_bar", (a.lo, a.hi), spec, pulse, mesh,
                             factors=F, window=a.window))
    print(f"target {target:.6e} from k_c_bar = {a.theta}")
    print(f"recovered k_c_bar = {res.value:.9f} in {res.iterations} iterations "
          f"(rel err {abs(res.value / a.theta - 1):.1e})")
    for w in res.warnings:
        print(f"warning: {w}")


if __name__ == "__main__":
    main()
