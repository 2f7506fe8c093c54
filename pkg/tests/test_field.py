import csv
import math

import numpy as np
import pytest
from scipy.integrate import quad

from bubblefield import geometry as geo
from bubblefield.field import (CSV_HEADER, SIGN_PAIR, FieldRequest, decompose, delta_front_u2,
                               evaluate_dominant, q_effective, sine_convolution, write_csv)
from bubblefield.incident import IncidentPulse, lambda_derivs, u_i
from bubblefield.physics import MediumBubbleSpec, derive_constants
from bubblefield.potentials import shape_factors, single_layer_mean


def probe(delta, q):
    return [delta + delta**q, 0.0, 0.0]


# sine convolution ------------------------------------------------------------------


def test_sine_convolution_empty():
    assert sine_convolution(1.0, np.sin, 0.0) == 0.0
    assert sine_convolution(1.0, np.sin, -2.0) == 0.0


def test_sine_convolution_resonant():
    # int_0^s sin(s - tau) sin(tau) dtau = (sin s - s cos s) / 2
    assert sine_convolution(1.0, np.sin, math.pi, 1e-3) == pytest.approx(math.pi / 2, abs=1e-10)
    for s in (0.7, 2.9, 6.0):
        assert sine_convolution(1.0, np.sin, s, 1e-3) == pytest.approx(0.5 * (math.sin(s) - s * math.cos(s)), abs=1e-10)


def test_sine_convolution_bump_vs_adaptive():
    p = IncidentPulse(T_p=1.0)
    f = lambda t: lambda_derivs(p, t)[2]
    worst = 0.0
    for s in np.linspace(0.05, 3.0, 25):
        ref = quad(lambda t: math.sin(2 * (s - t)) * f(t), 0, min(s, 1.0), epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        worst = max(worst, abs(sine_convolution(2.0, f, s) - ref))
        worst = max(worst, abs(sine_convolution(2.0, f, s, support=p.support) - ref))
    assert worst <= 1e-8


def test_sine_convolution_bad_dt():
    with pytest.raises(ValueError):
        sine_convolution(1.0, np.sin, 1.0, 0.0)


# dominant field --------------------------------------------------------------------


def test_request_validation():
    with pytest.raises(ValueError):
        FieldRequest([[1, 0, 0]], 0, 1, 0)
    with pytest.raises(ValueError):
        FieldRequest([[1, 0, 0]], -1, 1, 0.1)
    r = FieldRequest([[1, 0, 0]], 0.0, 1.0, 0.1)
    assert len(r.times) == 11 and r.times[-1] == pytest.approx(1.0)


def test_causality_exact(setup, pulse):
    spec, C, F, bubble = setup
    pts = [probe(0.01, q) for q in (0, 0.5, 1)] + [[0.0, -0.3, 0.2]]
    g = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest(pts, 0.0, 12.0, 0.01))
    r0 = 5.0
    for i, x in enumerate(g.points):
        arrive = (r0 + np.linalg.norm(x)) / C.c0
        before = g.times <= arrive
        assert np.all(g.u_s[i, before] == 0.0)
        assert np.all(g.u1[i, before] == 0.0)
        assert np.all(g.u2[i, before] == 0.0)
        assert np.any(g.u_s[i, ~before] != 0.0)


def test_linearity(setup, pulse):
    spec, C, F, bubble = setup
    req = FieldRequest([probe(0.01, 0.5)], 4.0, 30.0, 0.05)
    a = evaluate_dominant(spec, C, F, bubble, pulse, req).u_s
    b = evaluate_dominant(spec, C, F, bubble, pulse.scaled(2.0), req).u_s
    assert np.max(np.abs(b - 2 * a)) <= 1e-12 * np.max(np.abs(2 * a))
    z = evaluate_dominant(spec, C, F, bubble, pulse.scaled(0.0), req)
    assert np.all(z.u_s == 0) and np.all(z.u1 == 0) and np.all(z.u2 == 0)


def test_delta_scaling_q0(sphere3, factors3, pulse):
    peaks = []
    for d in (1e-2, 1e-3):
        spec = MediumBubbleSpec(1, 1, d, 1, 1)
        C = derive_constants(spec, factors3)
        g = evaluate_dominant(spec, C, factors3, geo.scale_translate(sphere3, d), pulse,
                              FieldRequest([probe(d, 0.0)], 0.0, 40.0, 0.05, False))
        peaks.append(np.max(np.abs(g.u_s)))
    assert peaks[0] / peaks[1] == pytest.approx(10.0, rel=0.05)


def test_interior_point_rejected(setup, pulse):
    spec, C, F, bubble = setup
    with pytest.raises(ValueError, match="point 1"):
        evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest([[1, 0, 0], [0.001, 0, 0]], 0, 1, 0.1))


def test_delta_front_rejected_by_evaluator(setup):
    spec, C, F, bubble = setup
    with pytest.raises(ValueError):
        evaluate_dominant(spec, C, F, bubble, IncidentPulse(kind="delta_front"),
                          FieldRequest([[1, 0, 0]], 0, 1, 0.1))


def test_decomposition(setup, pulse):
    spec, C, F, bubble = setup
    req = FieldRequest([probe(0.01, q) for q in (0, 0.5, 1)], 0.0, 30.0, 0.05)
    g = evaluate_dominant(spec, C, F, bubble, pulse, req)
    assert g.sign_pair == SIGN_PAIR == (1, -1)
    peak = np.max(np.abs(g.u_s))
    assert np.max(np.abs(g.recombined() - g.u_s)) <= 1e-7 * peak
    U1, U2 = decompose(spec, C, F, bubble, pulse, req)
    assert np.array_equal(U1, g.u1) and np.array_equal(U2, g.u2)


def test_u1_is_shifted_incident(setup, pulse):
    spec, C, F, bubble = setup
    x = np.array(probe(0.01, 0.5))
    g = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest([x], 0.0, 12.0, 0.01))
    s = g.times - np.linalg.norm(x) / C.c0
    inc = u_i(pulse, C.c0, np.zeros(3), s)
    nz = inc != 0
    ratio = g.u1[0, nz] / inc[nz]
    assert nz.sum() > 50
    assert np.max(np.abs(ratio / ratio[0] - 1)) <= 1e-12
    assert ratio[0] == pytest.approx(C.omega_M * C.prefactor * g.Q[0], rel=1e-14)


def test_q_factorization(ellipsoid3, pulse):
    spec = MediumBubbleSpec(1, 1, 0.05, 1, 1)
    F = shape_factors(ellipsoid3)
    C = derive_constants(spec, F)
    bubble = geo.scale_translate(ellipsoid3, spec.delta)
    R = 0.2
    pts = [[R, 0, 0], [0, R, 0], [0, 0.6 * R, 0.8 * R]]
    g = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest(pts, 5.0, 20.0, 0.1, False))
    nz = g.u_s[0] != 0
    for j in (1, 2):
        r = g.u_s[j, nz] / g.u_s[0, nz]
        assert np.max(np.abs(r / (g.Q[j] / g.Q[0]) - 1)) <= 1e-10
    assert g.Q[0] != pytest.approx(g.Q[1], rel=1e-3)  # non-spherical: Q differs


def test_time_shift_equivariance(setup, pulse):
    spec, C, F, bubble = setup
    req = FieldRequest([probe(0.01, 0.5)], 0.0, 25.0, 0.05)
    a = evaluate_dominant(spec, C, F, bubble, pulse, req).u_s[0]
    k = 40
    b = evaluate_dominant(spec, C, F, bubble, pulse.shifted(k * 0.05), req).u_s[0]
    assert np.max(np.abs(b[k:] - a[:-k])) <= 1e-12 * np.max(np.abs(a))
    assert np.all(b[:k] == 0)


def test_convolution_grid_convergence(setup, pulse):
    spec, C, F, bubble = setup
    x = [probe(0.01, 0.5)]
    a = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest(x, 5.0, 8.0, 2e-3, False))
    b = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest(x, 5.0, 8.0, 1e-3, False))
    assert np.max(np.abs(b.u_s[0, ::2] - a.u_s[0])) <= 1e-8 * np.max(np.abs(a.u_s))


def test_q_effective(setup, pulse):
    spec, C, F, bubble = setup
    assert q_effective(1e-2, 1e-2) == pytest.approx(1.0)
    assert math.isnan(q_effective(0.5, 1.0))
    g = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest([probe(0.01, 0.5)], 0, 1, 0.5, False))
    # probe sits delta^q beyond the circumscribed sphere; the inscribed mesh is a hair closer
    assert g.q_eff[0] == pytest.approx(0.5, abs=1e-3)


def test_samples_and_metadata(setup, pulse):
    spec, C, F, bubble = setup
    g = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest([probe(0.01, 0.0), probe(0.01, 1.0)], 0, 6, 1.0))
    s = g.samples()
    assert len(s) == 2 * 7
    assert s[8].time == 1.0 and s[8].point == tuple(g.points[1])
    assert g.meta["sign_pair"] == [1, -1]
    assert len(g.meta["u1_gain_Q"]) == 2 and len(g.meta["u1_gain_sphere"]) == 2


def test_csv(tmp_path, setup, pulse):
    spec, C, F, bubble = setup
    g = evaluate_dominant(spec, C, F, bubble, pulse, FieldRequest([probe(0.01, 0.5)], 5.0, 7.0, 0.5))
    p = tmp_path / "o.csv"
    write_csv(g, p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == CSV_HEADER == ["x", "y", "z", "t", "u_s", "u1", "u2", "q_eff"]
    assert len(rows) == 1 + 5
    vals = np.array(rows[1:], dtype=float)
    assert np.array_equal(vals[:, 4], g.u_s[0])  # 17 digits round-trip exactly


# delta front -------------------------------------------------------------------------


def test_delta_front(setup):
    spec, C, F, bubble = setup
    front = IncidentPulse(kind="delta_front", x0=(-5.0, 0, 0))
    x = np.array(probe(0.01, 0.5))
    travel = (np.linalg.norm(x) + 5.0) / C.c0
    assert delta_front_u2(spec, C, bubble, front, x, travel) == 0.0
    assert delta_front_u2(spec, C, bubble, front, x, travel - 0.5) == 0.0
    full = C.omega_M**2 * C.prefactor * single_layer_mean(bubble, x) / 5.0
    t_peak = travel + math.pi / 2 / C.omega_M
    assert delta_front_u2(spec, C, bubble, front, x, t_peak) == pytest.approx(full, rel=1e-14)
    ts = np.linspace(0, travel + 30, 301)
    v = delta_front_u2(spec, C, bubble, front, x, ts)
    assert np.all(v[ts <= travel] == 0) and np.max(np.abs(v)) <= full * (1 + 1e-14)
