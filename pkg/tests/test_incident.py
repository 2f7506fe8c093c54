import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bubblefield.incident import (IncidentPulse, grad_u_i, lambda_derivs, u_i, u_i_t, u_i_tt)

P = IncidentPulse(T_p=1.0, amplitude=2.0, x0=(0.0, 0.0, 0.0))


def test_support_and_midpoint():
    assert lambda_derivs(P, 0.0) == (0.0, 0.0, 0.0)
    assert lambda_derivs(P, 1.0) == (0.0, 0.0, 0.0)
    assert lambda_derivs(P, -3.0) == (0.0, 0.0, 0.0)
    assert lambda_derivs(P, 0.5)[0] == pytest.approx(2.0 * math.exp(-4), rel=1e-15)
    assert lambda_derivs(P, 0.5)[1] == pytest.approx(0.0, abs=1e-15)


def test_delta_front_has_no_derivatives():
    with pytest.raises(ValueError):
        lambda_derivs(IncidentPulse(kind="delta_front"), 0.3)


def test_invariants():
    with pytest.raises(ValueError):
        IncidentPulse(kind="gaussian")
    with pytest.raises(ValueError):
        IncidentPulse(T_p=0.0)
    with pytest.raises(ValueError):
        IncidentPulse(delay=-1.0)


def _lam_mp(t, T_p=1.0, amp=1.0):
    s = mpmath.mpf(t) / T_p
    return amp * mpmath.exp(-1 / (s * (1 - s)))


def test_second_derivative_finite_differences():
    # the difference quotients are formed in 40-digit arithmetic: in double
    # precision the h = 1e-6 second difference carries ~4 eps |lam| / h^2 of
    # roundoff, which is itself at the 1e-5 level
    mpmath.mp.dps = 40
    rng = np.random.default_rng(5)
    h = mpmath.mpf("1e-6")
    q = IncidentPulse(T_p=1.0)
    for t in rng.uniform(0.05, 0.95, 20):
        tm = mpmath.mpf(t)
        fd2 = float((_lam_mp(tm + h) - 2 * _lam_mp(tm) + _lam_mp(tm - h)) / h**2)
        fd1 = float((_lam_mp(tm + h) - _lam_mp(tm - h)) / (2 * h))
        _, d1, d2 = lambda_derivs(q, t)
        assert abs(fd2 - d2) <= 1e-5 * abs(d2)
        assert abs(fd1 - d1) <= 1e-5 * abs(d1)


def test_vectorized_matches_scalar():
    t = np.linspace(-0.5, 1.5, 41)
    a = lambda_derivs(P, t)
    for k, tk in enumerate(t):
        assert tuple(v[k] for v in a) == lambda_derivs(P, tk)


def test_causality_exact():
    x = np.array([3.0, 4.0, 0.0])  # r = 5
    for c0 in (0.5, 1.0, 2.0):
        for t in np.linspace(0, 5 / c0, 11):
            assert u_i(P, c0, x, t) == 0.0
            assert u_i_tt(P, c0, x, t) == 0.0


def test_singular_source():
    with pytest.raises(ValueError):
        u_i(P, 1.0, P.x0, 1.0)


def test_one_over_r_decay():
    x1, x2 = np.array([1.0, 0, 0]), np.array([2.0, 0, 0])
    c0 = 1.5
    for phase in (0.2, 0.5, 0.8):
        a = u_i(P, c0, x1, phase + 1 / c0)
        b = u_i(P, c0, x2, phase + 2 / c0)
        assert b == pytest.approx(a / 2, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(shift=st.floats(0.0, 10.0), t=st.floats(0.0, 20.0))
def test_time_shift_equivariance(shift, t):
    x = np.array([0.3, -1.2, 2.0])
    a = u_i(P.shifted(shift), 1.0, x, t + shift)
    b = u_i(P, 1.0, x, t)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-300)


def test_wave_equation_residual():
    rng = np.random.default_rng(9)
    rho_m, k_m = 1.3, 2.6
    c0 = math.sqrt(k_m / rho_m)
    q = IncidentPulse(T_p=1.0, x0=(0.0, 0.0, 0.0))
    checked = 0
    while checked < 10:
        x = rng.normal(size=3)
        x *= rng.uniform(1, 3) / np.linalg.norm(x)
        r = np.linalg.norm(x)
        t = r / c0 + rng.uniform(0.2, 0.8)
        h = 1e-4 * r
        lap = -6 * u_i(q, c0, x, t)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            lap += u_i(q, c0, x + e, t) + u_i(q, c0, x - e, t)
        lap /= h**2
        utt = rho_m / k_m * u_i_tt(q, c0, x, t)
        assert abs(utt - lap) <= 1e-4 * abs(utt)
        checked += 1


def test_gradient_finite_differences():
    q = IncidentPulse(T_p=1.0, x0=(-1.0, 0.5, 0.0))
    x = np.array([0.4, 0.1, -0.3])
    t = np.linalg.norm(x - q.source) + 0.35
    g = grad_u_i(q, 1.0, x[None], t)[0]
    h = 1e-6
    fd = [(u_i(q, 1.0, x + h * e, t) - u_i(q, 1.0, x - h * e, t)) / (2 * h) for e in np.eye(3)]
    assert np.allclose(g, fd, rtol=1e-6, atol=1e-10)
    assert u_i_t(q, 1.0, x, t) != 0.0


def test_json_schema():
    assert P.to_dict() == {"kind": "smooth_bump", "T_p": 1.0, "amplitude": 2.0}
    assert IncidentPulse(kind="delta_front").to_dict() == {"kind": "delta_front"}
    back = IncidentPulse.from_dict({"kind": "smooth_bump", "T_p": 2.0, "amplitude": 0.5}, (1, 2, 3))
    assert back.T_p == 2.0 and back.x0 == (1.0, 2.0, 3.0)
