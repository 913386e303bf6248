import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangencylab.critical_orbit import (
    critical_data, curvature_growth_rate, fit_curvature_growth, return_parameter, speed_leading_terms,
    trace_loop, trace_on_return_curve, z3_speed,
)
from tangencylab.errors import NumericFailure, ValidationError
from tangencylab.family_models import Params

T_REF = mp.mpf("-0.05")


def _trace(model, theta, n):
    return trace_on_return_curve(model, theta, n, T_REF)


def test_return_parameter_closed_form(model):
    with mp.workdps(40):
        assert return_parameter(model, 5, 0) == mp.mpf(1) / 243


def test_critical_data(model):
    d = critical_data(model, Params(0.0, 0.01))
    assert d.c_point == (0, 1)
    assert float(d.z_value[0]) == 1.0 and float(d.z_value[1]) == pytest.approx(0.01)


@pytest.mark.parametrize("n", [10, 14, 20])
def test_z1_height_offset(model, theta, n):
    """z1_y - a = C lambda^k (1 + e), with e set by the offset of c' along the unstable segment."""
    tr = _trace(model, theta, n)
    with mp.workdps(tr.dps):
        a = tr.params[1]
        lam, mu, k = model.lam(T_REF, a), model.mu(T_REF, a), tr.theta_n
        e = (tr.z1[1] - a) / lam**k - 1
        assert 0 < e < 0.25
        assert float(e * mu ** (mp.mpf(k) / 2)) == pytest.approx(1.0, rel=0.05)


@pytest.mark.parametrize("n", [10, 14, 20])
def test_z3_height_leading_term(model, theta, n):
    tr = _trace(model, theta, n)
    with mp.workdps(tr.dps):
        a = tr.params[1]
        lam, mu, k = model.lam(T_REF, a), model.mu(T_REF, a), tr.theta_n
        e1 = (tr.z1[1] - a) / lam**k - 1
        e3 = (tr.z3[1] - a) / (lam**k * mu**n) ** 2 - 1
        # z3 inherits the square of the z1 offset
        assert float(e3 / e1) == pytest.approx(2.1, rel=0.12)


def test_n0_law_at_depth_twenty(model, theta):
    tr = _trace(model, theta, 20)
    with mp.workdps(tr.dps):
        lam, mu = float(model.lam(T_REF, 0)), float(model.mu(T_REF, 0))
    assert abs(tr.n0 - 20 * theta.alpha_n(20, lam, mu)) <= 3
    assert tr.n_tail == 20 - tr.n0


@pytest.mark.parametrize("n", [14, 17, 20])
def test_a_speed_leading_order(model, theta, n):
    tr = _trace(model, theta, n)
    p = Params(T_REF, tr.params[1])
    ratio = z3_speed(model, theta, p, n, "a") / speed_leading_terms(model, theta, p, n)["a"]
    assert 0.8 <= float(ratio) <= 1.25


def test_t_speed_positive(model, theta):
    tr = _trace(model, theta, 16)
    assert z3_speed(model, theta, Params(T_REF, tr.params[1]), 16, "t") > 0


@pytest.mark.parametrize("n", [14, 16, 20])
def test_speed_cancellation_along_return_curve(model, theta, n):
    tr = _trace(model, theta, n)
    with mp.workdps(tr.dps):
        lam, mu = model.lam(T_REF, 0), model.mu(T_REF, 0)
        scale = n * (lam**tr.theta_n * mu**n) ** 2
        total = z3_speed(model, theta, Params(T_REF, tr.params[1]), n, "total")
        assert abs(total) <= 2 * scale
        # each of the two terms (a-speed times da_n/dt) is far larger than their sum
        term_a = z3_speed(model, theta, Params(T_REF, tr.params[1]), n, "a") * n / mu ** (n + 1)
        assert abs(term_a) > 10 * abs(total)


def test_speed_direction_validated(model, theta):
    with pytest.raises(ValidationError):
        z3_speed(model, theta, Params(0.0, 0.0), 10, "x")


def test_trace_rejects_shallow_depth(model, theta):
    with pytest.raises(ValidationError):
        trace_loop(model, theta, Params(0.0, 0.0), 1)


def test_trace_below_strip_fails(model, theta):
    with pytest.raises(NumericFailure):
        trace_loop(model, theta, Params(0.0, -0.01), 12)


def test_theoretical_curvature_slope(model, theta):
    rate = curvature_growth_rate(model, theta)
    assert rate == pytest.approx(math.log(81) + 1.01 * math.log(100), rel=1e-12)
    assert rate == pytest.approx(9.0457, abs=1e-3)
    lam, mu = 0.01, 3.0
    assert mu**4 / lam ** (2 - 0.99) == pytest.approx(mu / lam ** (2 - 0.33) * mu**3 * lam**0.66)
    assert mu**4 / lam ** (2 - 0.99) > 1


def test_straight_segment_rejected():
    with pytest.raises(NumericFailure):
        fit_curvature_growth(list(range(8, 16)), [0.0] * 8, 9.0)


def test_curvature_fit_recovers_slope():
    ns = list(range(8, 16))
    rep = fit_curvature_growth(ns, [mp.exp(9 * n + 2) for n in ns], 9.0)
    assert rep.slope == pytest.approx(9.0) and rep.relative_error < 1e-9


def test_trace_json_roundtrip(model, theta):
    import json
    d = json.loads(_trace(model, theta, 12).to_json())
    assert d["n"] == 12 and d["n0"] + d["n_tail"] == 12


@settings(max_examples=12, deadline=None)
@given(n=st.integers(5, 20), t=st.floats(-0.1, 0.1))
def test_return_curve_residual(n, t):
    from tangencylab.family_models import make_ideal_model
    m = make_ideal_model()
    with mp.workdps(60):
        a = return_parameter(m, n, t)
        zx, zy = m.critical_value(mp.mpf(t), a)
        r = m.mu(mp.mpf(t), a) ** n * zy - m.gamma(zx * m.lam(mp.mpf(t), a) ** n, mp.mpf(t), a)
        assert abs(r) <= 1e-40
