import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangencylab.errors import NumericFailure, ValidationError
from tangencylab.family_models import Params, make_henon_model, make_ideal_model
from tangencylab.manifolds import (
    PlaneCurve, curvature_at, gamma_curve, gamma_preimage, pullback_stable, seed_curve, stable_speed,
)

P0 = Params(0.0, 0.0)


@pytest.fixture(scope="module")
def ideal():
    return make_ideal_model()


def test_depth_zero_pullback_is_identity(ideal):
    W = seed_curve(ideal, P0)
    W0 = pullback_stable(W, 0, P0, ideal)
    for x in np.linspace(-2, 2, 9):
        assert W0(x) == W.eval(x)[1]


def test_constant_seed_scales(ideal):
    W = PlaneCurve.graph(lambda x: 0.7 + 0 * x, np.linspace(-2, 2, 17))
    W3 = pullback_stable(W, 3, P0, ideal)
    assert W3(0.4) == pytest.approx(0.7 / 27, rel=1e-14)


def test_affine_seed_slope(ideal):
    W = PlaneCurve.graph(lambda x: 0.5 + x, np.linspace(-2, 2, 17))
    W2 = pullback_stable(W, 2, P0, ideal)
    assert W2(1.0) == pytest.approx((0.5 + 1e-4) / 9, rel=1e-14)
    slope = W2.curve.d1(1.0)[1]
    assert float(slope) == pytest.approx((0.01 / 3) ** 2, rel=1e-12)


def test_negative_depth_rejected(ideal):
    with pytest.raises(ValidationError):
        pullback_stable(seed_curve(ideal, P0), -1, P0, ideal)


def test_t_speed_is_logarithmic_derivative(ideal):
    p = Params(0.05, 0.0)
    W = seed_curve(ideal, p)
    n = 7
    speed, K = stable_speed(W, n, p, ideal, "t")
    Wn = pullback_stable(W, n, p, ideal)
    for x in (-1.0, 0.3, 1.7):
        expect = -(n / (3.05)) * 1.0 * Wn(x)
        assert float(speed.eval(x)[1]) == pytest.approx(expect, rel=1e-12)
    assert K > 0


def test_a_speed_vanishes(ideal):
    W = seed_curve(ideal, P0)
    speed, _ = stable_speed(W, 5, P0, ideal, "a")
    assert np.all(speed.xy[:, 1] == 0)


def test_speed_direction_validated(ideal):
    with pytest.raises(ValidationError):
        stable_speed(seed_curve(ideal, P0), 3, P0, ideal, "z")


def test_speed_matches_finite_difference(ideal):
    n, h = 5, 1e-6
    with mp.workdps(40):
        def wn(t, x):
            p = Params(mp.mpf(t), mp.mpf(0))
            return pullback_stable(seed_curve(ideal, p, 16), n, p, ideal)(mp.mpf(x))
        p = Params(mp.mpf("0.02"), mp.mpf(0))
        speed, _ = stable_speed(seed_curve(ideal, p, 16), n, p, ideal, "t")
        for x in (-0.8, 0.6):
            fd = (wn(0.02 + h, x) - wn(0.02 - h, x)) / (2 * h)
            assert abs(speed.eval(x)[1] - fd) <= 1e-6 * abs(fd)


def test_ideal_gamma_is_one(ideal):
    g = gamma_curve(ideal, P0)
    assert np.all(g.xy[:, 1] == 1.0)
    assert np.all(g.residuals == 0)


def test_henon_gamma_residuals():
    m = make_henon_model(0.001)
    g = gamma_curve(m, P0, xs=np.linspace(-0.05, 0.1, 7))
    assert np.max(g.residuals) <= 1e-10


def test_gamma_preimage_ideal(ideal):
    g = gamma_curve(ideal, P0)
    assert gamma_preimage(g, 0, P0, ideal).eval(0.3)[1] == 1
    g4 = gamma_preimage(g, 4, P0, ideal)
    assert np.max(np.abs(g4.xy[:, 1])) == pytest.approx(1 / 81, rel=1e-12)


def test_gamma_preimage_leaving_domain(ideal):
    # a negative depth pushes forward instead: heights grow to mu > 2
    g = gamma_curve(ideal, P0)
    with pytest.raises(NumericFailure):
        gamma_preimage(g, -1, P0, ideal)


def test_curvature_of_simple_curves():
    line = PlaneCurve(np.linspace(0, 1, 9), func=lambda s: (s, 2 * s + 1))
    assert curvature_at(line, 0.4) == 0
    circle = PlaneCurve(np.linspace(0, 6, 33), func=lambda s: (2 * mp.cos(s) if not hasattr(s, "d1") else _cos2(s),
                                                             2 * mp.sin(s) if not hasattr(s, "d1") else _sin2(s)))
    for s in (0.3, 2.0, 5.1):
        assert circle.curvature(s) == pytest.approx(0.5, rel=1e-12)
    parab = PlaneCurve.graph(lambda x: 3 * x * x, np.linspace(-1, 1, 9))
    assert parab.curvature(0.0) == pytest.approx(6.0)


def _cos2(s):
    from tangencylab.jets import Jet
    c, sn = mp.cos(s.v), mp.sin(s.v)
    return Jet(2 * c, -2 * sn * s.d1, -2 * c * s.d1**2 - 2 * sn * s.d2)


def _sin2(s):
    from tangencylab.jets import Jet
    c, sn = mp.cos(s.v), mp.sin(s.v)
    return Jet(2 * sn, 2 * c * s.d1, -2 * sn * s.d1**2 + 2 * c * s.d2)


def test_sampled_curve_spline_matches():
    s = np.linspace(0, 1, 40)
    c = PlaneCurve(s, points=np.column_stack([s, s**2]))
    assert c.eval(0.5)[1] == pytest.approx(0.25, abs=1e-6)
    assert c.curvature(0.0) == pytest.approx(2.0, rel=1e-3)


def test_curve_needs_monotone_parameter():
    with pytest.raises(ValidationError):
        PlaneCurve([0, 1, 0.5, 2], points=np.zeros((4, 2)))
    with pytest.raises(ValidationError):
        PlaneCurve([0, 1], points=np.zeros((2, 2)))


def test_wedge_bounds(ideal):
    Wn = pullback_stable(seed_curve(ideal, P0), 12, P0, ideal)
    lo, hi = Wn.bound_ratio()
    assert 1 / (2 * 3) <= lo <= hi <= 2


@settings(max_examples=25, deadline=None)
@given(n=st.integers(0, 40), x=st.floats(-2, 2))
def test_pullback_identity_property(n, x):
    m = make_ideal_model()
    with mp.workdps(60):
        p = Params(mp.mpf("0.03"), mp.mpf(0))
        W = PlaneCurve.graph(lambda u: 1.5 + u / 4 + u * u / 9, np.linspace(-2, 2, 16))
        Wn = pullback_stable(W, n, p, m)
        lam, mu = m.lam(p.t, p.a), m.mu(p.t, p.a)
        r = mu**n * Wn(mp.mpf(x)) - W.eval(lam**n * mp.mpf(x))[1]
        assert abs(r) <= 1e-12
