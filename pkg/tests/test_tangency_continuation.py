import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangencylab.errors import NumericFailure, ValidationError
from tangencylab.family_models import make_henon_model, select_theta
from tangencylab.tangency_continuation import (
    derived_unfolding, check_unfolding_window, find_secondary_tangency, make_strip, return_curve,
    strip_recursion, strips_disjoint, tangency_distance_scan, tangency_residual,
)


def test_return_curve_value_and_derivative(model, theta):
    rc = return_curve(model, theta, 5, ts=[0.0])
    with mp.workdps(40):
        assert abs(rc.values[0] - mp.mpf(1) / 243) < 1e-38
        cf = rc.closed_form_deriv(0)
        assert float(cf) == pytest.approx(-5 / 3**6, rel=1e-14)
        assert abs(rc.deriv(0) - cf) <= 1e-9 * abs(cf)


def test_return_curve_rejects_zero_depth(model, theta):
    with pytest.raises(ValidationError):
        return_curve(model, theta, 0)


def test_henon_return_curve_residual():
    m = make_henon_model(0.001)
    rc = return_curve(m, select_theta(m), 5, ts=[-0.1, 0.0, 0.1])
    assert max(float(r) for r in rc.residuals) <= 1e-12


def test_tangency_found_in_strip(model, theta, tangency15):
    p = tangency15
    assert p.n == 15 and p.n0 == 12
    assert float(p.certificate["gap"]) < 1e-40
    assert make_strip(model, theta, p.n, p.n0).contains(p.t, p.a)


def test_tangency_is_nondegenerate(model, theta, tangency15):
    p = tangency15
    with mp.workdps(model.precision_hint(15)):
        lam, mu = model.lam(0, 0), model.mu(p.t, 0)
        growth = (mu**4 / lam ** (2 - 3 * theta.theta)) ** 15
        assert p.certificate["curvature"] >= growth
        k = theta.theta_n(15)
        transversal = p.certificate["dgap_dt"] / (15 * (lam**k * mu**15) ** 2)
        assert 0.5 < float(transversal) < 2


def test_curve_slopes_and_offsets(model, theta, curve15):
    c = curve15
    assert c.complete and len(c.samples) == 5
    rc = return_curve(model, theta, 15, ts=[0.0])
    with mp.workdps(model.precision_hint(15)):
        k = theta.theta_n(15)
        unit = 15 * model.lam(0, 0) ** k
        for (t, b), slope in zip(c.samples, c.slopes):
            assert slope < 0
            gap = (rc.closed_form_deriv(t) - slope) / unit
            assert 0.2 < float(gap) < 1.0
        assert max(float(r[0]) for r in c.residuals) < 1e-60


def test_curve_samples_strictly_increase(curve15):
    ts = curve15.ts()
    assert np.all(np.diff(ts) > 1e-6)


def test_lower_boundary_excluded(model, theta, tangency15):
    p = tangency15
    strip = make_strip(model, theta, p.n, p.n0)
    with mp.workdps(model.precision_hint(15)):
        k = theta.theta_n(15)
        scale = (model.lam(0, 0) ** k * model.mu(p.t, 0) ** 15) ** 2
        for t in (p.t - mp.mpf("0.005"), p.t, p.t + mp.mpf("0.005")):
            r = tangency_residual(model, theta, 15, p.n0, t, strip.lower(t))[0]
            assert abs(r) > 0.5 * scale


def test_search_fails_outside_window(model, theta):
    strip = make_strip(model, theta, 15, 0)
    with pytest.raises(NumericFailure):
        find_secondary_tangency(model, theta, strip, 0.11, t_stop=0.115)


def test_distance_scan_reports_counts(model, theta):
    out = tangency_distance_scan(model, theta, [13], [-0.1, -0.09])
    mean, count = out[13]
    assert count == 2 and 0 < mean < 0.3


def test_unfolding_window_reparametrised(model, theta, tangency15):
    d = derived_unfolding(model, theta, tangency15)
    rep = check_unfolding_window(d)
    assert float(rep["height_residual"]) < 1e-30
    assert float(rep["min_speed"]) == pytest.approx(1.0, rel=1e-6)


def test_strip_recursion_budget_validated(model, theta, tangency15):
    d = derived_unfolding(model, theta, tangency15)
    with pytest.raises(ValidationError):
        strip_recursion(d, theta, 40, depth_budget=0)


class _Band:
    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi

    def lower(self, t):
        return self.lo + t

    def upper(self, t):
        return self.hi + t


def test_strips_disjoint_interval_test(model, theta):
    ts = np.linspace(-0.1, 0.1, 5)
    assert strips_disjoint([_Band(0, 1), _Band(2, 3), _Band(1.5, 1.9)], ts)
    assert not strips_disjoint([_Band(0, 1), _Band(0.9, 3)], ts)
    # first-level strips share the neighbourhood of the primary tangency
    assert not strips_disjoint([make_strip(model, theta, 12, 0), make_strip(model, theta, 13, 0)], ts)


def test_strip_rows_for_plotting(model, theta):
    rows = make_strip(model, theta, 12, 0).to_rows([0.0, 0.05], "B_12")
    assert len(rows) == 2 and rows[0][4] == "B_12"
    t, lo, hi, an, _ = rows[0]
    assert lo < an < hi


@settings(max_examples=15, deadline=None)
@given(n=st.integers(8, 30), t=st.floats(-0.12, 0.12))
def test_strip_contains_return_curve(n, t):
    from tangencylab.family_models import make_ideal_model
    m = make_ideal_model()
    th = select_theta(m, override=0.33)
    strip = make_strip(m, th, n, 0)
    an, lo, hi = strip.bounds(t)
    assert lo < an < hi
