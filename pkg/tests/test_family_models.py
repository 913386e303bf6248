import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangencylab.errors import ValidationError
from tangencylab.family_models import (
    GluingMap, Params, TransitMap, Window, henon_eigen, henon_jacobian, henon_saddle,
    logistic_core_fixed_points, make_henon_model, make_ideal_model, model_from_config, select_theta,
    theta_inequalities,
)


def test_ideal_defaults_accepted():
    m = make_ideal_model(0.01, 3.0)
    lmin, lmax, mmin, mmax = m.eigen_extremes()
    assert math.isclose(0.01 * 27, 0.27)
    assert lmax * mmax**3 < 1


def test_f3_rejection_names_condition():
    with pytest.raises(ValidationError, match=r"\(F3\)"):
        make_ideal_model(0.1, 3.0)


def test_linear_block_image():
    m = make_ideal_model()
    assert m.linear(1.0, 1.0, 0.0, 0.0) == pytest.approx((0.01, 3.0))


def test_gluing_rejects_degenerate_coefficients():
    with pytest.raises(ValidationError):
        GluingMap(B=0.0)
    with pytest.raises(ValidationError):
        GluingMap(Q=0.0)


def test_window_and_params_validation():
    with pytest.raises(ValidationError):
        Window(t0=0.0)
    with pytest.raises(ValidationError):
        Params(0.5, 0.0).check(Window())
    assert Params(0.1, 0.01).check(Window()).t == 0.1


def test_ideal_critical_curve_is_flat():
    m = make_ideal_model()
    for x in (-0.2, 0.0, 0.13):
        assert m.gamma(mp.mpf(x), mp.mpf(0), mp.mpf(0)) == 1
    assert m.critical_value(mp.mpf(0), mp.mpf("0.02")) == (1, mp.mpf("0.02"))


def test_measured_gluing_constants():
    c = make_ideal_model().measured_constants()
    assert (float(c["C"]), float(c["Q"]), float(c["B"])) == (1.0, 1.0, 1.0)


def test_henon_saddle_at_b_zero():
    with mp.workdps(30):
        x, y = henon_saddle(2, 0)
        assert (x, y) == (-2, -2)
        J = henon_jacobian(x, 0)
        assert J == [[4, 0], [1, 0]]
        s, u = henon_eigen(x, 0)
        assert (float(s), float(u)) == (0.0, 4.0)


def test_logistic_core_fixed_points():
    assert [float(v) for v in logistic_core_fixed_points(2)] == [-2.0, 1.0]


def test_henon_backend_eigenvalues():
    m = make_henon_model(0.001)
    z = mp.mpf(0)
    lam, mu = float(m.lam(z, z)), float(m.mu(z, z))
    assert mu == pytest.approx(4, rel=1e-3)
    assert lam == pytest.approx(2.5e-4, rel=1e-3)
    assert lam * mu**3 < 0.02


def test_henon_backend_rejects_b_zero():
    with pytest.raises(ValidationError):
        make_henon_model(0.0)


def test_theta_bracket_values():
    # a vanishing window evaluates the bracket at the point values lambda = 0.01, mu = 3
    m = make_ideal_model(window=Window(t0=1e-9, a0=1e-9))
    th = select_theta(m, override=0.33)
    assert th.theta0 == pytest.approx(0.318, abs=2e-3)
    assert th.theta1 == pytest.approx(0.358, abs=2e-3)
    assert th.alpha == pytest.approx(0.232, abs=2e-3)
    assert 0.01 ** 0.66 * 27 == pytest.approx(1.29, abs=0.01)
    assert 0.01 ** 0.99 * 81 == pytest.approx(0.85, abs=0.01)


def test_theta_bracket_uses_window_extremes():
    wide = select_theta(make_ideal_model(), override=0.33)
    narrow = select_theta(make_ideal_model(window=Window(t0=1e-9, a0=1e-9)), override=0.33)
    assert wide.theta0 > narrow.theta0 and wide.theta1 < narrow.theta1


def test_theta_search_without_override_is_feasible():
    m = make_ideal_model()
    th = select_theta(m)
    checks, _, _ = theta_inequalities(m, th.theta)
    assert all(v > 0 for v in checks.values())
    assert th.theta0 < th.theta < th.theta1


def test_theta_override_outside_bracket_rejected():
    with pytest.raises(ValidationError, match="violates"):
        select_theta(make_ideal_model(), override=0.25)


def test_infeasible_eigenvalues_fail_before_theta():
    with pytest.raises(ValidationError):
        make_ideal_model(0.5, 3.0)


def test_model_from_config_roundtrip():
    m = model_from_config({"lambda0": 0.02, "mu0": 2.5, "gluing": {"Q": 2.0}, "window": {"t0": 0.1, "a0": 0.05}})
    assert m.lambda0 == 0.02 and m.gluing.Q == 2.0 and m.window.t0 == 0.1
    with pytest.raises(ValidationError):
        model_from_config({"backend": "logistic"})


def test_transit_map_needs_transversality():
    with pytest.raises(ValidationError):
        TransitMap(hD=0.0)


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.001, 0.03), mu=st.floats(1.5, 4.0))
def test_eigen_condition_matches_product(lam, mu):
    """Construction succeeds exactly when lambda * mu_max^3 < 1 on the window."""
    mu_max = mu + Window().t0
    if abs(lam * mu_max**3 - 1) < 1e-9:
        return
    try:
        make_ideal_model(lam, mu)
        accepted = True
    except ValidationError:
        accepted = False
    assert accepted == (lam * mu_max**3 < 1)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-1, 1), y=st.floats(-1, 1), k=st.integers(1, 6))
def test_linear_inverse_roundtrip(x, y, k):
    m = make_ideal_model()
    X, Y = m.linear(x, y, 0.05, 0.0, k)
    assert m.linear_inverse(X, Y, 0.05, 0.0, k) == pytest.approx((x, y), rel=1e-12, abs=1e-12)
