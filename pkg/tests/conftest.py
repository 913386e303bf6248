import mpmath as mp
import pytest

from tangencylab.family_models import make_ideal_model, select_theta
from tangencylab.tangency_continuation import continue_tangency_curve, find_secondary_tangency, make_strip


@pytest.fixture(scope="session")
def model():
    return make_ideal_model()


@pytest.fixture(scope="session")
def theta(model):
    return select_theta(model, override=0.33)


@pytest.fixture(scope="session")
def tangency15(model, theta):
    """Secondary tangency at depth 15 found from t = -0.1."""
    strip = make_strip(model, theta, 15, 0)
    return find_secondary_tangency(model, theta, strip, -0.1)


@pytest.fixture(scope="session")
def curve15(model, theta, tangency15):
    p = tangency15
    strip = make_strip(model, theta, p.n, p.n0)
    t = float(p.t)
    return continue_tangency_curve(model, theta, p, t_range=(t - 0.01, t + 0.01), step=0.005, strip=strip)


@pytest.fixture(autouse=True)
def _reset_precision():
    dps = mp.mp.dps
    yield
    mp.mp.dps = dps
