"""Plane curves and the invariant-manifold pieces built from them.

A :class:`PlaneCurve` is either backed by an exact parametrisation (any callable
that accepts jets) or by a sample table with cubic-spline interpolation.
"""

from __future__ import annotations

import csv
import math

import mpmath as mp
import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NumericFailure, ValidationError
from .family_models import Params, UnfoldingModel
from .jets import Jet

DEFAULT_SAMPLES = 2**9


class PlaneCurve:
    def __init__(self, s_values, func=None, points=None, label=""):
        s = np.asarray(s_values, dtype=float)
        if s.ndim != 1 or len(s) < 4:
            raise ValidationError("a curve needs at least four samples")
        if not (np.all(np.diff(s) > 0) or np.all(np.diff(s) < 0)):
            raise ValidationError("curve parametrisation must be strictly monotone")
        self.s = s
        self.func = func
        self.label = label
        if func is not None:
            pts = [func(float(v)) for v in s]
            self.xy = np.array([[float(p[0]), float(p[1])] for p in pts])
        else:
            self.xy = np.asarray(points, dtype=float)
            if self.xy.shape != (len(s), 2):
                raise ValidationError("points must be an (n, 2) array matching s")
        order = np.argsort(s)
        self._splines = None if func is not None else (
            CubicSpline(s[order], self.xy[order, 0]), CubicSpline(s[order], self.xy[order, 1]))

    @classmethod
    def graph(cls, fn, xs, label=""):
        """Curve (x, fn(x)) over the abscissae xs."""
        return cls(xs, func=lambda x: (x, fn(x)), label=label)

    @property
    def samples(self):
        return [(float(si), (float(p[0]), float(p[1]))) for si, p in zip(self.s, self.xy)]

    def eval(self, s):
        if self.func is not None:
            return self.func(s)
        return float(self._splines[0](s)), float(self._splines[1](s))

    def derivs(self, s):
        """((x, y), (x', y'), (x'', y'')) at parameter s."""
        if self.func is not None:
            x, y = self.func(Jet(s, 1, 0))
            xj = x if isinstance(x, Jet) else Jet(x, 0, 0)
            yj = y if isinstance(y, Jet) else Jet(y, 0, 0)
            return (xj.v, yj.v), (xj.d1, yj.d1), (xj.d2, yj.d2)
        sx, sy = self._splines
        return ((float(sx(s)), float(sy(s))), (float(sx(s, 1)), float(sy(s, 1))),
                (float(sx(s, 2)), float(sy(s, 2))))

    def d1(self, s):
        return self.derivs(s)[1]

    def d2(self, s):
        return self.derivs(s)[2]

    def curvature(self, s):
        return curvature_at(self, s)

    def values(self, s):
        return np.array([float(self.eval(v)[1]) for v in np.atleast_1d(s)])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "x", "y", "dx", "dy", "curvature"])
            for si in self.s:
                (x, y), (dx, dy), _ = self.derivs(float(si))
                w.writerow([repr(float(si)), repr(float(x)), repr(float(y)), repr(float(dx)),
                            repr(float(dy)), repr(float(curvature_at(self, float(si))))])


def curvature_at(curve: PlaneCurve, s) -> float:
    _, (dx, dy), (ddx, ddy) = curve.derivs(s)
    speed2 = dx * dx + dy * dy
    if speed2 < 1e-28:
        raise NumericFailure(f"degenerate tangent at s={s}")
    return abs(dx * ddy - dy * ddx) / speed2**1.5


class StableWedge:
    """The pullback W_n together with the eigenvalues used to build it."""

    def __init__(self, n, curve: PlaneCurve, lam, mu, seed: PlaneCurve):
        self.n = n
        self.curve = curve
        self.lam = lam
        self.mu = mu
        self.seed = seed

    def __call__(self, x):
        return self.curve.eval(x)[1]

    def bound_ratio(self):
        """Extremes of mu^n |W_n| to compare with the wedge bounds [1/(2 mu), 2]."""
        vals = np.abs(self.curve.xy[:, 1]) * float(self.mu) ** self.n
        return float(vals.min()), float(vals.max())


def seed_curve(model: UnfoldingModel, params: Params, samples=DEFAULT_SAMPLES) -> PlaneCurve:
    """Graph of the local stable manifold through q2 over x in [-2, 2]."""
    xs = np.linspace(-2.0, 2.0, samples)
    return PlaneCurve.graph(lambda x: model.seed_stable(x, params.t, params.a), xs, label="W")


def pullback_stable(W: PlaneCurve, n: int, params: Params, model: UnfoldingModel) -> StableWedge:
    if n < 0:
        raise ValidationError("pullback depth must be non-negative")
    lam = model.lam(params.t, params.a)
    mu = model.mu(params.t, params.a)

    def wn(x):
        return x, W.eval(x * lam**n)[1] / mu**n

    return StableWedge(n, PlaneCurve(W.s, func=wn, label=f"W_{n}"), lam, mu, W)


def stable_speed(W: PlaneCurve, n: int, params: Params, model: UnfoldingModel, direction="t",
                 seed_speed=None):
    """Closed-form parameter derivative of W_n(x) = mu^-n W(lambda^n x).

    ``seed_speed(x)`` is the parameter derivative of the seed itself (zero when
    the seed does not move).  Returns the curve and the constant K with
    sup |dW_n| <= K n / mu^n.
    """
    if direction not in ("t", "a"):
        raise ValidationError("direction must be 't' or 'a'")
    k = 0 if direction == "t" else 1
    lam = model.lam(params.t, params.a)
    mu = model.mu(params.t, params.a)
    dl = model.dlam(params.t, params.a)[k]
    dm = model.dmu(params.t, params.a)[k]

    def speed(x):
        u = x * lam**n
        (_, w), (_, wp), _ = W.derivs(u)
        extra = seed_speed(u) if seed_speed is not None else 0
        val = (-n / mu * dm * w + n / lam * dl * u * wp + extra) / mu**n
        return x, val

    curve = PlaneCurve(W.s, func=speed, label=f"dW_{n}/d{direction}")
    sup = float(np.max(np.abs(curve.xy[:, 1])))
    K = sup * float(mu) ** n / max(n, 1)
    return curve, K


def gamma_curve(model: UnfoldingModel, params: Params, xs=None) -> PlaneCurve:
    """Critical curve {dY/dy = 0} sampled as a graph over x; residuals are stored on the curve."""
    xs = np.linspace(-0.25, 0.25, 65) if xs is None else np.asarray(xs, dtype=float)
    t, a = mp.mpf(params.t), mp.mpf(params.a)
    heights, resid = [], []
    guess = None
    for x in xs:
        try:
            y = model.gamma(mp.mpf(x), t, a, guess=guess)
        except NumericFailure as exc:
            raise NumericFailure(f"critical curve failed at x={x}: {exc}") from exc
        guess = y
        heights.append(y)
        resid.append(abs(model.dY_dy(mp.mpf(x), y, t, a)[0]))
    cache = dict(zip((float(x) for x in xs), heights))

    def fn(x):
        xv = x.v if isinstance(x, Jet) else x
        key = float(xv)
        y = cache.get(key)
        if y is None:
            y = model.gamma(mp.mpf(xv), t, a)
        if not isinstance(x, Jet):
            return y
        # implicit slope from dY/dy(x, c(x)) = 0 via a symmetric difference
        h = mp.mpf(10) ** (-(mp.mp.dps // 3))
        yp = model.gamma(mp.mpf(xv) + h, t, a, guess=y)
        ym = model.gamma(mp.mpf(xv) - h, t, a, guess=y)
        c1 = (yp - ym) / (2 * h)
        c2 = (yp - 2 * y + ym) / (h * h)
        return Jet(y, c1 * x.d1, c2 * x.d1 * x.d1 + c1 * x.d2)

    curve = PlaneCurve.graph(fn, xs, label="Gamma")
    curve.residuals = np.array([float(r) for r in resid])
    return curve


def gamma_preimage(gamma: PlaneCurve, n: int, params: Params, model: UnfoldingModel) -> PlaneCurve:
    """Gamma_n = graph of x -> mu^-n c(lambda^n x)."""
    lam = model.lam(params.t, params.a)
    mu = model.mu(params.t, params.a)
    t, a = mp.mpf(params.t), mp.mpf(params.a)

    def fn(x):
        return x, model.gamma(mp.mpf(x) * lam**n, t, a) / mu**n if not isinstance(x, Jet) else \
            gamma.func(x * lam**n)[1] / mu**n

    xs = np.linspace(-2.0, 2.0, 65)
    curve = PlaneCurve(xs, func=fn, label=f"Gamma_{n}")
    if np.any(np.abs(curve.xy[:, 1]) > 2):
        raise NumericFailure(f"Gamma_{n} leaves the linearisation domain")
    return curve


__all__ = ["PlaneCurve", "StableWedge", "curvature_at", "seed_curve", "pullback_stable",
           "stable_speed", "gamma_curve", "gamma_preimage", "DEFAULT_SAMPLES"]
