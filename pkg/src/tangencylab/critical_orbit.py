"""The critical loop z -> z1 -> z2 -> z3 and the estimates attached to it.

All loop stages are written as maps of one scalar ``s``, the offset along the
local unstable manifold ``{(0, c_y + s)}`` through the critical point, so that
any stage can be evaluated on jets and differentiated exactly.  Computations
run in mpmath with a working precision chosen from the depth ``n``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .errors import NumericFailure, ValidationError
from .family_models import IdealModel, Params, ThetaSelection, UnfoldingModel
from .jets import Jet, curvature_from_jets

DEFAULT_L = 10


@dataclass(frozen=True)
class CriticalData:
    c_point: tuple
    z_value: tuple


def critical_data(model: UnfoldingModel, params: Params) -> CriticalData:
    t, a = mp.mpf(params.t), mp.mpf(params.a)
    c = model.critical_point(t, a)
    return CriticalData(c, tuple(model.glue(c[0], c[1], t, a)))


def return_parameter(model: UnfoldingModel, n: int, t, tol=None):
    """a_n(t): the parameter at which L^n sends the critical value onto the critical curve."""
    t = mp.mpf(t)
    if isinstance(model, IdealModel) and model.gluing.phi_y == 0:
        # z_y = a and c = 1 exactly
        return 1 / model.mu(t, 0) ** n

    def residual(a):
        zx, zy = model.critical_value(t, a)
        return model.mu(t, a) ** n * zy - model.gamma(zx * model.lam(t, a) ** n, t, a)

    a0 = 1 / model.mu(t, 0) ** n
    # residual carries the factor mu^n, so judge convergence against that scale
    scale = model.mu(t, a0) ** n
    tol = tol or mp.mpf(10) ** (-(mp.mp.dps - 20)) * scale
    root = mp.findroot(residual, (a0, a0 * (1 + mp.mpf("1e-6"))), solver="secant", verify=False)
    if not abs(residual(root)) <= tol:
        raise NumericFailure(f"return parameter a_{n} did not converge at t={mp.nstr(t, 8)}")
    return root


class LoopMaps:
    """Stage maps of the loop at fixed (t, a) as functions of the offset s."""

    def __init__(self, model: UnfoldingModel, t, a, k: int, n: int):
        self.model, self.t, self.a, self.k, self.n = model, t, a, k, n
        self.cx, self.cy = model.critical_point(t, a)

    def base(self, s):
        return self.cx + 0 * s, self.cy + s

    def at_z(self, s):
        return self.model.glue(*self.base(s), self.t, self.a)

    def at_cprime(self, s):
        return self.model.linear(*self.at_z(s), self.t, self.a, self.k)

    def at_z1(self, s):
        return self.model.glue(*self.at_cprime(s), self.t, self.a)

    def at_z2(self, s):
        return self.model.linear(*self.at_z1(s), self.t, self.a, self.n)

    def at_z3(self, s):
        return self.model.glue(*self.at_z2(s), self.t, self.a)

    def chain(self, s, n_tail):
        """Waypoints m1..m7 for the base offset s."""
        m1 = self.base(s)
        m2 = self.model.glue(*m1, self.t, self.a)
        m3 = self.model.linear(*m2, self.t, self.a, self.k)
        m4 = self.model.glue(*m3, self.t, self.a)
        m5 = self.model.linear(*m4, self.t, self.a, self.n)
        m6 = self.model.glue(*m5, self.t, self.a)
        m7 = self.model.linear(*m6, self.t, self.a, n_tail)
        return [m1, m2, m3, m4, m5, m6, m7]


def _jet(fn, s):
    return fn(Jet(s, mp.mpf(1), mp.mpf(0)))


def _as_jet(v):
    return v if isinstance(v, Jet) else Jet(v, 0, 0)


def _argmin_y(stage, s0, lo, hi):
    """Minimise the y-component of stage(s) over [lo, hi] by safeguarded Newton on dy/ds."""
    tol = mp.mpf(10) ** (-(mp.mp.dps - 10))
    s = s0
    a, b = lo, hi
    for _ in range(400):
        y = _as_jet(stage(Jet(s, mp.mpf(1), mp.mpf(0)))[1])
        if y.d1 > 0:
            b = s
        else:
            a = s
        step = y.d1 / y.d2 if y.d2 > 0 else None
        cand = s - step if step is not None else None
        if cand is None or not (a < cand < b):
            cand = (a + b) / 2
            step = cand - s
        s = cand
        if abs(step) <= tol * (abs(hi - lo) + abs(s)) or b - a <= tol * abs(hi - lo):
            break
    interior = lo + (hi - lo) * mp.mpf("1e-6") < s < hi - (hi - lo) * mp.mpf("1e-6")
    return s, interior


@dataclass
class LoopTrace:
    n: int
    theta_n: int
    params: tuple
    c_prime: tuple
    z1: tuple
    z2: tuple
    z3: tuple
    waypoints: list
    n0: int
    n_tail: int
    curvature_z3: float
    s_values: dict
    residuals: dict
    L: float
    dps: int
    gaps: dict = field(default_factory=dict)
    maps: LoopMaps | None = field(default=None, repr=False, compare=False)

    def to_dict(self):
        f = lambda p: [float(p[0]), float(p[1])]
        return {
            "n": self.n, "theta_n": self.theta_n, "params": [float(v) for v in self.params],
            "c_prime": f(self.c_prime), "z1": f(self.z1), "z2": f(self.z2), "z3": f(self.z3),
            "waypoints": [f(m) for m in self.waypoints], "n0": self.n0, "n_tail": self.n_tail,
            "curvature_z3": float(self.curvature_z3), "L": self.L, "dps": self.dps,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "z3_y": mp.nstr(self.z3[1], 30),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _cprime_offset(maps: LoopMaps, branch: str):
    """Offsets s where L^k G(base(s)) meets the critical curve; returns the chosen root."""
    model, t, a = maps.model, maps.t, maps.a

    def gap(s):
        x, y = maps.at_cprime(s)
        return y - model.gamma(x, t, a)

    j = _jet(maps.at_cprime, mp.mpf(0))
    y0 = _as_jet(j[1])
    f0 = y0.v - model.gamma(j[0].v if isinstance(j[0], Jet) else j[0], t, a)
    f1, f2 = y0.d1, y0.d2
    disc = f1 * f1 - 2 * f2 * f0
    if disc < 0 or f2 == 0:
        raise NumericFailure("no intersection of the first loop with the critical curve "
                             "(parameter below the strip)")
    roots = []
    for sign in (1, -1):
        guess = (-f1 + sign * mp.sqrt(disc)) / f2
        roots.append(mp.findroot(gap, (guess, guess * (1 + mp.mpf("1e-10")) + mp.mpf(10) ** -(mp.mp.dps // 2)),
                                 solver="secant"))
    pts = [maps.at_cprime(r) for r in roots]
    ytol = mp.mpf(10) ** (-(mp.mp.dps // 2))
    if abs(pts[0][1] - pts[1][1]) > ytol * (1 + abs(pts[0][1])):
        order = sorted(range(2), key=lambda i: pts[i][1])
    else:
        order = sorted(range(2), key=lambda i: pts[i][0])
    pick = order[-1] if branch == "upper" else order[0]
    return roots[pick], roots


def trace_loop(model: UnfoldingModel, theta: ThetaSelection, params: Params, n: int,
               L: float = DEFAULT_L, branch: str = "upper", dps: int | None = None) -> LoopTrace:
    if n < 2:
        raise ValidationError("loop depth n must be at least 2")
    k = theta.theta_n(n)
    if k < 1:
        raise ValidationError(f"floor(theta n) = {k}: depth too small")
    dps = dps or model.precision_hint(n, theta.theta)
    with mp.workdps(dps):
        t, a = mp.mpf(params.t), mp.mpf(params.a)
        maps = LoopMaps(model, t, a, k, n)
        s_c, roots = _cprime_offset(maps, branch)
        lam, mu = model.lam(t, a), model.mu(t, a)
        for attempt in range(2):
            Lc = mp.mpf(L) * 2**attempt
            cp = _jet(maps.at_cprime, s_c)
            speed = mp.sqrt(_as_jet(cp[0]).d1 ** 2 + _as_jet(cp[1]).d1 ** 2)
            h1 = mp.sqrt(Lc) * lam ** (mp.mpf(k) / 2) / (2 * speed)
            s1, ok1 = _argmin_y(maps.at_z1, s_c, s_c - h1, s_c + h1)
            if not ok1:
                continue
            y2 = _as_jet(_jet(maps.at_z2, s1)[1])
            h2 = mp.sqrt(2 * Lc * lam**k * mu**n / y2.d2)
            h2 = min(h2, h1 - abs(s1 - s_c))
            s3, ok3 = _argmin_y(maps.at_z3, s1, s1 - h2, s1 + h2)
            if ok3:
                break
        else:
            raise NumericFailure(f"loop minimum not interior at n={n} even with L={float(2 * L)}")
        z1 = tuple(maps.at_z1(s1))
        z2 = tuple(maps.at_z2(s1))
        j3 = _jet(maps.at_z3, s3)
        x3, y3 = _as_jet(j3[0]), _as_jet(j3[1])
        z3 = (x3.v, y3.v)
        curv = curvature_from_jets(x3, y3)
        j1 = _jet(maps.at_z1, s1)
        slope1 = _as_jet(j1[1]).d1 / _as_jet(j1[0]).d1
        slope3 = y3.d1 / x3.d1

        # secondary depth: largest k with W^u_loc(z3) above W_{n-k}
        seg = [s1 + h2 * mp.mpf(u) for u in np.linspace(-1, 1, 17)] + [s3]
        seg_pts = [maps.at_z3(s) for s in seg]

        def gap_at(depth):
            return min(y - stable_height(model, depth, x, t, a) for x, y in seg_pts)

        gaps = {}
        n0 = None
        for kk in range(0, n + 1):
            g = gap_at(n - kk)
            gaps[kk] = g
            if g >= 0:
                n0 = kk
            else:
                break
        if n0 is None:
            raise NumericFailure(f"W^u_loc(z3) lies below W_n at n={n}")
        n_tail = n - n0
        cp_pt = maps.at_cprime(s_c)
        waypoints = maps.chain(s3, n_tail)
        resid = {
            "cprime_gap": abs(cp_pt[1] - model.gamma(cp_pt[0], t, a)),
            "slope_z1": abs(slope1),
            "slope_z3": abs(slope3),
            "dy_z3": abs(y3.d1),
        }
        return LoopTrace(n, k, (t, a), tuple(cp_pt), z1, z2, z3, waypoints, n0, n_tail, curv,
                         {"s_c": s_c, "s1": s1, "s3": s3, "h1": h1, "h2": h2, "roots": roots},
                         resid, float(Lc), dps, gaps, maps)


def stable_height(model: UnfoldingModel, depth: int, x, t, a):
    """W_depth(x) = mu^-depth W(lambda^depth x)."""
    lam, mu = model.lam(t, a), model.mu(t, a)
    return model.seed_stable(x * lam**depth, t, a) / mu**depth


def trace_on_return_curve(model, theta, n, t, **kw) -> LoopTrace:
    dps = kw.pop("dps", None) or model.precision_hint(n, theta.theta)
    with mp.workdps(dps):
        a = return_parameter(model, n, t)
        return trace_loop(model, theta, Params(mp.mpf(t), a), n, dps=dps, **kw)


def _z3y(model, theta, t, a, n, dps):
    with mp.workdps(dps):
        return trace_loop(model, theta, Params(t, a), n, dps=dps).z3[1]


def z3_speed(model: UnfoldingModel, theta: ThetaSelection, params: Params, n: int,
             direction: str = "a", rel_step=None):
    """Finite-difference derivative of z3_y in t, in a, or along the return curve ("total").

    Central differences with one Richardson extrapolation; the evaluation runs at
    extra precision so steps far below the strip width are harmless.
    """
    if direction not in ("t", "a", "total"):
        raise ValidationError("direction must be 't', 'a' or 'total'")
    dps = model.precision_hint(n, theta.theta) + 30
    with mp.workdps(dps):
        t, a = mp.mpf(params.t), mp.mpf(params.a)
        lam = model.lam(t, a)
        k = theta.theta_n(n)
        h = mp.mpf(rel_step or "1e-12") * (lam**k if direction == "a" else mp.mpf(1) / n)

        def f(x):
            if direction == "a":
                return _z3y(model, theta, t, a + x, n, dps)
            if direction == "t":
                return _z3y(model, theta, t + x, a, n, dps)
            return _z3y(model, theta, t + x, return_parameter(model, n, t + x), n, dps)

        d1 = (f(h) - f(-h)) / (2 * h)
        d2 = (f(h / 2) - f(-h / 2)) / h
        return (4 * d2 - d1) / 3


def speed_leading_terms(model: UnfoldingModel, theta: ThetaSelection, params: Params, n: int):
    """Leading-order predictions for dz3_y/dt and dz3_y/da (D = d2Y/dy2, C = dY/dx)."""
    const = model.measured_constants(params.t, params.a)
    D, C = 2 * const["Q"], const["C"]
    t, a = mp.mpf(params.t), mp.mpf(params.a)
    lam, mu = model.lam(t, a), model.mu(t, a)
    k = theta.theta_n(n)
    dmu = model.dmu(t, a)[0]
    return {
        "t": D * C * lam**k * mu**n * n / mu * dmu,
        "a": D * C * lam**k * mu ** (2 * n) + 1,
    }


@dataclass
class CurvatureReport:
    ns: list
    log_curvatures: list
    slope: float
    intercept: float
    theoretical: float

    @property
    def relative_error(self):
        return abs(self.slope - self.theoretical) / self.theoretical


def curvature_growth_rate(model, theta, t=0.0, a=0.0) -> float:
    lam = float(model.lam(mp.mpf(t), mp.mpf(a)))
    mu = float(model.mu(mp.mpf(t), mp.mpf(a)))
    return 4 * math.log(mu) + (2 - 3 * theta.theta) * math.log(1 / lam)


def fit_curvature_growth(ns, curvatures, theoretical) -> CurvatureReport:
    logs = [float(mp.log(c)) if c > 0 else -math.inf for c in curvatures]
    good = [(n, v) for n, v in zip(ns, logs) if math.isfinite(v)]
    if len(good) < 4:
        raise NumericFailure("fewer than four depths with positive curvature")
    slope, intercept = np.polyfit([g[0] for g in good], [g[1] for g in good], 1)
    return CurvatureReport([g[0] for g in good], [g[1] for g in good], float(slope), float(intercept),
                           theoretical)


def z3_curvature_growth(model: UnfoldingModel, theta: ThetaSelection, t, n_range) -> CurvatureReport:
    ns, curvs = [], []
    for n in range(n_range[0], n_range[1] + 1):
        try:
            tr = trace_on_return_curve(model, theta, n, t)
        except NumericFailure:
            continue
        ns.append(n)
        curvs.append(tr.curvature_z3)
    return fit_curvature_growth(ns, curvs, curvature_growth_rate(model, theta, t))


__all__ = ["CriticalData", "critical_data", "return_parameter", "LoopMaps", "LoopTrace", "trace_loop",
           "trace_on_return_curve", "stable_height", "z3_speed", "speed_leading_terms",
           "CurvatureReport", "curvature_growth_rate", "fit_curvature_growth", "z3_curvature_growth"]
