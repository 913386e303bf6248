"""Return curves, B_n strips, secondary tangencies and their continuation.

A secondary tangency of type ``n0`` at depth ``n`` is a parameter where the
third-stage unstable curve W^u_loc(z3) touches the pulled-back stable curve
``W_{n - n0}``.  Along such a curve the family can be re-read as a new
unfolding (:class:`DerivedUnfolding`), which is how the recursion into
finer generations is realised.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .critical_orbit import (LoopTrace, _argmin_y, _as_jet, return_parameter, stable_height,
                             trace_loop)
from .errors import AssertionFailure, NumericFailure, ValidationError
from .family_models import Params, ThetaSelection, UnfoldingModel, Window
from .jets import Jet, curvature_from_jets

DEFAULT_EPS = 0.1
DEFAULT_T = 100.0
DEFAULT_KAPPA = 2


# ---------------------------------------------------------------------------
# return curves


@dataclass
class ReturnCurve:
    n: int
    model: UnfoldingModel = field(repr=False)
    ts: np.ndarray = field(default=None, repr=False)
    values: list = field(default=None, repr=False)
    residuals: list = field(default=None, repr=False)

    def eval(self, t):
        with mp.workdps(self.model.precision_hint(self.n)):
            return return_parameter(self.model, self.n, t)

    def deriv(self, t, h=None):
        """Central difference of a_n at t, run at extra precision."""
        with mp.workdps(self.model.precision_hint(self.n) + 20):
            t = mp.mpf(t)
            h = h or mp.mpf(10) ** (-(mp.mp.dps // 3))
            return (return_parameter(self.model, self.n, t + h)
                    - return_parameter(self.model, self.n, t - h)) / (2 * h)

    def closed_form_deriv(self, t):
        """-n dmu/dt mu^-(n+1) c, the leading term of the derivative."""
        t = mp.mpf(t)
        mu = self.model.mu(t, 0)
        dmu = self.model.dmu(t, 0)[0]
        c = self.model.gamma(mp.mpf(0), t, return_parameter(self.model, self.n, t))
        return -self.n * dmu / mu ** (self.n + 1) * c


def return_curve(model: UnfoldingModel, theta: ThetaSelection | None, n: int, ts=None) -> ReturnCurve:
    if n < 1:
        raise ValidationError("return depth must be positive")
    ts = np.linspace(-model.window.t0, model.window.t0, 33) if ts is None else np.asarray(ts, float)
    vals, res = [], []
    with mp.workdps(model.precision_hint(n)):
        for t in ts:
            tt = mp.mpf(t)
            a = return_parameter(model, n, tt)
            zx, zy = model.critical_value(tt, a)
            r = model.mu(tt, a) ** n * zy - model.gamma(zx * model.lam(tt, a) ** n, tt, a)
            vals.append(a)
            res.append(abs(r))
    return ReturnCurve(n, model, ts, vals, res)


# ---------------------------------------------------------------------------
# strips


@dataclass
class TangencyStrip:
    n: int
    n0_ref: int
    model: UnfoldingModel = field(repr=False)
    theta: ThetaSelection = field(repr=False)
    eps: float = DEFAULT_EPS
    T_const: float = DEFAULT_T
    C_const: float = 1.0

    @property
    def E_const(self):
        return self.C_const - self.eps / float(self.model.mu(mp.mpf(0), mp.mpf(0))) ** (self.n0_ref / 2)

    def bounds(self, t):
        """(a_n(t), lower(t), upper(t)) at the working precision of the strip."""
        with mp.workdps(self.model.precision_hint(self.n, self.theta.theta)):
            t = mp.mpf(t)
            an = return_parameter(self.model, self.n, t)
            lam, mu = self.model.lam(t, an), self.model.mu(t, an)
            k = self.theta.theta_n(self.n)
            lower = an + (self.eps / mu ** (mp.mpf(self.n0_ref) / 2) - self.C_const) * lam**k
            upper = an + self.T_const / mu ** (self.n + mp.mpf(self.n0_ref) / 2)
            return an, lower, upper

    def lower(self, t):
        return self.bounds(t)[1]

    def upper(self, t):
        return self.bounds(t)[2]

    def contains(self, t, a):
        _, lo, hi = self.bounds(t)
        return lo < a < hi

    def width(self, t):
        _, lo, hi = self.bounds(t)
        return hi - lo

    def to_rows(self, ts, label=""):
        rows = []
        for t in ts:
            an, lo, hi = self.bounds(t)
            rows.append((float(t), float(lo), float(hi), float(an), label or f"B_{self.n}"))
        return rows


def make_strip(model, theta, n, n0_ref, eps=DEFAULT_EPS, T_const=DEFAULT_T, C_const=None):
    if C_const is None:
        with mp.workdps(model.precision_hint(n, theta.theta)):
            C_const = float(abs(model.measured_constants(0, 0)["C"]))
    return TangencyStrip(n, n0_ref, model, theta, eps, T_const, C_const)


# ---------------------------------------------------------------------------
# tangency residual


def tangency_residual(model, theta, n, n0, t, a, trace: LoopTrace | None = None):
    """(psi1, psi2, s): vertical and slope mismatch between W^u_loc(z3) and W_{n-n0}.

    psi2 is driven to zero by minimising Y3 - W_{n-n0}(X3) along the curve, psi1
    is the remaining vertical gap.  Must be called inside the loop precision.
    """
    tr = trace or trace_loop(model, theta, Params(t, a), n, dps=mp.mp.dps)
    maps = tr.maps
    depth = n - n0
    tt, aa = maps.t, maps.a

    def diff(s):
        x, y = maps.at_z3(s)
        return x, y - stable_height(model, depth, x, tt, aa)

    s1, h2 = tr.s_values["s1"], tr.s_values["h2"]
    s, _ = _argmin_y(diff, tr.s_values["s3"], s1 - h2, s1 + h2)
    j = diff(Jet(s, mp.mpf(1), mp.mpf(0)))
    g = _as_jet(j[1])
    return g.v, g.d1, s


def gap_along_return_curve(model, theta, n, n0, t):
    with mp.workdps(model.precision_hint(n, theta.theta)):
        t = mp.mpf(t)
        a = return_parameter(model, n, t)
        return tangency_residual(model, theta, n, n0, t, a)[0]


@dataclass
class TangencyPoint:
    n: int
    n0: int
    t: object
    a: object
    t_start: float
    certificate: dict

    @property
    def distance(self):
        return abs(float(self.t) - self.t_start)


def find_secondary_tangency(model, theta, strip: TangencyStrip, t_start, kappa=DEFAULT_KAPPA,
                            step=None, t_stop=None) -> TangencyPoint:
    """Walk t forward along a_n from t_start until W^u_loc(z3) reaches W_{n-(n0+kappa)}."""
    n = strip.n
    dps = model.precision_hint(n, theta.theta)
    t_stop = model.window.t0 if t_stop is None else t_stop
    step = step or 1 / (4 * n)
    with mp.workdps(dps):
        t0 = mp.mpf(t_start)
        tr = trace_loop(model, theta, Params(t0, return_parameter(model, n, t0)), n, dps=dps)
        target = tr.n0 + kappa
        if target > n:
            raise NumericFailure(f"tangency type {target} exceeds depth {n}")
        g = lambda t: gap_along_return_curve(model, theta, n, target, t)
        lo, glo = t0, g(t0)
        if glo >= 0:
            raise NumericFailure("gap already non-negative at the start")
        while True:
            hi = min(lo + mp.mpf(step), mp.mpf(t_stop))
            ghi = g(hi)
            if ghi >= 0:
                break
            if hi >= t_stop:
                raise NumericFailure(f"no sign change of the type-{target} gap on [{float(t0)}, {t_stop}]")
            lo, glo = hi, ghi
        root = mp.findroot(g, (lo, hi), solver="illinois", tol=mp.mpf(10) ** (-2 * dps // 3))
        a_star = return_parameter(model, n, root)
        gap = g(root)
        h = mp.mpf(10) ** (-(dps // 3))
        dg = (g(root + h) - g(root - h)) / (2 * h)
        trs = trace_loop(model, theta, Params(root, a_star), n, dps=dps)
        cert = {"gap": abs(gap), "dgap_dt": dg, "curvature": trs.curvature_z3,
                "n0_start": tr.n0, "scanned": (float(t0), float(hi)), "n0_found": trs.n0}
        return TangencyPoint(n, target, root, a_star, float(t_start), cert)


def tangency_distance_scan(model, theta, ns, starts, kappa=DEFAULT_KAPPA):
    """Mean distance |t* - t_start| over a grid of starting points, for each depth."""
    out = {}
    for n in ns:
        strip = make_strip(model, theta, n, 0)
        ds = []
        for ts in starts:
            try:
                ds.append(find_secondary_tangency(model, theta, strip, ts, kappa).distance)
            except NumericFailure:
                pass
        out[n] = (float(np.mean(ds)) if ds else math.nan, len(ds))
    return out


# ---------------------------------------------------------------------------
# continuation of b_{n, n0}


def solve_tangency_parameter(model, theta, n, n0, t, a_guess, tol=None):
    """Corrector: the parameter a with psi1 = psi2 = 0 at fixed t.

    psi2 is eliminated inside :func:`tangency_residual`; psi1 is then driven to
    zero by a secant iteration in a.  Once the iteration reaches the rounding
    floor (no further decrease with a step far below the working precision)
    the best iterate is accepted.
    """
    t = mp.mpf(t)
    f = lambda a: tangency_residual(model, theta, n, n0, t, a)[0]
    a0 = mp.mpf(a_guess)
    scale = abs(a0) + mp.mpf(10) ** (-(mp.mp.dps // 2))
    tol = tol or mp.mpf(10) ** (-(mp.mp.dps - 15))
    floor = mp.mpf(10) ** (-(mp.mp.dps // 2))
    a1 = a0 * (1 + mp.mpf(10) ** (-(mp.mp.dps // 3))) + mp.mpf(10) ** (-mp.mp.dps)
    f0, f1 = f(a0), f(a1)
    for it in range(60):
        if f1 == f0:
            if abs(f1) == 0 or abs(a1 - a0) <= floor * scale:
                return a1
            raise NumericFailure("tangency corrector: flat residual in a")
        a2 = a1 - f1 * (a1 - a0) / (f1 - f0)
        f2 = f(a2)
        step = abs(a2 - a1)
        if step <= tol * scale:
            return a2
        if it >= 2 and abs(f2) >= abs(f1) and step <= floor * scale:
            return a2 if abs(f2) < abs(f1) else a1
        a0, f0, a1, f1 = a1, f1, a2, f2
    raise NumericFailure(f"tangency corrector diverged at t={mp.nstr(t, 8)}")


@dataclass
class TangencyCurveB:
    n: int
    n0: int
    samples: list
    slopes: list
    residuals: list
    complete: bool
    window: float = 0.0
    notes: list = field(default_factory=list)
    model: UnfoldingModel = field(default=None, repr=False)
    theta: ThetaSelection = field(default=None, repr=False)

    def ts(self):
        return np.array([float(t) for t, _ in self.samples])

    def at(self, t):
        """b(t) by solving the tangency system from the nearest sample."""
        tt = float(t)
        i = int(np.argmin(np.abs(self.ts() - tt)))
        with mp.workdps(self.model.precision_hint(self.n, self.theta.theta)):
            return solve_tangency_parameter(self.model, self.theta, self.n, self.n0, mp.mpf(t),
                                            self.samples[i][1] + (mp.mpf(t) - self.samples[i][0]) * self.slopes[i])

    def slope(self, t):
        with mp.workdps(self.model.precision_hint(self.n, self.theta.theta)):
            return tangency_slope(self.model, self.theta, self.n, self.n0, mp.mpf(t), self.at(t))

    def to_csv(self, path, strip: TangencyStrip | None = None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lower", "upper", "a_n", "b"])
            for t, b in self.samples:
                if strip is not None:
                    an, lo, hi = strip.bounds(t)
                else:
                    an = lo = hi = math.nan
                w.writerow([repr(float(t)), repr(float(lo)), repr(float(hi)), repr(float(an)), repr(float(b))])


def tangency_slope(model, theta, n, n0, t, a):
    """db/dt = -(d psi1/dt) / (d psi1/da) on the tangency curve."""
    h = mp.mpf(10) ** (-(mp.mp.dps // 3))
    ha = h * (abs(a) + h)
    f = lambda tt, aa: tangency_residual(model, theta, n, n0, tt, aa)[0]
    dt = (f(t + h, a) - f(t - h, a)) / (2 * h)
    da = (f(t, a + ha) - f(t, a - ha)) / (2 * ha)
    return -dt / da


def continue_tangency_curve(model, theta, seed: TangencyPoint, n=None, n0=None, t_range=None,
                            step=1e-3, strip: TangencyStrip | None = None, max_halvings=10):
    """Predictor-corrector continuation of b_{n,n0} across the t-window.

    The predictor extrapolates the offset b(t) - a_n(t), which varies on the
    O(1/n) scale, instead of b itself, whose slope is dominated by a_n.
    """
    n = seed.n if n is None else n
    n0 = seed.n0 if n0 is None else n0
    lo_t, hi_t = t_range or (-model.window.t0, model.window.t0)
    dps = model.precision_hint(n, theta.theta)
    notes = []
    complete = True
    with mp.workdps(dps):
        t_s = mp.mpf(seed.t)
        b_s = solve_tangency_parameter(model, theta, n, n0, t_s, seed.a)
        branches = []
        for direction in (1, -1):
            pts = [(t_s, b_s - return_parameter(model, n, t_s))]
            dt = mp.mpf(step)
            halvings = 0
            while True:
                t_last = pts[-1][0]
                if (direction > 0 and t_last >= hi_t) or (direction < 0 and t_last <= lo_t):
                    break
                t_new = t_last + direction * dt
                t_new = min(t_new, mp.mpf(hi_t)) if direction > 0 else max(t_new, mp.mpf(lo_t))
                if abs(t_new - t_last) <= mp.mpf(step) * mp.mpf("1e-9"):
                    break
                if len(pts) >= 2:
                    (ta, oa), (tb, ob) = pts[-2], pts[-1]
                    off = ob + (ob - oa) / (tb - ta) * (t_new - tb)
                else:
                    off = pts[-1][1]
                an = return_parameter(model, n, t_new)
                try:
                    b = solve_tangency_parameter(model, theta, n, n0, t_new, an + off)
                except NumericFailure:
                    halvings += 1
                    if halvings > max_halvings:
                        notes.append(f"corrector failed near t={float(t_new):.6g}")
                        complete = False
                        break
                    dt /= 2
                    continue
                if strip is not None and not strip.contains(t_new, b):
                    notes.append(f"left the strip at t={float(t_new):.6g}")
                    complete = False
                    break
                pts.append((t_new, b - an))
            branches.append(pts)
        merged = []
        for t, off in list(reversed(branches[1][1:])) + branches[0]:
            if not merged or t != merged[-1][0]:
                merged.append((t, off))
        samples, slopes, res = [], [], []
        for t, off in merged:
            b = off + return_parameter(model, n, t)
            psi1, psi2, _ = tangency_residual(model, theta, n, n0, t, b)
            samples.append((t, b))
            slopes.append(tangency_slope(model, theta, n, n0, t, b))
            res.append((abs(psi1), abs(psi2)))
    return TangencyCurveB(n, n0, samples, slopes, res, complete, notes=notes, model=model, theta=theta)


# ---------------------------------------------------------------------------
# the family re-read near a curve of secondary tangencies


class DerivedUnfolding(UnfoldingModel):
    """Unfolding of the secondary tangency b_{n,n0}, parametrised by (t, a~).

    The new gluing is the composite passage H o L^(n-n0) o G o L^n o G o L^(theta n) o G
    starting near c~ = (0, c_y + s3).  The second parameter a~ is the height of
    the new critical value, so the reparametrisation conditions hold exactly;
    the underlying parameter is recovered by a cached Newton solve.
    """

    backend = "derived"

    def __init__(self, parent: UnfoldingModel, theta: ThetaSelection, n: int, n0: int,
                 window: Window | None = None, t_ref=0.0, a_ref=None, branch="upper"):
        self.parent, self.theta_sel = parent, theta
        self.n, self.n0 = n, n0
        self.k = theta.theta_n(n)
        self.n_tail = n - n0
        if self.n_tail < 1:
            raise ValidationError("secondary tangency type must leave at least one linear step")
        self.branch = branch
        self.N = 3 * parent.N + self.k + n + self.n_tail + parent.M
        self.M = parent.M
        self.generation = getattr(parent, "generation", 1) + 1
        self.window = window or Window(t0=parent.window.t0, a0=0.05)
        self._base_dps = parent.precision_hint(n, theta.theta)
        self._param_cache = {}
        self._crit_cache = {}
        with mp.workdps(self.precision_hint(0)):
            t0 = mp.mpf(t_ref)
            if a_ref is None:
                an = return_parameter(parent, n, t0)
                a_ref = solve_tangency_parameter(parent, theta, n, n0, t0, an)
            tr = trace_loop(parent, theta, Params(t0, mp.mpf(a_ref)), n, dps=mp.mp.dps, branch=branch)
            self._ref = (t0, mp.mpf(a_ref), tr.maps.cy + tr.s_values["s3"])
            self.critical_guess = self._ref[2]

    # eigenvalues and the linear block are the parent's
    def lam(self, t, a):
        return self.parent.lam(t, a)

    def mu(self, t, a):
        return self.parent.mu(t, a)

    def dlam(self, t, a):
        return self.parent.dlam(t, a)

    def dmu(self, t, a):
        return self.parent.dmu(t, a)

    def transit(self, x, y, t, a):
        return self.parent.transit(x, y, t, a)

    def seed_stable(self, x, t, a):
        return self.parent.seed_stable(x, t, a)

    def q2(self, t, a):
        return self.parent.q2(t, a)

    def precision_hint(self, n, theta=None):
        # the new fold is a sheared, very thin parabola: its x-speed is O(10^-base)
        # so the argmin along the loop needs the parent digits twice over
        return 2 * self._base_dps + super().precision_hint(n, self.theta_sel.theta if theta is None else theta) - 40

    # composite passage at an underlying parameter
    def chain(self, x, y, t, a_par):
        P = self.parent
        x, y = P.glue(x, y, t, a_par)
        x, y = P.linear(x, y, t, a_par, self.k)
        x, y = P.glue(x, y, t, a_par)
        x, y = P.linear(x, y, t, a_par, self.n)
        x, y = P.glue(x, y, t, a_par)
        x, y = P.linear(x, y, t, a_par, self.n_tail)
        return P.transit(x, y, t, a_par)

    def _critical_height(self, t, a_par, guess=None):
        key = (t, a_par, mp.mp.prec)
        if key in self._crit_cache:
            return self._crit_cache[key]
        y = mp.mpf(guess if guess is not None else self.critical_guess)
        tol = mp.mpf(10) ** (-(mp.mp.dps - 10))
        for _ in range(100):
            _, Y = self.chain(mp.mpf(0), Jet(y, mp.mpf(1), mp.mpf(0)), t, a_par)
            if Y.d2 == 0:
                raise NumericFailure("derived critical point: flat fold")
            step = Y.d1 / Y.d2
            y -= step
            if abs(step) <= tol * abs(y):
                self._crit_cache[key] = y
                return y
        raise NumericFailure("derived critical point did not converge")

    def height_of_critical_value(self, t, a_par):
        return self.chain(mp.mpf(0), self._critical_height(t, a_par), t, a_par)[1]

    def underlying_parameter(self, t, a_new):
        """The parent parameter a with height(z~) = a_new at this t."""
        t, a_new = mp.mpf(t), mp.mpf(a_new)
        key = (t, a_new, mp.mp.prec)
        if key in self._param_cache:
            return self._param_cache[key]
        # nearest cached solution at the same t as the starting point
        same_t = [(abs(k[1] - a_new), v) for k, v in self._param_cache.items()
                  if k[0] == t and k[2] == mp.mp.prec]
        if same_t:
            a = min(same_t, key=lambda p: p[0])[1]
        else:
            an = return_parameter(self.parent, self.n, t)
            a = solve_tangency_parameter(self.parent, self.theta_sel, self.n, self.n0, t, an)
        tol = mp.mpf(10) ** (-(mp.mp.dps - 15))
        scale = abs(a)
        h = scale * mp.mpf(10) ** (-(mp.mp.dps // 3))
        for _ in range(80):
            f0 = self.height_of_critical_value(t, a) - a_new
            d = (self.height_of_critical_value(t, a + h) - a_new - f0) / h
            step = f0 / d
            a -= step
            if abs(step) <= tol * scale or (_ > 3 and abs(step) <= h * mp.mpf(10) ** (-(mp.mp.dps // 6))):
                self._param_cache[key] = a
                return a
        raise NumericFailure(f"reparametrisation failed at t={mp.nstr(t, 8)}, a~={mp.nstr(a_new, 8)}")

    def glue(self, x, y, t, a):
        t0 = t.v if isinstance(t, Jet) else t
        a0 = a.v if isinstance(a, Jet) else a
        return self.chain(x, y, mp.mpf(t0), self.underlying_parameter(t0, a0))

    def critical_point(self, t, a):
        t, a = mp.mpf(t), mp.mpf(a)
        return mp.mpf(0), self._critical_height(t, self.underlying_parameter(t, a))

    def gamma(self, x, t, a, guess=None, tol=None):
        if x == 0 and guess is None:
            return self.critical_point(t, a)[1]
        if guess is None:
            guess = self.critical_point(t, a)[1]
        return super().gamma(x, t, a, guess, tol)

    def describe(self):
        d = super().describe()
        d.update(generation=self.generation, n=self.n, n0=self.n0, theta_n=self.k, n_tail=self.n_tail,
                 parent=self.parent.describe())
        return d


def derived_unfolding(model, theta, curve_or_point, window=None) -> DerivedUnfolding:
    n, n0 = curve_or_point.n, curve_or_point.n0
    if isinstance(curve_or_point, TangencyPoint):
        t_ref, a_ref = curve_or_point.t, curve_or_point.a
    else:
        t_ref, a_ref = curve_or_point.samples[len(curve_or_point.samples) // 2]
    return DerivedUnfolding(model, theta, n, n0, window=window, t_ref=t_ref, a_ref=a_ref)


# ---------------------------------------------------------------------------
# recursion into child strips


@dataclass
class ChildCurve:
    j: int
    depth: int
    n0: int
    samples: list           # (t, b) in the derived parameter
    slopes: list
    distance_ratio: list    # mu^(n'+j) |b_k(t) - b(t)|
    slope_ratio: list       # |db_k/dt - db/dt| / ((n'+j) mu^-(n'+j+1) dmu/dt)
    window_halfwidth: float = math.nan


@dataclass
class StripFamily:
    parent: DerivedUnfolding
    n_child: int
    strips: list
    children: list
    windings: list
    disjoint: bool
    constants: dict

    def to_dict(self):
        return {
            "generation": self.parent.generation, "n_child": self.n_child,
            "disjoint": self.disjoint, "constants": self.constants,
            "windings": self.windings,
            "children": [{"j": c.j, "depth": c.depth, "n0": c.n0,
                          "samples": [[float(t), float(b)] for t, b in c.samples],
                          "distance_ratio": c.distance_ratio, "slope_ratio": c.slope_ratio,
                          "window_halfwidth": c.window_halfwidth} for c in self.children],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def strips_disjoint(strips, ts):
    """Interval test on [lower, upper] at each sample t."""
    for t in ts:
        iv = sorted((s.lower(t), s.upper(t)) for s in strips)
        for (l1, u1), (l2, u2) in zip(iv, iv[1:]):
            if l2 <= u1:
                return False
    return True


def check_unfolding_window(derived: DerivedUnfolding, ts=(-0.1, 0.0, 0.1), offsets=(-1e-3, 0.0, 1e-3)):
    """Reparametrisation checks: the new critical value sits at height a~ and moves with a~.

    Returns the worst height residual and the smallest d(height)/da~ seen.
    """
    worst, min_speed = mp.mpf(0), mp.inf
    with mp.workdps(derived.precision_hint(0)):
        for t in ts:
            for off in offsets:
                t_, a_ = mp.mpf(t), mp.mpf(off)
                worst = max(worst, abs(derived.critical_value(t_, a_)[1] - a_))
                h = mp.mpf(10) ** (-(mp.mp.dps // 4))
                up = derived.critical_value(t_, a_ + h)[1]
                min_speed = min(min_speed, abs((up - derived.critical_value(t_, a_)[1]) / h))
    if not min_speed > 0:
        raise AssertionFailure("derived family does not unfold: zero speed in a~")
    return {"height_residual": worst, "min_speed": min_speed}


def strip_recursion(derived: DerivedUnfolding, theta: ThetaSelection, n_child: int, depth_budget=3,
                    t_starts=None, kappa=DEFAULT_KAPPA, lower=1, upper=1, span=0.01, step=None,
                    disjoint_samples=9):
    """Child strips B_{n'+j} of a derived unfolding and one tangency curve in each.

    Distances and slopes are measured in the derived parameter, where the
    parent tangency curve is the line a~ = 0.  Each child curve is continued
    over [t* - span, t* + span] around its seed; disjointness of the strips is
    tested on a grid over the whole window.
    """
    if depth_budget < 1:
        raise ValidationError("depth budget must be positive")
    model = derived
    t0 = model.window.t0
    starts = list(t_starts) if t_starts is not None else list(np.linspace(-0.95 * t0, -0.6 * t0, 4))
    step = step or span / 2
    strips, children, windings = [], [], []
    for j in range(depth_budget):
        depth = n_child + j
        strip = make_strip(model, theta, depth, 0)
        point = None
        for ts0 in starts:
            try:
                point = find_secondary_tangency(model, theta, strip, ts0, kappa)
                break
            except NumericFailure:
                continue
        if point is None:
            raise NumericFailure(f"no secondary tangency found at depth {depth} (budget exhausted)")
        strip = make_strip(model, theta, depth, point.n0, C_const=strip.C_const)
        strips.append(strip)
        lo = max(float(point.t) - span, -t0)
        hi = min(float(point.t) + span, t0)
        curve = continue_tangency_curve(model, theta, point, t_range=(lo, hi), step=step, strip=strip)
        dist, sl = [], []
        with mp.workdps(model.precision_hint(depth, theta.theta)):
            for (t, b), slope in zip(curve.samples, curve.slopes):
                mu = model.mu(t, b)
                dmu = model.dmu(t, b)[0]
                dist.append(float(mu**depth * abs(b)))
                sl.append(float(abs(slope) / (depth * dmu / mu ** (depth + 1))))
        children.append(ChildCurve(j, depth, point.n0, curve.samples, curve.slopes, dist, sl))
        with mp.workdps(model.precision_hint(depth, theta.theta)):
            tr = trace_loop(model, theta, Params(point.t, point.a), depth)
        windings.append((lower, tr.theta_n, depth, depth - point.n0, upper))
    grid = np.linspace(-t0, t0, disjoint_samples)
    disjoint = strips_disjoint(strips, grid)
    if not disjoint:
        raise AssertionFailure("child strips overlap")
    # descendant windows: a quarter of the distance to the nearest sibling curve
    for c in children:
        gaps = [min(abs(b) for _, b in o.samples) for o in children if o is not c]
        gaps = [g - max(abs(b) for _, b in c.samples) for g in gaps]
        c.window_halfwidth = float(min(abs(g) for g in gaps) / 4) if gaps else math.nan
    C_fit = max(max(max(c.distance_ratio), 1 / min(c.distance_ratio)) for c in children)
    Ct_fit = max(max(max(c.slope_ratio), 1 / min(c.slope_ratio)) for c in children)
    return StripFamily(derived, n_child, strips, children, windings, disjoint,
                       {"C": C_fit, "C_tilde": Ct_fit})


__all__ = ["ReturnCurve", "return_curve", "TangencyStrip", "make_strip", "tangency_residual",
           "gap_along_return_curve", "TangencyPoint", "find_secondary_tangency",
           "tangency_distance_scan", "solve_tangency_parameter", "TangencyCurveB", "tangency_slope",
           "continue_tangency_curve", "DerivedUnfolding", "derived_unfolding", "ChildCurve",
           "StripFamily", "strips_disjoint", "strip_recursion", "check_unfolding_window"]
