"""Two-parameter unfolding backends and the choice of the exponent theta.

Every backend exposes the same small surface used by the rest of the package:
eigenvalue fields, the linear block on the chart ``Q = [-2, 2]^2``, the gluing
map (the ``N``-step passage from the critical point back to the stable axis),
the transversal loop through ``q2`` and the seed of the stable manifold there.
Maps accept plain floats, ``mpmath.mpf`` values or :class:`~tangencylab.jets.Jet`
objects, so curves can be pushed through them with exact derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import mpmath as mp
import numpy as np

from .errors import NumericFailure, ValidationError
from .jets import Jet

QDOMAIN = (-2.0, 2.0)


@dataclass(frozen=True)
class Window:
    t0: float = 0.12
    a0: float = 0.05

    def __post_init__(self):
        if not (self.t0 > 0 and self.a0 > 0):
            raise ValidationError("window half-widths must be positive")


@dataclass(frozen=True)
class Params:
    t: float
    a: float

    def check(self, window: Window) -> "Params":
        if abs(float(self.t)) > window.t0 or abs(float(self.a)) > window.a0:
            raise ValidationError(f"parameter ({float(self.t)}, {float(self.a)}) outside window {window}")
        return self


@dataclass(frozen=True)
class GluingMap:
    """Quadratic gluing in coordinates centred at the critical point (0, 1).

    ``x1`` is the abscissa of the image of (0, 1) on the stable axis.
    """

    A: float = 0.0
    B: float = 1.0
    C: float = 1.0
    E: float = 0.0
    F: float = 0.0
    Q: float = 1.0
    phi_x: float = 0.0
    phi_y: float = 0.0
    x1: float = 1.0

    def __post_init__(self):
        if self.B == 0:
            raise ValidationError("gluing coefficient B must be nonzero")
        if not self.Q > 0:
            raise ValidationError("gluing quadratic coefficient Q must be positive")

    def __call__(self, x, y, t, a):
        dy = y - 1
        dy2 = dy * dy
        X = self.x1 + self.A * x + self.B * dy + self.E * t + self.F * a
        Y = self.C * x + self.Q * dy2 + a * (1 + self.phi_x * x + self.phi_y * dy2)
        return X, Y


@dataclass(frozen=True)
class TransitMap:
    """Affine M-step passage sending the stable seed through q2 onto the stable axis."""

    x4: float = -1.0
    hA: float = 1.0
    hB: float = 0.5
    hD: float = 1.0
    y_q2: float = 1.5

    def __post_init__(self):
        if self.hD == 0:
            raise ValidationError("transit map must be transversal (hD != 0)")

    def __call__(self, x, y):
        dy = y - self.y_q2
        return self.x4 + self.hA * x + self.hB * dy, self.hD * dy


class UnfoldingModel:
    """Common behaviour of the backends.

    Subclasses provide ``lam``, ``mu``, ``dlam``, ``dmu``, ``glue``, ``transit``,
    ``seed_stable`` and the attributes ``N``, ``M``, ``window``.
    """

    backend = "abstract"
    N = 1
    M = 1
    window = Window()
    critical_guess = 1.0
    eigen_depend_on_a = False

    # ---- linear block -------------------------------------------------
    def linear(self, x, y, t, a, k=1):
        lam = self.lam(t, a)
        mu = self.mu(t, a)
        return x * lam**k, y * mu**k

    def linear_inverse(self, x, y, t, a, k=1):
        lam = self.lam(t, a)
        mu = self.mu(t, a)
        return x / lam**k, y / mu**k

    def in_domain(self, x, y, pad=0.0):
        lo, hi = QDOMAIN
        return lo - pad <= float(x) <= hi + pad and lo - pad <= float(y) <= hi + pad

    # ---- critical curve -----------------------------------------------
    def dY_dy(self, x, y, t, a):
        """Return (dY/dy, d2Y/dy2) of the gluing at (x, y)."""
        _, Y = self.glue(x, Jet(y, 1, 0), t, a)
        return Y.d1, Y.d2

    def gamma(self, x, t, a, guess=None, tol=None):
        """Height c(x) of the critical curve: the zero of dY/dy along the vertical through x."""
        y = mp.mpf(self.critical_guess if guess is None else guess)
        tol = tol if tol is not None else mp.mpf(10) ** (-(mp.mp.dps - 8))
        for _ in range(80):
            g1, g2 = self.dY_dy(x, y, t, a)
            if g2 == 0:
                raise NumericFailure(f"critical curve: flat second derivative at x={x}")
            step = g1 / g2
            y -= step
            if abs(step) <= tol * (1 + abs(y)):
                return y
        raise NumericFailure(f"critical curve Newton did not converge at x={mp.nstr(x, 8)}")

    def critical_point(self, t, a):
        return mp.mpf(0), self.gamma(mp.mpf(0), t, a)

    def critical_value(self, t, a):
        cx, cy = self.critical_point(t, a)
        return self.glue(cx, cy, t, a)

    def measured_constants(self, t=0, a=0):
        """C = dY/dx and Q = d2Y/dy2 / 2 at the critical point (used in the estimates)."""
        cx, cy = self.critical_point(mp.mpf(t), mp.mpf(a))
        _, Yx = self.glue(Jet(cx, 1, 0), cy, mp.mpf(t), mp.mpf(a))
        _, Yy = self.glue(cx, Jet(cy, 1, 0), mp.mpf(t), mp.mpf(a))
        Xy, _ = self.glue(cx, Jet(cy, 1, 0), mp.mpf(t), mp.mpf(a))
        return {"C": Yx.d1, "Q": Yy.d2 / 2, "B": Xy.d1}

    # ---- window scans --------------------------------------------------
    def window_samples(self, count=9):
        ts = np.linspace(-self.window.t0, self.window.t0, count)
        as_ = np.linspace(-self.window.a0, self.window.a0, count if self.eigen_depend_on_a else 1)
        return [(float(t), float(a)) for t in ts for a in as_]

    def eigen_extremes(self, count=9):
        lams, mus = [], []
        for t, a in self.window_samples(count):
            lams.append(float(self.lam(mp.mpf(t), mp.mpf(a))))
            mus.append(float(self.mu(mp.mpf(t), mp.mpf(a))))
        return min(lams), max(lams), min(mus), max(mus)

    def check_eigen_condition(self):
        lmin, lmax, mmin, mmax = self.eigen_extremes()
        if not (lmin > 0 and mmin > 1 and lmax < 1):
            raise ValidationError("eigenvalues must satisfy 0 < lambda < 1 < mu on the window")
        if lmax * mmax**3 >= 1:
            raise ValidationError(
                f"condition (F3) violated: lambda_max * mu_max^3 = {lmax * mmax**3:.4g} >= 1"
            )

    def precision_hint(self, n, theta=0.33):
        lam = float(self.lam(mp.mpf(0), mp.mpf(0)))
        mu = float(self.mu(mp.mpf(0), mp.mpf(0)))
        return int(40 + n * ((1 - theta) * math.log10(1 / lam) + 2.5 * math.log10(mu)))

    def describe(self) -> dict:
        return {"backend": self.backend, "N": self.N, "M": self.M,
                "window": {"t0": self.window.t0, "a0": self.window.a0}}


class IdealModel(UnfoldingModel):
    """Exactly linear saddle block diag(lambda0, mu0 + t) with the quadratic gluing."""

    backend = "ideal"

    def __init__(self, lambda0, mu0, gluing: GluingMap, N=1, M=1,
                 window: Window | None = None, transit: TransitMap | None = None):
        if not (0 < lambda0 < 1 < mu0):
            raise ValidationError("need 0 < lambda0 < 1 < mu0")
        if N < 1 or M < 1:
            raise ValidationError("loop lengths N, M must be at least 1")
        self.lambda0 = lambda0
        self.mu0 = mu0
        self.gluing = gluing
        self.N = int(N)
        self.M = int(M)
        self.window = window or Window()
        self.transit_map = transit or TransitMap()
        if not (1 / (mu0 - self.window.t0) < self.transit_map.y_q2 < 2):
            raise ValidationError("q2 height must lie in (1/mu, 2)")
        if not mu0 - self.window.t0 > 1:
            raise ValidationError("window too wide: mu drops below 1")
        self.check_eigen_condition()

    def lam(self, t, a):
        return self.lambda0 if not isinstance(t, mp.mpf) else mp.mpf(self.lambda0)

    def mu(self, t, a):
        return self.mu0 + t

    def dlam(self, t, a):
        return 0.0, 0.0

    def dmu(self, t, a):
        return 1.0, 0.0

    def glue(self, x, y, t, a):
        return self.gluing(x, y, t, a)

    def gamma(self, x, t, a, guess=None, tol=None):
        return mp.mpf(1) if self.gluing.phi_y == 0 else super().gamma(x, t, a, guess, tol)

    def transit(self, x, y, t, a):
        return self.transit_map(x, y)

    def seed_stable(self, x, t, a):
        return self.transit_map.y_q2 + 0 * x

    def q2(self, t, a):
        return 0.0, self.transit_map.y_q2

    def describe(self):
        d = super().describe()
        g, h = self.gluing, self.transit_map
        d.update(lambda0=self.lambda0, mu0=self.mu0,
                 gluing={"A": g.A, "B": g.B, "C": g.C, "E": g.E, "F": g.F, "Q": g.Q},
                 transit={"x4": h.x4, "hA": h.hA, "hB": h.hB, "hD": h.hD, "y_q2": h.y_q2})
        return d


def make_ideal_model(lambda0=0.01, mu0=3.0, gluing: GluingMap | None = None, N=1, M=1,
                     window: Window | None = None, transit: TransitMap | None = None) -> IdealModel:
    return IdealModel(lambda0, mu0, gluing or GluingMap(), N, M, window, transit)


# ---------------------------------------------------------------------------
# Henon backend


def henon_map(x, y, a, b):
    return a - x * x - b * y, x


def henon_saddle(a, b, guess=(-2.0, -2.0), tol=None):
    """Saddle fixed point continued from (-2, -2) by Newton on F(p) = p."""
    x = mp.mpf(guess[0])
    tol = tol or mp.mpf(10) ** (-(mp.mp.dps - 5))
    for _ in range(60):
        # fixed points satisfy y = x and x^2 + (1 + b) x - a = 0
        g = x * x + (1 + b) * x - a
        dg = 2 * x + 1 + b
        step = g / dg
        x -= step
        if abs(step) < tol:
            return x, x
    raise NumericFailure("saddle continuation diverged")


def henon_jacobian(x, b):
    return [[-2 * x, -b], [1, 0]]


def henon_eigen(x, b):
    """Eigenvalues (stable, unstable) of the Jacobian [[-2x, -b], [1, 0]]."""
    tr = -2 * x
    disc = mp.sqrt(tr * tr / 4 - b)
    return tr / 2 - disc, tr / 2 + disc


def logistic_core_fixed_points(a):
    """Fixed points of the one-dimensional core x -> a - x^2."""
    r = mp.sqrt(1 + 4 * mp.mpf(a))
    return sorted([(-1 + r) / 2, (-1 - r) / 2])


class _NormalForm:
    """Order-3 polynomial chart h with F(h(u, v)) = h(lam u, mu v) + O(|(u, v)|^4)."""

    ORDERS = [(i, k - i) for k in (2, 3) for i in range(k + 1)]

    def __init__(self, a, b):
        self.a, self.b = a, b
        px, py = henon_saddle(a, b)
        self.p = (px, py)
        lam, mu = henon_eigen(px, b)
        if not (0 < lam < 1 < mu):
            raise ValidationError("Henon saddle eigenvalues not in 0 < lambda < 1 < mu")
        self.lam, self.mu = lam, mu
        # eigenvectors of [[-2x, -b], [1, 0]]: (nu, 1)
        self.coef = {(1, 0): (lam, mp.mpf(1)), (0, 1): (mu, mp.mpf(1))}
        J = henon_jacobian(px, b)
        for (i, j) in self.ORDERS:
            rate = lam**i * mu**j
            for nu in (lam, mu):
                if abs(rate - nu) <= mp.mpf("1e-6") * abs(nu):
                    raise ValidationError(f"resonance lam^{i} mu^{j} ~ eigenvalue")
            # coefficient of u^i v^j in w_x^2 from lower orders
            rhs = mp.mpf(0)
            for (i1, j1), c1 in list(self.coef.items()):
                i2, j2 = i - i1, j - j1
                if (i2, j2) in self.coef and i1 + j1 < i + j and i2 + j2 < i + j:
                    rhs += c1[0] * self.coef[(i2, j2)][0]
            r = (-rhs, mp.mpf(0))
            m = [[rate - J[0][0], -J[0][1]], [-J[1][0], rate - J[1][1]]]
            det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
            hx = (r[0] * m[1][1] - m[0][1] * r[1]) / det
            hy = (m[0][0] * r[1] - m[1][0] * r[0]) / det
            self.coef[(i, j)] = (hx, hy)

    def __call__(self, u, v):
        x, y = self.p[0], self.p[1]
        upow = [1, u, u * u, u * u * u]
        vpow = [1, v, v * v, v * v * v]
        for (i, j), (cx, cy) in self.coef.items():
            m = upow[i] * vpow[j]
            x = x + cx * m
            y = y + cy * m
        return x, y

    def jacobian(self, u, v):
        dxu = dxv = dyu = dyv = 0
        for (i, j), (cx, cy) in self.coef.items():
            if i:
                m = i * u ** (i - 1) * v**j
                dxu += cx * m
                dyu += cy * m
            if j:
                m = j * u**i * v ** (j - 1)
                dxv += cx * m
                dyv += cy * m
        return dxu, dxv, dyu, dyv

    def hessian(self, u, v):
        """Second derivatives ((xuu, xuv, xvv), (yuu, yuv, yvv))."""
        out = [[0, 0, 0], [0, 0, 0]]
        for (i, j), c in self.coef.items():
            terms = (
                i * (i - 1) * u ** max(i - 2, 0) * v**j if i >= 2 else 0,
                i * j * u ** (i - 1) * v ** (j - 1) if i >= 1 and j >= 1 else 0,
                j * (j - 1) * u**i * v ** max(j - 2, 0) if j >= 2 else 0,
            )
            for comp in range(2):
                for k in range(3):
                    out[comp][k] += c[comp] * terms[k]
        return out

    def inverse(self, x, y, guess=None):
        """Solve h(u, v) = (x, y); also handles jets via implicit differentiation."""
        if isinstance(x, Jet) or isinstance(y, Jet):
            xj = x if isinstance(x, Jet) else Jet(x, 0, 0)
            yj = y if isinstance(y, Jet) else Jet(y, 0, 0)
            u, v = self.inverse(xj.v, yj.v, guess)
            dxu, dxv, dyu, dyv = self.jacobian(u, v)
            det = dxu * dyv - dxv * dyu
            sol = lambda r0, r1: ((r0 * dyv - dxv * r1) / det, (dxu * r1 - dyu * r0) / det)
            u1, v1 = sol(xj.d1, yj.d1)
            (xuu, xuv, xvv), (yuu, yuv, yvv) = self.hessian(u, v)
            qx = xuu * u1 * u1 + 2 * xuv * u1 * v1 + xvv * v1 * v1
            qy = yuu * u1 * u1 + 2 * yuv * u1 * v1 + yvv * v1 * v1
            u2, v2 = sol(xj.d2 - qx, yj.d2 - qy)
            return Jet(u, u1, u2), Jet(v, v1, v2)
        # linear initial guess from the eigenbasis
        if guess is None:
            dx, dy = x - self.p[0], y - self.p[1]
            det = self.lam - self.mu
            u = (dx - self.mu * dy) / det
            v = (self.lam * dy - dx) / det
        else:
            u, v = guess
        tol = mp.mpf(10) ** (-(mp.mp.dps - 6))
        for _ in range(60):
            hx, hy = self(u, v)
            rx, ry = hx - x, hy - y
            dxu, dxv, dyu, dyv = self.jacobian(u, v)
            det = dxu * dyv - dxv * dyu
            du = (rx * dyv - dxv * ry) / det
            dv = (dxu * ry - dyu * rx) / det
            u -= du
            v -= dv
            if abs(du) + abs(dv) <= tol * (1 + abs(u) + abs(v)):
                return u, v
        raise NumericFailure("normal-form chart inversion did not converge")


class HenonModel(UnfoldingModel):
    """Henon family read through a truncated normal-form chart at the saddle.

    Parameters: b_H = b + t * b and a_H = a_ref + a, where a_ref is the tangency
    parameter at t = 0.  Chart coordinates are rescaled so that the critical
    point sits at height 1 and its image at abscissa 1.
    """

    backend = "henon"
    eigen_depend_on_a = True

    def __init__(self, b, preimages=3, window: Window | None = None, dps=40):
        if not b > 0:
            raise ValidationError("Henon backend needs b > 0 (lambda = 0 at b = 0)")
        self.b = mp.mpf(b)
        self.k = int(preimages)
        self.N = self.k + 3
        self.M = 1
        self.window = window or Window(t0=0.25, a0=float(b) * 1e-3)
        self.dps = dps
        with mp.workdps(dps):
            self._build_reference()
        self.check_eigen_condition()

    # chart per parameter, cached on exact values
    @lru_cache(maxsize=256)
    def _chart(self, bH, aH):
        return _NormalForm(aH, bH)

    def henon_params(self, t, a):
        return self.b * (1 + t), self.a_ref + a

    def chart(self, t, a):
        t = t.v if isinstance(t, Jet) else t
        a = a.v if isinstance(a, Jet) else a
        bH, aH = self.henon_params(mp.mpf(t), mp.mpf(a))
        return self._chart(bH, aH)

    def _build_reference(self):
        # one-dimensional preimage chain of the fold: -sqrt(2) <- -sqrt(2 + sqrt 2) <- ...
        y = -mp.sqrt(2)
        for _ in range(self.k):
            y = -mp.sqrt(2 - y)
        self._y_target = y
        a_H = mp.mpf(2)
        self.s_u = self.s_v = mp.mpf(1)
        self.a_ref = mp.mpf(0)

        def tangency_height(aH):
            self.a_ref = aH
            self._chart.cache_clear()
            nf = self.chart(0, 0)
            v0 = self._unstable_coordinate_of_height(nf, self._y_target)
            self.s_v = v0
            self.s_u = mp.mpf(1)
            cx, cy = UnfoldingModel.critical_point(self, mp.mpf(0), mp.mpf(0))
            X, Y = self.glue(cx, cy, mp.mpf(0), mp.mpf(0))
            return X, Y, cy

        a0, a1 = a_H, a_H + mp.mpf("1e-4")
        f0 = tangency_height(a0)[1]
        f1 = tangency_height(a1)[1]
        for _ in range(60):
            a2 = a1 - f1 * (a1 - a0) / (f1 - f0)
            a0, f0 = a1, f1
            a1 = a2
            f1 = tangency_height(a1)[1]
            if abs(f1) < mp.mpf(10) ** (-(mp.mp.dps - 10)):
                break
        else:
            raise NumericFailure("tangency parameter a(b) not found")
        X, Y, cy = tangency_height(a1)
        # freeze scales so that c = (0, 1) and z = (1, 0) at the reference parameter
        self.s_v = self.s_v * cy
        self.s_u = X
        self._chart.cache_clear()

    @staticmethod
    def _unstable_coordinate_of_height(nf, y_target):
        # point on the local unstable manifold whose y-coordinate equals y_target
        v = (y_target - nf.p[1]) / nf.coef[(0, 1)][1]
        for _ in range(50):
            _, y = nf(0, v)
            _, _, _, dyv = nf.jacobian(0, v)
            step = (y - y_target) / dyv
            v -= step
            if abs(step) < mp.mpf(10) ** (-(mp.mp.dps - 6)):
                break
        return v

    def lam(self, t, a):
        return self.chart(t, a).lam

    def mu(self, t, a):
        return self.chart(t, a).mu

    def _fd(self, fn, t, a):
        h = mp.mpf(10) ** (-(mp.mp.dps // 3))
        return ((fn(t + h, a) - fn(t - h, a)) / (2 * h), (fn(t, a + h) - fn(t, a - h)) / (2 * h))

    def dlam(self, t, a):
        return self._fd(self.lam, mp.mpf(t), mp.mpf(a))

    def dmu(self, t, a):
        return self._fd(self.mu, mp.mpf(t), mp.mpf(a))

    def to_plane(self, x, y, t, a):
        return self.chart(t, a)(x * self.s_u, y * self.s_v)

    def from_plane(self, X, Y, t, a):
        u, v = self.chart(t, a).inverse(X, Y)
        return u / self.s_u, v / self.s_v

    def glue(self, x, y, t, a):
        bH, aH = self.henon_params(mp.mpf(t), mp.mpf(a))
        X, Y = self.to_plane(x, y, t, a)
        for _ in range(self.N):
            X, Y = henon_map(X, Y, aH, bH)
        return self.from_plane(X, Y, t, a)

    def transit(self, x, y, t, a):
        raise NumericFailure("the Henon backend does not construct a transversal loop through q2")

    def seed_stable(self, x, t, a):
        raise NumericFailure("the Henon backend does not construct a transversal loop through q2")

    def describe(self):
        d = super().describe()
        d.update(henon_b=float(self.b), a_ref=float(self.a_ref), preimages=self.k)
        return d


def make_henon_model(b, preimages=3, window: Window | None = None) -> HenonModel:
    return HenonModel(b, preimages=preimages, window=window)


# ---------------------------------------------------------------------------
# theta selection


@dataclass(frozen=True)
class ThetaSelection:
    theta: float
    alpha: float
    theta0: float
    theta1: float
    checks: dict = field(default_factory=dict, compare=False)

    def theta_n(self, n: int) -> int:
        return int(math.floor(self.theta * n + 1e-12))

    def alpha_n(self, n: int, lam: float, mu: float) -> float:
        """alpha evaluated with the realised integer iterate count floor(theta n)."""
        th = self.theta_n(n) / n
        return math.log(lam ** (2 * th) * mu**3) / math.log(mu)


def theta_inequalities(model: UnfoldingModel, theta: float) -> dict:
    """Evaluate every inequality that theta must satisfy; values > 0 mean satisfied."""
    lmin, lmax, mmin, mmax = model.eigen_extremes()
    th0 = 4 / 3 * math.log(mmax) / math.log(1 / lmax)
    th1 = 3 / 2 * math.log(mmin) / math.log(1 / lmin)
    sign_margin = math.inf
    tangency_margin = math.inf
    for t, a in model.window_samples():
        tt, aa = mp.mpf(t), mp.mpf(a)
        lam, mu = float(model.lam(tt, aa)), float(model.mu(tt, aa))
        dl, dm = model.dlam(tt, aa)[0], model.dmu(tt, aa)[0]
        sign_margin = min(sign_margin, theta / lam * float(dl) + float(dm) / mu)
        alpha = math.log(lam ** (2 * theta) * mu**3) / math.log(mu)
        tangency_margin = min(
            tangency_margin,
            theta * math.log(lam) + (1 + alpha) * math.log(mu) - alpha * math.log(lam),
        )
    return {
        "expansion (lambda_min^(2 theta) mu_min^3 > 1)": 2 * theta * math.log(lmin) + 3 * math.log(mmin),
        "contraction (lambda_max^(3 theta) mu_max^4 < 1)": -(3 * theta * math.log(lmax) + 4 * math.log(mmax)),
        "bracket (theta0 < theta < theta1 < 1/2)": min(theta - th0, th1 - theta, 0.5 - th1),
        "sign (theta dlambda/lambda + dmu/mu > 0)": sign_margin,
        "alpha (lambda^theta mu^(1+alpha) > lambda^alpha)": tangency_margin,
    }, th0, th1


def select_theta(model: UnfoldingModel, override: float | None = None, grid: int = 10_000) -> ThetaSelection:
    model.check_eigen_condition()
    lmin, lmax, mmin, mmax = model.eigen_extremes()
    th0 = 4 / 3 * math.log(mmax) / math.log(1 / lmax)
    th1 = 3 / 2 * math.log(mmin) / math.log(1 / lmin)
    lam_c = float(model.lam(mp.mpf(0), mp.mpf(0)))
    mu_c = float(model.mu(mp.mpf(0), mp.mpf(0)))

    def pack(theta, checks):
        alpha = math.log(lam_c ** (2 * theta) * mu_c**3) / math.log(mu_c)
        if not 0 < alpha < 1:
            raise ValidationError(f"alpha = {alpha:.4g} outside (0, 1)")
        return ThetaSelection(theta, alpha, th0, th1, checks)

    if override is not None:
        checks, _, _ = theta_inequalities(model, override)
        bad = [k for k, v in checks.items() if not v > 0]
        if bad:
            raise ValidationError(f"theta = {override} violates: {', '.join(bad)}")
        return pack(override, checks)
    if not th0 < th1:
        raise ValidationError(f"empty theta bracket: theta0 = {th0:.4g} >= theta1 = {th1:.4g}")
    for theta in np.linspace(th0, th1, grid + 2)[1:-1]:
        checks, _, _ = theta_inequalities(model, float(theta))
        if all(v > 0 for v in checks.values()):
            return pack(float(theta), checks)
    checks, _, _ = theta_inequalities(model, 0.5 * (th0 + th1))
    bad = [k for k, v in checks.items() if not v > 0]
    raise ValidationError(f"no feasible theta on the grid; at the bracket midpoint: {', '.join(bad)}")


# ---------------------------------------------------------------------------
# configuration


def model_from_config(cfg: dict) -> UnfoldingModel:
    backend = cfg.get("backend", "ideal")
    w = cfg.get("window", {})
    if backend == "henon":
        window = Window(**w) if w else None
        return make_henon_model(cfg.get("henon_b", 0.001), window=window)
    if backend != "ideal":
        raise ValidationError(f"unknown backend {backend!r}")
    g = dict(cfg.get("gluing", {}))
    gluing = GluingMap(**{k: float(v) for k, v in g.items()})
    transit = TransitMap(**{k: float(v) for k, v in cfg.get("transit", {}).items()})
    return make_ideal_model(
        float(cfg.get("lambda0", 0.01)), float(cfg.get("mu0", 3.0)), gluing,
        int(cfg.get("N", 1)), int(cfg.get("M", 1)), Window(**w) if w else Window(), transit,
    )


def with_window(model: IdealModel, window: Window) -> IdealModel:
    return make_ideal_model(model.lambda0, model.mu0, model.gluing, model.N, model.M, window,
                            model.transit_map)


__all__ = [
    "Window", "Params", "GluingMap", "TransitMap", "UnfoldingModel", "IdealModel", "HenonModel",
    "ThetaSelection", "make_ideal_model", "make_henon_model", "select_theta", "theta_inequalities",
    "henon_map", "henon_saddle", "henon_eigen", "henon_jacobian", "logistic_core_fixed_points",
    "model_from_config", "with_window", "replace",
]
