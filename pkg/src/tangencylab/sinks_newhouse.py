"""Sink strips, invariant boxes, Newhouse boxes and a box-counting estimate.

Near the return curve a_n the map F^(n+N) = G o L^n sends a thin box around
the critical value into itself and contracts it; the box and the strip of
parameters where this works are built here, then intersected with the
curves of secondary tangencies to produce nested parameter boxes whose maps
carry several sinks of different periods.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .critical_orbit import return_parameter
from .errors import AssertionFailure, NumericFailure, ValidationError
from .family_models import Params, ThetaSelection, UnfoldingModel
from .jets import Jet
from .tangency_continuation import (DerivedUnfolding, TangencyPoint, find_secondary_tangency, make_strip,
                                    solve_tangency_parameter)

BOUNDARY_SAMPLES = 256


def strip_quadratic_coefficient(model: UnfoldingModel, n: int, ts=(-1.0, 0.0, 1.0)) -> float:
    """Q~: the largest fold coefficient |d2Y/dy2|/2 at the critical point over the strip."""
    vals = []
    with mp.workdps(model.precision_hint(n)):
        for u in ts:
            t = mp.mpf(u) * model.window.t0
            a = return_parameter(model, n, t)
            vals.append(abs(model.measured_constants(t, a)["Q"]))
    return float(max(vals))


@dataclass
class SinkStrip:
    n: int
    eps0: float
    model: UnfoldingModel = field(repr=False)
    Q_tilde: float = 1.0

    @property
    def delta(self):
        return 1 / (4 * self.Q_tilde)

    def halfwidth(self, t):
        with mp.workdps(self.model.precision_hint(self.n)):
            an = return_parameter(self.model, self.n, t)
            return self.eps0 / self.model.mu(mp.mpf(t), an) ** (2 * self.n)

    def bounds(self, t):
        with mp.workdps(self.model.precision_hint(self.n)):
            t = mp.mpf(t)
            an = return_parameter(self.model, self.n, t)
            w = self.eps0 / self.model.mu(t, an) ** (2 * self.n)
            return an - w, an + w

    def contains(self, t, a):
        lo, hi = self.bounds(t)
        return lo <= a <= hi


def sink_strip(model, n, Q_tilde=None) -> SinkStrip:
    Q_tilde = Q_tilde or strip_quadratic_coefficient(model, n)
    return SinkStrip(n, 1 / (32 * Q_tilde), model, Q_tilde)


@dataclass
class SinkCertificate:
    n: int
    params: tuple
    center: tuple
    halfwidths: tuple
    period: int
    periodic_point: tuple
    spectral_radius: float
    boundary_margin: float
    y_margin: float
    jacobian: list
    samples: int
    in_strip: bool
    escaped: int = 0

    @property
    def valid(self):
        return self.escaped == 0 and self.boundary_margin > 0 and self.spectral_radius < 1

    def to_dict(self):
        return {"n": self.n, "params": [float(v) for v in self.params],
                "center": [float(v) for v in self.center], "halfwidths": [float(v) for v in self.halfwidths],
                "period": self.period, "periodic_point": [float(v) for v in self.periodic_point],
                "spectral_radius": self.spectral_radius, "boundary_margin": self.boundary_margin,
                "y_margin": self.y_margin, "jacobian": self.jacobian, "samples": self.samples,
                "in_strip": self.in_strip, "valid": self.valid}


def _return_map(model, t, a, n):
    def R(x, y):
        x, y = model.linear(x, y, t, a, n)
        return model.glue(x, y, t, a)
    return R


def _jacobian(R, x, y):
    X1, Y1 = R(Jet(x, 1, 0), y)
    X2, Y2 = R(x, Jet(y, 1, 0))
    d = lambda v: v.d1 if isinstance(v, Jet) else mp.mpf(0)
    return mp.matrix([[d(X1), d(X2)], [d(Y1), d(Y2)]])


def _box_samples(cx, cy, hx, hy, count, fold_heights=None):
    """Boundary points of the box plus the fold locus inside it."""
    us = [mp.mpf(u) for u in np.linspace(-1, 1, count)]
    pts = []
    for u in us:
        pts += [(cx + u * hx, cy - hy), (cx + u * hx, cy + hy), (cx - hx, cy + u * hy), (cx + hx, cy + u * hy)]
    if fold_heights is not None:
        for u in us:
            x = cx + u * hx
            y = fold_heights(x)
            if abs(y - cy) <= hy:
                pts.append((x, y))
    return pts


def certify_sink(model: UnfoldingModel, theta: ThetaSelection | None, params: Params, n: int,
                 samples=BOUNDARY_SAMPLES, Q_tilde=None, raise_on_failure=True, max_doublings=3) -> SinkCertificate:
    """Invariant box B^n_delta for F^(n+N), its periodic point and the contraction there."""
    if n < 1:
        raise ValidationError("sink depth must be positive")
    Q_tilde = Q_tilde or strip_quadratic_coefficient(model, n)
    delta, eps0 = 1 / (4 * Q_tilde), 1 / (32 * Q_tilde)
    period = n + model.N
    with mp.workdps(model.precision_hint(n)):
        t, a = mp.mpf(params.t), mp.mpf(params.a)
        an = return_parameter(model, n, t)
        mu_n = model.mu(t, an)
        zx, zy = model.critical_value(t, an)
        hx, hy = mp.mpf(1) / 3, delta / mu_n ** (2 * n)
        in_strip = abs(a - an) <= eps0 / mu_n ** (2 * n)
        R = _return_map(model, t, a, n)
        lam, mu = model.lam(t, a), model.mu(t, a)
        # points whose L^n image lies on the critical curve fold the box
        fold = lambda x: model.gamma(x * lam**n, t, a) / mu**n

        def margins(count):
            mx = my = mp.inf
            escaped = 0
            for x, y in _box_samples(zx, zy, hx, hy, count, fold):
                X, Y = R(x, y)
                ex, ey = hx - abs(X - zx), hy - abs(Y - zy)
                if ex <= 0 or ey <= 0:
                    escaped += 1
                mx, my = min(mx, ex), min(my, ey)
            return mx, my, escaped

        count = samples
        mx, my, escaped = margins(count)
        for _ in range(max_doublings):
            # refine until the margin stabilises
            count *= 2
            mx2, my2, esc2 = margins(count)
            stable = abs(my2 - my) <= mp.mpf("0.01") * abs(my) and abs(mx2 - mx) <= mp.mpf("0.01") * abs(mx)
            mx, my, escaped = min(mx, mx2), min(my, my2), max(escaped, esc2)
            if stable:
                break
        # fixed point of the return map by 2-D Newton from the box centre
        px, py = zx, zy
        converged = False
        for _ in range(100):
            X, Y = R(px, py)
            J = _jacobian(R, px, py) - mp.eye(2)
            step = mp.lu_solve(J, mp.matrix([X - px, Y - py]))
            px, py = px - step[0], py - step[1]
            if abs(step[0]) <= mp.mpf(10) ** (-(mp.mp.dps - 10)) and \
                    abs(step[1]) <= hy * mp.mpf(10) ** (-(mp.mp.dps // 2)):
                converged = True
                break
        if not converged:
            if raise_on_failure:
                raise NumericFailure(f"periodic point Newton did not converge at n={n}")
            escaped += 1
            px, py = zx, zy
        elif abs(px - zx) > hx or abs(py - zy) > hy:
            if raise_on_failure:
                raise AssertionFailure("periodic point outside the invariant box")
            escaped += 1
        D = _jacobian(R, px, py)
        eig = mp.eig(D)[0]
        rho = float(max(abs(e) for e in eig)) if converged else math.nan
        # minimal period: no proper divisor d of n+N returns the point
        for d in range(1, period if converged else 1):
            if period % d == 0 and d <= n:
                qx, qy = model.linear(px, py, t, a, d)
                if abs(qx - px) <= mp.mpf(10) ** (-20) and abs(qy - py) <= hy * mp.mpf(10) ** (-20):
                    raise AssertionFailure(f"periodic point has smaller period {d}")
        cert = SinkCertificate(n, (t, a), (zx, zy), (hx, hy), period, (px, py), rho,
                               float(min(mx / hx, my / hy)), float(my), [[float(D[i, j]) for j in range(2)] for i in range(2)],
                               count, bool(in_strip), escaped)
    if raise_on_failure:
        if escaped:
            raise AssertionFailure(f"{escaped} sample points escape B^{n}_delta (margin {cert.boundary_margin:.3g})")
        if rho >= 1:
            raise AssertionFailure(f"spectral radius {rho:.4g} >= 1")
    return cert


def sink_scan(model, theta, ns, t=0.0, offsets=(0.0,), samples=BOUNDARY_SAMPLES):
    """Certificates along a_n at fixed t; ``offsets`` are in units of the strip half-width."""
    out = []
    for n in ns:
        strip = sink_strip(model, n)
        for off in offsets:
            with mp.workdps(model.precision_hint(n)):
                tt = mp.mpf(t)
                a = return_parameter(model, n, tt) + mp.mpf(off) * strip.halfwidth(tt)
            out.append(certify_sink(model, theta, Params(tt, a), n, samples, strip.Q_tilde,
                                    raise_on_failure=False))
    return out


# ---------------------------------------------------------------------------
# Newhouse boxes


@dataclass
class NewhouseBox:
    generation: int
    labels: list                  # (n, n0) at each generation
    t_window: tuple
    t_star: object
    eps0: float
    certificates: list
    curve: list = field(default_factory=list)     # (t, b(t)) samples across the window
    model: UnfoldingModel = field(default=None, repr=False)
    parent: "NewhouseBox | None" = field(default=None, repr=False)

    @property
    def n(self):
        return self.labels[-1][0]

    @property
    def width(self):
        return float(self.t_window[1] - self.t_window[0])

    def a_bounds(self, t):
        with mp.workdps(self.model.precision_hint(self.n)):
            t = mp.mpf(t)
            an = return_parameter(self.model, self.n, t)
            w = self.eps0 / self.model.mu(t, an) ** (2 * self.n)
            return an - w, an + w

    def periods(self):
        return sorted({c.period for c in self.certificates})

    def to_dict(self):
        return {"generation": self.generation, "labels": self.labels,
                "t_window": [float(v) for v in self.t_window], "t_star": float(self.t_star),
                "eps0": self.eps0, "periods": self.periods(),
                "certificates": [c.to_dict() for c in self.certificates],
                "curve": [[float(t), float(b)] for t, b in self.curve]}


def _offset_solver(model, theta, n, n0, seed_t, seed_a):
    """t -> b(t) - a_n(t) with the corrector warm-started from the last solution."""
    state = {"t": mp.mpf(seed_t), "off": mp.mpf(seed_a) - return_parameter(model, n, seed_t)}

    def offset(t):
        t = mp.mpf(t)
        an = return_parameter(model, n, t)
        b = solve_tangency_parameter(model, theta, n, n0, t, an + state["off"])
        state["t"], state["off"] = t, b - an
        return b - an

    return offset


def newhouse_box(model, theta, point: TangencyPoint, Q_tilde=None, samples=64, parent=None,
                 generation=1, labels=None, extra_certify=None) -> NewhouseBox:
    """P_{n,n0}: the t-window where b_{n,n0} stays inside the sink strip A_n."""
    n, n0 = point.n, point.n0
    Q_tilde = Q_tilde or strip_quadratic_coefficient(model, n)
    eps0 = 1 / (32 * Q_tilde)
    with mp.workdps(model.precision_hint(n, theta.theta)):
        off = _offset_solver(model, theta, n, n0, point.t, point.a)
        t_s = mp.mpf(point.t)
        mu_n = model.mu(t_s, point.a)
        w = eps0 / mu_n ** (2 * n)
        h = mp.mpf(10) ** (-(mp.mp.dps // 3))
        slope = (off(t_s + h) - off(t_s - h)) / (2 * h)
        if slope == 0:
            raise NumericFailure("tangency curve parallel to a_n: no transversal crossing")
        ends = []
        for sign in (-1, 1):
            target = sign * w
            guess = t_s + target / slope
            root = mp.findroot(lambda t: off(t) - target, (guess, guess * (1 + mp.mpf(10) ** -8) + mp.mpf(10) ** -30),
                               solver="secant", verify=False)
            ends.append(root)
        t_lo, t_hi = min(ends), max(ends)
        curve = []
        for u in np.linspace(0, 1, 5):
            t = t_lo + (t_hi - t_lo) * mp.mpf(u)
            curve.append((t, return_parameter(model, n, t) + off(t)))
        certs = []
        for t, b in [curve[0], curve[2], curve[-1]]:
            certs.append(certify_sink(model, theta, Params(t, b), n, samples, Q_tilde))
        if extra_certify is not None:
            certs += extra_certify(curve)
    return NewhouseBox(generation, (labels or []) + [(n, n0)], (t_lo, t_hi), t_s, eps0, certs, curve,
                       model, parent)


def newhouse_recursion(model, theta, depth=1, budget=40, ns=range(12, 19), t_starts=None, kappa=2,
                       samples=64, child_start=None):
    """Generation-g Newhouse boxes.

    Generation 1 intersects each b_{n,n0} with A_n.  Generation 2 re-reads the
    family near b_{n,n0} as a :class:`DerivedUnfolding` and searches child
    depths n' >= 2(n+N) for a secondary tangency inside the parent t-window;
    ``budget`` caps the number of child depths tried.
    """
    if depth < 1:
        raise ValidationError("generation depth must be at least 1")
    t_starts = list(t_starts) if t_starts is not None else [-0.1, -0.08, -0.06]
    boxes = [[]]
    for n in ns:
        strip = make_strip(model, theta, n, 0)
        for ts in t_starts:
            try:
                p = find_secondary_tangency(model, theta, strip, ts, kappa)
            except NumericFailure:
                continue
            boxes[0].append(newhouse_box(model, theta, p, samples=samples))
            break
    if not boxes[0]:
        raise NumericFailure("no generation-1 Newhouse box found")
    for g in range(2, depth + 1):
        level = []
        tries = budget
        for parent in boxes[-1]:
            child = _child_box(model, theta, parent, g, tries, kappa, samples, child_start)
            if child is not None:
                level.append(child)
        if not level:
            raise NumericFailure(f"budget exhausted before any generation-{g} box was found")
        boxes.append(level)
    for level in boxes:
        if not boxes_disjoint(level):
            raise AssertionFailure("Newhouse boxes of one generation overlap")
    return boxes


def _child_box(model, theta, parent: NewhouseBox, g, budget, kappa, samples, child_start=None):
    root = parent.model
    n, n0 = parent.labels[-1]
    derived = DerivedUnfolding(root, theta, n, n0, t_ref=parent.t_star,
                               a_ref=parent.curve[len(parent.curve) // 2][1])
    t_lo, t_hi = parent.t_window
    first = child_start or 2 * (n + root.N)
    for n_child in range(first, first + budget):
        strip = make_strip(derived, theta, n_child, 0)
        try:
            p = find_secondary_tangency(derived, theta, strip, t_lo, kappa, step=(t_hi - t_lo) / 8, t_stop=t_hi)
        except NumericFailure:
            continue

        def parent_sinks(curve):
            certs = []
            for t, b in curve[::2]:
                with mp.workdps(derived.precision_hint(n_child)):
                    a_par = derived.underlying_parameter(t, b)
                certs.append(certify_sink(root, theta, Params(t, a_par), n, samples))
            return certs

        return newhouse_box(derived, theta, p, samples=samples, parent=parent, generation=g,
                            labels=list(parent.labels), extra_certify=parent_sinks)
    return None


def boxes_disjoint(boxes):
    ws = sorted((float(b.t_window[0]), float(b.t_window[1]), b) for b in boxes)
    for (l1, u1, b1), (l2, u2, b2) in zip(ws, ws[1:]):
        if l2 <= u1:
            # overlapping t-windows still separate if the a-ranges do not meet
            t = (l2 + min(u1, u2)) / 2
            lo1, hi1 = b1.a_bounds(t)
            lo2, hi2 = b2.a_bounds(t)
            if lo2 <= hi1 and lo1 <= hi2:
                return False
    return True


# ---------------------------------------------------------------------------
# box counting


def grid_cells_crossed(points, eps):
    """Number of eps-grid cells met by the polyline through ``points`` (mpf pairs).

    Along a segment monotone in both coordinates the count is the number of
    vertical plus horizontal grid lines crossed, plus one.
    """
    eps = mp.mpf(eps)
    total = 1
    for (t1, a1), (t2, a2) in zip(points, points[1:]):
        total += abs(int(mp.floor(t2 / eps)) - int(mp.floor(t1 / eps)))
        total += abs(int(mp.floor(a2 / eps)) - int(mp.floor(a1 / eps)))
    return total


@dataclass
class DimensionReport:
    log_inv_eps: list
    log_count: list
    slope: float
    intercept: float
    theoretical: float
    labels: list

    def to_dict(self):
        return {"log_inv_eps": self.log_inv_eps, "log_count": self.log_count, "slope": self.slope,
                "intercept": self.intercept, "theoretical": self.theoretical, "labels": self.labels}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["log_inv_eps", "log_count"])
            for x, y in zip(self.log_inv_eps, self.log_count):
                w.writerow([repr(x), repr(y)])


def theoretical_dimension_bound(model, theta) -> float:
    lam = float(model.lam(mp.mpf(0), mp.mpf(0)))
    mu = float(model.mu(mp.mpf(0), mp.mpf(0)))
    return theta.theta / 2 * math.log(1 / lam) / math.log(mu)


def nh_box_dimension(boxes, theta=None, eps_range=None) -> DimensionReport:
    """Covering counts of the tangency curves inside first-generation boxes.

    Each box is covered at its own vertical scale eps_n = eps0 mu^-2n; the
    slope of log N against log(1/eps) across depths estimates the dimension.
    """
    if len(boxes) < 2:
        raise ValidationError("insufficient scale range: need boxes at two or more depths")
    xs, ys, labels = [], [], []
    for b in boxes:
        with mp.workdps(b.model.precision_hint(b.n) + 20):
            t = b.t_star
            mu = b.model.mu(mp.mpf(t), mp.mpf(0))
            eps = mp.mpf(b.eps0) / mu ** (2 * b.n)
            count = grid_cells_crossed(b.curve, eps)
            xs.append(float(-mp.log(eps)))
            ys.append(math.log(count))
            labels.append(b.labels[-1])
    if eps_range is not None:
        keep = [i for i, x in enumerate(xs) if eps_range[0] <= math.exp(-x) <= eps_range[1]]
        xs, ys, labels = [xs[i] for i in keep], [ys[i] for i in keep], [labels[i] for i in keep]
    if len(xs) < 2 or (max(xs) - min(xs)) < 2 * math.log(10):
        raise ValidationError("insufficient scale range: eps must span at least two decades")
    slope, intercept = np.polyfit(xs, ys, 1)
    theo = theoretical_dimension_bound(boxes[0].model, theta) if theta is not None else math.nan
    return DimensionReport(xs, ys, float(slope), float(intercept), theo, labels)


def boxes_to_json(boxes):
    return json.dumps([[b.to_dict() for b in level] for level in boxes], indent=2)


__all__ = ["SinkStrip", "sink_strip", "SinkCertificate", "certify_sink", "sink_scan", "NewhouseBox",
           "newhouse_box", "newhouse_recursion", "boxes_disjoint", "grid_cells_crossed", "DimensionReport",
           "nh_box_dimension", "theoretical_dimension_bound", "strip_quadratic_coefficient", "boxes_to_json"]
