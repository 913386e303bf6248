"""Finite Collet-Eckmann certificates: cone growth along an orbit segment and the induction checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .critical_orbit import trace_loop
from .errors import AssertionFailure, NumericFailure, ValidationError
from .family_models import Params, ThetaSelection, UnfoldingModel
from .jets import Jet
from .symbolic_dynamics import C0_PIECE, H0_PIECE, Q_PIECE

CONE_DIRECTIONS = 64


@dataclass(frozen=True)
class ConeSpec:
    cone_angle: float = 0.2
    C_const: float = 0.01
    rho: float = 1.05

    def __post_init__(self):
        if not 0 < self.C_const < 1:
            raise ValidationError("cone constant C must lie in (0, 1)")
        if not self.rho > 1:
            raise ValidationError("growth rate rho must exceed 1")
        if not 0 < self.cone_angle < math.pi / 2:
            raise ValidationError("cone angle must lie in (0, pi/2)")

    def validate(self, lam, mu, theta):
        """Both admissibility inequalities for the given saddle; raises on failure."""
        lam, mu = float(lam), float(mu)
        growth = lam ** theta * mu * mu
        checks = {
            "cos_phi_gt_rho_over_mu": math.cos(self.cone_angle) > self.rho / mu,
            "rho_lt_growth": 1 < self.rho < growth,
            "growth_lt_mu": growth < mu,
        }
        if not all(checks.values()):
            raise ValidationError(f"cone constants inadmissible: {checks}")
        return checks

    def directions(self, count=CONE_DIRECTIONS):
        """Unit vectors at angles within the cone about e2, both boundary rays included."""
        phis = list(np.linspace(-self.cone_angle, self.cone_angle, count + 2))
        return [(mp.sin(mp.mpf(p)), mp.cos(mp.mpf(p))) for p in phis]

    def contains(self, v):
        """v lies in the cone about +-e2 of half-angle phi."""
        vx, vy = v
        norm = mp.sqrt(vx * vx + vy * vy)
        return norm > 0 and abs(vy) >= mp.cos(mp.mpf(self.cone_angle)) * norm * (1 - mp.mpf(10) ** -12)

    def to_dict(self):
        return {"cone_angle": self.cone_angle, "C": self.C_const, "rho": self.rho}


def default_cone(model: UnfoldingModel | None = None, theta: ThetaSelection | None = None) -> ConeSpec:
    cone = ConeSpec()
    if model is not None and theta is not None:
        z = mp.mpf(0)
        cone.validate(model.lam(z, z), model.mu(z, z), theta.theta)
    return cone


# ---------------------------------------------------------------------------
# orbits with derivatives


def _letter_for(point, pieces):
    x, y = point
    for letter, box in pieces:
        if box.contains(x, y):
            return letter
    return None


def _step_map(model, t, a, letter):
    if letter == "q":
        return lambda x, y: model.linear(x, y, t, a)
    if letter == "c":
        return lambda x, y: model.glue(x, y, t, a)
    if letter == "h":
        return lambda x, y: model.transit(x, y, t, a)
    raise ValidationError(f"unknown piece letter {letter!r}")


def _jac(fn, x, y):
    X1, Y1 = fn(Jet(x, 1, 0), y)
    X2, Y2 = fn(x, Jet(y, 1, 0))
    d = lambda v: v.d1 if isinstance(v, Jet) else mp.mpf(0)
    return mp.matrix([[d(X1), d(X2)], [d(Y1), d(Y2)]])


def orbit_with_jacobians(model, params: Params, x, T, itinerary=None, pieces=None):
    """Points x_0..x_T, the one-step Jacobians and the letters used.

    Without an itinerary each step uses the first-generation piece containing
    the current point; leaving every piece is an orbit escape.
    """
    t, a = mp.mpf(params.t), mp.mpf(params.a)
    pieces = pieces or [("q", Q_PIECE), ("c", C0_PIECE), ("h", H0_PIECE)]
    pts, jacs, letters = [(mp.mpf(x[0]), mp.mpf(x[1]))], [], []
    for s in range(T):
        letter = itinerary[s] if itinerary is not None else _letter_for(pts[-1], pieces)
        if letter is None:
            raise NumericFailure(f"orbit escaped every piece at step {s}")
        fn = _step_map(model, t, a, letter)
        jacs.append(_jac(fn, *pts[-1]))
        pts.append(tuple(fn(*pts[-1])))
        letters.append(letter)
    return pts, jacs, "".join(letters)


def composed_jacobian(model, params: Params, x, itinerary):
    """One-shot Jacobian of the composed map, by pushing first-order jets through all steps."""
    t, a = mp.mpf(params.t), mp.mpf(params.a)
    cols = []
    for seed in ((Jet(mp.mpf(x[0]), 1, 0), mp.mpf(x[1])), (mp.mpf(x[0]), Jet(mp.mpf(x[1]), 1, 0))):
        p = seed
        for letter in itinerary:
            p = _step_map(model, t, a, letter)(*p)
        cols.append([v.d1 if isinstance(v, Jet) else mp.mpf(0) for v in p])
    return mp.matrix([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])


@dataclass
class CEReport:
    T: int
    worst_margin: object
    worst_at: tuple
    cone_return: bool
    vector_field_X: list
    itinerary: str
    cone: ConeSpec
    growth_log10: list = field(default_factory=list)

    @property
    def valid(self):
        return self.worst_margin >= 1 and self.cone_return

    def to_dict(self):
        return {"T": self.T, "worst_margin": float(self.worst_margin), "worst_at": list(self.worst_at),
                "cone_return": self.cone_return, "valid": self.valid, "itinerary": self.itinerary,
                "cone": self.cone.to_dict(),
                "vector_field_X": [[float(u), float(v)] for u, v in self.vector_field_X]}


def verify_tce(model, theta, cone: ConeSpec, x, T: int, samples: int = CONE_DIRECTIONS,
               params: Params | None = None, itinerary=None, dps=None) -> CEReport:
    """Worst ratio |Df^s v| / (C rho^s |v|) over the cone at x and all s <= T."""
    if T < 0:
        raise ValidationError("horizon T must be non-negative")
    params = params or Params(0.0, 0.0)
    with mp.workdps(dps or max(30, T + 30)):
        pts, jacs, word = orbit_with_jacobians(model, params, x, T, itinerary)
        C, rho = mp.mpf(cone.C_const), mp.mpf(cone.rho)
        worst, where = mp.inf, (None, None)
        ret = True
        growth = []
        for idx, v0 in enumerate(cone.directions(samples)):
            v = mp.matrix([v0[0], v0[1]])
            for s in range(T + 1):
                if s:
                    v = jacs[s - 1] * v
                r = mp.norm(v) / (C * rho ** s)
                if r < worst:
                    worst, where = r, (idx, s)
                if idx == 0:
                    growth.append(float(mp.log10(mp.norm(v))))
            ret = ret and cone.contains((v[0], v[1]))
        field_X = []
        if T > 0:
            J = mp.eye(2)
            for m in jacs:
                J = m * J
            w = mp.lu_solve(J, mp.matrix([1, 0]))
            field_X.append((w[0] / mp.norm(w), w[1] / mp.norm(w)))
        return CEReport(T, worst, where, ret, field_X, word, cone, growth)


def next_T(T, n, N, n0, M, upper):
    """Horizon of the next generation: T + n + (N - T) + T + n0 + M + upper."""
    return T + n + (N - T) + T + n0 + M + upper


def generation_two_point(model, theta, params: Params, n, n0):
    """Starting point of the second-generation certificate and its itinerary.

    The point is z1, where the loop leaves the gluing piece for the second
    time; from there the orbit makes n linear steps, one gluing, n - n0 linear
    steps, the transit and finally ``upper`` linear steps back to the saddle.
    """
    with mp.workdps(model.precision_hint(n, theta.theta)):
        tr = trace_loop(model, theta, params, n)
        z1 = tr.maps.at_z1(tr.s_values["s3"])
        return (mp.mpf(z1[0]), mp.mpf(z1[1])), tr


def certify_generation_two(model, theta, params: Params, n, n0, upper, cone: ConeSpec | None = None,
                           samples=CONE_DIRECTIONS):
    cone = cone or default_cone(model, theta)
    z1, tr = generation_two_point(model, theta, params, n, n0)
    n_tail = n - n0
    T = next_T(0, n, model.N, n_tail, model.M, upper)
    word = "q" * n + "c" * model.N + "q" * n_tail + "h" * model.M + "q" * upper
    report = verify_tce(model, theta, cone, z1, T, samples, params=params, itinerary=word,
                        dps=model.precision_hint(n, theta.theta))
    return report


# ---------------------------------------------------------------------------
# induction hypotheses


@dataclass
class HypothesisReport:
    K: float
    checks: dict
    failures: list

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {"K": self.K, "checks": self.checks, "failures": self.failures, "passed": self.passed}


def _grid(box, count):
    side = max(2, int(round(math.sqrt(count))))
    xs = np.linspace(float(box.x0), float(box.x1), side + 2)[1:-1]
    ys = np.linspace(float(box.y0), float(box.y1), side + 2)[1:-1]
    return [(mp.mpf(u), mp.mpf(v)) for u in xs for v in ys]


def check_induction_hypotheses(model, theta, cone: ConeSpec, partition_data=None, T: int = 0,
                               samples: int = 1000, K_max: float = 1e4, params: Params | None = None):
    """Sampled checks of linearity on Q, C2 bounds on C0 and H0, the critical-curve angle law,
    and cone growth and return on the piece feeding the gluing.

    ``partition_data`` may carry ``pieces`` (letter -> Box) and, for T > 0,
    ``cone_points`` with an ``itinerary`` of length T.
    """
    partition_data = partition_data or {}
    params = params or Params(0.0, 0.0)
    t, a = mp.mpf(params.t), mp.mpf(params.a)
    pieces = partition_data.get("pieces", {"q": Q_PIECE, "c": C0_PIECE, "h": H0_PIECE})
    failures, checks = [], {}
    ratios = []
    with mp.workdps(30):
        lam, mu = model.lam(t, a), model.mu(t, a)
        # linearity on Q
        lin_err = mp.mpf(0)
        for p in _grid(pieces["q"], 49):
            X, Y = model.linear(*p, t, a)
            J = _jac(lambda x, y: model.linear(x, y, t, a), *p)
            lin_err = max(lin_err, abs(X - lam * p[0]), abs(Y - mu * p[1]),
                          abs(J[0, 0] - lam), abs(J[1, 1] - mu), abs(J[0, 1]), abs(J[1, 0]))
        checks["IH_Q"] = float(lin_err)
        if lin_err > 1e-20:
            failures.append({"hypothesis": "IH_Q", "error": float(lin_err)})
        # C2 bounds for the gluing and the transit
        for name, letter in (("IH_C0(iii)", "c"), ("IH_H0", "h")):
            fn = _step_map(model, t, a, letter)
            bound = mp.mpf(0)
            for p in _grid(pieces[letter], 49):
                for var in (0, 1):
                    seed = (Jet(p[0], 1, 0), p[1]) if var == 0 else (p[0], Jet(p[1], 1, 0))
                    for comp in fn(*seed):
                        if isinstance(comp, Jet):
                            bound = max(bound, abs(comp.d1), abs(comp.d2))
            checks[name] = float(bound)
            ratios.append(float(bound))
            if not mp.isfinite(bound) or bound > K_max:
                failures.append({"hypothesis": name, "bound": float(bound)})
        # angle of D glue e2 against e1 versus the vertical distance to the critical curve
        lo, hi = mp.inf, mp.mpf(0)
        worst_pt = None
        for p in _grid(pieces["c"], samples):
            gy = model.gamma(p[0], t, a)
            dv = abs(p[1] - gy)
            if dv < mp.mpf("1e-6"):
                continue
            J = _jac(lambda x, y: model.glue(x, y, t, a), *p)
            ang = abs(mp.atan2(J[1, 1], J[0, 1]))
            ang = min(ang, mp.pi - ang)
            r = ang / dv
            if r < lo:
                lo, worst_pt = r, p
            hi = max(hi, r)
        checks["IH_C0(ii)"] = {"min_ratio": float(lo), "max_ratio": float(hi)}
        ratios += [float(hi), float(1 / lo) if lo > 0 else math.inf]
        if not lo > 1 / K_max:
            failures.append({"hypothesis": "IH_C0(ii)", "lower_ratio": float(lo),
                             "at": [float(worst_pt[0]), float(worst_pt[1])]})
    # cone growth and cone return on the piece feeding the gluing
    if T > 0:
        pts = partition_data.get("cone_points", [])
        word = partition_data.get("itinerary")
        ok = 0
        for p in pts:
            rep = verify_tce(model, theta, cone, p, T, 16, params=params, itinerary=word,
                             dps=partition_data.get("dps"))
            if rep.valid:
                ok += 1
            else:
                failures.append({"hypothesis": "IH_C(N-T)", "at": [float(p[0]), float(p[1])],
                                 "margin": float(rep.worst_margin), "cone_return": rep.cone_return})
        checks["IH_C(N-T)"] = {"points": len(pts), "valid": ok}
    else:
        checks["IH_C(N-T)"] = "T = 0: holds trivially"
    K = 2 * max(r for r in ratios if math.isfinite(r)) if any(math.isfinite(r) for r in ratios) else math.inf
    return HypothesisReport(K, checks, failures)


# ---------------------------------------------------------------------------
# the step inequalities of the induction


def transit_angle(model, t=0.0, a=0.0):
    """beta: angle between D(transit) e2 at q2 and e1."""
    t, a = mp.mpf(t), mp.mpf(a)
    q2 = model.q2(t, a)
    J = _jac(lambda x, y: model.transit(x, y, t, a), mp.mpf(q2[0]), mp.mpf(q2[1]))
    return float(abs(mp.atan2(J[1, 1], J[0, 1])))


def step_inequalities(K, cone: ConeSpec, lam, mu, theta, n, N, M, n0, T=0, beta=None, upper=None):
    """log10(lhs / rhs) for the sufficient inequalities P2..P7 (positive means satisfied)."""
    phi, rho = cone.cone_angle, cone.rho
    lam, mu = float(lam), float(mu)
    L = math.log10
    c = L(math.cos(phi))
    ltm = L(lam ** theta * mu)
    g2 = L(lam ** theta * mu * mu)
    out = {
        "P2": c + L(mu / rho),
        "P3": -L(K) + n * L(mu / rho) + c - (N - T) * L(rho),
        "P4": -2 * L(K) + c + n * L(mu / rho) - N * L(rho),
        "P5": -L(4) - 5 * L(K) + c + (n + 1) * L(mu / rho) + n * ltm - N * L(rho),
        "P6": -L(4) - 6 * L(K) + c + n0 * L(mu / rho) + n * (g2 - L(rho)) - (N + M) * L(rho),
    }
    if beta is not None:
        out["P7"] = -L(4) - 6 * L(K) + c + L(math.sin(beta / 2)) + (n0 + 1) * L(mu / rho) \
            + n * (g2 - L(rho)) - (N + M) * L(rho)
        if upper is not None:
            out["return_angle"] = L(math.tan(phi)) - (upper * L(lam / mu) + L(1 / math.tan(beta / 2)))
    return out


def step5_instance(K, cone: ConeSpec, lam, mu, theta, n, k, N):
    """lhs and rhs of (1/(4K^5)) cos(phi) (mu/rho)^(n+k) (lam^theta mu)^n >= rho^N."""
    lhs = (math.cos(cone.cone_angle) / (4 * K ** 5) * (mu / cone.rho) ** (n + k)
           * (lam ** theta * mu) ** n)
    return lhs, cone.rho ** N


def minimal_depth(K, cone, lam, mu, theta, N, M, beta=None, n_max=400):
    """Smallest n from which every step inequality holds for all larger n (with n0 = 0)."""
    last_bad = 0
    for n in range(1, n_max + 1):
        ok = step_inequalities(K, cone, lam, mu, theta, n, N, M, 0, beta=beta)
        if min(ok.values()) < 0:
            last_bad = n
    if last_bad == n_max:
        raise AssertionFailure("step inequalities fail up to the scan limit")
    return last_bad + 1


__all__ = ["ConeSpec", "default_cone", "CEReport", "verify_tce", "orbit_with_jacobians", "composed_jacobian",
           "next_T", "generation_two_point", "certify_generation_two", "HypothesisReport",
           "check_induction_hypotheses", "transit_angle", "step_inequalities", "step5_instance",
           "minimal_depth", "CONE_DIRECTIONS"]
