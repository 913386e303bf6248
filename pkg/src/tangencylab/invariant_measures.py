"""Push-forward of loop measures between consecutive directed graphs.

Measures live in the span of three loop measures: the unit mass at the saddle
vertex (``q``), unit mass on every vertex of the critical loop (``c``, total
mass N) and unit mass on every vertex of the transversal loop (``h``, total
mass M).  Probability measures are written in the vertex basis
``x * delta_c / N + y * delta_h / M + z * delta_q`` with x + y + z = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssertionFailure, ValidationError


@dataclass(frozen=True)
class MeasureVec:
    x: float
    y: float
    z: float
    basis_tag: str = "vertex"

    def __post_init__(self):
        if self.basis_tag not in ("vertex", "standard"):
            raise ValidationError("basis_tag must be 'vertex' or 'standard'")

    @property
    def coords(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self):
        return float(np.max(np.abs(self.coords)))

    def distance_to_saddle_mass(self):
        """|mu - delta_q| in the max norm of vertex coordinates."""
        v = self.to_vertex_coords()
        return float(max(abs(v[0]), abs(v[1]), abs(v[2] - 1)))

    def to_vertex_coords(self):
        if self.basis_tag != "vertex":
            raise ValidationError("convert with to_vertex(dims) first")
        return self.coords

    def on_simplex(self, tol=1e-12):
        v = self.coords
        return bool(np.all(v >= -1e-14) and abs(v.sum() - 1) <= tol)

    def loop_masses(self, N, M):
        """Masses of the saddle vertex, of the c-loop minus q and of the h-loop minus q."""
        x, y, z = self.to_vertex_coords()
        return {"q": x / N + y / M + z, "c_minus_q": x * (N - 1) / N, "h_minus_q": y * (M - 1) / M}


def saddle_mass() -> MeasureVec:
    return MeasureVec(0.0, 0.0, 1.0)


def critical_loop_vertex() -> MeasureVec:
    return MeasureVec(1.0, 0.0, 0.0)


def transversal_loop_vertex() -> MeasureVec:
    return MeasureVec(0.0, 1.0, 0.0)


def vertex_to_standard(mu: MeasureVec, dims) -> np.ndarray:
    """Vertex coordinates -> (q, c, h) coefficients in the standard basis."""
    N, M = dims
    x, y, z = mu.to_vertex_coords()
    return np.array([z, x / N, y / M])


def standard_to_vertex(vec, dims) -> MeasureVec:
    N, M = dims
    q, c, h = vec
    return MeasureVec(float(c * N), float(h * M), float(q))


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray

    def __matmul__(self, v):
        return self.entries @ v


def transfer_matrix(winding) -> TransferMatrix:
    """Matrix of the push-forward for the winding counts (lower, theta_n, n, n_tail, upper)."""
    lower, theta_n, n, tail, upper = (int(v) for v in winding)
    if min(lower, theta_n, n, tail, upper) < 0:
        raise ValidationError("winding counts must be non-negative")
    return TransferMatrix(np.array([[1, lower + theta_n + n + tail + upper, lower + upper],
                                    [0, 3, 0],
                                    [0, 1, 1]], dtype=np.int64))


def transfer_from_words(c_word: str, h_word: str) -> TransferMatrix:
    """Same matrix read off arbitrary windings: count the prime loops in each word."""
    cols = [[1, 0, 0]]
    for word in (c_word, h_word):
        cols.append([word.count("q"), word.count("c"), word.count("h")])
    return TransferMatrix(np.array(cols, dtype=np.int64).T)


def source_dims(winding, target_dims):
    """Loop lengths of the finer graph implied by the winding counts."""
    lower, theta_n, n, tail, upper = winding
    N, M = target_dims
    return (lower + N + theta_n + N + n + N + tail + M + upper, lower + M + upper)


def push_simplex(mu: MeasureVec, W: TransferMatrix, source: tuple, target: tuple) -> MeasureVec:
    if not mu.on_simplex(1e-9):
        raise ValidationError(f"measure {mu} is not on the source simplex")
    std = vertex_to_standard(mu, source)
    out = W.entries.astype(float) @ std
    mass = out[0] + out[1] * target[0] + out[2] * target[1]
    if abs(mass - 1) > 1e-12:
        raise AssertionFailure(f"push-forward changed total mass by {mass - 1:.3e}")
    res = standard_to_vertex(out / mass, target)
    if np.any(res.coords < -1e-14):
        raise AssertionFailure(f"negative coordinate after push-forward: {res}")
    return res


def random_simplex_points(count: int, seed: int = 0):
    """Uniform (Dirichlet(1,1,1)) samples from the gaps of two sorted uniforms."""
    rng = np.random.default_rng(seed)
    u = np.sort(rng.random((count, 2)), axis=1)
    pts = np.column_stack([u[:, 0], u[:, 1] - u[:, 0], 1 - u[:, 1]])
    return [MeasureVec(*p) for p in pts]


def standard_chain(levels: int, base=(3, 3), lower=1, upper=1, theta_frac=0.33):
    """A chain of windings whose loop lengths grow by at least the factor 32 at each level.

    Returns (dims_chain, windings_chain) with dims_chain[g] the lengths of graph g
    (coarsest first) and windings_chain[g] the morphism from graph g+1 to graph g.
    """
    dims = [tuple(base)]
    windings = []
    for _ in range(levels):
        N, M = dims[-1]
        big = 32 * max(N, M)
        # pick the loop depth so both new lengths reach the 32x threshold
        upper_g = max(upper, big - lower - M)
        n = max(1, big)
        theta_n = max(1, int(theta_frac * n))
        w = (lower, theta_n, n, max(1, n // 4), upper_g)
        dims.append(source_dims(w, (N, M)))
        windings.append(w)
    return dims, windings


def check_hypothesis(dims_chain):
    ok = []
    for g in range(len(dims_chain) - 1):
        (N, M), (Nn, Mn) = dims_chain[g], dims_chain[g + 1]
        ok.append(Nn >= 32 * max(N, M) and Mn >= 32 * max(N, M) and N >= 3 and M >= 3)
    return ok


@dataclass
class ContractionReport:
    levels: int
    trials: int
    worst_factor: list
    max_distance: list
    hypothesis: list
    passed: bool

    def to_dict(self):
        return {"levels": self.levels, "trials": self.trials, "worst_factor": self.worst_factor,
                "max_distance": self.max_distance, "hypothesis": self.hypothesis, "passed": self.passed}


def verify_contraction(dims_chain, windings_chain, trials=1000, seed=0, assert_hypothesis=True,
                       tol=1e-12) -> ContractionReport:
    """Push random measures on the finest graph down the chain and record the contraction.

    ``worst_factor[g]`` is the largest ratio |W mu - delta_q| / |mu - delta_q| seen
    at level g; ``max_distance[s]`` is the largest distance after s push-forwards.
    """
    levels = len(windings_chain)
    if len(dims_chain) != levels + 1:
        raise ValidationError("dims_chain needs one more entry than windings_chain")
    hyp = check_hypothesis(dims_chain)
    mats = [transfer_matrix(w) for w in windings_chain]
    worst = [0.0] * levels
    far = [0.0] * (levels + 1)
    passed = True
    for mu in random_simplex_points(trials, seed):
        cur = mu
        far[0] = max(far[0], cur.distance_to_saddle_mass())
        for s, g in enumerate(reversed(range(levels)), start=1):
            nxt = push_simplex(cur, mats[g], dims_chain[g + 1], dims_chain[g])
            d0, d1 = cur.distance_to_saddle_mass(), nxt.distance_to_saddle_mass()
            if d0 > 0:
                worst[g] = max(worst[g], d1 / d0)
            if d0 == 0 and d1 > tol:
                passed = False
            far[s] = max(far[s], d1)
            if hyp[g] and d1 > 0.5 * d0 + tol:
                passed = False
            if all(hyp[g:]) and d1 > 2.0**-s + tol:
                passed = False
            cur = nxt
    if assert_hypothesis and not all(hyp):
        raise ValidationError("dims chain violates the 32x growth hypothesis")
    return ContractionReport(levels, trials, worst, far, hyp, passed)


__all__ = ["MeasureVec", "TransferMatrix", "transfer_matrix", "transfer_from_words", "push_simplex",
           "source_dims", "random_simplex_points", "standard_chain", "check_hypothesis",
           "verify_contraction", "ContractionReport", "saddle_mass", "critical_loop_vertex",
           "transversal_loop_vertex", "vertex_to_standard", "standard_to_vertex"]
