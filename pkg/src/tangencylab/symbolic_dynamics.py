"""Directed graphs with one saddle vertex and two loops, their morphisms and inverse limits.

Vertices are ``("q", 0)``, ``("c", i)`` for i < N and ``("h", j)`` for j < M.
The c-loop is q -> c0 -> ... -> c(N-1) -> q, the h-loop likewise, and q has a
self-loop.  A morphism is fixed by the images of the three prime loops, given
as words over {q, c, h}; every vertex of a source loop maps to the vertex at
the same position of the substituted path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import mpmath as mp

from .critical_orbit import trace_loop
from .errors import AssertionFailure, NumericFailure, ValidationError
from .family_models import Params, ThetaSelection, UnfoldingModel

Q = ("q", 0)
LETTERS = "qch"


class SymbolicGraph:
    def __init__(self, N: int, M: int):
        if N < 1 or M < 1:
            raise ValidationError("loop lengths N and M must be at least 1")
        self.N, self.M = int(N), int(M)
        self.vertices = [Q] + [("c", i) for i in range(self.N)] + [("h", j) for j in range(self.M)]
        edges = [(Q, Q)]
        for name, size in (("c", self.N), ("h", self.M)):
            path = [Q] + [(name, i) for i in range(size)] + [Q]
            edges += list(zip(path, path[1:]))
        self.edges = edges
        self._edge_set = set(edges)

    @property
    def dims(self):
        return self.N, self.M

    def __eq__(self, other):
        return isinstance(other, SymbolicGraph) and self.dims == other.dims

    def __hash__(self):
        return hash(self.dims)

    def __repr__(self):
        return f"SymbolicGraph(N={self.N}, M={self.M})"

    def has_edge(self, u, v):
        return (u, v) in self._edge_set

    def out_edges(self, v):
        return [e for e in self.edges if e[0] == v]

    def in_edges(self, v):
        return [e for e in self.edges if e[1] == v]

    def successor(self, v):
        """Unique successor of a non-saddle vertex."""
        if v == Q:
            raise ValidationError("the saddle vertex has three successors")
        name, i = v
        size = self.N if name == "c" else self.M
        return (name, i + 1) if i + 1 < size else Q

    def loop(self, letter):
        """Vertices of a prime loop, starting at q, without the closing q."""
        if letter == "q":
            return [Q]
        size = self.N if letter == "c" else self.M
        return [Q] + [(letter, i) for i in range(size)]

    def to_dict(self):
        return {"N": self.N, "M": self.M}


def build_graph(N: int, M: int) -> SymbolicGraph:
    return SymbolicGraph(N, M)


@dataclass(frozen=True)
class Winding:
    word: str

    def __post_init__(self):
        if not self.word or any(ch not in LETTERS for ch in self.word):
            raise ValidationError(f"a winding is a nonempty word over q, c, h: {self.word!r}")

    @classmethod
    def from_counts(cls, lower, theta_n, n, n0, upper):
        """q^lower c q^theta_n c q^n c q^n0 h q^upper."""
        counts = (lower, theta_n, n, n0, upper)
        if min(counts) < 0:
            raise ValidationError("winding exponents must be non-negative")
        return cls("q" * lower + "c" + "q" * theta_n + "c" + "q" * n + "c" + "q" * n0 + "h" + "q" * upper)

    def count(self, letter):
        return self.word.count(letter)

    def expand(self, graph: SymbolicGraph):
        """The closed path in ``graph`` spelled by the word, without its final q."""
        path = []
        for ch in self.word:
            path += graph.loop(ch)
        return path

    def target_length(self, graph: SymbolicGraph):
        return len(self.expand(graph))

    def loop_spans(self, graph: SymbolicGraph):
        """(letter, start, stop) positions of each prime loop inside the expanded path."""
        spans, pos = [], 0
        for ch in self.word:
            size = len(graph.loop(ch))
            spans.append((ch, pos, pos + size))
            pos += size
        return spans


class GraphMorphism:
    """Vertex map source -> target determined by the windings of the three prime loops."""

    def __init__(self, source: SymbolicGraph, target: SymbolicGraph, windings: dict):
        self.source, self.target = source, target
        self.windings = {k: (v if isinstance(v, Winding) else Winding(v)) for k, v in windings.items()}
        if self.windings["q"].word != "q":
            raise ValidationError("the saddle loop must map to the saddle loop")
        self.vmap = {Q: Q}
        for letter, size in (("c", source.N), ("h", source.M)):
            path = self.windings[letter].expand(target)
            if len(path) != size + 1:
                raise ValidationError(
                    f"{letter}-winding has target length {len(path)}, source loop has {size + 1} vertices")
            for i, v in enumerate(path[1:]):
                self.vmap[(letter, i)] = v

    def __call__(self, v):
        return self.vmap[v]

    def image_path(self, path):
        return [self.vmap[v] for v in path]

    def maps_edges_to_edges(self):
        return all(self.target.has_edge(self(u), self(v)) for u, v in self.source.edges)

    def triple(self):
        return tuple(self.windings[k].word for k in ("q", "h", "c"))

    def to_dict(self):
        return {"source": self.source.to_dict(), "target": self.target.to_dict(),
                "windings": {k: w.word for k, w in self.windings.items()}}

    def __eq__(self, other):
        return (isinstance(other, GraphMorphism) and self.source == other.source
                and self.target == other.target and self.triple() == other.triple())


def summed_loop_lengths(counts, target_dims):
    """Loop lengths by the displayed sum lower+N+theta_n+N+n+N+n0+M+upper and lower+M+upper."""
    lower, theta_n, n, n0, upper = counts
    N, M = target_dims
    return lower + N + theta_n + N + n + N + n0 + M + upper, lower + M + upper


def morphism_from_winding(counts, target: SymbolicGraph) -> GraphMorphism:
    """Morphism with c-winding q^l c q^(theta n) c q^n c q^n0 h q^l' and h-winding q^l h q^l'.

    The source loop lengths are read off the substituted paths, so that every
    source vertex has a well defined image.
    """
    lower, theta_n, n, n0, upper = (int(v) for v in counts)
    wc = Winding.from_counts(lower, theta_n, n, n0, upper)
    wh = Winding("q" * lower + "h" + "q" * upper)
    source = SymbolicGraph(wc.target_length(target) - 1, wh.target_length(target) - 1)
    return GraphMorphism(source, target, {"q": "q", "c": wc, "h": wh})


def substitute(word: str, images: dict) -> str:
    return "".join(images[ch].word if isinstance(images[ch], Winding) else images[ch] for ch in word)


def compose(outer: GraphMorphism, inner: GraphMorphism) -> GraphMorphism:
    """outer o inner, built from substituted windings (inner.target must be outer.source)."""
    if inner.target != outer.source:
        raise ValidationError("morphisms are not composable")
    wins = {k: Winding(substitute(inner.windings[k].word, outer.windings)) for k in LETTERS}
    return GraphMorphism(inner.source, outer.target, wins)


def graph_chain(base: SymbolicGraph, counts_chain):
    """Graphs coarse -> fine and morphisms[g]: graphs[g+1] -> graphs[g]."""
    graphs, morphisms = [base], []
    for counts in counts_chain:
        m = morphism_from_winding(counts, graphs[-1])
        morphisms.append(m)
        graphs.append(m.source)
    return graphs, morphisms


# ---------------------------------------------------------------------------
# truncated inverse limit


@dataclass(frozen=True)
class LimitPoint:
    entries: tuple    # x_1 ... x_G, coarse to fine

    @property
    def depth(self):
        return len(self.entries)

    def is_saddle(self):
        return all(v == Q for v in self.entries)

    def compatible(self, morphisms):
        return all(morphisms[g](self.entries[g + 1]) == self.entries[g] for g in range(self.depth - 1))


def point_from_finest(vertex, morphisms, depth):
    entries = [vertex]
    for g in range(depth - 2, -1, -1):
        entries.append(morphisms[g](entries[-1]))
    return LimitPoint(tuple(reversed(entries)))


def enumerate_points(graphs, morphisms, depth=None):
    depth = depth or len(graphs)
    return [point_from_finest(v, morphisms, depth) for v in graphs[depth - 1].vertices]


def shift_map(point: LimitPoint, graphs, morphisms) -> LimitPoint:
    """Successor along edges: levels where x_g is not q move along their unique edge,
    coarser levels (where x_g = q) are the images of the finer successor."""
    if point.is_saddle():
        return point
    G = point.depth
    y = [None] * G
    first = next(g for g in range(G) if point.entries[g] != Q)
    for g in range(first, G):
        y[g] = graphs[g].successor(point.entries[g])
    for g in range(first - 1, -1, -1):
        y[g] = morphisms[g](y[g + 1])
    out = LimitPoint(tuple(y))
    for g in range(G):
        if not graphs[g].has_edge(point.entries[g], y[g]):
            raise AssertionFailure(f"successor is not an edge at level {g + 1}")
    return out


def shift_bijectivity(graphs, morphisms, depth=None):
    """Exhaustive check of the shift on the depth-G truncation.

    At finite depth the fibre over the saddle is not resolved (the three
    predecessors of q are only told apart one level deeper), so injectivity
    is asserted for points whose image is not q at the finest level.  For the
    same reason the points whose finest entry opens a loop (c0, h0) have their
    predecessors in that unresolved fibre; surjectivity is checked on the rest.
    """
    depth = depth or len(graphs)
    pts = enumerate_points(graphs, morphisms, depth)
    images = {}
    collisions = 0
    for p in pts:
        y = shift_map(p, graphs, morphisms)
        if y.entries[-1] != Q or p.is_saddle():
            if y in images and images[y] != p:
                collisions += 1
            images[y] = p
    hit = {shift_map(p, graphs, morphisms) for p in pts}
    openers = {("c", 0), ("h", 0)}
    missing = [p for p in pts if p not in hit and p.entries[-1] not in openers]
    unresolved = sum(1 for p in pts if p.entries[-1] in openers)
    return {"points": len(pts), "collisions": collisions, "missing": len(missing),
            "unresolved": unresolved, "bijective": collisions == 0 and not missing}


@dataclass(frozen=True)
class OmegaClass:
    kind: str            # FixedPoint | OrbitO2 | DenseInA | Undetermined
    depth: int


def _remaining_contains_c(point, g, graphs, morphisms):
    """Does w_{g-1}(path x_g -> q_g) contain the full c-loop of X_{g-1}?"""
    x = point.entries[g]
    m = morphisms[g - 1]
    letter, i = x
    wind = m.windings[letter]
    start = i + 1           # position of x inside the expanded source loop
    for ch, lo, hi in wind.loop_spans(graphs[g - 1]):
        if ch == "c" and lo >= start:
            return True
    return False


def classify_omega(point: LimitPoint, graphs, morphisms) -> OmegaClass:
    if point.is_saddle():
        return OmegaClass("FixedPoint", point.depth)
    flags = [_remaining_contains_c(point, g, graphs, morphisms)
             for g in range(1, point.depth) if point.entries[g] != Q]
    if flags and all(flags):
        return OmegaClass("DenseInA", point.depth)
    if flags and not any(flags):
        return OmegaClass("OrbitO2", point.depth)
    return OmegaClass("Undetermined", point.depth)


def dense_point(graphs, morphisms, depth=None, start=("c", 0)) -> LimitPoint:
    """x_g = first vertex of the c-loop of X_g mapping to x_{g-1}."""
    depth = depth or len(graphs)
    entries = [start]
    for g in range(1, depth):
        cands = [("c", i) for i in range(graphs[g].N) if morphisms[g - 1](("c", i)) == entries[-1]]
        entries.append(cands[0])
    return LimitPoint(tuple(entries))


def o2_point(graphs, morphisms, depth=None, start=("c", 0)) -> LimitPoint:
    """x_g = the vertex of the c-loop whose forward path projects to x_{g-1} -> q followed by q- and h-loops only."""
    depth = depth or len(graphs)
    entries = [start]
    for g in range(1, depth):
        cands = [("c", i) for i in range(graphs[g].N) if morphisms[g - 1](("c", i)) == entries[-1]]
        good = [v for v in cands
                if not _remaining_contains_c(LimitPoint(tuple(entries) + (v,)), g, graphs, morphisms)]
        if len(good) != 1:
            raise AssertionFailure(f"expected a unique tail-free lift at level {g + 1}, found {len(good)}")
        entries.append(good[0])
    return LimitPoint(tuple(entries))


def saddle_point(depth) -> LimitPoint:
    return LimitPoint((Q,) * depth)


# ---------------------------------------------------------------------------
# geometric realisation


@dataclass(frozen=True)
class Box:
    x0: object
    x1: object
    y0: object
    y1: object

    @classmethod
    def around(cls, x, y, rx, ry=None):
        ry = rx if ry is None else ry
        return cls(x - rx, x + rx, y - ry, y + ry)

    def contains(self, x, y):
        return self.x0 < x < self.x1 and self.y0 < y < self.y1

    def inside(self, other: "Box"):
        return other.x0 <= self.x0 and self.x1 <= other.x1 and other.y0 <= self.y0 and self.y1 <= other.y1

    def meets(self, other: "Box"):
        return self.x0 < other.x1 and other.x0 < self.x1 and self.y0 < other.y1 and other.y0 < self.y1

    def as_floats(self):
        return [float(self.x0), float(self.x1), float(self.y0), float(self.y1)]


# fixed first-generation pieces for the ideal normal form
Q_PIECE = Box(-1.5, 1.5, -0.6, 0.6)
C0_PIECE = Box(-0.25, 0.25, 0.65, 1.28)
H0_PIECE = Box(-0.25, 0.25, 1.3, 1.7)


@dataclass
class PartitionRealization:
    generation: int
    graph: SymbolicGraph
    pieces: dict                                   # vertex -> Box
    orbit: list = field(default_factory=list)      # (vertex, point) along the loops
    step: object = field(default=None, repr=False)  # the one-step map F (x, y) -> (x, y)

    def piece_of(self, x, y):
        for v, b in self.pieces.items():
            if b.contains(x, y):
                return v
        return None

    def disjoint(self):
        items = list(self.pieces.items())
        for i, (v, b) in enumerate(items):
            for w, c in items[i + 1:]:
                if b.meets(c):
                    return False
        return True

    def to_dict(self):
        return {"generation": self.generation, "graph": self.graph.to_dict(),
                "pieces": {f"{v[0]}{v[1]}": b.as_floats() for v, b in self.pieces.items()}}


def one_step_map(model: UnfoldingModel, t, a):
    """F for the N = M = 1 normal form: L on Q, the gluing on C0, the transit on H0."""
    if model.N != 1 or model.M != 1:
        raise ValidationError("geometric realisation needs single-step gluing and transit (N = M = 1)")

    def F(x, y, where):
        if where == "q":
            return model.linear(x, y, t, a)
        if where == "c":
            return model.glue(x, y, t, a)
        return model.transit(x, y, t, a)

    return F


def first_generation(model, t, a) -> PartitionRealization:
    g = build_graph(model.N, model.M)
    return PartitionRealization(1, g, {Q: Q_PIECE, ("c", 0): C0_PIECE, ("h", 0): H0_PIECE},
                                step=one_step_map(model, t, a))


@dataclass
class LoopOrbit:
    """Orbit of the new critical point and of the transversal point through one loop each."""
    params: tuple
    n: int
    k: int
    n_tail: int
    c_points: list     # points after leaving the saddle piece along the c-loop, with gen-1 letters
    h_points: list
    cy_new: object
    yq2: object
    x_return_c: object
    x_return_h: object


def loop_orbit(model, theta: ThetaSelection, params: Params, n: int, n0: int) -> LoopOrbit:
    """Follow c~ = (0, c_y + s3) through G L^k G L^n G L^(n-n0) H, and q2 through H."""
    with mp.workdps(model.precision_hint(n, theta.theta)):
        t, a = mp.mpf(params.t), mp.mpf(params.a)
        tr = trace_loop(model, theta, Params(t, a), n)
        k, n_tail = tr.theta_n, n - n0
        F = one_step_map(model, t, a)
        cy_new = tr.maps.cy + tr.s_values["s3"]
        pts = []
        p = (mp.mpf(0), cy_new)
        pts.append(("c", p))
        p = F(*p, "c")
        for run in (k, n, n_tail):
            for _ in range(run):
                pts.append(("q", p))
                p = F(*p, "q")
            pts.append(("c" if run != n_tail else "h", p))
            p = F(*p, "c" if run != n_tail else "h")
        x_ret_c = p[0]
        q2 = model.q2(t, a)
        hp = F(*q2, "h")
        return LoopOrbit((t, a), n, k, n_tail, pts, [("h", q2)], cy_new, q2[1], x_ret_c, hp[0])


def saddle_radius(orbits, shrink=mp.mpf("0.5")):
    """Largest admissible half-size of the new saddle piece: no interior loop point inside."""
    r = mp.mpf(1)
    for orb in orbits:
        for _, (x, y) in orb.c_points[1:]:
            r = min(r, max(abs(x), abs(y)))
    return r * shrink


def entry_exit_counts(orbits, r_max, mu, lam):
    """(lower, upper, r): steps up the unstable axis into the loops, steps along the stable
    axis back, and a saddle half-size r <= r_max compatible with both."""
    hi_top = max(max(o.yq2, o.cy_new) for o in orbits)
    lo_top = min(min(o.yq2, o.cy_new) for o in orbits)
    if not hi_top < mu * lo_top:
        raise NumericFailure("loop tops are more than one unstable step apart")
    lower = 0
    while hi_top / mu ** (lower + 1) >= r_max:
        lower += 1
    r = min(r_max, mp.sqrt(hi_top / mu ** (lower + 1) * lo_top / mu ** lower))
    xs = [abs(o.x_return_c) for o in orbits] + [abs(o.x_return_h) for o in orbits]
    upper = 1
    while max(xs) * lam ** upper >= r:
        upper += 1
    if min(xs) * lam ** (upper - 1) < r:
        raise NumericFailure("stable returns of the two loops enter the saddle piece at different steps")
    return lower, upper, r


@dataclass
class Realization:
    partitions: list
    graphs: list
    morphisms: list
    counts: tuple
    radius: object

    def symbolic_data(self):
        return {"graphs": [g.dims for g in self.graphs], "morphisms": [m.triple() for m in self.morphisms]}


def realize_partitions(model, theta, params_list, n, n0, radius=None):
    """First and second generation partitions for parameters on one tangency curve.

    Second-generation pieces are boxes around the loop orbit points, each a
    third of the distance to its nearest neighbour; the saddle piece is the
    square of half-size ``radius`` (common to all parameters so that the
    symbolic data can be compared).
    """
    orbits = [loop_orbit(model, theta, p, n, n0) for p in params_list]
    with mp.workdps(model.precision_hint(n, theta.theta)):
        r_max = radius if radius is not None else saddle_radius(orbits)
        t0, a0 = mp.mpf(params_list[0].t), mp.mpf(params_list[0].a)
        lam, mu = model.lam(t0, a0), model.mu(t0, a0)
        lower, upper, r = entry_exit_counts(orbits, r_max, mu, lam)
        out = []
        for orb in orbits:
            k, n_tail = orb.k, orb.n_tail
            counts = (lower, k - 1, n - 1, n_tail - 1, upper)
            base = build_graph(model.N, model.M)
            graphs, morphisms = graph_chain(base, [counts])
            gen1 = first_generation(model, *orb.params)
            out.append(Realization([gen1, _second_generation(model, orb, graphs[1], morphisms[0], lower, upper, r)],
                                   graphs, morphisms, counts, r))
    return out


def _loop_points(model, orb: LoopOrbit, letter, lower, upper):
    """Orbit points of one new loop, in order, starting inside the new saddle piece."""
    t, a = orb.params
    F = one_step_map(model, t, a)
    lam, mu = model.lam(t, a), model.mu(t, a)
    top = orb.cy_new if letter == "c" else orb.yq2
    pts = [(mp.mpf(0), top / mu ** (lower + 1 - j)) for j in range(lower + 1)]
    if letter == "c":
        body = [p for _, p in orb.c_points]
        last = F(*orb.c_points[-1][1], "h")
    else:
        body = [(mp.mpf(0), orb.yq2)]
        last = F(mp.mpf(0), orb.yq2, "h")
    pts += body
    p = last
    for _ in range(upper):
        pts.append(p)
        p = F(*p, "q")
    return pts, p


def _second_generation(model, orb, graph, morphism, lower, upper, r):
    c_pts, c_end = _loop_points(model, orb, "c", lower, upper)
    h_pts, h_end = _loop_points(model, orb, "h", lower, upper)
    if len(c_pts) != graph.N + 1 or len(h_pts) != graph.M + 1:
        raise AssertionFailure(f"loop orbit lengths {len(c_pts)}, {len(h_pts)} do not match the graph "
                               f"({graph.N + 1}, {graph.M + 1})")
    labelled = [(("c", i - 1) if i else Q, p) for i, p in enumerate(c_pts)]
    labelled += [(("h", i - 1), p) for i, p in enumerate(h_pts) if i]
    pieces = {Q: Box(-r, r, -r, r)}
    allpts = [p for v, p in labelled if v != Q]
    for v, (x, y) in labelled:
        if v == Q:
            continue
        d = min(max(abs(x - u), abs(y - w)) for (u, w) in allpts if (u, w) != (x, y))
        # stay clear of the saddle piece as well
        d = min(d, max(abs(x), abs(y)) - r)
        parent = next((b for b in (Q_PIECE, C0_PIECE, H0_PIECE) if b.contains(x, y)), None)
        if parent is not None:
            d = min(d, 1.5 * min(x - parent.x0, parent.x1 - x, y - parent.y0, parent.y1 - y))
        pieces[v] = Box.around(x, y, d / 3)
    orbit = labelled + [(Q, c_end), (Q, h_end)]
    return PartitionRealization(2, graph, pieces, orbit, step=one_step_map(model, *orb.params))


@dataclass
class ConjugacyReport:
    generations: int
    checked: int
    failures: list
    disjoint: list

    @property
    def passed(self):
        return not self.failures and all(self.disjoint)

    def to_dict(self):
        return {"generations": self.generations, "checked": self.checked, "failures": self.failures,
                "disjoint": self.disjoint, "passed": self.passed}


def _letter_of(v):
    return v[0]


def verify_conjugacy(partitions, graphs, morphisms, model=None, depth=2, grid=7) -> ConjugacyReport:
    """pi o i = w o pi on every piece, and h o f = phi o h on representative points."""
    failures, checked = [], 0
    gen1 = partitions[0]
    F = gen1.step
    # generation 1: a grid of points in every piece; images landing in a piece must follow an edge
    for v, box in gen1.pieces.items():
        for i in range(grid):
            for j in range(grid):
                x = box.x0 + (box.x1 - box.x0) * mp.mpf(i + 0.5) / grid
                y = box.y0 + (box.y1 - box.y0) * mp.mpf(j + 0.5) / grid
                X, Y = F(mp.mpf(x), mp.mpf(y), _letter_of(v))
                w = gen1.piece_of(X, Y)
                checked += 1
                if w is not None and not gen1.graph.has_edge(v, w):
                    failures.append({"generation": 1, "piece": v, "image_piece": w})
    disjoint = [gen1.disjoint()]
    if depth >= 2 and len(partitions) > 1:
        gen2 = partitions[1]
        w = morphisms[0]
        disjoint.append(gen2.disjoint())
        for v, box in gen2.pieces.items():
            # i: the first-generation piece containing this piece
            parents = [u for u, b in gen1.pieces.items() if box.inside(b)]
            checked += 1
            if len(parents) != 1 or parents[0] != w(v):
                failures.append({"generation": 2, "piece": v, "kind": "pi o i != w o pi",
                                 "parent": parents, "expected": w(v)})
        orbit = gen2.orbit
        for (v, p), (v_next, p_next) in zip(orbit, orbit[1:]):
            if v_next == Q and v != Q and gen2.graph.successor(v) != Q:
                continue  # start of the h-loop listing
            letter = _letter_of(w(v))
            X, Y = F(p[0], p[1], letter)
            target = gen2.piece_of(X, Y)
            expected = gen2.graph.successor(v) if v != Q else None
            checked += 1
            if v != Q and target != expected:
                failures.append({"generation": 2, "piece": v, "kind": "h o f != phi o h",
                                 "image_piece": target, "expected": expected})
    return ConjugacyReport(min(depth, len(partitions)), checked, failures, disjoint)


def check_renormalizable(model, theta, params: Params, generation_data: dict) -> bool:
    """True iff the waypoint m7 of the loop lands in the transversal piece H0."""
    n = generation_data["n"]
    n0 = generation_data["n0"]
    box = generation_data.get("H0", H0_PIECE)
    try:
        with mp.workdps(model.precision_hint(n, theta.theta)):
            tr = trace_loop(model, theta, params, n)
            m7 = tr.maps.chain(tr.s_values["s3"], n - n0)[-1]
            return bool(box.contains(m7[0], m7[1]))
    except (NumericFailure, ValidationError, ZeroDivisionError, ValueError):
        return False


def symbolic_json(graphs, morphisms):
    return json.dumps({"graphs": [g.to_dict() for g in graphs],
                       "morphisms": [m.to_dict() for m in morphisms]}, indent=2)


__all__ = ["SymbolicGraph", "build_graph", "Winding", "GraphMorphism", "morphism_from_winding",
           "summed_loop_lengths", "substitute", "compose", "graph_chain", "LimitPoint", "point_from_finest",
           "enumerate_points", "shift_map", "shift_bijectivity", "OmegaClass", "classify_omega", "dense_point",
           "o2_point", "saddle_point", "Box", "PartitionRealization", "first_generation", "loop_orbit",
           "realize_partitions", "Realization", "verify_conjugacy", "ConjugacyReport", "check_renormalizable",
           "symbolic_json", "Q", "Q_PIECE", "C0_PIECE", "H0_PIECE"]
