"""Acceptance checks 1-12 on the ideal backend; each prints one PASS/FAIL line."""

import time

import mpmath as mp
import numpy as np
import pytest

from tangencylab.ce_verifier import certify_generation_two, default_cone
from tangencylab.critical_orbit import return_parameter, z3_curvature_growth
from tangencylab.errors import NumericFailure
from tangencylab.family_models import Params
from tangencylab.invariant_measures import standard_chain, verify_contraction
from tangencylab.manifolds import pullback_stable, seed_curve
from tangencylab.sinks_newhouse import certify_sink, newhouse_recursion, nh_box_dimension
from tangencylab.symbolic_dynamics import (
    build_graph, classify_omega, dense_point, graph_chain, o2_point, realize_partitions, saddle_point,
    verify_conjugacy,
)
from tangencylab.tangency_continuation import (
    DerivedUnfolding, find_secondary_tangency, make_strip, return_curve, strip_recursion,
)


def report(capsys, number, ok, detail, elapsed):
    with capsys.disabled():
        print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}  ({elapsed:.2f} s)")
    assert ok, detail


@pytest.fixture(scope="module")
def tangency_scan(model, theta):
    """Secondary tangencies for n = 12..24 from eleven starting parameters each."""
    t0 = time.perf_counter()
    starts = np.linspace(-0.12, -0.07, 11)
    ns = list(range(12, 25))
    mean_distance, n0_dev = [], []
    for n in ns:
        strip = make_strip(model, theta, n, 0)
        dists = []
        for s in starts:
            try:
                p = find_secondary_tangency(model, theta, strip, s)
            except NumericFailure:
                continue
            dists.append(float(p.distance))
            lam, mu = float(model.lam(p.t, p.a)), float(model.mu(p.t, p.a))
            n0_dev.append(abs(p.n0 - n * theta.alpha_n(n, lam, mu)))
        mean_distance.append(np.mean(dists))
    return ns, mean_distance, n0_dev, time.perf_counter() - t0


def test_criterion_01_measure_contraction(capsys):
    t0 = time.perf_counter()
    rep = verify_contraction(*standard_chain(5), trials=1000)
    dt = time.perf_counter() - t0
    within = all(d <= 2.0**-s + 1e-12 for s, d in enumerate(rep.max_distance))
    ok = rep.passed and max(rep.worst_factor) <= 0.5 and within and dt < 1
    report(capsys, 1, ok, f"worst factor {max(rep.worst_factor):.3g}", dt)


def test_criterion_02_pullback_identity(model, capsys):
    t0 = time.perf_counter()
    p = Params(0.03, 0.0)
    W = seed_curve(model, p)
    lam, mu = model.lam(p.t, p.a), model.mu(p.t, p.a)
    worst = 0.0
    for n in range(41):
        Wn = pullback_stable(W, n, p, model)
        for x in W.s:
            worst = max(worst, abs(mu**n * Wn(x) - W.eval(lam**n * x)[1]))
    dt = time.perf_counter() - t0
    report(capsys, 2, worst <= 1e-12 and dt < 1, f"max residual {worst:.2e} over {len(W.s)} samples", dt)


def test_criterion_03_return_curve_derivative(model, theta, capsys):
    t0 = time.perf_counter()
    worst = 0
    for n in range(5, 21):
        rc = return_curve(model, theta, n, ts=[0.0])
        for t in (-0.1, 0.0, 0.1):
            cf = rc.closed_form_deriv(t)
            worst = max(worst, float(abs(rc.deriv(t) - cf) / abs(cf)))
    dt = time.perf_counter() - t0
    report(capsys, 3, worst <= 1e-6 and dt < 1, f"max relative error {worst:.2e}", dt)


def test_criterion_04_sinks(model, theta, capsys):
    t0 = time.perf_counter()
    bad = []
    for n in range(8, 21):
        with mp.workdps(model.precision_hint(n)):
            p = Params(mp.mpf(0), return_parameter(model, n, mp.mpf(0)))
        cert = certify_sink(model, theta, p, n, raise_on_failure=False)
        if not (cert.valid and cert.period == n + model.N and cert.boundary_margin > 0):
            bad.append(n)
    dt = time.perf_counter() - t0
    report(capsys, 4, not bad and dt < 30, f"failed depths {bad}", dt)


def test_criterion_05_tangency_distance_scaling(tangency_scan, capsys):
    ns, dist, _, dt = tangency_scan
    slope = np.polyfit(np.log(ns), np.log(dist), 1)[0]
    report(capsys, 5, -1.3 <= slope <= -0.7 and dt < 300, f"slope {slope:.3f}", dt)


def test_criterion_06_curvature_growth(model, theta, capsys):
    t0 = time.perf_counter()
    rep = z3_curvature_growth(model, theta, 0.0, (8, 20))
    dt = time.perf_counter() - t0
    report(capsys, 6, rep.relative_error <= 0.10 and dt < 300,
           f"slope {rep.slope:.3f} vs {rep.theoretical:.4f}", dt)


def test_criterion_07_n0_law(tangency_scan, capsys):
    _, _, dev, dt = tangency_scan
    report(capsys, 7, max(dev) <= 3, f"max |n0 - n alpha| = {max(dev):.2f} over {len(dev)} tangencies", dt)


def test_criterion_08_strip_geometry(model, theta, capsys):
    t0 = time.perf_counter()
    p = find_secondary_tangency(model, theta, make_strip(model, theta, 13, 0), -0.1)
    derived = DerivedUnfolding(model, theta, p.n, p.n0, t_ref=p.t, a_ref=p.a)
    fam = strip_recursion(derived, theta, 40, depth_budget=3)
    dt = time.perf_counter() - t0
    C, Ct = fam.constants["C"], fam.constants["C_tilde"]
    ok = C <= 10 and Ct <= 10 and fam.disjoint and dt < 600
    report(capsys, 8, ok, f"C {C:.3f}, C~ {Ct:.3f}, disjoint {fam.disjoint}", dt)


def test_criterion_09_conjugacy(model, theta, curve15, capsys):
    t0 = time.perf_counter()
    params = [Params(*curve15.samples[0]), Params(*curve15.samples[-1])]
    reals = realize_partitions(model, theta, params, curve15.n, curve15.n0)
    passed = all(verify_conjugacy(r.partitions, r.graphs, r.morphisms, model, depth=2).passed for r in reals)
    same = reals[0].symbolic_data() == reals[1].symbolic_data()
    dt = time.perf_counter() - t0
    report(capsys, 9, passed and same and dt < 120, f"diagrams {passed}, identical data {same}", dt)


def test_criterion_10_omega_limits(capsys):
    t0 = time.perf_counter()
    chain = [[0, 2, 3, 1, 1], [1, 2, 4, 1, 1], [0, 1, 2, 1, 1], [0, 1, 2, 1, 1], [0, 1, 1, 1, 1]]
    gs, ms = graph_chain(build_graph(1, 1), chain)
    wrong = []
    # a single level carries no winding, so classification starts at depth 2
    for d in range(2, 7):
        kinds = (classify_omega(dense_point(gs, ms, d), gs, ms).kind,
                 classify_omega(o2_point(gs, ms, d), gs, ms).kind,
                 classify_omega(saddle_point(d), gs, ms).kind)
        if kinds != ("DenseInA", "OrbitO2", "FixedPoint"):
            wrong.append((d, kinds))
    dt = time.perf_counter() - t0
    report(capsys, 10, not wrong and dt < 1, f"misclassified {wrong}", dt)


def test_criterion_11_generation_two_ce(model, theta, curve15, capsys):
    t0 = time.perf_counter()
    cone = default_cone(model, theta)
    params = Params(*curve15.samples[len(curve15.samples) // 2])
    real = realize_partitions(model, theta, [params], curve15.n, curve15.n0)[0]
    rep = certify_generation_two(model, theta, params, curve15.n, curve15.n0, real.counts[4], cone)
    dt = time.perf_counter() - t0
    ok = rep.valid and rep.worst_margin >= 1 and dt < 120
    report(capsys, 11, ok, f"T2 = {rep.T}, worst margin {float(rep.worst_margin):.3g}", dt)


def test_criterion_12_newhouse_dimension(model, theta, capsys):
    t0 = time.perf_counter()
    levels = newhouse_recursion(model, theta, depth=1, ns=range(12, 25))
    rep = nh_box_dimension(levels[0], theta)
    dt = time.perf_counter() - t0
    report(capsys, 12, rep.slope >= 0.55 and dt < 600, f"slope {rep.slope:.3f} over {len(levels[0])} boxes", dt)
