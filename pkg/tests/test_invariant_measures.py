import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangencylab.errors import ValidationError
from tangencylab.invariant_measures import (
    MeasureVec, check_hypothesis, critical_loop_vertex, push_simplex,
    random_simplex_points, saddle_mass, source_dims, standard_chain, transfer_from_words, transfer_matrix,
    transversal_loop_vertex, verify_contraction,
)
from tangencylab.symbolic_dynamics import Winding, build_graph

counts_st = st.tuples(*[st.integers(0, 6)] * 5)


def test_transfer_matrix_example():
    W = transfer_matrix((2, 3, 5, 1, 2))
    assert W.entries.tolist() == [[1, 13, 4], [0, 3, 0], [0, 1, 1]]


def test_saddle_mass_fixed():
    W = transfer_matrix((1, 2, 4, 1, 1))
    assert (W @ np.array([1, 0, 0])).tolist() == [1, 0, 0]
    src = source_dims((1, 2, 4, 1, 1), (3, 3))
    out = push_simplex(saddle_mass(), W, src, (3, 3))
    assert out.distance_to_saddle_mass() == 0


def test_negative_counts_rejected():
    with pytest.raises(ValidationError):
        transfer_matrix((1, -1, 2, 1, 1))


def test_off_simplex_rejected():
    with pytest.raises(ValidationError):
        push_simplex(MeasureVec(0.5, 0.6, 0.2), transfer_matrix((1, 1, 1, 1, 1)), (8, 3), (1, 1))


def test_critical_loop_mass_drains_to_saddle():
    dims, wins = standard_chain(1)
    out = push_simplex(critical_loop_vertex(), transfer_matrix(wins[0]), dims[1], dims[0])
    assert dims[1][0] >= 32 * max(dims[0])
    assert out.loop_masses(*dims[0])["q"] >= 7 / 8
    x, y, z = out.coords
    assert x <= 3 / 16 and y <= 3 / 16 and z >= 5 / 8


def test_transversal_loop_mass_drains_to_saddle():
    dims, wins = standard_chain(1)
    out = push_simplex(transversal_loop_vertex(), transfer_matrix(wins[0]), dims[1], dims[0])
    assert out.distance_to_saddle_mass() <= 0.5


def test_standard_chain_meets_hypothesis():
    dims, wins = standard_chain(5)
    assert len(dims) == 6 and all(check_hypothesis(dims))


def test_contraction_on_standard_chain():
    dims, wins = standard_chain(5)
    rep = verify_contraction(dims, wins, trials=300, seed=3)
    assert rep.passed
    assert max(rep.worst_factor) <= 0.5
    for s, d in enumerate(rep.max_distance):
        assert d <= 2.0**-s + 1e-12


def test_weak_growth_reported_not_asserted():
    dims = [(3, 3), source_dims((1, 1, 1, 1, 1), (3, 3))]
    rep = verify_contraction(dims, [(1, 1, 1, 1, 1)], trials=50, assert_hypothesis=False)
    assert max(rep.worst_factor) > 0
    assert rep.hypothesis == [False]
    with pytest.raises(ValidationError):
        verify_contraction(dims, [(1, 1, 1, 1, 1)], trials=5)


def test_chain_length_mismatch():
    with pytest.raises(ValidationError):
        verify_contraction([(3, 3)], [(1, 1, 1, 1, 1)])


def test_mismatched_dims_break_mass():
    W = transfer_matrix((2, 20, 60, 10, 90))
    with pytest.raises(AssertionError):
        push_simplex(critical_loop_vertex(), W, (100, 100), (100, 100))


def test_random_points_deterministic():
    a = random_simplex_points(10, seed=7)
    b = random_simplex_points(10, seed=7)
    assert a == b and all(p.on_simplex() for p in a)


@settings(max_examples=60, deadline=None)
@given(counts=counts_st)
def test_matrix_counts_prime_loops(counts):
    """Column entries equal the prime-loop counts in the windings."""
    c_word = Winding.from_counts(*counts).word
    h_word = "q" * counts[0] + "h" + "q" * counts[4]
    assert np.array_equal(transfer_from_words(c_word, h_word).entries, transfer_matrix(counts).entries)


@settings(max_examples=40, deadline=None)
@given(counts=counts_st, N=st.integers(1, 5), M=st.integers(1, 5))
def test_vertex_hits_by_path_projection(counts, N, M):
    """Projecting the expanded c-loop vertex by vertex reproduces the column (q, c, h) masses."""
    g = build_graph(N, M)
    path = Winding.from_counts(*counts).expand(g)
    col = transfer_matrix(counts).entries[:, 1]
    hits_q = sum(1 for v in path if v[0] == "q")
    hits_c = sum(1 for v in path if v[0] == "c")
    hits_h = sum(1 for v in path if v[0] == "h")
    assert (hits_q, hits_c, hits_h) == (col[0] + col[1] + col[2], col[1] * N, col[2] * M)


@settings(max_examples=60, deadline=None)
@given(counts=st.tuples(*[st.integers(0, 40)] * 5), x=st.floats(0, 1), y=st.floats(0, 1))
def test_push_preserves_simplex(counts, x, y):
    if x + y > 1:
        x, y = x / 2, y / 2
    mu = MeasureVec(x, y, 1 - x - y)
    target = (3, 4)
    out = push_simplex(mu, transfer_matrix(counts), source_dims(counts, target), target)
    assert out.on_simplex(1e-9)
