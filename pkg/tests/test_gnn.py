from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnncompat.compat import sample_graphs
from gnncompat.generators import GenSpec, generate_with_meta
from gnncompat.graph import Graph, enumerate_sn
from gnncompat.gnn import (
    EXTENDED_PROGRAMS,
    GnnLayer,
    GnnProgram,
    UnseenMultiset,
    check_equivariance,
    convert_extended_to_gnn,
    degree_program,
    forced_errors,
    index_reading_program,
    max_extended,
    orbit_equality_demo,
    random_program,
    run_extended,
    run_gnn,
    self_extended,
    squash,
    weight_sum_extended,
    zero_program,
)
from gnncompat.oracles import ADJACENCY, shortest_paths_from
from gnncompat.zoo import lookup
from strategies import exact_graphs, permutations_of, ring, unit_triangle


# --- running programs ---------------------------------------------------------

@given(exact_graphs(n_min=2, n_max=6, d=1))
def test_one_layer_weight_message_is_degree(g):
    assert run_gnn(degree_program(1), g) == lookup("degree")(g)


def test_zero_program():
    g = Graph.from_upper(3, [1, 2, 3], [[1], [2], [3]])
    assert run_gnn(zero_program(1), g) == ((0,),) * 3


@pytest.mark.parametrize("seed", range(5))
def test_symmetric_triangle_keeps_all_states_equal(seed):
    history = run_gnn(random_program(seed, (1, 3, 2, 1)), unit_triangle(), all_layers=True)
    assert len(history) == 4
    assert all(len(set(h)) == 1 for h in history)


def test_dimension_checks():
    with pytest.raises(ValueError):
        run_gnn(degree_program(2), unit_triangle())
    bad = GnnProgram((GnnLayer(lambda hi, hj, w: (w, w), 1, 1),))
    with pytest.raises(ValueError):
        run_gnn(bad, unit_triangle())
    with pytest.raises(ValueError):
        GnnProgram((GnnLayer(lambda *a: (0,), 1, 2), GnnLayer(lambda *a: (0,), 3, 1)))


def test_non_finite_float_message_rejected():
    g = Graph.from_upper(2, [1.0], [[0.0], [0.0]])
    bad = GnnProgram((GnnLayer(lambda hi, hj, w: (float("inf"),), 1, 1),))
    with pytest.raises(ValueError):
        run_gnn(bad, g)


def test_random_programs_are_exact_and_seeded():
    g = Graph.from_upper(3, [1, 2, 3], [[1], [0], [2]])
    a = run_gnn(random_program(4), g)
    assert a == run_gnn(random_program(4), g)
    assert all(isinstance(v, Fraction) for row in a for v in row)
    assert a != run_gnn(random_program(5), g)


def test_squash_is_bounded():
    assert squash(Fraction(1)) == Fraction(1, 2)
    assert squash(0) == 0 and abs(squash(Fraction(-7))) < Fraction(1, 2)


# --- Extended-GNN ----------------------------------------------------------------

def test_max_aggregation_on_unit_path():
    g = Graph.from_upper(3, [1, 0, 1], [[3], [0], [5]])
    # node 0 sees (h1 + 1, h2 + 0); node 1 sees (h0 + 1, h2 + 1); node 2 sees (h0 + 0, h1 + 1)
    assert run_extended(max_extended(1), g) == ((5,), (6,), (3,))


def test_self_aggregation_freezes_states():
    g = Graph.from_upper(3, [1, 2, 3], [[1], [2], [3]])
    assert run_extended(self_extended(1), g) == g.x


@given(exact_graphs(n_min=2, n_max=5, d=1))
def test_weight_sum_aggregation_is_degree(g):
    assert run_extended(weight_sum_extended(1), g) == lookup("degree")(g)


@pytest.mark.parametrize("name,n", [("sum", 4), ("max", 3), ("composed", 3), ("self", 3)])
def test_conversion_reproduces_source_states(name, n):
    src = EXTENDED_PROGRAMS[name](1)
    graphs = sample_graphs(n, 1, 30, seed=2)
    conv = convert_extended_to_gnn(src, n, 1, graphs)
    assert conv.program.k_max == 2 * len(src.layers)
    for g in graphs:
        ext = run_extended(src, g, all_layers=True)
        gnn = run_gnn(conv.program, g, all_layers=True)
        assert all(ext[r] == gnn[2 * r] for r in range(len(ext)))


def test_conversion_with_two_features():
    graphs = sample_graphs(3, 2, 10, seed=3)
    conv = convert_extended_to_gnn(EXTENDED_PROGRAMS["composed"](2), 3, 2, graphs)
    for g in graphs:
        assert run_gnn(conv.program, g) == run_extended(EXTENDED_PROGRAMS["composed"](2), g)


def test_converted_program_rejects_unseen_inputs():
    conv = convert_extended_to_gnn(EXTENDED_PROGRAMS["sum"](1), 3, 1, sample_graphs(3, 1, 5, 0))
    fresh = Graph.from_upper(3, [101, 103, 107], [[109], [113], [127]])
    with pytest.raises(UnseenMultiset):
        run_gnn(conv.program, fresh)


def test_conversion_input_validation():
    with pytest.raises(ValueError):
        convert_extended_to_gnn(EXTENDED_PROGRAMS["sum"](1), 3, 2, [])
    with pytest.raises(TypeError):
        convert_extended_to_gnn(EXTENDED_PROGRAMS["sum"](1), 2, 1,
                                [Graph.from_upper(2, [1.0], [[1.0], [2.0]])])


# --- equivariance --------------------------------------------------------------

def test_identity_permutation_trivially_passes():
    g = Graph.from_upper(3, [1, 2, 3], [[1], [2], [3]])
    rep = check_equivariance(random_program(0), g, [next(iter(enumerate_sn(3)))])
    assert rep.passed and rep.max_violation == 0


@pytest.mark.parametrize("seed", range(3))
def test_random_program_equivariant_over_s4(seed):
    g = sample_graphs(4, 1, 1, seed)[0]
    rep = check_equivariance(random_program(seed), g, list(enumerate_sn(4)))
    assert rep.passed and rep.max_violation == 0 and rep.permutations == 24


@given(st.data())
def test_equivariance_property(data):
    g = data.draw(exact_graphs(n_min=2, n_max=5, d=1))
    p = data.draw(permutations_of(g.n))
    prog = random_program(data.draw(st.integers(0, 10**6)), (1, 2, 1))
    assert check_equivariance(prog, g, [p]).max_violation == 0


def test_float_equivariance_within_tolerance():
    g = sample_graphs(4, 1, 1, 0, scalar="float")[0]
    rep = check_equivariance(random_program(1), g, list(enumerate_sn(4)))
    assert rep.passed and rep.tolerance == 1e-9


def test_index_reading_program_is_caught():
    g = Graph.from_upper(3, [1, 2, 3], [[1], [2], [3]])
    rep = check_equivariance(index_reading_program(1, 3), g, list(enumerate_sn(3)))
    assert not rep.passed and rep.worst is not None


# --- orbit demos -----------------------------------------------------------------

def test_forced_errors_counts_minority_labels():
    assert forced_errors([(0, 1, 2)], [0, 1, 1]) == 1
    assert forced_errors([(0,), (1, 2)], [0, 1, 1]) == 0
    assert forced_errors([(0, 1, 2, 3, 4)], [0, 1, 2, 2, 1]) == 3


@pytest.mark.parametrize("seed", range(20))
def test_triangle_target_is_unreachable(seed):
    rep = orbit_equality_demo(random_program(seed, (1, 3, 1)), unit_triangle())
    assert rep.constant_on_orbits and rep.distinct_outputs == 1
    assert rep.targets == [0, 1, 1] and rep.impossible
    assert rep.mismatches >= 1


def test_ergs_twins_share_outputs():
    item = generate_with_meta(GenSpec("ERGS", 10, seed=7))
    g = item.graph
    a, b = item.meta["twins"]
    targets = shortest_paths_from(g, a, ADJACENCY)
    assert targets[a] == 0 and targets[b] > 0
    for seed in range(5):
        rep = orbit_equality_demo(random_program(seed, (1, 3, 1)), g, targets)
        out = run_gnn(random_program(seed, (1, 3, 1)), g)
        assert out[a] == out[b]
        assert rep.constant_on_orbits and rep.forced_errors >= 1


def test_cycle_graph_orbit_bound():
    g = ring(5)
    rep = orbit_equality_demo(random_program(0, (1, 3, 1)), g, shortest_paths_from(g, 0, ADJACENCY))
    # one orbit, so one output value against three distinct distances
    assert rep.orbits == [(0, 1, 2, 3, 4)]
    assert rep.distinct_outputs == 1 and rep.distinct_targets == 3
    assert rep.forced_errors == 3
