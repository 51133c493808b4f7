from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnncompat.compat import sample_graphs, unit_triangle
from gnncompat.gnn import GnnProgram, check_equivariance, run_gnn
from gnncompat.graph import Graph, Permutation, apply_iwfp, enumerate_sn, enumerate_stabilizer
from gnncompat.synth import (
    BasisFunction,
    CompatibilityViolation,
    UnseenBeta,
    beta,
    beta_all,
    beta_key,
    delta,
    find_stabilizer_map,
    fit_rho,
    intermediate_state_audit,
    permuted_closure,
    synthesize_gnn,
    verify_beta_delta_equivalence,
)
from gnncompat.zoo import lookup
from strategies import exact_graphs, permutations_of


@pytest.fixture(scope="module")
def bf3():
    return BasisFunction.standard(3, 1)


@pytest.fixture(scope="module")
def bf4():
    return BasisFunction.standard(4, 1)


# --- basis function and signatures ----------------------------------------------

def test_basis_dimensions(bf3):
    assert bf3.psi1.p == 2
    assert bf3.psi2.m == 1 + 1 + 2 and bf3.psi2.n == 2
    assert bf3.out_dim == 1 + 4 * 4 * 2
    assert len(beta(bf3, unit_triangle(), 0)) == bf3.out_dim


def test_basis_caps_and_shape_checks(bf3):
    with pytest.raises(ValueError):
        BasisFunction.standard(6, 1)
    with pytest.raises(ValueError):
        beta(bf3, sample_graphs(4, 1, 1, 0)[0], 0)
    with pytest.raises(TypeError):
        beta(bf3, Graph.from_upper(3, [1.0, 1.0, 1.0], [[1.0]] * 3), 0)


def test_symmetric_triangle_has_equal_basis_values(bf3):
    assert len(set(beta_all(bf3, unit_triangle()))) == 1
    assert delta(unit_triangle(), 0) == delta(unit_triangle(), 1) == delta(unit_triangle(), 2)


@given(st.data())
def test_basis_value_is_stabilizer_invariant(data):
    g = data.draw(exact_graphs(n_min=3, n_max=4, d=1, values=st.integers(0, 4)))
    bf = BasisFunction.standard(g.n, 1)
    i = data.draw(st.integers(0, g.n - 1))
    p = data.draw(st.sampled_from(list(enumerate_stabilizer(g.n, i))))
    h = apply_iwfp(g, p)
    assert beta(bf, g, i) == beta(bf, h, i)
    assert delta(g, i) == delta(h, i)


def test_non_isomorphic_triangles_differ(bf3):
    g = Graph.from_upper(3, [1, 2, 3], [[0], [0], [0]])
    h = Graph.from_upper(3, [1, 2, 4], [[0], [0], [0]])
    assert beta(bf3, g, 0) != beta(bf3, h, 0)


def test_signature_separates_path_nodes():
    g = Graph.from_upper(3, [1, 0, 2], [[0], [0], [0]])
    assert delta(g, 0) != delta(g, 1)


def test_relabelling_that_moves_the_node_changes_beta(bf4):
    g = Graph.from_upper(4, [1, 2, 3, 4, 5, 6], [[0], [1], [2], [3]])
    pairs = [(g, apply_iwfp(g, p)) for p in enumerate_sn(4) if p(0) != 0]
    rep = verify_beta_delta_equivalence(bf4, pairs, 0)
    assert rep.passed and rep.both_differ == len(pairs)


def test_beta_delta_equivalence_on_random_pairs(bf4):
    import random
    rng = random.Random(11)
    graphs = sample_graphs(4, 1, 100, seed=12)
    pairs = [(graphs[k], graphs[k + 1]) for k in range(0, 100, 2)]
    pairs += [(g, apply_iwfp(g, Permutation(tuple(rng.sample(range(4), 4))))) for g in graphs[:150]]
    rep = verify_beta_delta_equivalence(bf4, pairs, 0)
    assert rep.passed and rep.pairs == 150


def test_stabilizer_map_recovery(bf4):
    g = sample_graphs(4, 1, 1, seed=13)[0]
    p = Permutation((0, 3, 1, 2))
    found = find_stabilizer_map(g, apply_iwfp(g, p), 0)
    assert found is not None and apply_iwfp(g, found) == apply_iwfp(g, p)
    assert find_stabilizer_map(g, apply_iwfp(g, Permutation((1, 0, 2, 3))), 0) is None


def test_repeated_weights_break_stabilizer_recovery():
    """Known limitation at n = 5: with repeated weights two graphs can share
    beta_0 and the node signature at 0 without being related by any
    relabelling that fixes node 0. Node 0 joins everyone with weight 1 and
    the other nodes carry distinct features; the remaining edges form the
    matching {1-2, 3-4} in one graph and {1-3, 2-4} in the other."""
    def build(edges):
        w = [[0] * 5 for _ in range(5)]
        for j in range(1, 5):
            w[0][j] = w[j][0] = 1
        for a, b in edges:
            w[a][b] = w[b][a] = 1
        return Graph.from_rows(w, [[k] for k in range(5)], "rational")

    g, h = build([(1, 2), (3, 4)]), build([(1, 3), (2, 4)])
    bf = BasisFunction.standard(5, 1)
    assert g != h
    assert delta(g, 0) == delta(h, 0)
    assert beta(bf, g, 0) == beta(bf, h, 0)
    assert find_stabilizer_map(g, h, 0) is None


def test_beta_key_format():
    assert beta_key([Fraction(1, 2), 3, Fraction(-4, 6)]) == "3|1/2|3/1|-2/3"


# --- rho and synthesis -----------------------------------------------------------

def test_rho_for_degree_has_no_collisions(bf3):
    rho = fit_rho(lookup("degree"), bf3, sample_graphs(3, 1, 30, seed=0))
    assert rho.frozen and 0 < len(rho) <= 90
    with pytest.raises(RuntimeError):
        rho.register("x", (0,), {})


def test_rho_refutes_distance_to_node1(bf3):
    calib = sample_graphs(3, 1, 5, seed=0) + [unit_triangle()]
    with pytest.raises(CompatibilityViolation) as info:
        fit_rho(lookup("sp1"), bf3, calib)
    exc = info.value
    assert {exc.first["target"], exc.second["target"]} == {(0,), (1,)}
    assert exc.first["graph"] == exc.second["graph"] == 5


def test_feature_sum_permuted_copies_hit_existing_keys(bf3):
    calib = sample_graphs(3, 1, 10, seed=1)
    rho = fit_rho(lookup("featsum"), bf3, calib)
    closure = fit_rho(lookup("featsum"), bf3, permuted_closure(calib, list(enumerate_sn(3))))
    assert len(closure) == len(rho)
    assert closure.table == rho.table


def _synth(name, n, d, count, seed=0):
    bf = BasisFunction.standard(n, d)
    f = lookup(name)
    closure = permuted_closure(sample_graphs(n, d, count, seed), list(enumerate_sn(n)))
    return f, bf, closure, synthesize_gnn(f, bf, fit_rho(f, bf, closure))


def test_synthesized_degree_matches_oracle_everywhere():
    f, bf, closure, prog = _synth("degree", 3, 1, 30)
    assert prog.dims() == [1, 1 + 2, 1 + bf.psi2.p, 1]
    assert all(run_gnn(prog, g) == f(g) for g in closure)


def test_synthesized_min_cut_four_nodes():
    f, bf, closure, prog = _synth("mincut", 4, 1, 6)
    assert all(run_gnn(prog, g) == f(g) for g in closure)


def test_synthesized_program_rejects_unseen_graphs():
    f, bf, closure, prog = _synth("degree", 3, 1, 3)
    with pytest.raises(UnseenBeta):
        run_gnn(prog, Graph.from_upper(3, [97, 89, 83], [[7], [7], [7]]))


def test_synthesized_program_is_equivariant():
    f, bf, closure, prog = _synth("featsum", 3, 2, 4)
    for g in closure[::6]:
        assert check_equivariance(prog, g, list(enumerate_sn(3))).passed


def test_rho_mismatch_rejected(bf3):
    rho = fit_rho(lookup("degree"), bf3, [unit_triangle()])
    with pytest.raises(ValueError):
        synthesize_gnn(lookup("featsum"), bf3, rho)


def test_rho_json_is_sorted_and_exact(bf3):
    rho = fit_rho(lookup("degree"), bf3, [unit_triangle()])
    obj = json.loads(json.dumps(rho.to_json()))
    assert obj["entries"][0]["target"] == ["2"] and len(obj["entries"]) == 1


# --- intermediate states ---------------------------------------------------------

def test_audit_passes_on_calibration_graphs():
    f, bf, closure, prog = _synth("minsum", 3, 1, 5)
    assert all(intermediate_state_audit(prog, bf, g).passed for g in closure)


def test_audit_on_triangle_gives_equal_layer_two():
    bf = BasisFunction.standard(3, 1)
    prog = synthesize_gnn(lookup("degree"), bf, fit_rho(lookup("degree"), bf, [unit_triangle()]))
    history = run_gnn(prog, unit_triangle(), all_layers=True)
    assert len(set(history[2])) == 1


def test_weight_perturbation_moves_both_endpoints():
    f, bf, closure, prog = _synth("degree", 4, 1, 1)
    first_two = GnnProgram(prog.layers[:2], "encode")
    g = closure[0]
    before = run_gnn(first_two, g)
    after = run_gnn(first_two, g.with_weight(1, 2, g.w[1][2] + 1))
    assert before[1] != after[1] and before[2] != after[2]
