from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnncompat.generators import (
    FAMILIES,
    GenSpec,
    assert_symmetric_pair,
    default_p_edge,
    generate,
    generate_batch,
    generate_with_meta,
)
from gnncompat.graph import FLOAT, Graph, node_orbits
from strategies import ring


def _degrees(g):
    return [sum(row) for row in g.w]


def test_cycle_graph_of_five():
    g = generate(GenSpec("CG", 5))
    assert all(sorted(g.w[i]) == [0, 0, 0, 1, 1] for i in range(5))
    assert g.w[0][1] == g.w[4][0] == 1


def test_ladder_cycle_graph():
    g = generate(GenSpec("LCG", 8))
    assert _degrees(g) == [3] * 8
    assert g.w[0][4] == g.w[3][7] == 1
    assert len(node_orbits(g)) == 1


def test_ergs_twins_are_copies():
    n = 10
    item = generate_with_meta(GenSpec("ERGS", n, seed=3, init="random", d=2))
    g = item.graph
    a, b = n - 2, n - 1
    assert [g.w[a][k] for k in range(n - 2)] == [g.w[b][k] for k in range(n - 2)]
    assert g.x[a] == g.x[b]
    assert item.meta["twins"] == [a, b]
    assert item.meta["twin_neighbors"]
    assert assert_symmetric_pair(g) == (a, b)


@given(st.integers(0, 200), st.integers(4, 11))
def test_ergs_always_has_the_twin_pair(seed, n):
    g = generate(GenSpec("ERGS", n, seed=seed))
    assert assert_symmetric_pair(g) == (n - 2, n - 1)


def test_same_seed_same_graph():
    spec = GenSpec("ERG", 12, seed=42, init="random")
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(GenSpec("ERG", 12, seed=43, init="random"))


@given(st.sampled_from(FAMILIES), st.integers(0, 50), st.sampled_from(["identical", "random"]))
def test_generated_weights_are_binary(family, seed, init):
    n = 8
    g = generate(GenSpec(family, n, seed=seed, init=init))
    assert isinstance(g, Graph) and g.exact
    assert all(g.w[i][j] in (0, 1) for i in range(n) for j in range(n))
    assert all(g.w[i][i] == 0 for i in range(n))


def test_identical_init_features():
    g = generate(GenSpec("ERG", 6, d=3))
    assert all(row == (1, 1, 1) for row in g.x)


def test_float_features():
    g = generate(GenSpec("ERG", 6, init="random", scalar=FLOAT))
    assert g.scalar == FLOAT and isinstance(g.x[0][0], float)


def test_edge_probability_extremes():
    assert sum(generate(GenSpec("ERG", 7, p_edge=0.0)).upper()) == 0
    assert sum(generate(GenSpec("ERG", 7, p_edge=1.0)).upper()) == 21


def test_default_edge_probability():
    assert default_p_edge(100) == pytest.approx(0.1)
    assert default_p_edge(10) == pytest.approx(2 * 2.302585 / 10, rel=1e-5)


def test_batch_is_deterministic_and_varied():
    spec = GenSpec("ERG", 9, seed=1)
    a = [x.graph for x in generate_batch(spec, 5)]
    assert a == [x.graph for x in generate_batch(spec, 5)]
    assert len({tuple(g.upper()) for g in a}) > 1


@pytest.mark.parametrize("kwargs", [
    dict(family="XYZ", n=5), dict(family="ERG", n=5, p_edge=1.5), dict(family="LCG", n=7),
    dict(family="ERGS", n=3), dict(family="ERG", n=5, init="zeros"), dict(family="CG", n=2),
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        GenSpec(**kwargs)


def test_symmetric_pair_on_cycle_and_asymmetric_graph():
    pair = assert_symmetric_pair(ring(5))
    assert pair is not None and pair[0] != pair[1]
    asym = Graph.from_upper(4, [1, 2, 3, 4, 5, 6], [[0]] * 4)
    assert assert_symmetric_pair(asym) is None


def test_erg_usually_has_no_symmetric_pair():
    hits = sum(assert_symmetric_pair(generate(GenSpec("ERG", 9, init="random", seed=s, p_edge=0.5)))
               is None for s in range(20))
    assert hits >= 10
