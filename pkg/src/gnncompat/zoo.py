"""The catalogue of example graph functions and the interface they share."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .graph import Graph
from .oracles import (
    EdgeSemantics,
    MIN_CUT_BRUTE_CAP,
    min_cut_bruteforce,
    min_cut_stoer_wagner,
    shortest_paths_from,
)

BRUTE_FORCE_MIN_CUT_UP_TO = 12


class NotApplicable(ValueError):
    """The function is not defined for graphs of this (n, d)."""


@dataclass(frozen=True)
class GraphFunction:
    """A node-function bundle ``F = (f_1, ..., f_n)``.

    ``fn`` maps a graph to one output row per node. ``out_dim`` of ``None``
    means the output dimension equals the feature dimension ``d``.
    ``compatible`` is the expected verdict, kept for cross-checking.
    """

    name: str
    fn: Callable[[Graph], list]
    out_dim: int | None = 1
    compatible: bool = True
    only_n: int | None = None
    only_d: int | None = None
    min_d: int = 0
    weight_oblivious: bool = False
    uniform: bool = False
    description: str = field(default="", compare=False)

    def applicable(self, n: int, d: int) -> bool:
        if self.only_n is not None and n != self.only_n:
            return False
        if self.only_d is not None and d != self.only_d:
            return False
        return d >= self.min_d

    def output_dim(self, d: int) -> int:
        return d if self.out_dim is None else self.out_dim

    def __call__(self, g: Graph) -> tuple:
        if not self.applicable(g.n, g.d):
            raise NotApplicable(f"{self.name} is not defined for n={g.n}, d={g.d}")
        rows = tuple(tuple(r) for r in self.fn(g))
        k = self.output_dim(g.d)
        if len(rows) != g.n or any(len(r) != k for r in rows):
            raise ValueError(f"{self.name} produced a malformed output")
        return rows


def _zero(g: Graph):
    return 0 * g.w[0][1]


def feature_oblivious(g: Graph) -> list:
    w = g.w
    return [(_zero(g),), (w[0][1] + w[1][2],), (math.sin(w[0][2] + w[1][2]),)]


def feature_identity(g: Graph) -> list:
    return [tuple(row) for row in g.x]


def feature_sum(g: Graph) -> list:
    total = tuple(sum(col, _zero(g)) for col in zip(*g.x))
    return [total] * g.n


def min_sum(g: Graph) -> list:
    xs = [row[0] for row in g.x]
    total = sum(xs, _zero(g))
    return [(min(v, total - v),) for v in xs]


def degrees(g: Graph) -> list:
    return [sum(g.w[i][j] for j in range(g.n) if j != i) for i in range(g.n)]


def degree(g: Graph) -> list:
    return [(v,) for v in degrees(g)]


def max_neighbor_degree(g: Graph) -> list:
    deg = degrees(g)
    return [(max(deg[j] for j in range(g.n) if j != i),) for i in range(g.n)]


def distance_to_node1(g: Graph, semantics: EdgeSemantics = EdgeSemantics()) -> list:
    return [(v,) for v in shortest_paths_from(g, 0, semantics)]


def min_cut_value(g: Graph):
    if g.n <= BRUTE_FORCE_MIN_CUT_UP_TO and g.n <= MIN_CUT_BRUTE_CAP:
        return min_cut_bruteforce(g).value
    return min_cut_stoer_wagner(g).value


def min_cut_function(g: Graph) -> list:
    return [(min_cut_value(g),)] * g.n


def max_feature(g: Graph) -> list:
    """Largest feature entry broadcast to every node (a uniform invariant)."""
    top = max(v for row in g.x for v in row)
    return [(top,)] * g.n


def shifted_feature(g: Graph) -> list:
    """``f_i = x_{i+1 mod n}``; weight oblivious but not compatible."""
    return [tuple(g.x[(i + 1) % g.n]) for i in range(g.n)]


def node_index(g: Graph) -> list:
    """The raw node index; depends on labelling, so never compatible."""
    return [(i,) for i in range(g.n)]


_ZOO = (
    GraphFunction("oblivious3", feature_oblivious, only_n=3, compatible=False,
                  description="f1 = 0, f2 = w12 + w23, f3 = sin(w13 + w23)"),
    GraphFunction("identity", feature_identity, out_dim=None, weight_oblivious=True,
                  description="f_i = x_i"),
    GraphFunction("featsum", feature_sum, out_dim=None, weight_oblivious=True, uniform=True,
                  description="f_i = sum of all features"),
    GraphFunction("minsum", min_sum, only_d=1, weight_oblivious=True,
                  description="f_i = min(x_i, sum_{j != i} x_j)"),
    GraphFunction("degree", degree, description="f_i = sum_j w_ij"),
    GraphFunction("maxnbrdeg", max_neighbor_degree,
                  description="f_i = max over j != i of deg(j)"),
    GraphFunction("sp1", distance_to_node1, compatible=False,
                  description="shortest-path length from node i to node 1"),
    GraphFunction("mincut", min_cut_function, uniform=True,
                  description="global minimum cut value at every node"),
)

_EXTRAS = (
    GraphFunction("maxfeat", max_feature, min_d=1, weight_oblivious=True, uniform=True,
                  description="max entry of X at every node"),
    GraphFunction("shifted", shifted_feature, out_dim=None, compatible=False,
                  weight_oblivious=True, description="f_i = x_{i+1 mod n}"),
    GraphFunction("nodeindex", node_index, compatible=False,
                  description="f_i = i"),
)


def zoo() -> dict[str, GraphFunction]:
    """The eight example functions, keyed by name, in catalogue order."""
    return {f.name: f for f in _ZOO}


def catalog() -> dict[str, GraphFunction]:
    """The zoo plus the contrast functions used in tests and demos."""
    return {f.name: f for f in _ZOO + _EXTRAS}


def lookup(name: str, n: int | None = None, d: int | None = None) -> GraphFunction:
    try:
        f = catalog()[name]
    except KeyError:
        raise KeyError(f"unknown function {name!r}; choose from {sorted(catalog())}") from None
    if n is not None and d is not None and not f.applicable(n, d):
        raise NotApplicable(f"{name} is not defined for n={n}, d={d}")
    return f
