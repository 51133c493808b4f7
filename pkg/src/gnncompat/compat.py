"""Permutation-compatibility checks for graph functions on sampled graphs.

``F`` is compatible when ``f_{p(i)}(W, X) == f_i(sigma_p(W), lambda_p(X))``
for every permutation ``p``, node ``i`` and graph. The quantifier over graphs
can only be sampled, so a passing report says "compatible on sample" and
never more. A failing report carries a replayable witness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .graph import (
    RATIONAL,
    Graph,
    Permutation,
    apply_iwfp,
    enumerate_sn,
    scalar_to_json,
)
from .rng import stream
from .zoo import GraphFunction

COMPATIBLE = "compatible-on-sample"
INCOMPATIBLE = "incompatible"


@dataclass(frozen=True)
class Tolerance:
    """``|a - b| <= max(abs_floor, rel * max(|a|, |b|))``; ``exact`` means ``a == b``."""

    rel: float = 1e-9
    abs_floor: float = 1e-12
    exact: bool = False

    @classmethod
    def for_graphs(cls, graphs: Sequence[Graph]) -> "Tolerance":
        return EXACT if all(g.exact for g in graphs) else cls()

    def close(self, a, b) -> bool:
        if len(a) != len(b):
            return False
        for x, y in zip(a, b):
            if self.exact or not (isinstance(x, float) or isinstance(y, float)):
                if x != y:
                    return False
            else:
                if abs(x - y) > max(self.abs_floor, self.rel * max(abs(x), abs(y))):
                    return False
        return True

    def to_json(self):
        return "exact" if self.exact else {"rel": self.rel, "abs": self.abs_floor}


EXACT = Tolerance(0.0, 0.0, True)


class DeclarationViolation(ValueError):
    """A function declared weight-oblivious changed output when W changed."""


@dataclass(frozen=True)
class Witness:
    graph: Graph
    perm: Permutation
    node: int
    lhs: tuple
    rhs: tuple
    condition: str

    def replay(self, f: GraphFunction, tol: Tolerance) -> bool:
        """True when re-evaluating still violates the constraint."""
        lhs, rhs = _constraint_sides(f, self.graph, self.perm, self.node, self.condition)
        return not tol.close(lhs, rhs)

    def to_json(self) -> dict:
        return {
            "graph": self.graph.to_json(),
            "perm": self.perm.one_based(),
            "node": self.node + 1,
            "lhs": [_j(v) for v in self.lhs],
            "rhs": [_j(v) for v in self.rhs],
            "condition": self.condition,
        }


def _j(v):
    return v if isinstance(v, float) else scalar_to_json(v)


def _constraint_sides(f, g, p, i, condition):
    """Recompute both sides of one constraint from scratch."""
    if condition == "full":
        return f(g)[p(i)], f(apply_iwfp(g, p))[i]
    if condition == "stabilizer":
        return f(apply_iwfp(g, p))[i], f(g)[i]
    if condition == "swap":
        # p swaps i with j; f_j(W, X) against f_i at the swapped graph
        j = next(k for k in range(g.n) if p(k) != k and k != i)
        return f(g)[j], f(apply_iwfp(g, p))[i]
    if condition == "uniform-rows":
        rows = f(g)
        return rows[0], rows[i]
    if condition == "uniform-invariance":
        return f(g)[0], f(apply_iwfp(g, p))[0]
    if condition.startswith("feature-"):
        moved = Graph(g.w, apply_iwfp(g, p).x, g.scalar)
        if condition == "feature-stabilizer":
            return f(moved)[i], f(g)[i]
        j = next(k for k in range(g.n) if p(k) != k and k != i)
        return f(g)[j], f(moved)[i]
    raise ValueError(f"unknown condition {condition!r}")


@dataclass
class CompatReport:
    function: str
    mode: str
    verdict: str = COMPATIBLE
    witness: Witness | None = None
    constraints_checked: int = 0
    graphs_sampled: int = 0
    tolerance: Tolerance = EXACT
    note: str = ""

    @property
    def compatible(self) -> bool:
        return self.verdict == COMPATIBLE

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "mode": self.mode,
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_json(),
            "constraints_checked": self.constraints_checked,
            "graphs_sampled": self.graphs_sampled,
            "tolerance": self.tolerance.to_json(),
            "note": self.note,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _common_shape(graphs: Sequence[Graph]) -> tuple[int, int]:
    if not graphs:
        raise ValueError("need at least one graph")
    n, d = graphs[0].n, graphs[0].d
    if any(g.n != n or g.d != d for g in graphs):
        raise ValueError("all graphs must share (n, d)")
    return n, d


class _Run:
    """Shared bookkeeping: counts constraints, stops at the first violation."""

    def __init__(self, f: GraphFunction, mode: str, graphs, tol: Tolerance | None):
        self.f = f
        self.tol = Tolerance.for_graphs(graphs) if tol is None else tol
        self.report = CompatReport(f.name, mode, tolerance=self.tol)

    def check(self, g, p, i, lhs, rhs, condition) -> bool:
        self.report.constraints_checked += 1
        if self.tol.close(lhs, rhs):
            return True
        self.report.verdict = INCOMPATIBLE
        self.report.witness = Witness(g, p, i, tuple(lhs), tuple(rhs), condition)
        return False


def check_full(f: GraphFunction, graphs: Sequence[Graph], tol: Tolerance | None = None,
               cap: int | None = None) -> CompatReport:
    """Every ``(graph, p in S_n, i)``: ``n * n!`` constraints per graph."""
    n, _ = _common_shape(graphs)
    run = _Run(f, "full", graphs, tol)
    perms = list(enumerate_sn(n, cap))
    for g in graphs:
        run.report.graphs_sampled += 1
        base = f(g)
        for p in perms:
            moved = f(apply_iwfp(g, p))
            for i in range(n):
                if not run.check(g, p, i, base[p(i)], moved[i], "full"):
                    return run.report
    return run.report


def check_reduced(f: GraphFunction, graphs: Sequence[Graph], i0: int = 0,
                  tol: Tolerance | None = None) -> CompatReport:
    """Swap conditions at one node ``i0``: ``n(n-1)/2`` constraints per graph.

    ``f_{i0}`` must be unchanged by every swap of two other nodes, and every
    ``f_j`` must equal ``f_{i0}`` after swapping ``i0`` with ``j``.
    """
    n, _ = _common_shape(graphs)
    if not 0 <= i0 < n:
        raise ValueError(f"i0={i0} out of range for n={n}")
    run = _Run(f, "reduced", graphs, tol)
    others = [k for k in range(n) if k != i0]
    for g in graphs:
        run.report.graphs_sampled += 1
        base = f(g)
        for a, r in enumerate(others):
            for s in others[a + 1:]:
                p = Permutation.swap(n, r, s)
                if not run.check(g, p, i0, f(apply_iwfp(g, p))[i0], base[i0], "stabilizer"):
                    return run.report
        for j in others:
            p = Permutation.swap(n, i0, j)
            if not run.check(g, p, i0, base[j], f(apply_iwfp(g, p))[i0], "swap"):
                return run.report
    return run.report


def _assert_weight_oblivious(f: GraphFunction, graphs: Sequence[Graph], seed: int) -> None:
    for t, g in enumerate(graphs):
        rng = stream(seed, "perturb", t)
        if g.exact:
            upper = [Fraction(rng.randint(0, 10)) for _ in g.upper()]
        else:
            upper = [rng.random() for _ in g.upper()]
        other = Graph.from_upper(g.n, upper, g.x, g.scalar)
        if f(other) != f(g):
            raise DeclarationViolation(f"{f.name} is declared weight-oblivious but its "
                                       f"output changed when W was replaced (graph {t})")


def check_feature_only(f: GraphFunction, graphs: Sequence[Graph], tol: Tolerance | None = None,
                       i0: int = 0, seed: int = 0) -> CompatReport:
    """The reduced check for functions of ``X`` alone, permuting only features.

    The weight-oblivious declaration is verified first: replacing ``W`` by a
    random matrix must leave the output exactly unchanged.
    """
    n, _ = _common_shape(graphs)
    if not f.weight_oblivious:
        raise DeclarationViolation(f"{f.name} is not declared weight-oblivious")
    _assert_weight_oblivious(f, graphs, seed)
    run = _Run(f, "feature", graphs, tol)
    others = [k for k in range(n) if k != i0]
    for g in graphs:
        run.report.graphs_sampled += 1
        base = f(g)

        def permuted(p):
            return f(Graph(g.w, apply_iwfp(g, p).x, g.scalar))

        for a, r in enumerate(others):
            for s in others[a + 1:]:
                p = Permutation.swap(n, r, s)
                if not run.check(g, p, i0, permuted(p)[i0], base[i0], "feature-stabilizer"):
                    return run.report
        for j in others:
            p = Permutation.swap(n, i0, j)
            if not run.check(g, p, i0, base[j], permuted(p)[i0], "feature-swap"):
                return run.report
    return run.report


def check_uniform_invariant(f: GraphFunction, graphs: Sequence[Graph],
                            tol: Tolerance | None = None, cap: int | None = None) -> CompatReport:
    """Equal rows on every graph, and the common value unchanged by every
    weight-feature permutation. Passing both is a sufficient condition."""
    n, _ = _common_shape(graphs)
    run = _Run(f, "uniform", graphs, tol)
    ident = Permutation.identity(n)
    perms = list(enumerate_sn(n, cap))
    for g in graphs:
        run.report.graphs_sampled += 1
        rows = f(g)
        for i in range(1, n):
            if not run.check(g, ident, i, rows[0], rows[i], "uniform-rows"):
                return run.report
        for p in perms:
            if not run.check(g, p, 0, rows[0], f(apply_iwfp(g, p))[0], "uniform-invariance"):
                return run.report
    run.report.note = "uniform and automorphism-invariant on every sampled graph"
    return run.report


def necessary_falsifier(f: GraphFunction, graphs: Sequence[Graph], tol: Tolerance | None = None,
                        samples_per_node: int = 4, seed: int = 0) -> CompatReport:
    """Cheap necessary conditions; any failure is a definitive witness.

    Per graph: ``f_i`` unchanged under sampled stabilizer permutations of each
    ``i``, then ``f_j(W, X) == f_i`` at the ``(i, j)``-swapped graph for every
    ordered pair.
    """
    n, _ = _common_shape(graphs)
    run = _Run(f, "falsify", graphs, tol)
    for t, g in enumerate(graphs):
        run.report.graphs_sampled += 1
        base = f(g)
        rng = stream(seed, "falsify", t)
        for i in range(n):
            others = [k for k in range(n) if k != i]
            for _ in range(samples_per_node):
                shuffled = others[:]
                rng.shuffle(shuffled)
                image = shuffled[:i] + [i] + shuffled[i:]
                p = Permutation(tuple(image))
                if not run.check(g, p, i, f(apply_iwfp(g, p))[i], base[i], "stabilizer"):
                    return run.report
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                p = Permutation.swap(n, i, j)
                if not run.check(g, p, i, base[j], f(apply_iwfp(g, p))[i], "swap"):
                    return run.report
    run.report.note = "necessary conditions only; passing is inconclusive"
    return run.report


# --- sampling ----------------------------------------------------------------------

def sample_graphs(n: int, d: int, count: int, seed: int, scalar: str = RATIONAL,
                  engineered_every: int = 5) -> list[Graph]:
    """Random graphs with integer weights/features in [0, 10] (or uniform
    [0, 1] floats). Every ``engineered_every``-th graph is made near-symmetric:
    the last node becomes a twin of the one before it, or all features are
    set equal, since violations concentrate on symmetric instances."""
    out = []
    for t in range(count):
        rng = stream(seed, "sample", n, d, t)
        draw = (lambda: Fraction(rng.randint(0, 10))) if scalar == RATIONAL else rng.random
        w = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                w[i][j] = w[j][i] = draw()
        x = [[draw() for _ in range(d)] for _ in range(n)]
        if engineered_every and t % engineered_every == engineered_every - 1:
            if t // engineered_every % 2 == 0 and n >= 3:
                a, b = n - 2, n - 1
                for k in range(n - 2):
                    w[b][k] = w[k][b] = w[a][k]
                x[b] = list(x[a])
            else:
                x = [list(x[0]) for _ in range(n)]
        out.append(Graph.from_rows(w, x, scalar))
    return out


def unit_triangle(d: int = 1) -> Graph:
    return Graph.from_rows([[0, 1, 1], [1, 0, 1], [1, 1, 0]], [[1] * d for _ in range(3)],
                           RATIONAL)

