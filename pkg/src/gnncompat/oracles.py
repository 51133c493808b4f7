"""Exact ground-truth solvers: single-source shortest paths and global min-cut.

Both work in whatever scalar kind the graph carries, so on rational graphs
the answers are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .graph import CapExceeded, Graph

MIN_CUT_BRUTE_CAP = 16
PATH_ENUM_CAP = 10


@dataclass(frozen=True)
class EdgeSemantics:
    """How weights map to edges for path problems.

    ``sentinel`` marks non-edges: any weight at or above it is skipped, and
    unreachable nodes get it as their distance. ``None`` means the default
    ``1 + sum |w_ij|`` over unordered pairs, which no real weight reaches.
    With ``zero_is_absent`` a zero weight is a non-edge rather than a free one
    (for 0/1 adjacency graphs).
    """

    sentinel: object = None
    zero_is_absent: bool = False

    def resolve(self, g: Graph):
        if self.sentinel is not None:
            return self.sentinel
        return 1 + sum(abs(v) for v in g.upper())

    def edges(self, g: Graph) -> list[tuple[int, int, object]]:
        sentinel = self.resolve(g)
        out = []
        for i in range(g.n):
            for j in range(i + 1, g.n):
                w = g.w[i][j]
                if w >= sentinel or (self.zero_is_absent and w == 0):
                    continue
                if w < 0:
                    raise ValueError(f"negative weight {w} on edge ({i}, {j})")
                out.append((i, j, w))
        return out


ADJACENCY = EdgeSemantics(zero_is_absent=True)


def shortest_paths_from(g: Graph, source: int,
                        semantics: EdgeSemantics = EdgeSemantics()) -> list:
    """Bellman-Ford distances from every node to ``source``."""
    if not 0 <= source < g.n:
        raise ValueError(f"source {source} out of range for n={g.n}")
    sentinel = semantics.resolve(g)
    edges = semantics.edges(g)
    dist: list = [None] * g.n
    dist[source] = 0 * sentinel
    for _ in range(g.n - 1):
        changed = False
        for i, j, w in edges:
            for a, b in ((i, j), (j, i)):
                if dist[a] is not None and (dist[b] is None or dist[a] + w < dist[b]):
                    dist[b] = dist[a] + w
                    changed = True
        if not changed:
            break
    return [sentinel if v is None else v for v in dist]


def shortest_paths_bruteforce(g: Graph, source: int,
                              semantics: EdgeSemantics = EdgeSemantics()) -> list:
    """Minimum over all simple paths to ``source``, by exhaustive DFS."""
    if g.n > PATH_ENUM_CAP:
        raise CapExceeded(f"n={g.n} exceeds the path enumeration cap of {PATH_ENUM_CAP}")
    sentinel = semantics.resolve(g)
    adj: dict[int, list] = {k: [] for k in range(g.n)}
    for i, j, w in semantics.edges(g):
        adj[i].append((j, w))
        adj[j].append((i, w))
    best: list = [None] * g.n
    best[source] = 0 * sentinel
    seen = [False] * g.n

    def walk(node: int, length) -> None:
        if best[node] is None or length < best[node]:
            best[node] = length
        seen[node] = True
        for nxt, w in adj[node]:
            if not seen[nxt]:
                walk(nxt, length + w)
        seen[node] = False

    walk(source, 0 * sentinel)
    return [sentinel if v is None else v for v in best]


@dataclass(frozen=True)
class CutValue:
    value: object
    witness: tuple

    def crossing_weight(self, g: Graph):
        return cut_weight(g, self.witness)


def cut_weight(g: Graph, side: Sequence[int]):
    inside = set(side)
    if not inside or len(inside) == g.n:
        raise ValueError("a cut side must be a proper nonempty subset")
    return sum((g.w[r][s] for r in inside for s in range(g.n) if s not in inside),
               0 * g.w[0][1])


def min_cut_bruteforce(g: Graph) -> CutValue:
    """Enumerate the ``2**(n-1) - 1`` bipartitions via the side holding node 0.

    Ties go to the lexicographically smallest side.
    """
    if g.n > MIN_CUT_BRUTE_CAP:
        raise CapExceeded(f"n={g.n} exceeds the brute-force min-cut cap of {MIN_CUT_BRUTE_CAP}")
    best = None
    rest = range(1, g.n)
    for size in range(0, g.n - 1):
        for extra in itertools.combinations(rest, size):
            side = (0, *extra)
            value = cut_weight(g, side)
            if best is None or (value, side) < (best.value, best.witness):
                best = CutValue(value, side)
    return best


def min_cut_stoer_wagner(g: Graph) -> CutValue:
    """Stoer-Wagner global minimum cut, O(n^3) with a dense adjacency matrix."""
    n = g.n
    w = [list(row) for row in g.w]
    if any(w[i][j] < 0 for i in range(n) for j in range(n)):
        raise ValueError("Stoer-Wagner needs nonnegative weights")
    groups = [[k] for k in range(n)]
    active = list(range(n))
    best = None
    while len(active) > 1:
        # maximum adjacency ordering; ties go to the smallest index
        added = [active[0]]
        remaining = sorted(active[1:])
        weight = {v: w[active[0]][v] for v in remaining}
        while remaining:
            nxt = max(remaining, key=lambda v: weight[v])
            remaining.remove(nxt)
            added.append(nxt)
            for v in remaining:
                weight[v] += w[nxt][v]
        prev, last = added[-2], added[-1]
        phase_value = sum((w[last][v] for v in active if v != last), 0 * w[0][1])
        if best is None or phase_value < best[0]:
            best = (phase_value, tuple(sorted(groups[last])))
        # merge last into prev
        for v in active:
            if v not in (prev, last):
                w[prev][v] += w[last][v]
                w[v][prev] = w[prev][v]
        groups[prev].extend(groups[last])
        active.remove(last)
    value, side = best
    if 0 not in side:
        side = tuple(k for k in range(n) if k not in side)
    return CutValue(value, side)
