"""Seeded generators for the four benchmark graph families.

* ``ERG``  - Erdos-Renyi: each pair gets weight 1 with probability ``p_edge``.
* ``ERGS`` - ERG on ``n - 2`` nodes plus two twins wired to one shared random
  subset of the base nodes, with identical features.
* ``CG``   - a weight-1 ring.
* ``LCG``  - two concentric rings of ``n / 2`` nodes joined by rungs.

All weights are 0/1; zero means "no edge" for path problems (use
:data:`gnncompat.oracles.ADJACENCY`).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .graph import FLOAT, RATIONAL, Graph, node_orbits
from .rng import ALGORITHM, stream

FAMILIES = ("ERG", "ERGS", "CG", "LCG")
RATIONAL_GRID = 16


def default_p_edge(n: int) -> float:
    """0.1 as in the n=100 setting, raised at small n to stay connected."""
    return min(1.0, max(0.1, 2 * math.log(n) / n))


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    p_edge: float | None = None
    d: int = 1
    init: str = "identical"
    seed: int = 0
    scalar: str = RATIONAL

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.init not in ("identical", "random"):
            raise ValueError(f"init must be 'identical' or 'random', got {self.init!r}")
        if self.scalar not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown scalar kind {self.scalar!r}")
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        if self.p_edge is not None and not 0 <= self.p_edge <= 1:
            raise ValueError(f"p_edge={self.p_edge} is not a probability")
        if self.family == "ERGS" and self.n < 4:
            raise ValueError("ERGS needs n >= 4")
        if self.family == "LCG" and (self.n < 6 or self.n % 2):
            raise ValueError("LCG needs an even n >= 6")
        if self.family in ("ERG", "CG") and self.n < 3:
            raise ValueError(f"{self.family} needs n >= 3")

    @property
    def p(self) -> float:
        return default_p_edge(self.n) if self.p_edge is None else self.p_edge


@dataclass(frozen=True)
class Generated:
    graph: Graph
    meta: dict


def _features(spec: GenSpec, rng, twins: tuple[int, int] | None = None) -> list[list]:
    one = Fraction(1) if spec.scalar == RATIONAL else 1.0
    if spec.init == "identical":
        return [[one] * spec.d for _ in range(spec.n)]

    def draw():
        if spec.scalar == RATIONAL:
            return Fraction(rng.randint(0, RATIONAL_GRID), RATIONAL_GRID)
        return rng.random()

    rows = [[draw() for _ in range(spec.d)] for _ in range(spec.n)]
    if twins is not None:
        rows[twins[1]] = list(rows[twins[0]])
    return rows


def _erdos_renyi(w: list, nodes: range, p: float, rng) -> None:
    for i in nodes:
        for j in nodes:
            if i < j and rng.random() < p:
                w[i][j] = w[j][i] = 1


def generate_with_meta(spec: GenSpec) -> Generated:
    rng = stream(spec.seed, "gen", spec.family, spec.n)
    n = spec.n
    w = [[0] * n for _ in range(n)]
    meta = {"spec": asdict(spec), "p_edge": spec.p, "rng": ALGORITHM}
    twins = None
    if spec.family == "ERG":
        _erdos_renyi(w, range(n), spec.p, rng)
    elif spec.family == "ERGS":
        base = range(n - 2)
        _erdos_renyi(w, base, spec.p, rng)
        a, b = n - 2, n - 1
        shared: list[int] = []
        while not shared:
            shared = [k for k in base if rng.random() < 0.5]
        for k in shared:
            w[a][k] = w[k][a] = w[b][k] = w[k][b] = 1
        joined = rng.random() < 0.5
        if joined:
            w[a][b] = w[b][a] = 1
        twins = (a, b)
        meta.update(twins=[a, b], twin_neighbors=shared, twins_adjacent=joined)
    elif spec.family == "CG":
        for i in range(n):
            j = (i + 1) % n
            w[i][j] = w[j][i] = 1
    else:
        k = n // 2
        for i in range(k):
            for off in (0, k):
                a, b = off + i, off + (i + 1) % k
                w[a][b] = w[b][a] = 1
            w[i][i + k] = w[i + k][i] = 1
    x = _features(spec, rng, twins)
    return Generated(Graph.from_rows(w, x, spec.scalar), meta)


def generate(spec: GenSpec) -> Graph:
    return generate_with_meta(spec).graph


def generate_batch(spec: GenSpec, count: int) -> list[Generated]:
    """``count`` graphs; the i-th uses seed ``"<seed>/<i>"`` (labelled split)."""
    out = []
    for i in range(count):
        sub = GenSpec(spec.family, spec.n, spec.p_edge, spec.d, spec.init,
                      seed=int.from_bytes(stream(spec.seed, "batch", i).randbytes(8), "big"),
                      scalar=spec.scalar)
        out.append(generate_with_meta(sub))
    return out


def assert_symmetric_pair(g: Graph) -> tuple[int, int] | None:
    """Two distinct nodes in one automorphism orbit, or ``None`` if every
    orbit is a singleton. When several orbits qualify the last one is used,
    which for ERGS output is the orbit holding the twins."""
    big = [o for o in node_orbits(g) if len(o) > 1]
    if not big:
        return None
    orbit = max(big, key=lambda o: o[-1])
    return orbit[-2], orbit[-1]
