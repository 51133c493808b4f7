"""Weighted complete graphs, node permutations and the weight-feature
permutations they induce.

A graph here is always a full ``n x n`` symmetric weight matrix with a zero
diagonal plus an ``n x d`` feature matrix. Every entry of one graph has the
same scalar kind: exact rationals (``fractions.Fraction``) or floats.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Sequence, Union

Scalar = Union[Fraction, float]

RATIONAL = "rational"
FLOAT = "float"

DEFAULT_PERM_CAP = 8
DEFAULT_ORBIT_CAP = 24


def perm_cap() -> int:
    """Largest n for which S_n is enumerated (``GNNCOMPAT_PERM_CAP`` overrides)."""
    return int(os.environ.get("GNNCOMPAT_PERM_CAP", DEFAULT_PERM_CAP))


class CapExceeded(ValueError):
    """Raised when an exhaustive search is asked for more than its cap allows."""


def to_scalar(value, kind: str) -> Scalar:
    """Coerce ``value`` into the given scalar kind.

    Ints and ``"p/q"`` strings are accepted in both kinds. Floats are refused
    in rational mode, and exact rationals are refused in float mode, so a
    graph can never silently mix kinds.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if kind == RATIONAL:
        if isinstance(value, float):
            raise TypeError(f"float entry {value!r} in a rational graph")
        if isinstance(value, (int, Rational, str)):
            return Fraction(value)
        raise TypeError(f"cannot read {value!r} as a rational")
    if kind == FLOAT:
        if isinstance(value, Fraction):
            raise TypeError(f"rational entry {value!r} in a float graph")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            return float(Fraction(value))
        raise TypeError(f"cannot read {value!r} as a float")
    raise ValueError(f"unknown scalar kind {kind!r}")


def infer_kind(values: Iterable) -> str:
    has_float = has_exact = False
    for v in values:
        if isinstance(v, float):
            has_float = True
        elif isinstance(v, (Fraction, str)):
            has_exact = True
    if has_float and has_exact:
        raise TypeError("mixed float and rational entries")
    return FLOAT if has_float else RATIONAL


def scalar_to_json(v):
    if isinstance(v, float):
        return v
    if isinstance(v, Rational):
        return str(Fraction(v))
    raise TypeError(f"not a scalar: {v!r}")


@dataclass(frozen=True)
class Graph:
    """Weighted complete graph on nodes ``0..n-1``.

    ``w`` and ``x`` are tuples of row tuples. Use :meth:`from_rows` or
    :meth:`from_upper` rather than the raw constructor when entries still
    need coercion.
    """

    w: tuple
    x: tuple
    scalar: str = RATIONAL

    def __post_init__(self):
        n = len(self.w)
        if n < 2:
            raise ValueError("a graph needs at least 2 nodes")
        if len(self.x) != n:
            raise ValueError(f"feature matrix has {len(self.x)} rows, expected {n}")
        if any(len(row) != n for row in self.w):
            raise ValueError("weight matrix is not square")
        d = len(self.x[0])
        if any(len(row) != d for row in self.x):
            raise ValueError("feature rows have unequal length")
        for i in range(n):
            if self.w[i][i] != 0:
                raise ValueError(f"nonzero diagonal entry at node {i}")
            for j in range(i + 1, n):
                if self.w[i][j] != self.w[j][i]:
                    raise ValueError(f"weight matrix is not symmetric at ({i}, {j})")
        bad = float if self.scalar == RATIONAL else Fraction
        for v in itertools.chain(itertools.chain(*self.w), itertools.chain(*self.x)):
            if isinstance(v, bad):
                raise TypeError(f"entry {v!r} does not match scalar kind {self.scalar}")

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def d(self) -> int:
        return len(self.x[0])

    @property
    def exact(self) -> bool:
        return self.scalar == RATIONAL

    @classmethod
    def from_rows(cls, w: Sequence[Sequence], x: Sequence[Sequence] | None = None,
                  scalar: str | None = None) -> "Graph":
        n = len(w)
        if x is None:
            x = [[] for _ in range(n)]
        if scalar is None:
            scalar = infer_kind(itertools.chain(*w, *x))
        ww = tuple(tuple(to_scalar(v, scalar) for v in row) for row in w)
        xx = tuple(tuple(to_scalar(v, scalar) for v in row) for row in x)
        return cls(ww, xx, scalar)

    @classmethod
    def from_upper(cls, n: int, w_upper: Sequence, x: Sequence[Sequence] | None = None,
                   scalar: str | None = None) -> "Graph":
        """Build from the row-major strict upper triangle of ``W``."""
        expected = n * (n - 1) // 2
        if len(w_upper) != expected:
            raise ValueError(f"w_upper has {len(w_upper)} entries, expected {expected}")
        w = [[0] * n for _ in range(n)]
        it = iter(w_upper)
        for i in range(n):
            for j in range(i + 1, n):
                w[i][j] = w[j][i] = next(it)
        if scalar is None:
            scalar = infer_kind(itertools.chain(w_upper, *(x or [])))
        return cls.from_rows(w, x, scalar)

    def upper(self) -> list:
        return [self.w[i][j] for i in range(self.n) for j in range(i + 1, self.n)]

    def with_weight(self, i: int, j: int, value) -> "Graph":
        w = [list(row) for row in self.w]
        w[i][j] = w[j][i] = to_scalar(value, self.scalar)
        return Graph(tuple(map(tuple, w)), self.x, self.scalar)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "scalar": self.scalar,
            "w_upper": [scalar_to_json(v) for v in self.upper()],
            "x": [[scalar_to_json(v) for v in row] for row in self.x],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        n, d = int(obj["n"]), int(obj["d"])
        scalar = obj.get("scalar", RATIONAL)
        x = obj.get("x") or [[] for _ in range(n)]
        if len(x) != n or any(len(row) != d for row in x):
            raise ValueError(f"feature matrix does not match n={n}, d={d}")
        if "w" in obj:
            # full-matrix variant; the constructor rejects asymmetry and diagonals
            return cls.from_rows(obj["w"], x, scalar)
        return cls.from_upper(n, obj["w_upper"], x, scalar)


def dumps_graph(g: Graph) -> str:
    return json.dumps(g.to_json(), sort_keys=True)


def loads_graph(text: str) -> Graph:
    return Graph.from_json(json.loads(text))


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0, ..., n-1}``; ``p(i) == p.image[i]``."""

    image: tuple

    def __post_init__(self):
        if sorted(self.image) != list(range(len(self.image))):
            raise ValueError(f"{self.image!r} is not a permutation")

    def __call__(self, i: int) -> int:
        return self.image[i]

    def __len__(self) -> int:
        return len(self.image)

    @property
    def n(self) -> int:
        return len(self.image)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def swap(cls, n: int, i: int, j: int) -> "Permutation":
        image = list(range(n))
        image[i], image[j] = j, i
        return cls(tuple(image))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, pi in enumerate(self.image):
            inv[pi] = i
        return Permutation(tuple(inv))

    def is_identity(self) -> bool:
        return all(i == p for i, p in enumerate(self.image))

    def one_based(self) -> list[int]:
        return [p + 1 for p in self.image]


def compose(p1: Permutation, p2: Permutation) -> Permutation:
    """``(p1 o p2)(i) = p1(p2(i))``."""
    if p1.n != p2.n:
        raise ValueError(f"cannot compose permutations of sizes {p1.n} and {p2.n}")
    return Permutation(tuple(p1.image[k] for k in p2.image))


def apply_iwfp(g: Graph, p: Permutation) -> Graph:
    """Return ``(sigma_p(W), lambda_p(X))`` with ``W'[i][j] = W[p(i)][p(j)]``
    and ``X'[i] = X[p(i)]``."""
    if p.n != g.n:
        raise ValueError(f"permutation of size {p.n} applied to a graph with n={g.n}")
    im = p.image
    w = tuple(tuple(g.w[a][b] for b in im) for a in im)
    x = tuple(g.x[a] for a in im)
    return Graph(w, x, g.scalar)


def _check_cap(n: int, cap: int | None) -> None:
    cap = perm_cap() if cap is None else cap
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the permutation enumeration cap of {cap}")


def enumerate_sn(n: int, cap: int | None = None) -> Iterator[Permutation]:
    """All ``n!`` permutations in lexicographic order of their images."""
    _check_cap(n, cap)
    for image in itertools.permutations(range(n)):
        yield Permutation(image)


def enumerate_stabilizer(n: int, i: int, cap: int | None = None) -> Iterator[Permutation]:
    """The ``(n-1)!`` permutations fixing node ``i``, lexicographic order."""
    if not 0 <= i < n:
        raise ValueError(f"node {i} out of range for n={n}")
    _check_cap(n, cap)
    others = [k for k in range(n) if k != i]
    for rest in itertools.permutations(others):
        image = list(rest)
        image.insert(i, i)
        yield Permutation(tuple(image))


def is_automorphism(g: Graph, p: Permutation) -> bool:
    im = p.image
    if any(g.x[im[a]] != g.x[a] for a in range(g.n)):
        return False
    return all(g.w[im[a]][im[b]] == g.w[a][b]
               for a in range(g.n) for b in range(a + 1, g.n))


def _find_automorphism(g: Graph, src: int, dst: int, colour: list) -> Permutation | None:
    """Backtracking search for an automorphism mapping ``src`` to ``dst``."""
    n = g.n
    image = [-1] * n
    used = [False] * n
    order = [src] + [k for k in range(n) if k != src]

    def consistent(a: int, b: int) -> bool:
        for k in range(n):
            if image[k] >= 0 and g.w[a][k] != g.w[b][image[k]]:
                return False
        return True

    def extend(pos: int) -> bool:
        if pos == n:
            return True
        a = order[pos]
        candidates = [dst] if pos == 0 else range(n)
        for b in candidates:
            if used[b] or colour[a] != colour[b] or not consistent(a, b):
                continue
            image[a], used[b] = b, True
            if extend(pos + 1):
                return True
            image[a], used[b] = -1, False
        return False

    if colour[src] != colour[dst] or not extend(0):
        return None
    return Permutation(tuple(image))


def node_orbits(g: Graph, cap: int = DEFAULT_ORBIT_CAP) -> list[tuple[int, ...]]:
    """Partition the nodes into orbits of the weight-feature automorphism group.

    Exact: uses backtracking over node assignments (pruned by a per-node
    invariant), which is equivalent to scanning all of S_n but feasible well
    beyond n = 8. Orbits are returned sorted, each as a sorted tuple.
    """
    if g.n > cap:
        raise CapExceeded(f"n={g.n} exceeds the orbit search cap of {cap}")
    colour = [(g.x[a], tuple(sorted(g.w[a][k] for k in range(g.n) if k != a)))
              for a in range(g.n)]
    parent = list(range(g.n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(g.n):
        for b in range(a + 1, g.n):
            if find(a) == find(b):
                continue
            p = _find_automorphism(g, a, b, colour)
            if p is not None:
                # every cycle of an automorphism lies inside one orbit
                for k in range(g.n):
                    ra, rb = find(k), find(p(k))
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for a in range(g.n):
        groups.setdefault(find(a), []).append(a)
    return sorted(tuple(v) for v in groups.values())


def _flatten(item) -> tuple:
    if isinstance(item, Multiset):
        return tuple(itertools.chain.from_iterable(_flatten(e) for e in item.items))
    if isinstance(item, (tuple, list)):
        return tuple(itertools.chain.from_iterable(_flatten(e) for e in item))
    return (item,)


@dataclass(frozen=True)
class Multiset:
    """Order-free collection; ``items`` is the canonical sorted sequence.

    Elements are sorted by their flattened scalar sequence, so equality of
    multisets is plain tuple equality.
    """

    items: tuple

    @classmethod
    def of(cls, elements: Iterable) -> "Multiset":
        elems = [tuple(e) if isinstance(e, list) else e for e in elements]
        return cls(tuple(sorted(elems, key=_flatten)))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)
