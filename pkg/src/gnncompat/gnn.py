"""Message-passing semantics.

A :class:`GnnProgram` iterates ``h_i <- sum_{j != i} phi_k(h_i, h_j, w_ij)``
starting from ``h_i = x_i``. An :class:`ExtendedGnnProgram` instead hands each
node its own state and the multiset of ``(h_j, w_ij)`` pairs.
:func:`convert_extended_to_gnn` rewrites the latter as the former with twice
as many layers, realising the aggregate map as an exact lookup table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .graph import (
    Graph,
    Multiset,
    Permutation,
    apply_iwfp,
    node_orbits,
    scalar_to_json,
)
from .mef import MefEncoder, encode
from .rng import stream


class UnseenMultiset(KeyError):
    """A converted program met an aggregate input absent from calibration."""


@dataclass(frozen=True)
class GnnLayer:
    phi: Callable
    in_dim: int
    out_dim: int
    name: str = ""


@dataclass(frozen=True)
class GnnProgram:
    layers: tuple
    name: str = "gnn"

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")

    @property
    def k_max(self) -> int:
        return len(self.layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim if self.layers else 0

    def dims(self) -> list[int]:
        return [self.in_dim] + [layer.out_dim for layer in self.layers]


def _check_row(row, dim: int, exact: bool, where: str) -> tuple:
    row = tuple(row)
    if len(row) != dim:
        raise ValueError(f"{where} produced {len(row)} entries, declared {dim}")
    if not exact and not all(math.isfinite(v) for v in row):
        raise ValueError(f"{where} produced a non-finite value")
    return row


def run_gnn(prog: GnnProgram, g: Graph, all_layers: bool = False):
    """Final state matrix, or the list ``[H0, H1, ..., Hk]`` with ``all_layers``."""
    if prog.layers and prog.in_dim != g.d:
        raise ValueError(f"program expects d={prog.in_dim}, graph has d={g.d}")
    n = g.n
    h = [tuple(row) for row in g.x]
    history = [tuple(h)]
    for k, layer in enumerate(prog.layers, start=1):
        new = []
        for i in range(n):
            acc = [0] * layer.out_dim
            for j in range(n):
                if j == i:
                    continue
                msg = _check_row(layer.phi(h[i], h[j], g.w[i][j]), layer.out_dim,
                                 g.exact, f"layer {k}")
                for c, v in enumerate(msg):
                    acc[c] += v
            new.append(tuple(acc))
        h = new
        history.append(tuple(h))
    return history if all_layers else tuple(h)


@dataclass(frozen=True)
class ExtendedLayer:
    """``Phi(h_i, M)`` where ``M`` is the canonical multiset of ``(h_j, w_ij)``."""

    aggregate: Callable
    in_dim: int
    out_dim: int
    name: str = ""


@dataclass(frozen=True)
class ExtendedGnnProgram:
    layers: tuple
    name: str = "extended"

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim if self.layers else 0


def neighbor_multiset(h: Sequence, g: Graph, i: int) -> Multiset:
    return Multiset.of((tuple(h[j]), g.w[i][j]) for j in range(g.n) if j != i)


def run_extended(prog: ExtendedGnnProgram, g: Graph, all_layers: bool = False):
    if prog.layers and prog.in_dim != g.d:
        raise ValueError(f"program expects d={prog.in_dim}, graph has d={g.d}")
    h = [tuple(row) for row in g.x]
    history = [tuple(h)]
    for k, layer in enumerate(prog.layers, start=1):
        h = [_check_row(layer.aggregate(h[i], neighbor_multiset(h, g, i)), layer.out_dim,
                        g.exact, f"extended layer {k}")
             for i in range(g.n)]
        history.append(tuple(h))
    return history if all_layers else tuple(h)


# --- hand-built programs -------------------------------------------------------

def degree_program(d: int) -> GnnProgram:
    return GnnProgram((GnnLayer(lambda hi, hj, w: (w,), d, 1, "weight"),), "degree")


def zero_program(d: int, out_dim: int = 1) -> GnnProgram:
    return GnnProgram((GnnLayer(lambda hi, hj, w: (0 * w,) * out_dim, d, out_dim, "zero"),),
                      "zero")


def index_reading_program(d: int, n: int) -> GnnProgram:
    """Deliberately broken: recovers the receiving node's raw index from the
    engine's call order and emits it, so the output depends on labelling."""
    calls = [0]

    def phi(hi, hj, w):
        receiver = (calls[0] // (n - 1)) % n
        calls[0] += 1
        return (Fraction(receiver),)

    return GnnProgram((GnnLayer(phi, d, 1, "index"),), "index-reading")


def sum_extended(d: int) -> ExtendedGnnProgram:
    """``Phi(h, M) = h + sum over M of w * h_j``."""
    def agg(h, ms):
        out = list(h)
        for hj, w in ms:
            for c in range(d):
                out[c] += w * hj[c]
        return tuple(out)
    return ExtendedGnnProgram((ExtendedLayer(agg, d, d, "sum"),), "sum")


def max_extended(d: int) -> ExtendedGnnProgram:
    """``Phi(h, M) = componentwise max over M of (h_j + w)``."""
    def agg(h, ms):
        return tuple(max(hj[c] + w for hj, w in ms) for c in range(d))
    return ExtendedGnnProgram((ExtendedLayer(agg, d, d, "max"),), "max")


def weight_sum_extended(d: int) -> ExtendedGnnProgram:
    """``Phi(h, M) = sum of weights in M``; the degree."""
    def agg(h, ms):
        return (sum(w for _, w in ms),)
    return ExtendedGnnProgram((ExtendedLayer(agg, d, 1, "weight-sum"),), "weight-sum")


def self_extended(d: int) -> ExtendedGnnProgram:
    return ExtendedGnnProgram((ExtendedLayer(lambda h, ms: tuple(h), d, d, "self"),), "self")


def composed_extended(d: int) -> ExtendedGnnProgram:
    """Max layer followed by a sum layer."""
    return ExtendedGnnProgram(max_extended(d).layers + sum_extended(d).layers, "max-then-sum")


EXTENDED_PROGRAMS = {
    "sum": sum_extended,
    "max": max_extended,
    "composed": composed_extended,
    "weight-sum": weight_sum_extended,
    "self": self_extended,
}


# --- random message family -----------------------------------------------------

def squash(t):
    """``t / (1 + t^2)``: odd, bounded by 1/2, smooth and rational."""
    return t / (1 + t * t)


@dataclass(frozen=True)
class RandomMessageFamily:
    """Seeded random affine maps followed by :func:`squash`.

    Coefficients are small rationals so exact runs stay exact.
    """

    seed: int
    dims: tuple = (1, 3, 2)

    def program(self) -> GnnProgram:
        layers = []
        for k, (din, dout) in enumerate(zip(self.dims, self.dims[1:]), start=1):
            rng = stream(self.seed, "message", k)
            width = 2 * din + 1
            a = tuple(tuple(Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(width))
                      for _ in range(dout))
            b = tuple(Fraction(rng.randint(-2, 2), rng.randint(1, 3)) for _ in range(dout))
            layers.append(GnnLayer(_affine_squash(a, b, din), din, dout, f"random-{k}"))
        return GnnProgram(tuple(layers), f"random-{self.seed}")


def _affine_squash(a, b, din):
    # pure in its arguments, so memoising is safe and spares re-evaluation
    # across relabelled copies of one graph
    memo: dict = {}

    def phi(hi, hj, w):
        key = (hi, hj, w)
        hit = memo.get(key)
        if hit is not None:
            return hit
        z = (*hi, *hj, w)
        exact = not isinstance(w, float)
        out = []
        for row, bias in zip(a, b):
            if exact:
                t = bias + sum(c * v for c, v in zip(row, z))
            else:
                t = float(bias) + sum(float(c) * v for c, v in zip(row, z))
            out.append(squash(t))
        memo[key] = out = tuple(out)
        return out
    return phi


def random_program(seed: int, dims: Sequence[int] = (1, 3, 2)) -> GnnProgram:
    return RandomMessageFamily(seed, tuple(dims)).program()


# --- Extended-GNN -> GNN conversion ------------------------------------------

def _key(values) -> str:
    parts = []
    for v in values:
        f = Fraction(v)
        parts.append(f"{f.numerator}/{f.denominator}")
    return f"{len(parts)}|" + "|".join(parts)


@dataclass
class ConvertedProgram:
    """A 2L-layer GNN plus the frozen lookup tables behind its even layers."""

    program: GnnProgram
    encoders: tuple
    tables: tuple
    source: ExtendedGnnProgram

    @property
    def table_sizes(self) -> list[int]:
        return [len(t) for t in self.tables]


def convert_extended_to_gnn(prog: ExtendedGnnProgram, n: int, d: int,
                            calibration: Sequence[Graph]) -> ConvertedProgram:
    """Build the 2L-iteration GNN equivalent to ``prog`` on graphs of size n.

    Layer ``2r-1`` sends ``(h_i / (n-1), psi_r(h_j, w_ij))`` so that the node
    state becomes ``(h_i, sum_j psi_r(h_j, w_ij))``. Layer ``2r`` sends
    ``Theta_r(h_i) / (n-1)``. ``Theta_r`` is filled in from calibration runs
    of the source program: the MEF property makes the summed encoding
    determine the neighbour multiset, so each key has one aggregate value.
    Keys outside the calibration set raise :class:`UnseenMultiset`.
    """
    if prog.in_dim != d:
        raise ValueError(f"program expects d={prog.in_dim}, got d={d}")
    dims = [d] + [layer.out_dim for layer in prog.layers]
    encoders = tuple(MefEncoder.for_dim(dims[r] + 1, n - 1) for r in range(len(prog.layers)))
    tables: tuple = tuple({} for _ in prog.layers)
    for g in calibration:
        if g.n != n or g.d != d:
            raise ValueError("calibration graphs must match (n, d)")
        if not g.exact:
            raise TypeError("conversion runs in exact-rational mode only")
        history = run_extended(prog, g, all_layers=True)
        for r, (enc, table) in enumerate(zip(encoders, tables)):
            h = history[r]
            for i in range(n):
                summed = [0] * enc.p
                for j in range(n):
                    if j != i:
                        for c, v in enumerate(encode(enc, (*h[j], g.w[i][j]))):
                            summed[c] += v
                key = _key((*h[i], *summed))
                out = history[r + 1][i]
                if table.setdefault(key, out) != out:
                    raise ValueError(f"layer {r + 1}: one encoded input maps to two outputs "
                                     f"({table[key]} vs {out}); the encoder is not injective here")
    scale = Fraction(1, n - 1)
    layers = []
    for r, (enc, table) in enumerate(zip(encoders, tables)):
        din, dout = dims[r], dims[r + 1]

        def encode_phi(hi, hj, w, enc=enc):
            return (*(scale * v for v in hi), *encode(enc, (*hj, w)))

        def lookup_phi(hi, hj, w, table=table, r=r):
            try:
                out = table[_key(hi)]
            except KeyError:
                raise UnseenMultiset(f"layer {2 * r + 2}: aggregate input not seen in "
                                     "calibration") from None
            return tuple(scale * v for v in out)

        layers.append(GnnLayer(encode_phi, din, din + enc.p, f"encode-{r + 1}"))
        layers.append(GnnLayer(lookup_phi, din + enc.p, dout, f"theta-{r + 1}"))
    return ConvertedProgram(GnnProgram(tuple(layers), f"converted-{prog.name}"),
                            encoders, tables, prog)


# --- reports -----------------------------------------------------------------------

def _diff(a, b):
    return max((abs(x - y) for x, y in zip(a, b)), default=0)


@dataclass
class EquivarianceReport:
    program: str
    permutations: int
    max_violation: object
    tolerance: object
    worst: dict | None = None

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_json(self) -> dict:
        return {"program": self.program, "permutations": self.permutations,
                "max_violation": scalar_to_json(self.max_violation),
                "tolerance": scalar_to_json(self.tolerance), "passed": self.passed,
                "worst": self.worst}


def check_equivariance(prog: GnnProgram, g: Graph, perms: Sequence[Permutation],
                       tol=None) -> EquivarianceReport:
    """Compare row ``p(i)`` of ``run(g)`` with row ``i`` of ``run(p . g)``.

    ``tol`` defaults to 0 on exact graphs and 1e-9 on float graphs.
    """
    if tol is None:
        tol = Fraction(0) if g.exact else 1e-9
    base = run_gnn(prog, g)
    worst, worst_at = Fraction(0) if g.exact else 0.0, None
    count = 0
    for p in perms:
        count += 1
        moved = run_gnn(prog, apply_iwfp(g, p))
        for i in range(g.n):
            v = _diff(base[p(i)], moved[i])
            if v > worst:
                worst, worst_at = v, {"perm": list(p.image), "node": i}
    return EquivarianceReport(prog.name, count, worst, tol, worst_at)


@dataclass
class OrbitDemoReport:
    program: str
    orbits: list
    constant_on_orbits: bool
    targets: list
    forced_errors: int
    distinct_outputs: int
    distinct_targets: int
    mismatches: int | None = None

    @property
    def impossible(self) -> bool:
        return self.forced_errors > 0

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "orbits": [[k + 1 for k in o] for o in self.orbits],
            "constant_on_orbits": self.constant_on_orbits,
            "targets": [scalar_to_json(v) for v in self.targets],
            "forced_errors": self.forced_errors,
            "distinct_outputs": self.distinct_outputs,
            "distinct_targets": self.distinct_targets,
            "mismatches": self.mismatches,
            "impossible": self.impossible,
        }


def forced_errors(orbits: Sequence[tuple], targets: Sequence) -> int:
    """Fewest nodes any orbit-constant labelling must get wrong."""
    total = 0
    for orbit in orbits:
        counts: dict = {}
        for k in orbit:
            counts[targets[k]] = counts.get(targets[k], 0) + 1
        total += len(orbit) - max(counts.values())
    return total


def orbit_equality_demo(prog: GnnProgram, g: Graph, targets: Sequence | None = None,
                        orbits: Sequence[tuple] | None = None) -> OrbitDemoReport:
    """Show that ``prog`` is constant on automorphism orbits and count how
    many target labels that forces to be wrong.

    ``targets`` defaults to the distance to node 1 (index 0).
    """
    from .zoo import distance_to_node1

    if targets is None:
        targets = [row[0] for row in distance_to_node1(g)]
    orbits = node_orbits(g) if orbits is None else orbits
    out = run_gnn(prog, g)
    constant = all(out[k] == out[o[0]] for o in orbits for k in o)
    mismatches = None
    if prog.layers and prog.layers[-1].out_dim == 1:
        mismatches = sum(1 for k in range(g.n) if out[k][0] != targets[k])
    return OrbitDemoReport(prog.name, [tuple(o) for o in orbits], constant, list(targets),
                           forced_errors(orbits, targets), len(set(out)), len(set(targets)),
                           mismatches)


def dumps(report) -> str:
    return json.dumps(report.to_json(), sort_keys=True)
