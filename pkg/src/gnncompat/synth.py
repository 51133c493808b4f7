"""Basis function, node signatures and the three-layer GNN built from them.

For node ``i`` the basis value is::

    beta_i = (x_i, sum_{j != i} psi2(x_j, w_ij, sum_{l != j} psi1(w_jl)))

with ``psi1`` the scalar-power encoder on ``n - 1`` values and ``psi2`` the
complex-tensor encoder on ``n - 1`` vectors of length ``d + n``. Any
compatible ``F`` factors as ``f_i = rho(beta_i)``; ``rho`` is realised here
as an exact table filled from calibration graphs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .gnn import GnnLayer, GnnProgram, run_gnn
from .graph import (
    Graph,
    Multiset,
    Permutation,
    apply_iwfp,
    enumerate_stabilizer,
    scalar_to_json,
)
from .mef import MefEncoder, encode
from .zoo import GraphFunction

MAX_N = 5
MAX_D = 2


class CompatibilityViolation(ValueError):
    """Two calibration nodes share a basis value but have different targets."""

    def __init__(self, message: str, first: dict, second: dict):
        super().__init__(message)
        self.first = first
        self.second = second


class UnseenBeta(KeyError):
    """The synthesized readout met a basis value outside its table."""


@dataclass(frozen=True)
class BasisFunction:
    n: int
    d: int
    psi1: MefEncoder
    psi2: MefEncoder

    @classmethod
    def standard(cls, n: int, d: int, max_n: int = MAX_N, max_d: int = MAX_D) -> "BasisFunction":
        """Cost grows like ``d + (n + d)^2 (n - 1)`` entries with degree-(n-1)
        rational powers, hence the default caps."""
        if n < 2:
            raise ValueError("basis functions need n >= 2")
        if n > max_n or d > max_d:
            raise ValueError(f"(n={n}, d={d}) exceeds the synthesis caps ({max_n}, {max_d})")
        psi1 = MefEncoder.scalar_power(n - 1)
        psi2 = MefEncoder.complex_tensor(d + 1 + psi1.p, n - 1)
        return cls(n, d, psi1, psi2)

    @property
    def out_dim(self) -> int:
        return self.d + self.psi2.p

    def check(self, g: Graph) -> None:
        if (g.n, g.d) != (self.n, self.d):
            raise ValueError(f"basis function is for (n={self.n}, d={self.d}), "
                             f"graph has (n={g.n}, d={g.d})")
        if not g.exact:
            raise TypeError("basis values are computed exactly; use a rational graph")


def weight_codes(bf: BasisFunction, g: Graph) -> list[tuple]:
    """``sum_{l != j} psi1(w_jl)`` for every node ``j``."""
    out = []
    for j in range(g.n):
        acc = [0] * bf.psi1.p
        for k in range(g.n):
            if k != j:
                for c, v in enumerate(encode(bf.psi1, (g.w[j][k],))):
                    acc[c] += v
        out.append(tuple(acc))
    return out


def _beta_from_codes(bf: BasisFunction, g: Graph, i: int, codes: list) -> tuple:
    acc = [0] * bf.psi2.p
    for j in range(g.n):
        if j == i:
            continue
        for c, v in enumerate(encode(bf.psi2, (*g.x[j], g.w[i][j], *codes[j]))):
            acc[c] += v
    return (*g.x[i], *acc)


def beta(bf: BasisFunction, g: Graph, i: int) -> tuple:
    bf.check(g)
    return _beta_from_codes(bf, g, i, weight_codes(bf, g))


def beta_all(bf: BasisFunction, g: Graph) -> list[tuple]:
    bf.check(g)
    codes = weight_codes(bf, g)
    return [_beta_from_codes(bf, g, i, codes) for i in range(g.n)]


@dataclass(frozen=True)
class NodeSignature:
    self_feature: tuple
    neighbor_multiset: Multiset


def delta(g: Graph, i: int) -> NodeSignature:
    """``(x_i, {{ (x_j, w_ij, {{w_jl : l != j}}) : j != i }})``."""
    incident = [Multiset.of((g.w[j][k],) for k in range(g.n) if k != j) for j in range(g.n)]
    return NodeSignature(tuple(g.x[i]),
                         Multiset.of((tuple(g.x[j]), g.w[i][j], incident[j])
                                     for j in range(g.n) if j != i))


def beta_key(values: Sequence) -> str:
    """Canonical exact key: length prefix, then lowest-terms ``p/q`` entries."""
    parts = []
    for v in values:
        f = Fraction(v)
        parts.append(f"{f.numerator}/{f.denominator}")
    return f"{len(parts)}|" + "|".join(parts)


def find_stabilizer_map(g: Graph, h: Graph, i: int) -> Permutation | None:
    """A ``p`` fixing ``i`` with ``h == p . g``, by brute force over (n-1)!."""
    for p in enumerate_stabilizer(g.n, i):
        if apply_iwfp(g, p) == h:
            return p
    return None


@dataclass
class EquivalenceReport:
    pairs: int = 0
    both_equal: int = 0
    both_differ: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "both_equal": self.both_equal,
                "both_differ": self.both_differ, "violations": len(self.violations),
                "passed": self.passed}


def verify_beta_delta_equivalence(bf: BasisFunction, pairs: Sequence[tuple], i: int
                                  ) -> EquivalenceReport:
    report = EquivalenceReport()
    for g, h in pairs:
        report.pairs += 1
        same_beta = beta(bf, g, i) == beta(bf, h, i)
        same_delta = delta(g, i) == delta(h, i)
        if same_beta != same_delta:
            report.violations.append((g, h))
        elif same_beta:
            report.both_equal += 1
        else:
            report.both_differ += 1
    return report


@dataclass
class RhoTable:
    """Exact map from basis value to target row; frozen after fitting."""

    function: str
    n: int
    d: int
    table: dict = field(default_factory=dict)
    origin: dict = field(default_factory=dict)
    frozen: bool = False

    def register(self, key: str, target: tuple, record: dict) -> None:
        if self.frozen:
            raise RuntimeError("rho table is frozen")
        if key in self.table:
            if self.table[key] != target:
                raise CompatibilityViolation(
                    f"{self.function}: one basis value maps to "
                    f"{[scalar_to_json(v) for v in self.table[key]]} and "
                    f"{[scalar_to_json(v) for v in target]}",
                    self.origin[key], record)
            return
        self.table[key] = target
        self.origin[key] = record

    def __call__(self, b: Sequence) -> tuple:
        try:
            return self.table[beta_key(b)]
        except KeyError:
            raise UnseenBeta("basis value not in the rho table") from None

    def __len__(self) -> int:
        return len(self.table)

    def to_json(self) -> dict:
        return {"function": self.function, "n": self.n, "d": self.d,
                "entries": [{"beta": k, "target": [scalar_to_json(v) for v in t]}
                            for k, t in sorted(self.table.items())]}


def fit_rho(f: GraphFunction, bf: BasisFunction, calibration: Sequence[Graph]) -> RhoTable:
    """Register ``(beta_i(g), f_i(g))`` for every calibration graph and node.

    A key seen with two different targets raises
    :class:`CompatibilityViolation`, which refutes compatibility of ``f``.
    """
    rho = RhoTable(f.name, bf.n, bf.d)
    for t, g in enumerate(calibration):
        targets = f(g)
        for i, b in enumerate(beta_all(bf, g)):
            rho.register(beta_key(b), tuple(targets[i]),
                         {"graph": t, "node": i, "target": tuple(targets[i]),
                          "graph_json": g.to_json()})
    rho.frozen = True
    return rho


def synthesize_gnn(f: GraphFunction, bf: BasisFunction, rho: RhoTable) -> GnnProgram:
    """The three-layer program whose third state is ``rho(beta_i)``.

    Layer dims: ``d -> d + p(psi1) -> d + p(psi2) -> out_dim``.
    """
    if rho.function != f.name or (rho.n, rho.d) != (bf.n, bf.d):
        raise ValueError("rho table was fitted for a different function or shape")
    n, d = bf.n, bf.d
    scale = Fraction(1, n - 1)
    p1 = bf.psi1.p
    out_dim = f.output_dim(d)

    def phi1(hj, hl, w):
        return (*(scale * v for v in hj), *encode(bf.psi1, (w,)))

    def phi2(hi, hj, w):
        return (*(scale * v for v in hi[:d]), *encode(bf.psi2, (*hj[:d], w, *hj[d:d + p1])))

    def phi3(hi, hj, w):
        return tuple(scale * v for v in rho(hi))

    layers = (
        GnnLayer(phi1, d, d + p1, "psi1"),
        GnnLayer(phi2, d + p1, d + bf.psi2.p, "psi2"),
        GnnLayer(phi3, d + bf.psi2.p, out_dim, "rho"),
    )
    return GnnProgram(layers, f"synth-{f.name}")


@dataclass
class AuditReport:
    layer1_ok: bool
    layer2_ok: bool
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.layer1_ok and self.layer2_ok

    def to_json(self) -> dict:
        return {"layer1_ok": self.layer1_ok, "layer2_ok": self.layer2_ok,
                "passed": self.passed, "mismatches": self.mismatches}


def intermediate_state_audit(prog: GnnProgram, bf: BasisFunction, g: Graph) -> AuditReport:
    """Layer 1 must equal ``(x_j, sum psi1(w_jl))`` and layer 2 must equal ``beta``."""
    bf.check(g)
    history = run_gnn(prog, g, all_layers=True)
    codes = weight_codes(bf, g)
    mismatches = []
    ok1 = ok2 = True
    for j in range(g.n):
        if history[1][j] != (*g.x[j], *codes[j]):
            ok1 = False
            mismatches.append({"layer": 1, "node": j})
        if history[2][j] != _beta_from_codes(bf, g, j, codes):
            ok2 = False
            mismatches.append({"layer": 2, "node": j})
    return AuditReport(ok1, ok2, mismatches)


def permuted_closure(graphs: Sequence[Graph], perms: Sequence[Permutation]) -> list[Graph]:
    return [apply_iwfp(g, p) for g, p in itertools.product(graphs, perms)]


def dumps(obj) -> str:
    return json.dumps(obj.to_json(), sort_keys=True)
