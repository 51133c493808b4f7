"""Multiset-equivalent encoders and their exact decoders.

``scalar-power`` maps ``v -> (v, v**2, ..., v**n)``; its summed image is the
power-sum vector of the multiset, which Newton's identities turn back into
the elementary symmetric polynomials and hence into the root multiset.

``complex-tensor`` maps ``v in Q^m`` to an ``n x m x m`` array holding, for
every coordinate pair ``r < s``, the real and imaginary parts of
``(v_r + i v_s) ** l``. Diagonal slots are zero.

All arithmetic is exact. Float input is refused.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .graph import Multiset, scalar_to_json
from .rng import stream

SCALAR_POWER = "scalar-power"
COMPLEX_TENSOR = "complex-tensor"
IDENTITY = "identity"


def _exact(v):
    """Validate an exact scalar, returning a plain int when it is integral."""
    if isinstance(v, float) or not isinstance(v, Rational):
        raise TypeError(f"MEF arithmetic is exact only; got {v!r}")
    if v.denominator == 1:
        return int(v.numerator)
    return v


@dataclass(frozen=True)
class MefEncoder:
    kind: str
    m: int
    n: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("m and n must be positive")
        if self.kind == SCALAR_POWER and self.m != 1:
            raise ValueError("scalar-power encoders take m = 1")
        if self.kind == COMPLEX_TENSOR and self.m < 2:
            raise ValueError("complex-tensor encoders need m > 1")
        if self.kind not in (SCALAR_POWER, COMPLEX_TENSOR, IDENTITY):
            raise ValueError(f"unknown encoder kind {self.kind!r}")

    @classmethod
    def scalar_power(cls, n: int) -> "MefEncoder":
        return cls(SCALAR_POWER, 1, n)

    @classmethod
    def complex_tensor(cls, m: int, n: int) -> "MefEncoder":
        return cls(COMPLEX_TENSOR, m, n)

    @classmethod
    def for_dim(cls, m: int, n: int) -> "MefEncoder":
        """The standard construction for inputs of dimension ``m``."""
        return cls.scalar_power(n) if m == 1 else cls.complex_tensor(m, n)

    @property
    def p(self) -> int:
        if self.kind == SCALAR_POWER:
            return self.n
        if self.kind == COMPLEX_TENSOR:
            return self.m * self.m * self.n
        return self.m

    def slot(self, ell: int, r: int, s: int) -> int:
        """Flat index of tensor slot ``(ell, r, s)``; ``ell`` is 1-based."""
        return (ell - 1) * self.m * self.m + r * self.m + s


def gaussian_mul(a: tuple, b: tuple) -> tuple:
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def gaussian_powers(re, im, k: int) -> list[tuple]:
    """``[(re + i im) ** l for l in 1..k]`` as (real, imag) pairs."""
    out = [(re, im)]
    for _ in range(k - 1):
        out.append(gaussian_mul(out[-1], (re, im)))
    return out


def encode(enc: MefEncoder, v: Sequence) -> tuple:
    if len(v) != enc.m:
        raise ValueError(f"encoder expects length {enc.m}, got {len(v)}")
    v = [_exact(c) for c in v]
    if enc.kind == IDENTITY:
        return tuple(v)
    if enc.kind == SCALAR_POWER:
        out, acc = [], 1
        for _ in range(enc.n):
            acc = acc * v[0]
            out.append(acc)
        return tuple(out)
    m = enc.m
    out = [0] * enc.p
    for r in range(m):
        for s in range(r + 1, m):
            for ell, (re, im) in enumerate(gaussian_powers(v[r], v[s], enc.n), start=1):
                out[enc.slot(ell, r, s)] = re
                out[enc.slot(ell, s, r)] = im
    return tuple(out)


def sum_encode(enc: MefEncoder, vs: Sequence[Sequence]) -> tuple:
    if len(vs) != enc.n:
        raise ValueError(f"encoder certifies multisets of size {enc.n}, got {len(vs)}")
    total = [0] * enc.p
    for v in vs:
        for k, c in enumerate(encode(enc, v)):
            total[k] += c
    return tuple(total)


def as_multiset(vs: Sequence) -> Multiset:
    return Multiset.of(tuple(_exact(c) for c in v) if isinstance(v, (tuple, list))
                       else (_exact(v),) for v in vs)


# --- decoding ---------------------------------------------------------------

def newton_elementary(power_sums: Sequence) -> list:
    """``[e_0, ..., e_n]`` from ``[p_1, ..., p_n]`` by Newton's identities,
    with ``e_0 = 1`` and exact division by ``r``."""
    e = [Fraction(1)]
    for r in range(1, len(power_sums) + 1):
        acc = Fraction(0)
        for i in range(1, r + 1):
            term = e[r - i] * power_sums[i - 1]
            acc += term if i % 2 else -term
        e.append(acc / r)
    return e


def _divisors(k: int) -> list[int]:
    k = abs(k)
    small, large = [], []
    d = 1
    while d * d <= k:
        if k % d == 0:
            small.append(d)
            if d * d != k:
                large.append(k // d)
        d += 1
    return small + large[::-1]


def _poly_eval(coeffs: Sequence, x):
    acc = 0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _deflate(coeffs: list, root) -> list:
    """Divide by ``(x - root)``; ``coeffs`` are highest degree first."""
    out = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(c + out[-1] * root)
    return out


def rational_roots(coeffs: Sequence) -> list | None:
    """All roots of a rational polynomial (highest degree first), with
    multiplicity, or ``None`` when it does not split over the rationals."""
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
    if not coeffs:
        raise ValueError("zero polynomial")
    roots: list[Fraction] = []
    while len(coeffs) > 1 and coeffs[-1] == 0:
        roots.append(Fraction(0))
        coeffs.pop()
    while len(coeffs) > 1:
        lcm = 1
        for c in coeffs:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in coeffs]
        found = None
        for p in _divisors(ints[-1]):
            for q in _divisors(ints[0]):
                for cand in (Fraction(p, q), Fraction(-p, q)):
                    if _poly_eval(ints, cand) == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            return None
        roots.append(found)
        coeffs = _deflate(coeffs, found)
    return sorted(roots)


def decode_scalar(power_sums: Sequence) -> Multiset | None:
    """Recover the rational multiset whose power sums are ``power_sums``.

    Returns ``None`` when the monic polynomial rebuilt from the power sums
    has an irrational or complex root, i.e. no rational multiset encodes to
    these sums.
    """
    sums = [Fraction(_exact(p)) for p in power_sums]
    e = newton_elementary(sums)
    coeffs = [e[r] if r % 2 == 0 else -e[r] for r in range(len(e))]
    roots = rational_roots(coeffs)
    if roots is None:
        return None
    return Multiset.of((r,) for r in roots)


def _newton_gaussian(power_sums: Sequence[tuple]) -> list[tuple]:
    e = [(Fraction(1), Fraction(0))]
    for r in range(1, len(power_sums) + 1):
        re = im = Fraction(0)
        for i in range(1, r + 1):
            t = gaussian_mul(e[r - i], power_sums[i - 1])
            sign = 1 if i % 2 else -1
            re += sign * t[0]
            im += sign * t[1]
        e.append((re / r, im / r))
    return e


def _gaussian_power_sums(points: Sequence[tuple], k: int) -> list[tuple]:
    sums = [(0, 0)] * k
    for re, im in points:
        for ell, (a, b) in enumerate(gaussian_powers(re, im, k)):
            sums[ell] = (sums[ell][0] + a, sums[ell][1] + b)
    return sums


def decode_gaussian(power_sums: Sequence[tuple], max_denominator: int = 10**6) -> Multiset | None:
    """Recover a multiset of Gaussian rationals ``a + ib`` (as ``(a, b)``
    pairs) from its complex power sums.

    Candidate roots come from a high-precision numerical root finder and are
    snapped to nearby rationals; the candidate multiset is accepted only if
    its power sums reproduce the input exactly, so a wrong answer is never
    returned.
    """
    import mpmath

    sums = [(Fraction(a), Fraction(b)) for a, b in power_sums]
    k = len(sums)
    e = _newton_gaussian(sums)
    with mpmath.workdps(60):
        coeffs = []
        for r, (a, b) in enumerate(e):
            c = mpmath.mpc(mpmath.mpf(a.numerator) / a.denominator,
                           mpmath.mpf(b.numerator) / b.denominator)
            coeffs.append(c if r % 2 == 0 else -c)
        try:
            approx = mpmath.polyroots(coeffs, maxsteps=400, extraprec=400)
        except mpmath.libmp.libhyper.NoConvergence:
            return None
        cands = [(Fraction(str(mpmath.nstr(z.real, 40))).limit_denominator(max_denominator),
                  Fraction(str(mpmath.nstr(z.imag, 40))).limit_denominator(max_denominator))
                 for z in (mpmath.mpc(z) for z in approx)]
    if _gaussian_power_sums(cands, k) != [tuple(s) for s in sums]:
        return None
    return Multiset.of(cands)


@dataclass
class ProjectionCheck:
    """Outcome of decoding a complex-tensor sum pair by pair."""

    projections: dict
    consistent: bool
    undecodable: list = field(default_factory=list)


def decode_tensor_projections(enc: MefEncoder, summed: Sequence) -> ProjectionCheck:
    """Decode every coordinate-pair projection of a summed complex-tensor
    encoding and check that the projections agree on shared coordinates.

    For each ``r < s`` the slots ``(l, r, s)`` / ``(l, s, r)`` are the power
    sums of ``v_r + i v_s``; decoding them gives the multiset of
    ``(v_r, v_s)`` pairs. Consistency means that every coordinate ``r`` has
    the same one-dimensional marginal in every pair it takes part in.
    """
    if enc.kind != COMPLEX_TENSOR:
        raise ValueError("projection decoding applies to complex-tensor encoders")
    if len(summed) != enc.p:
        raise ValueError(f"expected {enc.p} summed entries, got {len(summed)}")
    projections, undecodable = {}, []
    for r in range(enc.m):
        for s in range(r + 1, enc.m):
            sums = [(summed[enc.slot(ell, r, s)], summed[enc.slot(ell, s, r)])
                    for ell in range(1, enc.n + 1)]
            ms = decode_gaussian(sums)
            if ms is None:
                undecodable.append((r, s))
            else:
                projections[(r, s)] = ms
    marginals: dict[int, set] = {}
    for (r, s), ms in projections.items():
        marginals.setdefault(r, set()).add(tuple(sorted(a for a, _ in ms)))
        marginals.setdefault(s, set()).add(tuple(sorted(b for _, b in ms)))
    consistent = not undecodable and all(len(v) == 1 for v in marginals.values())
    return ProjectionCheck(projections, consistent, undecodable)


# --- randomized verification -------------------------------------------------

@dataclass
class MefReport:
    kind: str
    m: int
    n: int
    trials: int
    seed: int
    failures: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "m": self.m, "n": self.n, "trials": self.trials,
            "seed": self.seed, "failures": self.failures, "passed": self.passed,
            "counterexamples": [
                {"left": [[scalar_to_json(c) for c in v] for v in a],
                 "right": [[scalar_to_json(c) for c in v] for v in b],
                 "encodings_equal": eq}
                for a, b, eq in self.counterexamples
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _trial_pair(rng, m: int, n: int, kind: int, lo: int = 0, hi: int = 6):
    left = [[rng.randint(lo, hi) for _ in range(m)] for _ in range(n)]
    if kind == 0:
        right = [[rng.randint(lo, hi) for _ in range(m)] for _ in range(n)]
    elif kind == 1:
        right = [list(v) for v in left]
        rng.shuffle(right)
    else:
        # same coordinate sums, typically a different multiset
        right = [list(v) for v in left]
        if n > 1:
            a, b = rng.sample(range(n), 2)
            for c in range(m):
                shift = rng.randint(1, 2)
                right[a][c] += shift
                right[b][c] -= shift
        rng.shuffle(right)
    return left, right


def check_pair(enc: MefEncoder, left, right) -> bool:
    """True when the pair respects the iff-property."""
    same_code = sum_encode(enc, left) == sum_encode(enc, right)
    return same_code == (as_multiset(left) == as_multiset(right))


def verify_mef_property(enc: MefEncoder, trials: int, seed: int,
                        extra_pairs: Sequence = ()) -> MefReport:
    """Randomized check that summed encodings agree exactly when multisets do.

    Trials cycle through independent random pairs, shuffled copies and
    engineered pairs with equal coordinate sums. ``extra_pairs`` are checked
    in addition to the random trials.
    """
    report = MefReport(enc.kind, enc.m, enc.n, trials, seed)
    pairs = [ _trial_pair(stream(seed, "mef", enc.kind, enc.m, enc.n, t), enc.m, enc.n, t % 3)
              for t in range(trials)]
    if enc.m == 1 and enc.n == 2:
        pairs.append(([[2], [5]], [[3], [4]]))
    pairs.extend(extra_pairs)
    report.trials = len(pairs)
    for left, right in pairs:
        if not check_pair(enc, left, right):
            report.failures += 1
            if len(report.counterexamples) < 10:
                eq = sum_encode(enc, left) == sum_encode(enc, right)
                report.counterexamples.append((left, right, eq))
    return report
