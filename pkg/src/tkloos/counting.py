"""Solution counts for the matched-trace sets Y(p^l), Y'(p^l), Y_0(p^l).

A tuple x = (x_1..x_r) of units mod p^l lies in Y when every a_j (x_j + 1/x_j)
takes the same value t. Y' drops tuples with some x_j = +-1 (mod p); Y_0 adds
the monomial relation prod x_j^(n_j) = 1 (mod p^l).

Also builds the obstruction polynomial F(t): the product over sign vectors
sigma of (prod_j x_j^(sigma_j n_j) - 1), rewritten in s_j = x_j + 1/x_j and
evaluated at s_j = t / a_j.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .modular import QuadraticCongruence, is_prime, legendre, lift_quadratic_roots


class CountingError(ValueError):
    pass


class InternalInconsistency(RuntimeError):
    pass


def _check_sign_distinct(a_list: Sequence[int], modulus: int | None = None) -> None:
    seen = set()
    for a in a_list:
        keys = {a, -a} if modulus is None else {a % modulus, -a % modulus}
        if seen & keys:
            raise CountingError(f"a_j must be distinct up to sign; {a} repeats an earlier entry in {list(a_list)}")
        seen |= keys


@dataclass(frozen=True)
class CountingSpec:
    p: int
    l: int  # noqa: E741
    a_list: tuple[int, ...]
    n_list: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "a_list", tuple(self.a_list))
        if self.n_list is not None:
            object.__setattr__(self, "n_list", tuple(self.n_list))
        if self.p == 2 or not is_prime(self.p):
            raise CountingError(f"p = {self.p} must be an odd prime")
        if self.l < 1:
            raise CountingError("l must be >= 1")
        if not self.a_list:
            raise CountingError("need at least one a_j")
        if any(a % self.p == 0 for a in self.a_list):
            raise CountingError("every a_j must be a unit mod p")
        _check_sign_distinct(self.a_list, self.p)
        if self.n_list is not None:
            if len(self.n_list) != len(self.a_list):
                raise CountingError("need one n_j per a_j")
            if any(n == 0 for n in self.n_list):
                raise CountingError("every n_j must be nonzero")

    @property
    def r(self) -> int:
        return len(self.a_list)

    @property
    def modulus(self) -> int:
        return self.p**self.l


@dataclass(frozen=True)
class SolutionTuple:
    x: tuple[int, ...]
    t: int


def _trace_roots(a: int, t: int, p: int, l: int) -> list[int]:  # noqa: E741
    """Units x mod p^l with a (x + 1/x) = t, i.e. roots of a x^2 - t x + a."""
    pl = p**l
    return lift_quadratic_roots(QuadraticCongruence(a % pl, -t % pl, -a % pl), p, l)


def _tuples_at(spec: CountingSpec, t: int) -> list[SolutionTuple]:
    per_j = []
    for a in spec.a_list:
        roots = _trace_roots(a, t, spec.p, spec.l)
        if not roots:
            return []
        per_j.append(roots)
    return [SolutionTuple(x, t) for x in itertools.product(*per_j)]


def _degenerate(spec: CountingSpec, t: int) -> bool:
    p = spec.p
    return any((t - 2 * a) % p == 0 or (t + 2 * a) % p == 0 for a in spec.a_list)


def enum_Y(spec: CountingSpec) -> list[SolutionTuple]:
    """All of Y(p^l), ordered by t then lexicographically."""
    out = []
    for t in range(spec.modulus):
        out.extend(_tuples_at(spec, t))
    return out


def _excluded(x: tuple[int, ...], p: int) -> bool:
    return any(v % p in (1, p - 1) for v in x)


def enum_Yprime(spec: CountingSpec) -> list[SolutionTuple]:
    """Y'(p^l): tuples of Y with no x_j = +-1 (mod p).

    When t = +-2 a_j (mod p) the j-th congruence has only the double root
    x = +-1 mod p, so those t are skipped without scanning Z/p^lZ.
    """
    p = spec.p
    out = []
    for t in range(spec.modulus):
        if _degenerate(spec, t):
            continue
        out.extend(s for s in _tuples_at(spec, t) if not _excluded(s.x, p))
    return out


def good_residues(spec: CountingSpec) -> list[int]:
    """t mod p with t^2 - 4 a_j^2 a nonzero square for every j."""
    p = spec.p
    return [t for t in range(p) if all(legendre(t * t - 4 * a * a, p) == 1 for a in spec.a_list)]


def count_Yprime_char(spec: CountingSpec) -> int:
    """#Y'(p^l) from quadratic residues: 2^r p^(l-1) #{good t mod p}."""
    return 2**spec.r * spec.p ** (spec.l - 1) * len(good_residues(spec))


def _monomial_is_one(x: tuple[int, ...], n_list: tuple[int, ...], pl: int) -> bool:
    v = 1
    for xj, nj in zip(x, n_list):
        v = v * pow(xj, nj, pl) % pl
    return v == 1 % pl


def enum_Y0(spec: CountingSpec, prime: bool = False) -> list[SolutionTuple]:
    """Y_0(p^l), or Y'_0(p^l) with ``prime=True``."""
    if spec.n_list is None:
        raise CountingError("Y_0 needs n_list")
    base = enum_Yprime(spec) if prime else enum_Y(spec)
    return [s for s in base if _monomial_is_one(s.x, spec.n_list, spec.modulus)]


def enum_Y0prime(spec: CountingSpec) -> list[SolutionTuple]:
    return enum_Y0(spec, prime=True)


# -- obstruction polynomial ---------------------------------------------------

Laurent = dict  # exponent tuple -> int coefficient


def _laurent_mul(f: Laurent, g: Laurent) -> Laurent:
    out: dict = defaultdict(int)
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            out[tuple(u + v for u, v in zip(e1, e2))] += c1 * c2
    return {e: c for e, c in out.items() if c}


def g_laurent(n_list: Sequence[int]) -> Laurent:
    r = len(n_list)
    zero = (0,) * r
    G: Laurent = {zero: 1}
    for sigma in itertools.product((1, -1), repeat=r):
        mono = tuple(s * n for s, n in zip(sigma, n_list))
        factor = {zero: -1}
        factor[mono] = factor.get(mono, 0) + 1
        G = _laurent_mul(G, {e: c for e, c in factor.items() if c})
    return G


def _dickson(n: int) -> list[int]:
    """Coefficients (low to high) of V_n with V_n(x + 1/x) = x^n + x^-n, n >= 1."""
    prev, cur = [2], [0, 1]
    for _ in range(n - 1):
        nxt = [0] + cur
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def symmetric_reduce(G: Laurent, r: int) -> dict[tuple[int, ...], int]:
    """Rewrite a Laurent polynomial invariant under every x_j -> 1/x_j in s_j = x_j + 1/x_j."""
    out: dict = defaultdict(int)
    for e, c in G.items():
        for j in range(r):
            flipped = e[:j] + (-e[j],) + e[j + 1 :]
            if G.get(flipped, 0) != c:
                raise InternalInconsistency("G is not invariant under x_j -> 1/x_j")
        if any(v < 0 for v in e):
            continue
        # x^e + x^-e for e > 0, and 1 for e = 0
        factors = [_dickson(v) if v else [1] for v in e]
        for idx in itertools.product(*(range(len(f)) for f in factors)):
            coeff = c
            for f, i in zip(factors, idx):
                coeff *= f[i]
            if coeff:
                out[idx] += coeff
    return {d: c for d, c in out.items() if c}


@dataclass(frozen=True)
class ObstructionPolynomial:
    a_list: tuple[int, ...]
    n_list: tuple[int, ...]
    coeffs: tuple[Fraction, ...]  # low to high degree
    tilde: tuple[tuple[tuple[int, ...], int], ...]  # F~ as (s-degrees, integer coefficient)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __call__(self, t):
        return sum(c * t**i for i, c in enumerate(self.coeffs))

    def integer_coeffs(self) -> tuple[int, list[int]]:
        """(D, D*coeffs) with D the lcm of the denominators."""
        D = 1
        for c in self.coeffs:
            D = D * c.denominator // math.gcd(D, c.denominator)
        return D, [int(c * D) for c in self.coeffs]

    def eval_mod(self, t: int, modulus: int) -> int:
        """D*F(t) mod modulus, with integer coefficients."""
        _, ints = self.integer_coeffs()
        acc = 0
        for c in reversed(ints):
            acc = (acc * t + c) % modulus
        return acc

    def tilde_eval(self, s: Sequence[complex]) -> complex:
        total = 0j
        for degs, c in self.tilde:
            term = complex(c)
            for sj, d in zip(s, degs):
                term *= sj**d
            total += term
        return total


def reduce_F(a_list: Sequence[int], n_list: Sequence[int]) -> ObstructionPolynomial:
    """F(t) = F~(t/a_1, ..., t/a_r) without any validity checks on a_list."""
    if len(a_list) != len(n_list):
        raise CountingError("need one n_j per a_j")
    r = len(a_list)
    tilde = symmetric_reduce(g_laurent(n_list), r)
    poly: dict = defaultdict(Fraction)
    for degs, c in tilde.items():
        coeff = Fraction(c)
        for a, d in zip(a_list, degs):
            coeff /= Fraction(a) ** d
        poly[sum(degs)] += coeff
    deg = max((d for d, c in poly.items() if c), default=0)
    coeffs = tuple(poly.get(i, Fraction(0)) for i in range(deg + 1))
    return ObstructionPolynomial(tuple(a_list), tuple(n_list), coeffs, tuple(sorted(tilde.items())))


def build_F(a_list: Sequence[int], n_list: Sequence[int]) -> ObstructionPolynomial:
    if any(a == 0 for a in a_list):
        raise CountingError("a_j must be nonzero")
    if any(n == 0 for n in n_list):
        raise CountingError("n_j must be nonzero")
    _check_sign_distinct(a_list)
    F = reduce_F(a_list, n_list)
    if F.is_zero():
        raise InternalInconsistency(f"F vanishes identically for a={list(a_list)}, n={list(n_list)}")
    bound = 2 ** len(a_list) * max(abs(n) for n in n_list)
    if F.degree > bound:
        raise InternalInconsistency(f"deg F = {F.degree} exceeds 2^r max|n_j| = {bound}")
    return F


def y0prime_bound(spec: CountingSpec, F: ObstructionPolynomial) -> int:
    return 2**spec.r * F.degree * spec.p ** (spec.l - 1)


def yprime_deviation_band(spec: CountingSpec) -> tuple[float, float]:
    """(|#Y'/p^l - 1|, r 2^r / sqrt(p))."""
    n = count_Yprime_char(spec)
    return abs(n / spec.modulus - 1), spec.r * 2**spec.r / math.sqrt(spec.p)
