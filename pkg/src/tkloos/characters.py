"""Multiplicative characters mod p^k, indexed by an exponent on a fixed generator.

The character with index m sends g**e to e(m*e/phi(q)). Values are kept as
exact rational angles; floating point only enters at summation sites.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .modular import DlogTable, PrimePowerModulus, get_dlog


class CharacterError(ValueError):
    pass


@dataclass(frozen=True)
class RationalAngle:
    """The root of unity e(num/den), stored reduced with 0 <= num < den."""

    num: int
    den: int

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(self.num, self.den)
        object.__setattr__(self, "num", (self.num // g) % (self.den // g))
        object.__setattr__(self, "den", self.den // g)

    def __mul__(self, other: "RationalAngle") -> "RationalAngle":
        den = self.den * other.den // math.gcd(self.den, other.den)
        return RationalAngle(self.num * (den // self.den) + other.num * (den // other.den), den)

    def __pow__(self, n: int) -> "RationalAngle":
        return RationalAngle(self.num * n, self.den)

    def conjugate(self) -> "RationalAngle":
        return RationalAngle(-self.num, self.den)

    @property
    def turns(self) -> float:
        return self.num / self.den

    def to_complex(self) -> complex:
        return cmath.exp(2j * math.pi * self.num / self.den)

    def is_one(self) -> bool:
        return self.num == 0


ONE = RationalAngle(0, 1)


@dataclass(frozen=True)
class Character:
    modulus: PrimePowerModulus
    dlog: DlogTable = field(compare=False, repr=False)
    m: int

    def __post_init__(self):
        if not 0 <= self.m < self.modulus.phi:
            raise CharacterError(f"character index {self.m} outside [0, {self.modulus.phi})")

    def __call__(self, x: int) -> RationalAngle:
        return char_eval(self, x)

    def __mul__(self, other: "Character") -> "Character":
        return Character(self.modulus, self.dlog, (self.m + other.m) % self.modulus.phi)

    def inverse(self) -> "Character":
        return Character(self.modulus, self.dlog, -self.m % self.modulus.phi)

    @property
    def is_trivial(self) -> bool:
        return self.m == 0


@dataclass(frozen=True)
class TChi:
    """t_chi together with the modulus p^(k-l) it lives in."""

    value: int
    modulus: int


def character(modulus: PrimePowerModulus, m: int, dlog: DlogTable | None = None) -> Character:
    return Character(modulus, dlog or get_dlog(modulus), m % modulus.phi)


def quadratic_character(modulus: PrimePowerModulus, dlog: DlogTable | None = None) -> Character:
    return character(modulus, modulus.phi // 2, dlog)


def enumerate_characters(modulus: PrimePowerModulus, dlog: DlogTable | None = None) -> list[Character]:
    dlog = dlog or get_dlog(modulus)
    return [Character(modulus, dlog, m) for m in range(modulus.phi)]


def char_eval(chi: Character, x: int) -> RationalAngle:
    mod = chi.modulus
    if x % mod.p == 0:
        raise CharacterError(f"{x} is not a unit mod {mod.q}")
    return RationalAngle(chi.m * chi.dlog.log(x), mod.phi)


def t_modulus(modulus: PrimePowerModulus) -> int:
    return modulus.p ** (modulus.k - modulus.l)


def unipotent_point(modulus: PrimePowerModulus, x: int) -> int:
    """1 + p^l x for even k, 1 + p^l x + p^(2l) x^2 / 2 for odd k, reduced mod q."""
    p, l, q = modulus.p, modulus.l, modulus.q
    u = 1 + p**l * x
    if modulus.k % 2:
        u += pow(2, -1, q) * p ** (2 * l) * x * x
    return u % q


def t_step(modulus: PrimePowerModulus, dlog: DlogTable) -> int:
    """The integer c with t_chi = m*c mod p^(k-l) for the character of index m."""
    if modulus.k < 2:
        raise CharacterError("t_chi is only defined for k >= 2")
    num = dlog.log(unipotent_point(modulus, 1)) * t_modulus(modulus)
    if num % modulus.phi:
        raise CharacterError("log of the unipotent generator is not divisible as expected; dlog table is inconsistent")
    return num // modulus.phi


def char_t(chi: Character, check: bool = True) -> TChi:
    mod = chi.modulus
    M = t_modulus(mod)
    t = chi.m * t_step(mod, chi.dlog) % M
    if check:
        rng = random.Random(hash((mod.p, mod.k, chi.m)))
        for _ in range(8):
            x = rng.randrange(M)
            lhs = char_eval(chi, unipotent_point(mod, x))
            if lhs != RationalAngle(t * x, M):
                raise CharacterError(f"defining relation for t_chi fails at x={x} (m={chi.m})")
    return TChi(t, M)


def subgroup_C(modulus: PrimePowerModulus, j: int, dlog: DlogTable | None = None) -> list[Character]:
    """Characters trivial on every unit congruent to 1 mod p^j."""
    if not 0 <= j <= modulus.k:
        raise CharacterError(f"j={j} outside [0, {modulus.k}]")
    chars = enumerate_characters(modulus, dlog)
    if j == 0:
        return chars[:1]
    # 1 + p^j generates the units that are 1 mod p^j
    gen = (1 + modulus.p**j) % modulus.q
    return [chi for chi in chars if char_eval(chi, gen).is_one()]


def excluded_residues(a_list: Iterable[int], p: int) -> set[int]:
    out = set()
    for a in a_list:
        if a % p == 0:
            raise CharacterError(f"a = {a} is not a unit mod {p}")
        out.update({2 * a % p, -2 * a % p})
    return out


def in_S(chi: Character, a_list: Sequence[int]) -> bool:
    p = chi.modulus.p
    bad = excluded_residues(a_list, p)
    return char_t(chi, check=False).value % p not in bad
