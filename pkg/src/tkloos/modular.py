"""Exact modular arithmetic for odd prime power moduli.

Primitive roots, dense discrete-log tables (with an on-disk cache), square
roots modulo a prime, and Hensel lifting of quadratic congruences.
"""

from __future__ import annotations

import logging
import os
import random
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

# q * phi(q) must stay below 2**63 so that products of a residue and a
# discrete log fit signed 64-bit arithmetic.
MAX_MODULUS = 3_037_000_499

CACHE_ENV = "TKLOOS_CACHE_DIR"
CACHE_MAGIC = b"KLDL"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class InvalidModulus(ValueError):
    pass


class NotPrimitiveRoot(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n, ascending."""
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def legendre(n: int, p: int) -> int:
    """Legendre symbol (n|p) in {-1, 0, 1} for an odd prime p."""
    n %= p
    if n == 0:
        return 0
    return 1 if pow(n, (p - 1) // 2, p) == 1 else -1


@dataclass(frozen=True)
class PrimePowerModulus:
    """The modulus q = p**k for an odd prime p."""

    p: int
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidModulus(f"exponent k must be >= 1, got {self.k}")
        if self.p == 2:
            raise InvalidModulus("p = 2 is not supported (unit group mod 2^k is not cyclic)")
        if not is_prime(self.p):
            raise InvalidModulus(f"p = {self.p} is not prime")
        if self.p ** self.k > MAX_MODULUS:
            raise InvalidModulus(f"q = {self.p}^{self.k} exceeds the supported range ({MAX_MODULUS})")

    @property
    def q(self) -> int:
        return self.p ** self.k

    @property
    def l(self) -> int:  # noqa: E743
        return self.k // 2

    @property
    def phi(self) -> int:
        return self.p ** (self.k - 1) * (self.p - 1)

    def __str__(self):
        return f"{self.p}^{self.k}"


def _has_full_order(g: int, m: PrimePowerModulus, factors: list[int]) -> bool:
    p = m.p
    if g % p == 0:
        return False
    if any(pow(g, (p - 1) // f, p) == 1 for f in factors):
        return False
    # A primitive root mod p generates mod p^k iff it is not a root of unity mod p^2.
    return m.k == 1 or pow(g, p - 1, p * p) != 1


def primitive_root(m: PrimePowerModulus) -> int:
    """Smallest generator of (Z/qZ)*."""
    factors = prime_factors(m.p - 1)
    g = 2
    while not _has_full_order(g, m, factors):
        g += 1
    return g


class DlogTable:
    """Dense discrete logarithm table for the units mod q.

    ``log`` has length q with -1 at non-units; ``exp`` has length phi(q) and
    ``exp[i] == generator**i % q``. Both arrays are read-only.
    """

    def __init__(self, modulus: PrimePowerModulus, generator: int, log_arr: np.ndarray, exp_arr: np.ndarray):
        self.modulus = modulus
        self.generator = generator
        log_arr.setflags(write=False)
        exp_arr.setflags(write=False)
        self._log = log_arr
        self._exp = exp_arr

    @property
    def log_array(self) -> np.ndarray:
        return self._log

    @property
    def exp_array(self) -> np.ndarray:
        return self._exp

    def log(self, x: int) -> int:
        v = int(self._log[x % self.modulus.q])
        if v < 0:
            raise ValueError(f"{x} is not a unit mod {self.modulus.q}")
        return v

    def exp(self, e: int) -> int:
        return int(self._exp[e % self.modulus.phi])

    def __repr__(self):
        return f"DlogTable(q={self.modulus.q}, generator={self.generator})"


def build_dlog(m: PrimePowerModulus, g: int) -> DlogTable:
    """Tabulate discrete logs to base g by walking the powers of g (O(q))."""
    q, phi = m.q, m.phi
    exp_arr = np.empty(phi, dtype=np.int64)
    x = 1
    for i in range(phi):
        exp_arr[i] = x
        x = x * g % q
        if x == 1 and i < phi - 1:
            raise NotPrimitiveRoot(f"{g} has order {i + 1} < phi({q}) = {phi}")
    if x != 1:
        raise NotPrimitiveRoot(f"{g} is not a unit mod {q}")
    log_arr = np.full(q, -1, dtype=np.int64)
    log_arr[exp_arr] = np.arange(phi, dtype=np.int64)
    return DlogTable(m, g, log_arr, exp_arr)


# -- disk cache -------------------------------------------------------------


def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "tkloos"


def cache_path(m: PrimePowerModulus, directory: Path | None = None) -> Path:
    return (directory or cache_dir()) / f"dlog_{m.p}_{m.k}.bin"


def unit_residues(m: PrimePowerModulus) -> np.ndarray:
    r = np.arange(m.q, dtype=np.int64)
    return r[r % m.p != 0]


def write_dlog_cache(table: DlogTable, path: Path) -> None:
    """Write entries ``log(u)`` for the units u in ascending order."""
    m = table.modulus
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = table.log_array[unit_residues(m)].astype("<i8")
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, m.p, m.k))
        fh.write(entries.tobytes())
    os.replace(tmp, path)


def read_dlog_cache(m: PrimePowerModulus, path: Path) -> DlogTable | None:
    """Load a cached table; returns None if the file is missing or does not validate."""
    try:
        raw = path.read_bytes()
    except OSError:
        return None
    if len(raw) != _HEADER.size + 8 * m.phi:
        return None
    magic, version, p, k = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or version != CACHE_VERSION or (p, k) != (m.p, m.k):
        return None
    entries = np.frombuffer(raw, dtype="<i8", offset=_HEADER.size).astype(np.int64)
    units = unit_residues(m)
    if entries.min() < 0 or entries.max() >= m.phi:
        return None
    exp_arr = np.full(m.phi, -1, dtype=np.int64)
    exp_arr[entries] = units
    if (exp_arr < 0).any():
        return None
    log_arr = np.full(m.q, -1, dtype=np.int64)
    log_arr[units] = entries
    g = int(exp_arr[1 % m.phi]) if m.phi > 1 else 1
    if g != primitive_root(m):
        return None
    rng = random.Random(m.q)
    for _ in range(16):
        e = rng.randrange(m.phi)
        if pow(g, e, m.q) != exp_arr[e]:
            return None
    return DlogTable(m, g, log_arr, exp_arr)


@lru_cache(maxsize=16)
def get_dlog(m: PrimePowerModulus, use_disk: bool = True) -> DlogTable:
    """Dlog table for the smallest primitive root, memoised and disk-cached."""
    g = primitive_root(m)
    path = cache_path(m)
    if use_disk:
        table = read_dlog_cache(m, path)
        if table is not None:
            return table
    table = build_dlog(m, g)
    if use_disk:
        try:
            write_dlog_cache(table, path)
        except OSError as exc:
            log.warning("could not write dlog cache %s: %s", path, exc)
    return table


# -- square roots and quadratic congruences ----------------------------------


def sqrt_mod_prime(n: int, p: int) -> list[int]:
    """All x in [0, p) with x*x = n (mod p), ascending (Tonelli-Shanks)."""
    n %= p
    if n == 0:
        return [0]
    if pow(n, (p - 1) // 2, p) != 1:
        return []
    if p % 4 == 3:
        r = pow(n, (p + 1) // 4, p)
    else:
        s, odd = 0, p - 1
        while odd % 2 == 0:
            odd //= 2
            s += 1
        z = 2
        while pow(z, (p - 1) // 2, p) != p - 1:
            z += 1
        c = pow(z, odd, p)
        r = pow(n, (odd + 1) // 2, p)
        t = pow(n, odd, p)
        while t != 1:
            i, t2 = 0, t
            while t2 != 1:
                t2 = t2 * t2 % p
                i += 1
            b = pow(c, 1 << (s - i - 1), p)
            r = r * b % p
            c = b * b % p
            t = t * c % p
            s = i
    return sorted({r, p - r})


@dataclass(frozen=True)
class QuadraticCongruence:
    """h(x) = a*x^2 + t*x - b, with a and b units."""

    a: int
    t: int
    b: int

    def __call__(self, x: int) -> int:
        return self.a * x * x + self.t * x - self.b

    @property
    def discriminant(self) -> int:
        return self.t * self.t + 4 * self.a * self.b


def _scan_roots(c: QuadraticCongruence, pl: int) -> list[int]:
    return [x for x in range(pl) if c(x) % pl == 0]


def lift_quadratic_roots(c: QuadraticCongruence, p: int, l: int) -> list[int]:  # noqa: E741
    """Roots of h mod p**l, ascending in [0, p**l).

    Separable case (p does not divide the discriminant): solve mod p and
    Newton-lift, doubling the precision each step. Otherwise scan Z/p^lZ.
    """
    pl = p ** l
    if l == 0:
        return [0]
    disc = c.discriminant % p
    if disc == 0:
        return _scan_roots(c, pl)
    sq = sqrt_mod_prime(disc, p)
    if not sq:
        return []
    inv2a = pow(2 * c.a, -1, p)
    roots = []
    for s in sq:
        x = (-c.t + s) * inv2a % p
        prec = 1
        while prec < l:
            prec = min(2 * prec, l)
            mod = p ** prec
            deriv = (2 * c.a * x + c.t) % mod
            x = (x - c(x) * pow(deriv, -1, mod)) % mod
        roots.append(x)
    return sorted(roots)
