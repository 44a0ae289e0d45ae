"""Twisted Kloosterman sums K_q(a, b, chi) modulo odd prime powers.

Two routes are provided for every quantity:

* direct summation over the units mod q (``ksum_brute`` and the
  all-characters variant ``ksum_brute_family``), cost O(q) per character;
* the stationary-phase closed forms (``ksum_closed`` and
  ``ksum_closed_family``), which only touch the roots of
  h(x) = a x^2 + t_chi x - b mod p^l, times a p-term Gauss factor when k is odd.

Phases are formed from exact integer numerators and converted to floats once,
so rounding does not accumulate along the sum.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .characters import (
    Character,
    RationalAngle,
    TChi,
    char_eval,
    char_t,
    character,
    quadratic_character,
    t_modulus,
    t_step,
)
from .modular import (
    DlogTable,
    PrimePowerModulus,
    QuadraticCongruence,
    get_dlog,
    legendre,
    lift_quadratic_roots,
    sqrt_mod_prime,
)

TWO_PI = 2.0 * math.pi
# Characters per vectorised block in the family paths.
CHUNK = 1 << 18


class KloostermanError(ValueError):
    pass


@dataclass(frozen=True)
class KloostermanValue:
    re: float
    im: float
    method: str  # brute | closed-even | closed-odd | untwisted-formula
    q: int
    in_S: bool | None = None
    degenerate_disc: bool | None = None

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)

    @property
    def normalized(self) -> complex:
        return self.value / math.sqrt(self.q)

    def bound_margin(self) -> float:
        """2*sqrt(q) - |K|; negative means the square-root bound is violated."""
        return 2.0 * math.sqrt(self.q) - abs(self)


@dataclass(frozen=True)
class GaussFactor:
    x: int
    d: int
    lin: int
    value: complex
    angle: float | None


@dataclass(frozen=True)
class NormalizedTwisted:
    value: float
    theta: float | None


def _check_units(mod: PrimePowerModulus, *vals: int) -> None:
    for v in vals:
        if v % mod.p == 0:
            raise KloostermanError(f"{v} is not a unit mod {mod.p}")


def _flags(mod: PrimePowerModulus, a: int, b: int, t: int | None) -> tuple[bool | None, bool | None]:
    if t is None:
        return None, None
    degenerate = (t * t + 4 * a * b) % mod.p == 0
    return not degenerate, degenerate


def _phase_turns(add_num: np.ndarray, q: int, char_num: np.ndarray, phi: int) -> np.ndarray:
    """Fractional turns of e_q(add_num) * e(char_num / phi), from exact residues."""
    return np.mod(add_num, q) / q + np.mod(char_num, phi) / phi


def ksum_brute(mod: PrimePowerModulus, a: int, b: int, chi: Character) -> KloostermanValue:
    """Direct phi(q)-term summation."""
    _check_units(mod, a, b)
    q, phi = mod.q, mod.phi
    dlog = chi.dlog
    xs = dlog.exp_array
    logs = np.arange(phi, dtype=np.int64)
    inv = xs[(-logs) % phi]
    add = (a % q) * xs + (b % q) * inv
    turns = _phase_turns(add, q, chi.m * logs, phi)
    s = np.sum(np.exp(TWO_PI * 1j * turns))
    t = char_t(chi, check=False).value if mod.k >= 2 else None
    in_s, degen = _flags(mod, a, b, t)
    return KloostermanValue(float(s.real), float(s.imag), "brute", q, in_s, degen)


def gauss_factor(p: int, l: int, t: TChi | int, a: int, b: int, x: int) -> GaussFactor:  # noqa: E741
    """G(x) = sum over y mod p of e_p(d y^2 + (h(x)/p^l) y), d = ((p-1)/2) t x^2 + b x."""
    tv = t.value if isinstance(t, TChi) else t
    h = a * x * x + tv * x - b
    pl = p**l
    if h % pl:
        raise KloostermanError(f"h({x}) is not divisible by p^l = {pl}")
    d = ((p - 1) // 2 * tv * x * x + b * x) % p
    lin = (h // pl) % p
    y = np.arange(p, dtype=np.int64)
    value = complex(np.sum(np.exp(TWO_PI * 1j * (np.mod(d * y * y + lin * y, p) / p))))
    if abs(value) < 1e-9 * p:
        angle = None
    else:
        angle = math.atan2(value.imag, value.real)
        if angle == -math.pi:
            angle = math.pi
    return GaussFactor(x, d, lin, value, angle)


def closed_roots(mod: PrimePowerModulus, a: int, b: int, t: int) -> list[int]:
    """Roots of h(x) = a x^2 + t x - b mod p^l, canonical lifts in [0, p^l)."""
    pl = mod.p**mod.l
    return lift_quadratic_roots(QuadraticCongruence(a % pl, t % pl, b % pl), mod.p, mod.l)


def ksum_closed(mod: PrimePowerModulus, a: int, b: int, chi: Character, lift_shift: int = 0) -> KloostermanValue:
    """K_q(a, b, chi) from the roots of h mod p^l.

    ``lift_shift`` adds a multiple of p^l to every root before evaluating the
    summand; the result must not depend on it.
    """
    if mod.k < 2:
        raise KloostermanError("no closed form for k = 1; use ksum_brute")
    _check_units(mod, a, b)
    p, l, q = mod.p, mod.l, mod.q
    pl = p**l
    if lift_shift % pl:
        raise KloostermanError("lift_shift must be a multiple of p^l")
    a_q, b_q = a % q, b % q
    t = char_t(chi, check=False)
    odd = mod.k % 2 == 1
    total = 0j
    for root in closed_roots(mod, a, b, t.value):
        x = root + lift_shift
        xinv = pow(x, -1, q)
        term = (RationalAngle(a_q * x + b_q * xinv, q) * char_eval(chi, x)).to_complex()
        if odd:
            term *= gauss_factor(p, l, t, a_q, b_q, x % q).value
        total += term
    total *= pl
    in_s, degen = _flags(mod, a, b, t.value)
    return KloostermanValue(total.real, total.imag, "closed-odd" if odd else "closed-even", q, in_s, degen)


def theta_of(value: float, tol: float = 1e-9) -> float | None:
    if abs(value) > 2.0 + tol:
        return None
    return math.acos(max(-1.0, min(1.0, value / 2.0)))


def normalized_twisted(mod: PrimePowerModulus, a: int, chi: Character) -> NormalizedTwisted:
    """q^(-1/2) K_q(a, -a, chi) as a real number, with theta when |value| <= 2."""
    kv = ksum_closed(mod, a, -a, chi) if mod.k >= 2 else ksum_brute(mod, a, -a, chi)
    root_q = math.sqrt(mod.q)
    if abs(kv.im) > 1e-8 * root_q:
        raise KloostermanError(f"K_q(a,-a,chi) has imaginary part {kv.im}; expected a real sum")
    v = kv.re / root_q
    return NormalizedTwisted(v, theta_of(v))


def untwisted_closed(mod: PrimePowerModulus, a: int) -> KloostermanValue:
    """K_q(a, 1, 1): zero for non-squares, otherwise evaluated through the closed form."""
    if mod.k < 2:
        raise KloostermanError("untwisted formula needs k >= 2")
    _check_units(mod, a)
    if legendre(a, mod.p) == -1:
        return KloostermanValue(0.0, 0.0, "untwisted-formula", mod.q, True, False)
    kv = ksum_closed(mod, a, 1, character(mod, 0))
    return KloostermanValue(kv.re, kv.im, "untwisted-formula", mod.q, kv.in_S, kv.degenerate_disc)


def square_roots_mod(a: int, mod: PrimePowerModulus) -> list[int]:
    return lift_quadratic_roots(QuadraticCongruence(1, 0, a % mod.q), mod.p, mod.k)


def untwisted_cosine_value(mod: PrimePowerModulus, a: int) -> float:
    """2 sqrt(q) cos(4 pi c / q) for a square root c of a mod q, or 0 if none."""
    roots = square_roots_mod(a, mod)
    if not roots:
        return 0.0
    return 2.0 * math.sqrt(mod.q) * math.cos(4.0 * math.pi * roots[0] / mod.q)


def untwisted_trig(mod: PrimePowerModulus) -> str:
    """Which trigonometric law |K_q(a,1,1)| / sqrt(q) follows for squares a = c^2.

    Even k, or odd k with p = 1 (mod 4): 2|cos(4 pi c/q)|. Odd k with
    p = 3 (mod 4): the Gauss factor contributes a quarter turn and the law is
    2|sin(4 pi c/q)|.
    """
    return "sin" if mod.k % 2 and mod.p % 4 == 3 else "cos"


def untwisted_expected_abs(mod: PrimePowerModulus, a: int) -> float:
    """Observed law for q^(-1/2) |K_q(a, 1, 1)|, k >= 2."""
    roots = square_roots_mod(a, mod)
    if not roots:
        return 0.0
    f = math.sin if untwisted_trig(mod) == "sin" else math.cos
    return 2.0 * abs(f(4.0 * math.pi * roots[0] / mod.q))


def salie_values(p: int, a_range: Iterable[int] | None = None) -> list[KloostermanValue]:
    """Brute-force K_p(a, 1, chi_2) with chi_2 the quadratic character mod p."""
    mod = PrimePowerModulus(p, 1)
    chi2 = quadratic_character(mod)
    if a_range is None:
        a_range = range(1, p)
    return [ksum_brute(mod, a, 1, chi2) for a in a_range]


def salie_expected_abs(p: int, a: int) -> float:
    """p^(-1/2) |K_p(a, 1, chi_2)| predicted by the square-root formula."""
    roots = sqrt_mod_prime(a, p)
    if not roots:
        return 0.0
    return 2.0 * abs(math.cos(4.0 * math.pi * roots[0] / p))


# -- all characters at once ---------------------------------------------------


def ksum_brute_family(mod: PrimePowerModulus, a: int, b: int, dlog: DlogTable | None = None) -> np.ndarray:
    """K_q(a, b, chi_m) for every m by direct double summation, O(phi^2)."""
    _check_units(mod, a, b)
    dlog = dlog or get_dlog(mod)
    q, phi = mod.q, mod.phi
    logs = np.arange(phi, dtype=np.int64)
    xs = dlog.exp_array
    add = np.mod((a % q) * xs + (b % q) * xs[(-logs) % phi], q) / q
    out = np.empty(phi, dtype=np.complex128)
    rows = max(1, (1 << 22) // phi)
    for lo in range(0, phi, rows):
        ms = np.arange(lo, min(lo + rows, phi), dtype=np.int64)
        turns = add[None, :] + np.mod(ms[:, None] * logs[None, :], phi) / phi
        out[lo : lo + len(ms)] = np.exp(TWO_PI * 1j * turns).sum(axis=1)
    return out


@dataclass
class ClosedTables:
    """Per-residue data for the closed form, indexed by t mod p^(k-l).

    Every character with t_chi = t shares the same roots; only chi(x) varies.
    """

    modulus: PrimePowerModulus
    a: int
    b: int
    step: int  # t_chi = m * step mod p^(k-l)
    n_roots: np.ndarray  # (M,)
    add_num: np.ndarray  # (M, R) residues a x + b/x mod q
    logs: np.ndarray  # (M, R) discrete logs of the roots
    weight: np.ndarray  # (M, R) complex, Gauss factor (1 for even k, 0 in padding)


def closed_tables(mod: PrimePowerModulus, a: int, b: int, dlog: DlogTable | None = None) -> ClosedTables:
    if mod.k < 2:
        raise KloostermanError("no closed form for k = 1")
    _check_units(mod, a, b)
    dlog = dlog or get_dlog(mod)
    p, l, q = mod.p, mod.l, mod.q
    M = t_modulus(mod)
    a_q, b_q = a % q, b % q
    odd = mod.k % 2 == 1
    per_t = []
    for t in range(M):
        entries = []
        for x in closed_roots(mod, a, b, t):
            xinv = pow(x, -1, q)
            w = gauss_factor(p, l, t, a_q, b_q, x).value if odd else 1.0
            entries.append(((a_q * x + b_q * xinv) % q, dlog.log(x), w))
        per_t.append(entries)
    R = max(1, max(len(e) for e in per_t))
    n_roots = np.zeros(M, dtype=np.int64)
    add_num = np.zeros((M, R), dtype=np.int64)
    logs = np.zeros((M, R), dtype=np.int64)
    weight = np.zeros((M, R), dtype=np.complex128)
    for t, entries in enumerate(per_t):
        n_roots[t] = len(entries)
        for r, (A, L, w) in enumerate(entries):
            add_num[t, r] = A
            logs[t, r] = L
            weight[t, r] = w
    return ClosedTables(mod, a, b, t_step(mod, dlog), n_roots, add_num, logs, weight)


def _eval_block(tables: ClosedTables, lo: int, hi: int) -> np.ndarray:
    mod = tables.modulus
    q, phi = mod.q, mod.phi
    M = tables.n_roots.shape[0]
    ms = np.arange(lo, hi, dtype=np.int64)
    tt = (ms * tables.step) % M
    out = np.zeros(hi - lo, dtype=np.complex128)
    for r in range(tables.add_num.shape[1]):
        w = tables.weight[tt, r]
        live = w != 0
        if not live.any():
            continue
        turns = tables.add_num[tt, r] / q + np.mod(ms * tables.logs[tt, r], phi) / phi
        out += np.where(live, w * np.exp(TWO_PI * 1j * turns), 0)
    return out * (mod.p**mod.l)


def _eval_range(tables: ClosedTables, lo: int, hi: int) -> np.ndarray:
    return np.concatenate([_eval_block(tables, s, min(s + CHUNK, hi)) for s in range(lo, hi, CHUNK)])


def ksum_closed_family(
    mod: PrimePowerModulus, a: int, b: int, dlog: DlogTable | None = None, workers: int = 1
) -> np.ndarray:
    """K_q(a, b, chi_m) for every m via the closed form.

    With ``workers > 1`` the character range is split across processes; each
    value is computed by the same elementwise arithmetic, so the merged result
    does not depend on the split.
    """
    tables = closed_tables(mod, a, b, dlog)
    phi = mod.phi
    if workers <= 1 or phi < 2 * CHUNK:
        return _eval_range(tables, 0, phi)
    bounds = np.linspace(0, phi, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_eval_range, [tables] * workers, bounds[:-1], bounds[1:]))
    return np.concatenate(parts)


@dataclass
class FamilyEntry:
    chi_index: int
    t_chi: int
    in_S: bool
    normalized: NormalizedTwisted


@dataclass
class Family:
    """The normalized sums q^(-1/2) K_q(a, -a, chi) over every character."""

    modulus: PrimePowerModulus
    a: int
    t_chi: np.ndarray
    in_S: np.ndarray
    values: np.ndarray
    n_roots: np.ndarray
    max_imag: float

    def __len__(self) -> int:
        return len(self.values)

    @property
    def chi_index(self) -> np.ndarray:
        return np.arange(len(self.values))

    @property
    def theta(self) -> np.ndarray:
        """arccos(value/2) where |value| <= 2, NaN elsewhere."""
        v = self.values
        ok = np.abs(v) <= 2.0 + 1e-9
        th = np.full(v.shape, np.nan)
        th[ok] = np.arccos(np.clip(v[ok] / 2.0, -1.0, 1.0))
        return th

    def __getitem__(self, i: int) -> FamilyEntry:
        v = float(self.values[i])
        return FamilyEntry(i, int(self.t_chi[i]), bool(self.in_S[i]), NormalizedTwisted(v, theta_of(v)))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def s_mask(t_chi: np.ndarray, p: int, a_list: Sequence[int]) -> np.ndarray:
    """True where t_chi avoids +-2a (mod p) for every a in a_list."""
    tp = t_chi % p
    keep = np.ones(tp.shape, dtype=bool)
    for a in a_list:
        if a % p == 0:
            raise KloostermanError(f"a = {a} is not a unit mod {p}")
        keep &= (tp != (2 * a) % p) & (tp != (-2 * a) % p)
    return keep


def family_values(mod: PrimePowerModulus, a: int, dlog: DlogTable | None = None, workers: int = 1) -> Family:
    if mod.k < 2:
        raise KloostermanError("family fast path needs k >= 2")
    dlog = dlog or get_dlog(mod)
    tables = closed_tables(mod, a, -a, dlog)
    K = ksum_closed_family(mod, a, -a, dlog, workers=workers)
    root_q = math.sqrt(mod.q)
    max_imag = float(np.max(np.abs(K.imag))) if len(K) else 0.0
    if max_imag > 1e-8 * root_q:
        raise KloostermanError(f"family is not real: max |Im K| = {max_imag}")
    ms = np.arange(mod.phi, dtype=np.int64)
    t = (ms * tables.step) % t_modulus(mod)
    n_roots = tables.n_roots[t]
    values = K.real / root_q
    values[n_roots == 0] = 0.0
    return Family(mod, a, t, s_mask(t, mod.p, [a]), values, n_roots, max_imag / root_q)
