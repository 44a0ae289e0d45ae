"""The limit measure mu = (1/2) delta_0 + dx / (2 pi sqrt(4 - x^2)) on [-2, 2],
the Sato-Tate measure for comparison, and empirical comparisons against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import quad

from .kloosterman import Family, family_values, s_mask
from .modular import DlogTable, PrimePowerModulus, get_dlog, legendre

MU = "mu"
SATO_TATE = "sato_tate"
VARIANTS = (MU, SATO_TATE)


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class LimitMeasure:
    variant: str = MU

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise MeasureError(f"unknown variant {self.variant!r}")

    @property
    def atom_weight(self) -> float:
        return 0.5 if self.variant == MU else 0.0

    def density(self, x):
        return density(x, self.variant)

    def cdf(self, x):
        return mu_cdf(x, self.variant)

    def moment(self, m: int) -> float:
        return mu_moment(m, self.variant)


def density(x, variant: str = MU):
    """Absolutely continuous part of the measure (zero outside (-2, 2))."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 2
    xs = np.where(inside, x, 0.0)
    if variant == MU:
        d = 1.0 / (2 * np.pi * np.sqrt(4 - xs * xs))
    elif variant == SATO_TATE:
        d = np.sqrt(4 - xs * xs) / (2 * np.pi)
    else:
        raise MeasureError(f"unknown variant {variant!r}")
    return np.where(inside, d, 0.0)


def mu_cdf(x, variant: str = MU):
    """Right-continuous distribution function; clamps outside [-2, 2]."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, -2.0, 2.0)
    if variant == MU:
        cont = (np.arcsin(xc / 2) + np.pi / 2) / (2 * np.pi)
        out = cont + 0.5 * (x >= 0)
    elif variant == SATO_TATE:
        out = (xc * np.sqrt(4 - xc * xc) / 2 + 2 * np.arcsin(xc / 2) + np.pi) / (2 * np.pi)
    else:
        raise MeasureError(f"unknown variant {variant!r}")
    out = np.where(x < -2, 0.0, np.where(x >= 2, 1.0, out))
    return out if out.ndim else float(out)


def mu_cdf_left(x, variant: str = MU):
    """F(x-), which differs from F(x) only at the atom of mu."""
    x = np.asarray(x, dtype=float)
    out = np.asarray(mu_cdf(x, variant), dtype=float)
    if variant == MU:
        out = out - 0.5 * (x == 0)
    return out if out.ndim else float(out)


def mu_moment(m: int, variant: str = MU) -> float:
    """Integral of x^m against the measure."""
    if m < 0:
        raise MeasureError("moment order must be >= 0")
    if m % 2:
        return 0.0
    n = m // 2
    if variant == MU:
        return 1.0 if m == 0 else 0.5 * math.comb(m, n)
    if variant == SATO_TATE:
        return math.comb(2 * n, n) / (n + 1)
    raise MeasureError(f"unknown variant {variant!r}")


def mu_sample(seed: int, n: int) -> np.ndarray:
    """Traces of Haar-random elements of the normaliser of a maximal torus in SU(2).

    The non-identity component has trace 0; on the torus diag(e^{i u}, e^{-i u})
    the trace is 2 cos(u), and its law only needs u uniform on [0, pi].
    """
    if n < 1:
        raise MeasureError("need n >= 1 samples")
    rng = np.random.default_rng(seed)
    heads = rng.random(n) < 0.5
    u = rng.random(n)
    return np.where(heads, 0.0, 2.0 * np.cos(np.pi * u))


@dataclass
class EmpiricalFamily:
    values: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=float))

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_family(cls, fam: Family, sq_filter: bool = True) -> "EmpiricalFamily":
        v = fam.values[fam.in_S] if sq_filter else fam.values
        return cls(v, {"q": fam.modulus.q, "a": fam.a, "sq_filter": sq_filter})


def ks_distance(fam: EmpiricalFamily | Sequence[float], variant: str = MU) -> float:
    """sup |F_emp - F| for a reference with a possible atom at 0.

    Between consecutive sample points F_emp is flat and F is monotone, so the
    supremum is attained at one-sided limits at the sample points or at 0.
    """
    v = fam.values if isinstance(fam, EmpiricalFamily) else np.sort(np.asarray(fam, dtype=float))
    n = len(v)
    if n == 0:
        raise MeasureError("empty family")
    pts = np.unique(np.concatenate([v, [0.0]]))
    emp_right = np.searchsorted(v, pts, side="right") / n
    emp_left = np.searchsorted(v, pts, side="left") / n
    ref_right = np.asarray(mu_cdf(pts, variant))
    ref_left = np.asarray(mu_cdf_left(pts, variant))
    return float(max(np.max(np.abs(emp_right - ref_right)), np.max(np.abs(emp_left - ref_left))))


@dataclass(frozen=True)
class MomentSpec:
    m_list: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "m_list", tuple(int(m) for m in self.m_list))
        if not self.m_list or any(m < 1 for m in self.m_list):
            raise MeasureError("moment orders must all be >= 1")

    def limit(self, variant: str = MU) -> float:
        return math.prod(mu_moment(m, variant) for m in self.m_list)


@dataclass
class JointMoment:
    value: float  # (1/q) * sum over S_q
    value_s: float  # (1/|S_q|) * sum over S_q
    n_in_S: int
    q: int
    limit: float


def _pairwise_sum(x: np.ndarray) -> float:
    """Sum in a fixed binary-tree order, independent of how x was produced."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return 0.0
    while len(x) > 1:
        if len(x) % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return float(x[0])


def joint_moment(
    mod: PrimePowerModulus,
    a_list: Sequence[int],
    spec: MomentSpec | Sequence[int],
    sq_filter: bool = True,
    dlog: DlogTable | None = None,
    families: Sequence[Family] | None = None,
    workers: int = 1,
) -> JointMoment:
    """(1/q) sum over chi in S_q of prod_j K(a_j, chi)^(m_j)."""
    if not isinstance(spec, MomentSpec):
        spec = MomentSpec(tuple(spec))
    if len(spec.m_list) != len(a_list):
        raise MeasureError("need one moment order per a_j")
    p = mod.p
    residues = [a % p for a in a_list]
    if 0 in residues:
        raise MeasureError("every a_j must be a unit mod p")
    signed = {min(a, p - a) for a in residues}
    if len(signed) != len(residues):
        raise MeasureError("a_j must be pairwise distinct up to sign mod p")
    if mod.k < 2:
        raise MeasureError("joint moments use the closed form and need k >= 2")
    dlog = dlog or get_dlog(mod)
    if families is None:
        families = [family_values(mod, a, dlog, workers=workers) for a in a_list]
    t = families[0].t_chi
    keep = s_mask(t, p, a_list) if sq_filter else np.ones(len(t), dtype=bool)
    prod = np.ones(int(keep.sum()))
    for fam, m in zip(families, spec.m_list):
        prod = prod * fam.values[keep] ** m
    total = _pairwise_sum(prod)
    n_s = int(keep.sum())
    return JointMoment(total / mod.q, total / n_s if n_s else float("nan"), n_s, mod.q, spec.limit())


@dataclass
class FamilyStats:
    q: int
    a: int
    n_characters: int
    n_in_S: int
    excluded_count: int
    ks_distance: float
    ks_distance_sato_tate: float
    zero_fraction: float
    moments: dict[int, float]
    moments_s_normalized: dict[int, float]


def family_stats(fam: Family, sq_filter: bool = True, max_moment: int = 8) -> FamilyStats:
    keep = fam.in_S if sq_filter else np.ones(len(fam), dtype=bool)
    v = fam.values[keep]
    q = fam.modulus.q
    emp = EmpiricalFamily(v)
    moments, moments_s = {}, {}
    for j in range(1, max_moment + 1):
        s = _pairwise_sum(v**j)
        moments[j] = s / q
        moments_s[j] = s / len(v) if len(v) else float("nan")
    return FamilyStats(
        q=q,
        a=fam.a,
        n_characters=len(fam),
        n_in_S=int(keep.sum()),
        excluded_count=int((~fam.in_S).sum()),
        ks_distance=ks_distance(emp, MU),
        ks_distance_sato_tate=ks_distance(emp, SATO_TATE),
        zero_fraction=float(np.mean(v == 0.0)) if len(v) else float("nan"),
        moments=moments,
        moments_s_normalized=moments_s,
    )


def stieltjes_moment(m: int, variant: str = MU) -> float:
    """Integral of x^m dF computed from the distribution function alone.

    Integration by parts on [-2, 2]: 2^m F(2) - (-2)^m F(-2-) - int m x^(m-1) F(x) dx.
    """
    if m == 0:
        return float(mu_cdf(2.0, variant))

    def integrand(x):
        return m * x ** (m - 1) * float(mu_cdf(x, variant))

    left, _ = quad(integrand, -2.0, 0.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    right, _ = quad(integrand, 0.0, 2.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return 2.0**m * float(mu_cdf(2.0, variant)) - left - right


def zero_fraction_prediction(p: int, a: int) -> float:
    """#{t mod p admissible : (t^2 - 4a^2 | p) = -1} / #{admissible t}."""
    admissible = [t for t in range(p) if t not in {2 * a % p, -2 * a % p}]
    return sum(1 for t in admissible if legendre(t * t - 4 * a * a, p) == -1) / len(admissible)
