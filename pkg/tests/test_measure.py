import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tkloos.kloosterman import family_values
from tkloos.measure import (
    MU,
    SATO_TATE,
    EmpiricalFamily,
    LimitMeasure,
    MeasureError,
    MomentSpec,
    density,
    family_stats,
    joint_moment,
    ks_distance,
    mu_cdf,
    mu_cdf_left,
    mu_moment,
    mu_sample,
    stieltjes_moment,
    zero_fraction_prediction,
)
from tkloos.modular import PrimePowerModulus


def mu_quantile(u):
    """Inverse of the right-continuous cdf of mu."""
    u = np.asarray(u, dtype=float)
    lo = -2 * np.cos(2 * np.pi * u)  # continuous part below the atom
    hi = -2 * np.cos(2 * np.pi * (u - 0.5))
    return np.where(u < 0.25, lo, np.where(u <= 0.75, 0.0, hi))


def test_cdf_examples():
    assert mu_cdf(-2.0) == 0.0
    assert mu_cdf(2.0) == 1.0
    assert mu_cdf(0.0) == pytest.approx(0.75)
    assert mu_cdf_left(0.0) == pytest.approx(0.25)
    assert mu_cdf(-3.0) == 0.0 and mu_cdf(7.0) == 1.0
    assert mu_cdf(0.0, SATO_TATE) == pytest.approx(0.5)


@pytest.mark.parametrize("variant,mass", [(MU, 0.5), (SATO_TATE, 1.0)])
def test_density_mass(variant, mass):
    total = quad(lambda x: float(density(x, variant)), -2, 2, limit=200)[0]
    assert total == pytest.approx(mass, abs=1e-8)
    assert quad(lambda x: float(density(x, MU)), -2, 0)[0] == pytest.approx(0.25, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
def test_cdf_monotone(x, y):
    lo, hi = min(x, y), max(x, y)
    for v in (MU, SATO_TATE):
        assert mu_cdf(lo, v) <= mu_cdf(hi, v) + 1e-15


def test_moment_examples():
    assert mu_moment(1) == 0
    assert mu_moment(2) == 1
    assert mu_moment(4) == 3
    assert mu_moment(0) == 1
    assert [mu_moment(2 * n, SATO_TATE) for n in range(5)] == [1, 1, 2, 5, 14]
    assert LimitMeasure().moment(6) == 10
    with pytest.raises(MeasureError):
        mu_moment(-1)
    with pytest.raises(MeasureError):
        LimitMeasure("haar")


@pytest.mark.parametrize("variant", [MU, SATO_TATE])
@pytest.mark.parametrize("m", range(9))
def test_stieltjes_matches_moments(variant, m):
    assert stieltjes_moment(m, variant) == pytest.approx(mu_moment(m, variant), abs=1e-6)


def test_sampler_support_and_determinism():
    s = mu_sample(3, 4)
    assert np.all((s == 0) | (np.abs(s) <= 2))
    assert np.array_equal(mu_sample(11, 1000), mu_sample(11, 1000))
    with pytest.raises(MeasureError):
        mu_sample(0, 0)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_sampler_law(seed):
    s = mu_sample(seed, 10**6)
    assert abs(np.mean(s == 0) - 0.5) <= 0.002
    assert abs(np.mean(s * s) - 1) <= 0.01
    assert ks_distance(s, MU) <= 0.005


def test_ks_examples():
    assert ks_distance([0.0]) == pytest.approx(0.25)
    assert ks_distance([2.0]) == pytest.approx(1.0)
    n = 20000
    q = mu_quantile((np.arange(n) + 0.5) / n)
    assert ks_distance(q) < 1e-3
    assert ks_distance(q, SATO_TATE) > 0.2
    with pytest.raises(MeasureError):
        ks_distance([])


def test_ks_against_brute_witness():
    rng = np.random.default_rng(5)
    v = np.concatenate([rng.uniform(-2, 2, 40), np.zeros(10)])
    grid = np.concatenate([np.linspace(-2.5, 2.5, 200001), v])
    emp = np.searchsorted(np.sort(v), grid, side="right") / len(v)
    brute = np.max(np.abs(emp - mu_cdf(grid)))
    assert ks_distance(v) >= brute - 1e-12
    assert ks_distance(v) <= brute + 1e-3


def test_empirical_sorted():
    e = EmpiricalFamily([1.0, -1.0, 0.0])
    assert e.values.tolist() == [-1.0, 0.0, 1.0]
    assert len(e) == 3


def test_joint_moment_q9():
    j = joint_moment(PrimePowerModulus(3, 2), [1], [2])
    assert j.value == 0.0
    assert j.limit == 1.0
    assert j.n_in_S == 2


def test_joint_moment_errors():
    mod = PrimePowerModulus(11, 2)
    with pytest.raises(MeasureError):
        joint_moment(mod, [1, 12], [2, 2])
    with pytest.raises(MeasureError):
        joint_moment(mod, [1, -1], [2, 2])
    with pytest.raises(MeasureError):
        joint_moment(mod, [1, 11], [1, 1])
    with pytest.raises(MeasureError):
        joint_moment(mod, [1], [0])
    with pytest.raises(MeasureError):
        joint_moment(mod, [1, 2], [1])
    with pytest.raises(MeasureError):
        joint_moment(PrimePowerModulus(11, 1), [1], [2])
    assert MomentSpec((2, 2)).limit() == 1.0


@pytest.mark.parametrize("p", [101, 211, 499, 997])
def test_zero_atom(p):
    fam = family_values(PrimePowerModulus(p, 2), 1)
    st_ = family_stats(fam)
    assert st_.zero_fraction == pytest.approx(zero_fraction_prediction(p, 1), abs=1e-15)
    assert abs(st_.zero_fraction - 0.5) <= 5 / math.sqrt(p)
    assert st_.excluded_count == 2 * (p - 1)


def test_moment_trend():
    errs = []
    for p in (101, 499, 997):
        j = joint_moment(PrimePowerModulus(p, 2), [1], [2])
        errs.append((p, abs(j.value - 1)))
    for (p0, e0), (p1, e1) in zip(errs, errs[1:]):
        assert e1 <= e0 + 2 / math.sqrt(p1)


def test_joint_at_997():
    mod = PrimePowerModulus(997, 2)
    fams = [family_values(mod, a) for a in (1, 2)]
    assert abs(joint_moment(mod, [1], [1], families=fams[:1]).value) <= 0.1
    j = joint_moment(mod, [1, 2], [2, 2], families=fams)
    assert abs(j.value - 1) <= 0.1
    assert j.value_s == pytest.approx(j.value * mod.q / j.n_in_S)


def test_family_stats_filter():
    fam = family_values(PrimePowerModulus(7, 2), 1)
    a, b = family_stats(fam), family_stats(fam, sq_filter=False)
    assert a.n_in_S == 42 - 12 and b.n_in_S == 42
    assert a.moments[2] == pytest.approx(a.moments_s_normalized[2] * a.n_in_S / 49)
