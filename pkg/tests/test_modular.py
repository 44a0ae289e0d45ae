import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tkloos.modular import (
    CACHE_MAGIC,
    InvalidModulus,
    NotPrimitiveRoot,
    PrimePowerModulus,
    QuadraticCongruence,
    build_dlog,
    cache_path,
    get_dlog,
    is_prime,
    lift_quadratic_roots,
    primitive_root,
    read_dlog_cache,
    sqrt_mod_prime,
    write_dlog_cache,
)

PRIMES_TO_200 = [p for p in range(3, 200) if is_prime(p)]


def order(g, q):
    x, n = g % q, 1
    while x != 1:
        x = x * g % q
        n += 1
    return n


def smallest_generator_by_search(p, k):
    q = p**k
    phi = p ** (k - 1) * (p - 1)
    return next(g for g in range(2, q) if g % p and order(g, q) == phi)


def test_modulus_fields():
    m = PrimePowerModulus(7, 3)
    assert (m.q, m.l, m.phi) == (343, 1, 294)
    assert PrimePowerModulus(5, 4).l == 2


@pytest.mark.parametrize("p,k", [(2, 3), (9, 1), (1, 1), (3, 0), (3, 40)])
def test_modulus_rejects(p, k):
    with pytest.raises(InvalidModulus):
        PrimePowerModulus(p, k)


@pytest.mark.parametrize("p,k,expected", [(3, 2, 2), (5, 1, 2), (7, 2, 3)])
def test_primitive_root_examples(p, k, expected):
    assert primitive_root(PrimePowerModulus(p, k)) == expected
    assert smallest_generator_by_search(p, k) == expected


@pytest.mark.parametrize("p,k", [(p, k) for p in (3, 5, 7, 11, 13, 29, 31, 37) for k in (1, 2, 3) if p**k < 30000])
def test_primitive_root_is_smallest_generator(p, k):
    assert primitive_root(PrimePowerModulus(p, k)) == smallest_generator_by_search(p, k)


def test_primitive_root_needs_lift_check():
    # 14 generates mod 29 but 14^28 = 1 mod 29^2; the generator mod 29^2 must skip such g
    m = PrimePowerModulus(29, 2)
    g = primitive_root(m)
    assert order(g, m.q) == m.phi


def test_dlog_examples():
    t = build_dlog(PrimePowerModulus(3, 2), 2)
    assert t.log(4) == 2
    assert t.log(8) == 3
    assert t.log(1) == 0
    assert t.log(2) == 1
    with pytest.raises(ValueError):
        t.log(3)


def test_dlog_round_trip_q25():
    m = PrimePowerModulus(5, 2)
    t = build_dlog(m, 2)
    for x in range(1, 25):
        if x % 5:
            assert pow(2, t.log(x), 25) == x


@pytest.mark.parametrize("p,k", [(3, 4), (7, 3), (13, 2), (101, 2)])
def test_dlog_round_trip_all_units(p, k):
    m = PrimePowerModulus(p, k)
    t = build_dlog(m, primitive_root(m))
    units = np.array([x for x in range(m.q) if x % p])
    logs = t.log_array[units]
    assert sorted(logs.tolist()) == list(range(m.phi))
    assert all(pow(t.generator, int(e), m.q) == x for x, e in zip(units[::7], logs[::7]))


def test_dlog_rejects_non_generator():
    with pytest.raises(NotPrimitiveRoot):
        build_dlog(PrimePowerModulus(7, 1), 2)  # 2 has order 3 mod 7
    with pytest.raises(NotPrimitiveRoot):
        build_dlog(PrimePowerModulus(29, 2), 14)


def test_dlog_table_is_read_only():
    t = build_dlog(PrimePowerModulus(5, 2), 2)
    with pytest.raises(ValueError):
        t.log_array[1] = 5


def test_dlog_cache_round_trip(tmp_path):
    m = PrimePowerModulus(7, 2)
    t = build_dlog(m, primitive_root(m))
    path = cache_path(m, tmp_path)
    write_dlog_cache(t, path)
    raw = path.read_bytes()
    assert path.name == "dlog_7_2.bin"
    assert raw[:4] == CACHE_MAGIC
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:12], "little") == 7
    assert int.from_bytes(raw[12:16], "little") == 2
    assert len(raw) == 16 + 8 * m.phi
    # entry i is the log of the i-th unit in ascending order: 1, 2, ..., 6, 8, ...
    entries = np.frombuffer(raw[16:], dtype="<i8")
    units = [x for x in range(m.q) if x % 7]
    assert [t.log(u) for u in units] == entries.tolist()
    loaded = read_dlog_cache(m, path)
    assert np.array_equal(loaded.log_array, t.log_array)
    assert np.array_equal(loaded.exp_array, t.exp_array)


def test_dlog_cache_corrupt_is_rebuilt(tmp_path, monkeypatch):
    m = PrimePowerModulus(5, 3)
    monkeypatch.setenv("TKLOOS_CACHE_DIR", str(tmp_path))
    path = cache_path(m)
    path.write_bytes(b"KLDL" + b"\x00" * 40)
    assert read_dlog_cache(m, path) is None
    get_dlog.cache_clear()
    t = get_dlog(m)
    assert t.generator == 2
    assert read_dlog_cache(m, path) is not None
    # wrong header is a miss, not an error
    raw = bytearray(path.read_bytes())
    raw[8:12] = (7).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    assert read_dlog_cache(m, path) is None
    get_dlog.cache_clear()


@pytest.mark.parametrize("n,p,expected", [(4, 7, [2, 5]), (3, 7, []), (0, 7, [0])])
def test_sqrt_examples(n, p, expected):
    assert sqrt_mod_prime(n, p) == expected


@pytest.mark.parametrize("p", PRIMES_TO_200)
def test_sqrt_exhaustive(p):
    squares = {}
    for x in range(p):
        squares.setdefault(x * x % p, []).append(x)
    for n in range(p):
        roots = sqrt_mod_prime(n, p)
        assert roots == sorted(squares.get(n, []))
        assert bool(roots) == (pow(n, (p - 1) // 2, p) in (0, 1))


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([10007, 40961, 65537, 998244353, 1000000007]), st.integers(min_value=0))
def test_sqrt_large_primes(p, n):
    n %= p
    for r in sqrt_mod_prime(n, p):
        assert r * r % p == n


def scan(a, t, b, p, l):
    pl = p**l
    return [x for x in range(pl) if (a * x * x + t * x - b) % pl == 0]


@pytest.mark.parametrize(
    "qc,p,l,expected",
    [
        (QuadraticCongruence(1, 0, -1), 3, 1, []),
        (QuadraticCongruence(1, 0, -1), 5, 1, [2, 3]),
        (QuadraticCongruence(1, 0, 1), 5, 2, [1, 24]),
    ],
)
def test_lift_examples(qc, p, l, expected):
    assert lift_quadratic_roots(qc, p, l) == expected


@pytest.mark.parametrize("p", [3, 5, 7])
@pytest.mark.parametrize("l", [1, 2])
def test_lift_matches_scan_exhaustively(p, l):
    pl = p**l
    units = [x for x in range(pl) if x % p]
    for a in units:
        for b in units:
            for t in range(pl):
                roots = lift_quadratic_roots(QuadraticCongruence(a, t, b), p, l)
                assert roots == scan(a, t, b, p, l)
                assert all(x % p for x in roots)
                if (t * t + 4 * a * b) % p:
                    assert len(roots) in (0, 2)


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from([3, 5, 7, 11, 13, 101, 997]),
    st.integers(1, 6),
    st.integers(),
    st.integers(),
    st.integers(),
)
def test_lift_separable_roots(p, l, a, t, b):
    pl = p**l
    a, b, t = a % pl, b % pl, t % pl
    if a % p == 0 or b % p == 0 or (t * t + 4 * a * b) % p == 0:
        return
    roots = lift_quadratic_roots(QuadraticCongruence(a, t, b), p, l)
    assert len(roots) in (0, 2)
    assert roots == sorted(roots)
    for x in roots:
        assert (a * x * x + t * x - b) % pl == 0
    # soluble mod p^l iff soluble mod p
    assert bool(roots) == bool(sqrt_mod_prime((t * t + 4 * a * b) % p, p))
