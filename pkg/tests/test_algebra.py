from __future__ import annotations

import numpy as np
import pytest

from pointline.algebra import (
    DEFAULT_PRIMES,
    AlgebraError,
    ComplexRing,
    DualRing,
    PrimeRing,
    cayley_numerator,
    cayley_rotation,
    check_modulus,
    cx_nullspace,
    cx_rank,
    default_primes,
    invert_matrix,
    matrix_rank,
    pf_invert,
    pf_nullspace,
    pf_rank,
    pf_solve,
    primes_below,
    ring_for,
    solve_linear,
)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, int(n**0.5) + 1):
        if n % d == 0:
            return False
    return True


def test_default_primes_are_distinct_primes():
    assert len(DEFAULT_PRIMES) == 5
    assert len(set(DEFAULT_PRIMES)) == 5
    for p in DEFAULT_PRIMES:
        assert _is_prime(p)
        assert p < 2**15  # products of two residues stay inside int64
    assert default_primes(3) == DEFAULT_PRIMES[:3]


def test_primes_below_agrees_with_trial_division():
    got = primes_below(200)
    want = [n for n in range(2, 200) if _is_prime(n)]
    assert got == want


def test_check_modulus_rejects_bad_values():
    assert check_modulus(32749) == 32749
    for bad in (0, 1, 4, 32748, 2**20):
        with pytest.raises(AlgebraError):
            check_modulus(bad)


@pytest.mark.parametrize("p", DEFAULT_PRIMES)
def test_rank_of_constructed_products(p):
    rng = np.random.default_rng(5)
    for n, k, r in [(4, 4, 2), (6, 5, 3), (7, 7, 7), (5, 8, 1)]:
        u = rng.integers(1, p, size=(n, r))
        v = rng.integers(1, p, size=(r, k))
        a = (u @ v) % p
        assert pf_rank(a, p) == r
        assert matrix_rank(a, modulus=p) == r


def test_cross_prime_rank_agreement():
    # integer matrices of known rank evaluate to the same rank mod every prime
    rng = np.random.default_rng(11)
    for trial in range(20):
        n, k, r = rng.integers(2, 9), rng.integers(2, 9), int(rng.integers(1, 5))
        r = min(r, n, k)
        u = rng.integers(-9, 10, size=(n, r))
        v = rng.integers(-9, 10, size=(r, k))
        a = u @ v
        ranks = {pf_rank(a % p, p) for p in DEFAULT_PRIMES}
        assert len(ranks) == 1
        assert ranks.pop() == np.linalg.matrix_rank(a)


def test_pf_solve_and_invert():
    p = DEFAULT_PRIMES[0]
    rng = np.random.default_rng(7)
    a = rng.integers(0, p, size=(6, 6))
    while pf_rank(a, p) < 6:
        a = rng.integers(0, p, size=(6, 6))
    b = rng.integers(0, p, size=6)
    x = pf_solve(a, b, p)
    assert np.array_equal((a @ x) % p, b % p)
    inv = pf_invert(a, p)
    assert np.array_equal((a @ inv) % p, np.eye(6, dtype=np.int64))
    assert np.array_equal(invert_matrix(a, modulus=p), inv)
    assert np.array_equal(solve_linear(a, b, modulus=p), x)


def test_pf_nullspace_annihilates():
    p = DEFAULT_PRIMES[1]
    rng = np.random.default_rng(9)
    u = rng.integers(0, p, size=(5, 3))
    v = rng.integers(0, p, size=(3, 7))
    a = (u @ v) % p
    ns = pf_nullspace(a, p)
    assert ns.shape[1] == 7 - pf_rank(a, p)
    assert np.all((a @ ns) % p == 0)


def test_cx_rank_with_noise():
    rng = np.random.default_rng(3)
    u = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
    v = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
    a = u @ v + 1e-12 * rng.standard_normal((8, 6))
    assert cx_rank(a) == 3
    assert matrix_rank(a) == 3
    ns = cx_nullspace(a)
    assert ns.shape[1] == 3
    assert np.abs(a @ ns).max() < 1e-9


def _det3_int(m) -> int:
    a, b, c = (int(x) for x in m[0])
    d, e, f = (int(x) for x in m[1])
    g, h, i = (int(x) for x in m[2])
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def test_cayley_orthogonality_exact_over_prime_fields():
    for p in DEFAULT_PRIMES:
        rng = np.random.default_rng(p)
        for _ in range(10):
            v = rng.integers(0, p, size=3)
            r = cayley_rotation(v, modulus=p)
            assert np.array_equal((r.T @ r) % p, np.eye(3, dtype=np.int64))
            assert _det3_int(r) % p == 1
            # the denominator-cleared form is exact over the integers, so
            # K^T K = kappa^2 I holds in Z and therefore mod every prime
            k, kappa = cayley_numerator(*(int(x) for x in v))
            km = np.array(k, dtype=object)
            assert np.array_equal(km.T @ km, int(kappa) ** 2 * np.eye(3, dtype=object))


def test_cayley_orthogonality_floats():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(3)
    r = cayley_rotation(v)
    assert np.abs(r.T @ r - np.eye(3)).max() < 1e-14
    k, kappa = cayley_numerator(*v)
    assert np.allclose(np.array(k) / kappa, r)


def test_dual_ring_differentiates():
    # d/dx of x^3 + 2x at x = 5 is 3*25 + 2
    ring = DualRing(ComplexRing(), 1)
    five = ring.lift(5.0, np.array([1.0]))
    expr = ring.add(ring.mul(five, ring.mul(five, five)), ring.mul(ring.const(2), five))
    assert abs(ring.value(expr) - 135.0) < 1e-12
    assert abs(ring.grad(expr)[0] - 77.0) < 1e-12


def test_dual_ring_exact_mod_p():
    p = DEFAULT_PRIMES[2]
    ring = DualRing(PrimeRing(p), 1)
    x = ring.lift(123, np.array([1], dtype=np.int64))
    expr = ring.mul(x, ring.mul(x, x))
    assert ring.value(expr) == pow(123, 3, p)
    assert int(ring.grad(expr)[0]) == 3 * 123 * 123 % p


def test_ring_for_dispatch():
    assert isinstance(ring_for(None), ComplexRing)
    pr = ring_for(32749)
    assert isinstance(pr, PrimeRing)
    assert pr.modulus == 32749
