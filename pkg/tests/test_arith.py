import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omegafib.arith import (
    Factorization,
    PrimeWindow,
    factorize,
    is_probable_prime,
    omega,
    prime_reciprocal_sum,
    primes_up_to,
    rad,
    suggested_truncation_exponent,
    tau,
    truncation_thresholds,
    truncation_window,
)
from omegafib.errors import BudgetError, ConfigError, IntegerBudgetError


def test_prime_counts():
    assert len(primes_up_to(10)) == 4
    assert len(primes_up_to(10**6)) == 78498


def test_prime_reciprocal_sum_values():
    # sum over p <= T of 1/p; the T=10 value is 1/2+1/3+1/5+1/7 = 247/210
    assert abs(prime_reciprocal_sum(10) - float(Fraction(247, 210))) < 1e-15
    assert abs(prime_reciprocal_sum(100) - 1.802817) < 1e-6
    assert abs(prime_reciprocal_sum(10**4) - 2.483060) < 1e-6


def test_prime_window_basics():
    w = PrimeWindow(2, 10)
    assert list(w) == [3, 5, 7]
    assert w.contains(3) and w.contains(7)
    assert not w.contains(2) and not w.contains(11)
    assert PrimeWindow(10, 10).empty
    assert PrimeWindow(13, 12).empty
    open_w = PrimeWindow(5, None)
    assert not open_w.bounded
    assert open_w.contains(10**9 + 7)


def test_prime_window_validation():
    with pytest.raises(ConfigError):
        PrimeWindow(1, 10)


def test_truncation_thresholds_shape():
    # the windowed range is empty at desk scale: t0 > t1 already at B = 10^6
    t0, t1 = truncation_thresholds(10**6, 2)
    assert abs(t0 - math.log(10**6) ** 2) < 1e-9
    assert abs(t1 - math.exp(math.log(10**6) / math.log(math.log(10**6)) ** 2)) < 1e-9
    assert t0 > t1
    assert truncation_window(10**6, 2).empty
    with pytest.raises(ConfigError):
        truncation_thresholds(10, 2)  # needs B > e^e


def test_suggested_truncation_exponent_positive():
    assert suggested_truncation_exponent(10**6) >= 1


def test_factorize_known():
    f = factorize(600851475143)
    assert f.primes == (71, 839, 1471, 6857)
    assert f.value == 600851475143
    assert factorize(2**10).exponents == {2: 10}
    assert factorize(1).primes == ()
    assert omega(96) == 2 and tau(96) == 12 and rad(96) == 6


def test_factorize_rejects_nonpositive():
    with pytest.raises(ConfigError):
        factorize(0)
    with pytest.raises(ConfigError):
        factorize(-12)


def test_factorize_budget():
    with pytest.raises(IntegerBudgetError):
        factorize(2**200)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=2, max_value=10**12))
def test_factorize_roundtrip(n):
    f = factorize(n)
    prod = 1
    for p, e in f.exponents.items():
        assert is_probable_prime(p)
        prod *= p**e
    assert prod == n
    assert f.primes == tuple(sorted(f.primes))


def test_is_probable_prime_agrees_with_sieve():
    import sympy

    for n in range(2, 2000):
        assert is_probable_prime(n) == sympy.isprime(n)
    for n in (2**61 - 1, 10**18 + 9, 10**18 + 7):
        assert is_probable_prime(n) == sympy.isprime(n)


def test_primes_budget():
    with pytest.raises(BudgetError):
        primes_up_to(2 * 10**9)


def test_factorization_helpers():
    f = Factorization(360, {2: 3, 3: 2, 5: 1})
    assert f.omega == 3
    assert f.tau == 24
    assert f.rad == 30
