"""Prime windows, sieves and integer factorization.

Everything here works with plain Python ints (arbitrary precision) but
refuses inputs beyond a 128-bit budget, so overflow is an explicit error
rather than silent wraparound in downstream array code.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import BudgetError, ConfigError, IntegerBudgetError

INT128_MAX = (1 << 127) - 1

# smallest B for which log log B is defined and positive
_EE = math.exp(math.e)


def primes_up_to(n: int) -> np.ndarray:
    """Primes <= n, ascending."""
    if n > 10**9:
        raise BudgetError(f"sieve bound {n} beyond the 1e9 budget", required=n, budget=10**9)
    return kernels.prime_sieve(int(n))


def prime_reciprocal_sum(T: int) -> float:
    """Sum of 1/p over primes p <= T, accumulated with exact float summation."""
    ps = primes_up_to(T)
    return math.fsum(1.0 / p for p in ps)


@dataclass(frozen=True)
class PrimeWindow:
    """Half-open prime range (lo, hi]: primes p with lo < p <= hi.

    ``hi = None`` leaves the window unbounded above; such windows cannot be
    iterated, only membership-tested.
    """

    lo: int
    hi: int | None

    def __post_init__(self):
        if self.lo < 2:
            raise ConfigError(f"window lower bound {self.lo} must be >= 2")
        if self.hi is not None and self.hi < 0:
            raise ConfigError("window upper bound must be >= 0 or None")

    @property
    def empty(self) -> bool:
        return self.hi is not None and self.hi <= self.lo

    @property
    def bounded(self) -> bool:
        return self.hi is not None

    def contains(self, p: int) -> bool:
        return p > self.lo and (self.hi is None or p <= self.hi)

    def primes(self) -> np.ndarray:
        if self.hi is None:
            raise ConfigError("cannot enumerate an unbounded prime window")
        if self.empty:
            return np.empty(0, dtype=np.int64)
        ps = primes_up_to(self.hi)
        return ps[ps > self.lo]

    def __iter__(self):
        return iter(int(p) for p in self.primes())


def truncation_thresholds(B: float, M: float) -> tuple[float, float]:
    """Window endpoints (t0, t1) = ((log B)^M, B^(1/(log log B)^M)).

    Requires B > e^e so that log log B > 1; note log t1 = log B/(log log B)^M
    exactly, which the tests pin to 1e-12 relative.
    """
    if B <= _EE:
        raise ConfigError(f"B = {B} must exceed e^e ~ 15.154")
    if M < 0:
        raise ConfigError("M must be >= 0")
    lb = math.log(B)
    llb = math.log(lb)
    t0 = lb**M
    t1 = math.exp(lb / llb**M)
    return t0, t1


def truncation_window(B: float, M: float) -> PrimeWindow:
    """Integer prime window for the real thresholds of truncation_thresholds.

    A real lower bound t0 < 2 (e.g. M = 0 gives t0 = 1) collapses to the
    exclusive bound 2, so the window is (2, floor(t1)].  When t1 <= t0 the
    returned window is empty, which at desk-scale B is the normal case.
    """
    t0, t1 = truncation_thresholds(B, M)
    lo = max(2, math.floor(t0))
    hi = math.floor(t1)
    return PrimeWindow(lo=lo, hi=max(hi, 0))


def suggested_truncation_exponent(B: float) -> float:
    """The default window exponent max(2, log log B)."""
    if B <= _EE:
        raise ConfigError(f"B = {B} must exceed e^e ~ 15.154")
    return max(2.0, math.log(math.log(B)))


# ----------------------------------------------------------------------
# factorization
# ----------------------------------------------------------------------

_MR_DETERMINISTIC = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_DETERMINISTIC_LIMIT = 3_317_044_064_679_887_385_961_981
_RHO_SEED = 0x5EED_0F1B  # fixed so factorizations are reproducible


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin; deterministic below ~3.3e24, fixed-seed bases beyond."""
    if n < 2:
        return False
    for p in _MR_DETERMINISTIC:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    bases = list(_MR_DETERMINISTIC)
    if n >= _MR_DETERMINISTIC_LIMIT:
        rng = random.Random(_RHO_SEED ^ (n & 0xFFFFFFFF))
        bases += [rng.randrange(2, n - 1) for _ in range(20)]
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=1)
def _trial_primes() -> tuple[int, ...]:
    return tuple(int(p) for p in primes_up_to(1 << 16))


def _brent_rho(n: int, rng: random.Random) -> int:
    # Brent's cycle variant with batched gcds; n odd composite, not a prime power
    while True:
        y = rng.randrange(1, n)
        c = rng.randrange(1, n)
        m = 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


@dataclass(frozen=True)
class Factorization:
    """Prime factorization of a positive integer: value = prod p^e."""

    value: int
    exponents: dict[int, int] = field(default_factory=dict)

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(sorted(self.exponents))

    @property
    def omega(self) -> int:
        return len(self.exponents)

    @property
    def tau(self) -> int:
        t = 1
        for e in self.exponents.values():
            t *= e + 1
        return t

    @property
    def rad(self) -> int:
        r = 1
        for p in self.exponents:
            r *= p
        return r

    def reconstruct(self) -> int:
        v = 1
        for p, e in self.exponents.items():
            v *= p**e
        return v


def factorize(m: int) -> Factorization:
    """Full factorization of m >= 1 within the 128-bit budget.

    Trial division by primes below 2^16 handles everything up to 2^32
    exactly; larger cofactors go through Miller-Rabin plus Brent's rho with
    a fixed seed, so repeated runs factor identically.
    """
    if m < 1:
        raise ConfigError(f"factorize expects m >= 1, got {m}")
    if m > INT128_MAX:
        raise IntegerBudgetError(
            f"{m} exceeds the 128-bit integer budget", required=m.bit_length(), budget=127
        )
    expo: dict[int, int] = {}
    for p in _trial_primes():
        if p * p > m:
            break
        while m % p == 0:
            expo[p] = expo.get(p, 0) + 1
            m //= p
    if m > 1:
        stack = [m]
        rng = random.Random(_RHO_SEED ^ (m & 0xFFFFFFFF))
        while stack:
            v = stack.pop()
            if v == 1:
                continue
            if v < (1 << 32) or is_probable_prime(v):
                expo[v] = expo.get(v, 0) + 1
                continue
            root = math.isqrt(v)
            if root * root == v:
                stack += [root, root]
                continue
            d = _brent_rho(v, rng)
            stack += [d, v // d]
    value = 1
    for p, e in expo.items():
        value *= p**e
    return Factorization(value=value, exponents=expo)


def omega(m: int) -> int:
    """Number of distinct prime divisors (omega(1) = 0)."""
    return factorize(m).omega


def tau(m: int) -> int:
    """Number of positive divisors."""
    return factorize(m).tau


def rad(m: int) -> int:
    """Largest squarefree divisor (rad(1) = 1)."""
    return factorize(m).rad
