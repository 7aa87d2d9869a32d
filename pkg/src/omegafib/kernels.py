"""Hot numeric kernels, each with a numba loop and a vectorized numpy twin.

Public functions dispatch to the numba-compiled implementation when numba is
importable, and to the numpy fallback otherwise.  The fallback can be forced
with the environment variable::

    OMEGAFIB_NO_NUMBA=1

Both implementations of every kernel stay importable (``nb_`` / ``np_``
prefixes) so the tests can assert agreement and
``benchmarks/bench_kernels.py`` can time them side by side.

Usage:
    >>> from omegafib import kernels
    >>> kernels.prime_sieve(30)
    array([ 2,  3,  5,  7, 11, 13, 17, 19, 23, 29])
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


_FORCE_NUMPY = os.environ.get("OMEGAFIB_NO_NUMBA", "").strip().lower() in (
    "1",
    "true",
    "yes",
    "on",
)
USE_NUMBA = HAS_NUMBA and not _FORCE_NUMPY


def backend() -> str:
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"


# ======================================================================
# prime sieve
# ======================================================================


@njit(cache=True, nogil=True)
def _prime_mask_nb(n):
    mask = np.ones(n + 1, dtype=np.uint8)
    mask[0] = 0
    mask[1] = 0
    p = 2
    while p * p <= n:
        if mask[p]:
            for q in range(p * p, n + 1, p):
                mask[q] = 0
        p += 1
    return mask


def nb_prime_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(_prime_mask_nb(n)).astype(np.int64)


def np_prime_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.empty(0, dtype=np.int64)
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.flatnonzero(mask).astype(np.int64)


def prime_sieve(n: int) -> np.ndarray:
    """All primes <= n, ascending, as an int64 array.

    Parameters
    ----------
    n : int
        Inclusive upper bound.

    Returns
    -------
    numpy.ndarray
        Primes p <= n in increasing order.
    """
    return nb_prime_sieve(n) if USE_NUMBA else np_prime_sieve(n)


# ======================================================================
# smallest-prime-factor / omega / mobius tables
# ======================================================================


@njit(cache=True, nogil=True)
def _spf_sieve_nb(n):
    spf = np.zeros(n + 1, dtype=np.int32)
    p = 2
    while p * p <= n:
        if spf[p] == 0:
            for q in range(p * p, n + 1, p):
                if spf[q] == 0:
                    spf[q] = p
        p += 1
    for m in range(2, n + 1):
        if spf[m] == 0:
            spf[m] = m
    return spf


def nb_spf_sieve(n: int) -> np.ndarray:
    return _spf_sieve_nb(n)


def np_spf_sieve(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int32)
    for p in range(2, math.isqrt(n) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[:2] = 0
    return spf


def spf_sieve(n: int) -> np.ndarray:
    """Smallest-prime-factor table for 0..n (entries 0 and 1 are 0)."""
    return nb_spf_sieve(n) if USE_NUMBA else np_spf_sieve(n)


@njit(cache=True, nogil=True)
def _omega_sieve_nb(n):
    om = np.zeros(n + 1, dtype=np.uint8)
    for p in range(2, n + 1):
        if om[p] == 0:
            for q in range(p, n + 1, p):
                om[q] += 1
    return om


def nb_omega_sieve(n: int) -> np.ndarray:
    return _omega_sieve_nb(n)


def np_omega_sieve(n: int) -> np.ndarray:
    om = np.zeros(n + 1, dtype=np.uint8)
    for p in np_prime_sieve(n):
        om[p::p] += 1
    return om


def omega_sieve(n: int) -> np.ndarray:
    """Distinct-prime-divisor counts omega(m) for m = 0..n (omega(0)=omega(1)=0)."""
    return nb_omega_sieve(n) if USE_NUMBA else np_omega_sieve(n)


@njit(cache=True, nogil=True)
def _mobius_sieve_nb(n):
    spf = _spf_sieve_nb(n)
    mu = np.zeros(n + 1, dtype=np.int8)
    if n >= 1:
        mu[1] = 1
    for m in range(2, n + 1):
        p = spf[m]
        q = m // p
        if q % p == 0:
            mu[m] = 0
        else:
            mu[m] = -mu[q]
    return mu


def nb_mobius_sieve(n: int) -> np.ndarray:
    return _mobius_sieve_nb(n)


def np_mobius_sieve(n: int) -> np.ndarray:
    # track the product of found prime divisors; a deficit at the end means
    # one extra prime factor above sqrt(n)
    mu = np.ones(n + 1, dtype=np.int8)
    prod = np.ones(n + 1, dtype=np.int64)
    for p in range(2, math.isqrt(n) + 1):
        if prod[p] == 1:
            mu[p::p] *= -1
            mu[p * p :: p * p] = 0
            prod[p::p] *= p
    rem = prod[2:] < np.arange(2, n + 1)
    mu2 = mu[2:]
    mu2[rem] *= -1
    mu[0] = 0
    return mu


def mobius_sieve(n: int) -> np.ndarray:
    """Mobius function mu(m) for m = 0..n as int8 (mu(0) set to 0)."""
    return nb_mobius_sieve(n) if USE_NUMBA else np_mobius_sieve(n)


# ======================================================================
# primitive-vector counting in symmetric boxes
# ======================================================================


@njit(cache=True, nogil=True)
def _coprime_quadrant_nb(lo, hi, B):
    total = 0
    for a in range(lo, hi):
        for b in range(1, B + 1):
            x, y = a, b
            while y:
                x, y = y, x % y
            if x == 1:
                total += 1
    return total


def nb_coprime_quadrant(lo: int, hi: int, B: int) -> int:
    return int(_coprime_quadrant_nb(lo, hi, B))


def np_coprime_quadrant(lo: int, hi: int, B: int, block: int = 512) -> int:
    cols = np.arange(1, B + 1, dtype=np.int64)
    total = 0
    for s in range(lo, hi, block):
        rows = np.arange(s, min(s + block, hi), dtype=np.int64)[:, None]
        total += int(np.count_nonzero(np.gcd(rows, cols[None, :]) == 1))
    return total


def coprime_pair_count(B: int, threads: int = 1) -> int:
    """#{(a, b) : 1 <= a, b <= B, gcd(a, b) = 1}.

    Parameters
    ----------
    B : int
        Box side.
    threads : int
        Row-range shards run on a thread pool; both backends release the GIL.
    """
    impl = nb_coprime_quadrant if USE_NUMBA else np_coprime_quadrant
    if threads <= 1 or B < 256:
        return impl(1, B + 1, B)
    bounds = np.linspace(1, B + 1, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = ex.map(lambda ab: impl(ab[0], ab[1], B), zip(bounds[:-1], bounds[1:]))
        return sum(parts)


@njit(cache=True, nogil=True)
def _box_count_nb(dim, B, start, stop):
    # odometer over flattened indices [start, stop) of the box [-B, B]^dim
    size = 2 * B + 1
    coords = np.empty(dim, dtype=np.int64)
    idx = start
    for k in range(dim - 1, -1, -1):
        coords[k] = idx % size - B
        idx //= size
    total = 0
    for _ in range(start, stop):
        g = 0
        for k in range(dim):
            x = coords[k]
            if x < 0:
                x = -x
            a, b = g, x
            while b:
                a, b = b, a % b
            g = a
            if g == 1:
                break
        if g == 1:
            total += 1
        k = dim - 1
        while k >= 0:
            coords[k] += 1
            if coords[k] > B:
                coords[k] = -B
                k -= 1
            else:
                break
    return total


def nb_box_count(dim: int, B: int, start: int, stop: int) -> int:
    return int(_box_count_nb(dim, B, start, stop))


def np_box_count(dim: int, B: int, start: int, stop: int, block: int = 1 << 20) -> int:
    size = 2 * B + 1
    total = 0
    for s in range(start, stop, block):
        idx = np.arange(s, min(s + block, stop), dtype=np.int64)
        g = None
        for _ in range(dim):
            idx, r = np.divmod(idx, size)
            c = np.abs(r - B)
            g = c if g is None else np.gcd(g, c)
        total += int(np.count_nonzero(g == 1))
    return total


def primitive_box_count(dim: int, B: int, threads: int = 1) -> int:
    """#{v in [-B, B]^dim : gcd(v_1, ..., v_dim) = 1}.

    The zero vector has gcd 0 and is never counted.  Caller is responsible
    for budget checks on (2B+1)^dim.
    """
    n_total = (2 * B + 1) ** dim
    impl = nb_box_count if USE_NUMBA else np_box_count
    if threads <= 1 or n_total < (1 << 16):
        return impl(dim, B, 0, n_total)
    bounds = np.linspace(0, n_total, threads + 1).astype(np.int64)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = ex.map(
            lambda ab: impl(dim, B, int(ab[0]), int(ab[1])),
            zip(bounds[:-1], bounds[1:]),
        )
        return sum(parts)


# ======================================================================
# Poisson-binomial pmf by sequential convolution
# ======================================================================


@njit(cache=True, nogil=True)
def _poibin_nb(probs, cap):
    q = np.zeros(cap + 1, dtype=np.float64)
    q[0] = 1.0
    tail = 0.0
    hi = 0
    for i in range(probs.shape[0]):
        s = probs[i]
        tail += q[cap] * s
        top = hi + 1
        if top > cap:
            top = cap
        for k in range(top, 0, -1):
            q[k] = q[k] * (1.0 - s) + q[k - 1] * s
        q[0] *= 1.0 - s
        if hi < cap:
            hi += 1
    return q, tail


def nb_poibin_pmf(probs: np.ndarray, cap: int) -> tuple[np.ndarray, float]:
    q, tail = _poibin_nb(np.ascontiguousarray(probs, dtype=np.float64), cap)
    return q, float(tail)


def np_poibin_pmf(probs: np.ndarray, cap: int) -> tuple[np.ndarray, float]:
    # extended precision keeps the mass identity tight over millions of steps
    q = np.zeros(cap + 1, dtype=np.longdouble)
    q[0] = 1.0
    tail = np.longdouble(0.0)
    for s in np.asarray(probs, dtype=np.longdouble):
        tail += q[cap] * s
        q[1:] = q[1:] * (1 - s) + q[:-1] * s
        q[0] = q[0] * (1 - s)
    return q.astype(np.float64), float(tail)


def poibin_pmf(probs: np.ndarray, cap: int) -> tuple[np.ndarray, float]:
    """Pmf of a sum of independent Bernoulli variables, truncated at ``cap``.

    Parameters
    ----------
    probs : array of float
        Success probabilities, each in [0, 1].
    cap : int
        Largest count tracked exactly.

    Returns
    -------
    (pmf, tail)
        ``pmf[k] = P[S = k]`` for k = 0..cap and ``tail = P[S > cap]``.
    """
    if USE_NUMBA:
        return nb_poibin_pmf(probs, cap)
    return np_poibin_pmf(probs, cap)


# ======================================================================
# zero counting of sparse integer forms over F_p
# ======================================================================


@njit(cache=True, nogil=True)
def _eval_count_nb(coeffs, exps, p, fixed, nfree):
    # count zeros over points (fixed..., t_1, ..., t_nfree), t_j in F_p
    nt = coeffs.shape[0]
    nfixed = fixed.shape[0]
    total = 0
    free = np.zeros(nfree, dtype=np.int64)
    n_pts = 1
    for _ in range(nfree):
        n_pts *= p
    for _ in range(n_pts):
        acc = 0
        for t in range(nt):
            term = coeffs[t] % p
            for v in range(nfixed + nfree):
                e = exps[t, v]
                if e == 0 or term == 0:
                    continue
                b = fixed[v] if v < nfixed else free[v - nfixed]
                if b == 0:
                    term = 0
                    continue
                r = 1
                base = b
                ee = e
                while ee:
                    if ee & 1:
                        r = r * base % p
                    base = base * base % p
                    ee >>= 1
                term = term * r % p
            acc = (acc + term) % p
        if acc == 0:
            total += 1
        k = nfree - 1
        while k >= 0:
            free[k] += 1
            if free[k] == p:
                free[k] = 0
                k -= 1
            else:
                break
    return total


def nb_zero_count_stratum(coeffs, exps, p, fixed, nfree) -> int:
    return int(
        _eval_count_nb(
            np.ascontiguousarray(coeffs, dtype=np.int64),
            np.ascontiguousarray(exps, dtype=np.int64),
            p,
            np.ascontiguousarray(fixed, dtype=np.int64),
            nfree,
        )
    )


def _vec_powmod(base: np.ndarray, e: int, p: int) -> np.ndarray:
    out = np.ones_like(base)
    b = base % p
    while e:
        if e & 1:
            out = out * b % p
        b = b * b % p
        e >>= 1
    return out


def np_zero_count_stratum(coeffs, exps, p, fixed, nfree, block: int = 1 << 18) -> int:
    coeffs = np.asarray(coeffs, dtype=np.int64)
    exps = np.asarray(exps, dtype=np.int64)
    fixed = np.asarray(fixed, dtype=np.int64)
    nfixed = len(fixed)
    n_pts = p**nfree
    total = 0
    for s in range(0, n_pts, block):
        idx = np.arange(s, min(s + block, n_pts), dtype=np.int64)
        coords = []
        ii = idx
        for _ in range(nfree):
            ii, r = np.divmod(ii, p)
            coords.append(r)
        coords.reverse()
        acc = np.zeros(idx.shape[0], dtype=np.int64)
        for t in range(coeffs.shape[0]):
            term = np.full(idx.shape[0], coeffs[t] % p, dtype=np.int64)
            for v in range(nfixed):
                e = int(exps[t, v])
                if e:
                    term = term * pow(int(fixed[v]) % p, e, p) % p
            for v in range(nfree):
                e = int(exps[t, nfixed + v])
                if e:
                    term = term * _vec_powmod(coords[v], e, p) % p
            acc = (acc + term) % p
        total += int(np.count_nonzero(acc == 0))
    return total


def zero_count_stratum(coeffs, exps, p: int, fixed, nfree: int) -> int:
    """Zeros of a sparse form on the slice {fixed coords} x F_p^nfree.

    ``exps`` is the (terms x nvars) exponent matrix; the first ``len(fixed)``
    variables are pinned to ``fixed`` and the remaining nfree vary over F_p.
    """
    if USE_NUMBA:
        return nb_zero_count_stratum(coeffs, exps, p, fixed, nfree)
    return np_zero_count_stratum(coeffs, exps, p, fixed, nfree)


# ======================================================================
# Mobius-weighted congruence-class counting (equidistribution fast path)
# ======================================================================


@njit(cache=True, nogil=True)
def _class_sum_nb(mu, B, Q, qprimes, alphas, betas):
    total = 0
    for d in range(1, B + 1):
        m = mu[d]
        if m == 0:
            continue
        ok = True
        for i in range(qprimes.shape[0]):
            if d % qprimes[i] == 0:
                ok = False
                break
        if not ok:
            continue
        X = B // d
        s = 0
        for j in range(alphas.shape[0]):
            a = alphas[j]
            b = betas[j]
            ca = (X - a) // Q + (X + a) // Q + 1
            cb = (X - b) // Q + (X + b) // Q + 1
            s += ca * cb
        total += m * s
    return total


def nb_mobius_class_sum(mu, B, Q, qprimes, alphas, betas) -> int:
    return int(
        _class_sum_nb(
            mu,
            B,
            Q,
            np.ascontiguousarray(qprimes, dtype=np.int64),
            np.ascontiguousarray(alphas, dtype=np.int64),
            np.ascontiguousarray(betas, dtype=np.int64),
        )
    )


def np_mobius_class_sum(mu, B, Q, qprimes, alphas, betas, block: int = 1 << 20) -> int:
    total = 0
    for s in range(1, B + 1, block):
        d = np.arange(s, min(s + block, B + 1), dtype=np.int64)
        w = mu[s : s + d.shape[0]].astype(np.int64)
        for p in qprimes:
            w = np.where(d % int(p) == 0, 0, w)
        live = w != 0
        if not live.any():
            continue
        d = d[live]
        w = w[live]
        X = B // d
        csum = np.zeros_like(X)
        for a, b in zip(alphas, betas):
            ca = (X - int(a)) // Q + (X + int(a)) // Q + 1
            cb = (X - int(b)) // Q + (X + int(b)) // Q + 1
            csum += ca * cb
        total += int(np.sum(w * csum))
    return total


def mobius_class_sum(mu, B: int, Q: int, qprimes, alphas, betas) -> int:
    """Sum over squarefree d <= B coprime to Q of mu(d) * C(B // d).

    C(X) counts vectors of [-X, X]^2 lying in the residue classes
    {(alphas[j], betas[j]) mod Q}; used by the primitive-point fast path.
    """
    if USE_NUMBA:
        return nb_mobius_class_sum(mu, B, Q, qprimes, alphas, betas)
    return np_mobius_class_sum(mu, B, Q, qprimes, alphas, betas)


# ======================================================================
# windowed fired-prime counts from factor tables
# ======================================================================


@njit(cache=True, nogil=True)
def _marked_omega_nb(vals, spf, fires, lo, hi):
    ncomp, npts = vals.shape
    out = np.zeros(npts, dtype=np.int64)
    seen = np.zeros(64, dtype=np.int64)
    for j in range(npts):
        ns = 0
        for i in range(ncomp):
            v = vals[i, j]
            while v > 1:
                p = spf[v]
                while v % p == 0:
                    v //= p
                if p > lo and (hi < 0 or p <= hi) and fires[i, p]:
                    dup = False
                    for k in range(ns):
                        if seen[k] == p:
                            dup = True
                            break
                    if not dup:
                        seen[ns] = p
                        ns += 1
        out[j] = ns
    return out


def nb_marked_omega(vals, spf, fires, lo: int, hi: int) -> np.ndarray:
    return _marked_omega_nb(
        np.ascontiguousarray(vals, dtype=np.int64),
        spf,
        np.ascontiguousarray(fires, dtype=np.uint8),
        lo,
        hi,
    )


def np_marked_omega(vals, spf, fires, lo: int, hi: int) -> np.ndarray:
    vals = np.asarray(vals, dtype=np.int64)
    ncomp, npts = vals.shape
    maxp = spf.shape[0]
    keys = []
    for i in range(ncomp):
        v = vals[i].copy()
        live = np.flatnonzero(v > 1)
        while live.size:
            p = spf[v[live]].astype(np.int64)
            ok = (p > lo) & (fires[i][p] != 0)
            if hi >= 0:
                ok &= p <= hi
            keys.append(live[ok] * maxp + p[ok])
            vv = v[live] // p
            m = vv % p == 0
            while m.any():
                vv[m] //= p[m]
                m = vv % p == 0
            v[live] = vv
            live = live[vv > 1]
    out = np.zeros(npts, dtype=np.int64)
    if keys:
        allk = np.unique(np.concatenate(keys))
        np.add.at(out, allk // maxp, 1)
    return out


def marked_omega(vals, spf, fires, lo: int, hi: int) -> np.ndarray:
    """Per-point count of distinct primes p with lo < p (<= hi) that divide
    the i-th value and are marked in fires[i].

    Parameters
    ----------
    vals : int64 array, shape (ncomp, npts)
        Absolute form values per component, all >= 1 and < len(spf).
    spf : int32 array
        Smallest-prime-factor table covering max(vals).
    fires : uint8 array, shape (ncomp, len(spf))
        fires[i][p] = 1 when primes dividing component i count.
    lo, hi : int
        Window bounds, lo exclusive, hi inclusive; hi = -1 means unbounded.

    Returns
    -------
    int64 array of length npts
        Distinct primes are counted once even when shared by components.
    """
    if USE_NUMBA:
        return nb_marked_omega(vals, spf, fires, lo, hi)
    return np_marked_omega(vals, spf, fires, lo, hi)
