"""The probabilistic side: a sum of independent Bernoulli indicators, one
per prime, with exact distributional tools and the large-deviations rate
machinery its tail behavior converges to.

Three independent routes to the same quantities (convolution pmf, product
MGF, Monte Carlo) are kept deliberately separate so they can cross-check
each other; do not collapse them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .arith import PrimeWindow
from .densities import SigmaTable, synthetic_sigma_table
from .errors import BudgetError, ConfigError
from . import kernels

__all__ = [
    "BernoulliModel",
    "exact_pmf",
    "pmf_with_overflow",
    "mgf_exact",
    "log_mgf",
    "moment_exact",
    "sample",
    "normalized_log_mgf",
    "legendre_transform",
    "poissonization_lambda",
    "RateFunction",
    "rate_grid",
    "Interval",
    "LdpBracket",
    "ldp_bracket",
]

_EXACT_LIMIT = 256  # rational-arithmetic paths only below this many probs


@dataclass(frozen=True)
class BernoulliModel:
    """Independent indicators Y_p with success probabilities sigma_p.

    num[i]/den[i] is the probability attached to primes[i]; independence is
    definitional, there is no correlation structure to configure.
    """

    primes: np.ndarray
    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        if not (len(self.primes) == len(self.num) == len(self.den)):
            raise ConfigError("model arrays disagree in length")
        if len(self.primes) and np.any(np.diff(self.primes) <= 0):
            raise ConfigError("primes must increase strictly")
        if np.any(self.den < 1) or np.any(self.num < 0) or np.any(self.num > self.den):
            raise ConfigError("probabilities must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.primes)

    @property
    def is_small(self) -> bool:
        return len(self) <= _EXACT_LIMIT

    def probs(self) -> np.ndarray:
        return self.num / self.den

    def fractions(self) -> list:
        return [Fraction(int(a), int(b)) for a, b in zip(self.num, self.den)]

    @classmethod
    def from_table(cls, table: SigmaTable, window: PrimeWindow | None = None) -> "BernoulliModel":
        t = table if window is None else table.restrict(window)
        return cls(primes=t.primes.copy(), num=t.num.copy(), den=t.den.copy())

    @classmethod
    def from_probs(cls, probs: Sequence) -> "BernoulliModel":
        """Ad-hoc model from bare probabilities; primes become placeholders."""
        fr = [Fraction(p) for p in probs]
        return cls(
            primes=np.arange(2, 2 + len(fr), dtype=np.int64),
            num=np.array([f.numerator for f in fr], dtype=np.int64),
            den=np.array([f.denominator for f in fr], dtype=np.int64),
        )

    @classmethod
    def synthetic_delta(cls, delta, T: int, lo: int = 2) -> "BernoulliModel":
        table = synthetic_sigma_table(PrimeWindow(lo, T), delta=delta)
        return cls.from_table(table)


# ---------------------------------------------------------------------------
# exact distribution


def _pmf_fractions(model: BernoulliModel, cap: int) -> tuple:
    """(list of Fractions length cap+1, overflow Fraction); exact DP."""
    pmf = [Fraction(0)] * (cap + 1)
    pmf[0] = Fraction(1)
    tail = Fraction(0)
    for s in model.fractions():
        if cap >= 1:
            tail += pmf[cap] * s
            for k in range(cap, 0, -1):
                pmf[k] = pmf[k] * (1 - s) + pmf[k - 1] * s
            pmf[0] = pmf[0] * (1 - s)
        else:
            tail += pmf[0] * s
            pmf[0] = pmf[0] * (1 - s)
    return pmf, tail


def pmf_with_overflow(model: BernoulliModel, cap: int) -> tuple:
    """(probabilities P[S=k] for k=0..cap, overflow mass P[S>cap])."""
    if cap < 0:
        raise ConfigError("cap must be >= 0")
    if model.is_small:
        pmf, tail = _pmf_fractions(model, cap)
        return [float(q) for q in pmf], float(tail)
    pmf, tail = kernels.poibin_pmf(model.probs(), cap)
    return [float(q) for q in pmf], float(tail)


def exact_pmf(model: BernoulliModel, cap: int) -> list:
    """P[S=k] for k = 0..cap by sequential convolution."""
    return pmf_with_overflow(model, cap)[0]


def log_mgf(model: BernoulliModel, t: float) -> float:
    """log E[e^(tS)] = sum log1p(sigma * (e^t - 1)); exact 0 at t = 0."""
    if t == 0.0:
        return 0.0
    em1 = math.expm1(t)
    vals = model.probs() * em1
    return math.fsum(math.log1p(v) for v in vals.tolist())


def mgf_exact(model: BernoulliModel, t: float) -> float:
    return math.exp(log_mgf(model, t))


def moment_exact(model: BernoulliModel, r: int):
    """E[S^r] = sum k^r P[S=k] with cap = #probs (no overflow possible).

    Exact Fraction for small models, float beyond the rational limit.
    """
    if r < 0:
        raise ConfigError("moment order must be >= 0")
    if model.is_small:
        pmf, _ = _pmf_fractions(model, len(model))
        return sum((Fraction(k) ** r) * q for k, q in enumerate(pmf))
    pmf, _ = kernels.poibin_pmf(model.probs(), len(model))
    ks = np.arange(len(model) + 1, dtype=np.float64)
    return float(np.sum(ks**r * np.asarray(pmf, dtype=np.float64)))


_SAMPLE_BUDGET = 2_000_000_000
_SHARD = 1 << 16


def sample(model: BernoulliModel, seed: int, nsamples: int) -> np.ndarray:
    """Histogram of S over nsamples draws; counts indexed by k = 0..#probs.

    Shard seeds spawn deterministically from the master seed, so results do
    not depend on how the work is scheduled.
    """
    if nsamples < 1:
        raise ConfigError("need at least one sample")
    k = len(model)
    if k == 0:
        hist = np.zeros(1, dtype=np.int64)
        hist[0] = nsamples
        return hist
    if nsamples * k > _SAMPLE_BUDGET:
        raise BudgetError(
            "Monte Carlo budget exceeded", required=nsamples * k, budget=_SAMPLE_BUDGET
        )
    probs = model.probs()
    hist = np.zeros(k + 1, dtype=np.int64)
    nshards = (nsamples + _SHARD - 1) // _SHARD
    seeds = np.random.SeedSequence(seed).spawn(nshards)
    done = 0
    for i in range(nshards):
        m = min(_SHARD, nsamples - done)
        rng = np.random.default_rng(seeds[i])
        draws = (rng.random((m, k)) < probs).sum(axis=1)
        hist += np.bincount(draws, minlength=k + 1)
        done += m
    return hist


def normalized_log_mgf(model: BernoulliModel, t: float, B: float) -> float:
    """log E[e^(tS)] / loglog B; the quantity whose limit is Delta(e^t - 1)."""
    if B <= math.exp(math.e):
        raise ConfigError("normalization needs B > e^e")
    return log_mgf(model, t) / math.log(math.log(B))


def poissonization_lambda(t: float) -> float:
    """The limiting scaled log-MGF: e^t - 1."""
    return math.expm1(t)


# ---------------------------------------------------------------------------
# rate function


def legendre_transform(
    fn: Callable[[float], float],
    x: float,
    lo: float = -50.0,
    hi: float = 50.0,
    tol: float = 1e-12,
) -> float:
    """sup over t of (t*x - fn(t)) for convex fn, by golden-section search.

    Returns math.inf when the supremum diverges toward the left edge (the
    x < 0 regime for exponential-type fn).  A maximizer pinned at the right
    edge is reported with the boundary value.
    """

    def g(t: float) -> float:
        return t * x - fn(t)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    t_star = (a + b) / 2.0
    best = max(gc, gd, g(t_star))
    if lo <= 0.0 <= hi:
        best = max(best, g(0.0))  # pins sup >= 0 exactly when fn(0) = 0
    if t_star - lo < 10.0 * tol + 1e-9 * abs(lo):
        # pinned left: either a finite limit (flat tail) or true divergence
        climb = g(lo - 200.0) - g(lo - 100.0)
        if climb > 1e-9:
            return math.inf
        return max(best, g(lo))
    return best


@dataclass(frozen=True)
class RateFunction:
    """Λ handle plus a sampled (x, I(x)) grid; +inf encodes divergence."""

    lam: Callable[[float], float]
    grid: tuple

    def check_shape(self) -> None:
        finite = [(x, v) for x, v in self.grid if math.isfinite(v)]
        for x, v in self.grid:
            if v < 0:
                raise ConfigError("rate function went negative at x=%r" % x)
        for (x0, v0), (x1, v1), (x2, v2) in zip(finite, finite[1:], finite[2:]):
            # convexity on consecutive finite triples, slack for roundoff
            lhs = v1 * (x2 - x0)
            rhs = v0 * (x2 - x1) + v2 * (x1 - x0)
            if lhs > rhs + 1e-9 * (1.0 + abs(rhs)):
                raise ConfigError("rate grid not convex near x=%r" % x1)


def rate_grid(xs: Sequence[float], lam: Callable[[float], float] = poissonization_lambda) -> RateFunction:
    grid = tuple((float(x), legendre_transform(lam, float(x))) for x in xs)
    rf = RateFunction(lam=lam, grid=grid)
    rf.check_shape()
    return rf


# ---------------------------------------------------------------------------
# finite-size LDP bracket


@dataclass(frozen=True)
class Interval:
    """Interval with rational-friendly endpoints; defaults to [lo, hi)."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    def __post_init__(self):
        if self.hi < self.lo:
            raise ConfigError("interval endpoints out of order")

    def contains(self, v: float) -> bool:
        if v < self.lo or v > self.hi:
            return False
        if v == self.lo and not self.lo_closed:
            return False
        if v == self.hi and not self.hi_closed:
            return False
        return True

    def label(self) -> str:
        return "%s%r, %r%s" % (
            "[" if self.lo_closed else "(",
            self.lo,
            self.hi,
            "]" if self.hi_closed else ")",
        )


@dataclass(frozen=True)
class LdpBracket:
    """Per-size normalized log-probabilities plus the analytic sandwich."""

    values: tuple  # ((B, (1/a_B) log P[S/a_B in I]), ...); -inf for P = 0
    lower: float   # -inf I over the interior
    upper: float   # -inf I over the closure


def _inf_rate_on(lo: float, hi: float, lam) -> float:
    """inf of I over [lo, hi] intersected with the domain [0, inf)."""
    if hi < 0.0:
        return math.inf
    lo = max(lo, 0.0)
    x_star = min(max(1.0, lo), hi)
    return legendre_transform(lam, x_star)


def ldp_bracket(
    models_by_size: Sequence,
    interval: Interval,
    delta,
    lam: Callable[[float], float] = poissonization_lambda,
) -> LdpBracket:
    """Empirical (1/a_B) log P[S_B / a_B in interval] with a_B = delta loglog B,
    sandwiched by the Gaertner-Ellis bounds -inf I over interior and closure."""
    d = float(delta)
    if d <= 0:
        raise ConfigError("delta must be positive")
    if isinstance(models_by_size, dict):
        models_by_size = sorted(models_by_size.items())
    values = []
    for B, model in models_by_size:
        if B <= math.exp(math.e):
            raise ConfigError("sizes must exceed e^e")
        a = d * math.log(math.log(B))
        cap = len(model) if interval.hi * a >= len(model) else max(0, int(interval.hi * a) + 1)
        pmf, _ = pmf_with_overflow(model, cap)
        mass = math.fsum(q for k, q in enumerate(pmf) if interval.contains(k / a))
        val = math.log(mass) / a if mass > 0.0 else -math.inf
        values.append((B, val))
    if interval.lo < interval.hi:
        inf_interior = _inf_rate_on(interval.lo, interval.hi, lam)
    else:
        inf_interior = math.inf  # single point: empty interior
    inf_closure = _inf_rate_on(interval.lo, interval.hi, lam)
    return LdpBracket(values=tuple(values), lower=-inf_interior, upper=-inf_closure)
