"""Desk-scale numerical audits of the standalone analytic inequalities:
exponential-series tails, counts of integers by number of prime factors,
radical-weighted prime sums, mean values of arithmetic functions over form
values, and truncated exponential moments.

Abstract constants are pinned to concrete values (kappa = 1.5, kappa_1 = 6)
that a pre-build scan validated; every report row carries its margin so a
reader can re-pin.  Asymptotic "<<" claims are audited as bounded-ratio
trends over a geometric grid, never as single-size pass/fail.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .arith import primes_up_to
from .errors import BudgetError, ConfigError
from .forms import IntegerForm, count_zeros_mod_p
from . import kernels

__all__ = [
    "InequalityRow",
    "InequalityReport",
    "norton_check",
    "norton_grid",
    "hardy_ramanujan_count",
    "hardy_ramanujan_report",
    "omega_partition_ok",
    "radical_sum_check",
    "radical_sum_report",
    "MeanValueRow",
    "nair_tenenbaum_audit",
    "TruncatedMomentResult",
    "truncated_moment_audit",
]

KAPPA = 1.5
KAPPA_1 = 6.0


@dataclass(frozen=True)
class InequalityRow:
    name: str
    params: dict
    lhs: float
    rhs: float
    margin: float
    holds: bool


@dataclass(frozen=True)
class InequalityReport:
    name: str
    rows: tuple

    @property
    def verdict(self) -> str:
        return "holds" if all(r.holds for r in self.rows) else "violated"


# ---------------------------------------------------------------------------
# exponential series tail (Poisson upper tail in disguise)


def _log_tail_exp_series(x: float, r0: int, rel: float = 1e-30) -> float:
    """log sum_{r >= r0} x^r / r!, summed until terms drop below rel * first."""
    if x <= 0.0:
        raise ConfigError("series tail needs x > 0")
    lx = math.log(x)
    cut = math.log(rel)
    first = r0 * lx - math.lgamma(r0 + 1)
    terms = []
    r = r0
    while True:
        lt = r * lx - math.lgamma(r + 1)
        terms.append(lt)
        if lt < first + cut and r > max(r0, x):
            break
        r += 1
    m = max(terms)
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))


def norton_check(x: float, beta: float) -> InequalityRow:
    """Tail of e^x beyond beta*x against the closed sub-Gaussian-style bound.

    LHS by direct summation in log space; RHS is
    (1/(beta-1)) * sqrt(beta/(2 pi x)) * exp(beta x (1 - log beta)).
    """
    if x <= 0 or beta <= 1:
        raise ConfigError("need x > 0 and beta > 1")
    r0 = math.ceil(beta * x)
    log_lhs = _log_tail_exp_series(x, r0)
    log_rhs = (
        -math.log(beta - 1.0)
        + 0.5 * (math.log(beta) - math.log(2.0 * math.pi * x))
        + beta * x * (1.0 - math.log(beta))
    )
    lhs, rhs = math.exp(log_lhs), math.exp(log_rhs)
    return InequalityRow(
        name="exp-tail",
        params={"x": x, "beta": beta},
        lhs=lhs,
        rhs=rhs,
        margin=rhs - lhs,
        holds=log_lhs <= log_rhs,
    )


def norton_grid(
    xs: Sequence[float] = (0.5, 1, 2, 5, 10, 20, 50),
    betas: Sequence[float] = (1.01, 1.1, 1.5, 2, 4, 8),
) -> InequalityReport:
    # beta < 1.01 excluded by policy: 1/(beta-1) blows up at the domain edge
    rows = tuple(norton_check(float(x), float(b)) for x in xs for b in betas)
    return InequalityReport(name="exp-tail", rows=rows)


# ---------------------------------------------------------------------------
# integers with exactly t prime factors


_HR_BUDGET = 10_000_000


def hardy_ramanujan_count(
    t: int,
    x: int,
    kappa: float = KAPPA,
    kappa_1: float = KAPPA_1,
    budget: int = _HR_BUDGET,
) -> tuple:
    """(#{m <= x with exactly t distinct prime factors}, pinned bound)."""
    if t < 1 or x < 2:
        raise ConfigError("need t >= 1 and x >= 2")
    if x > budget:
        raise BudgetError("omega sieve too large", required=x, budget=budget)
    om = kernels.omega_sieve(x)
    exact = int((om[2:] == t).sum())
    bound = (
        kappa_1
        * x
        / math.log(x)
        * (kappa + math.log(math.log(x))) ** (t - 1)
        / math.factorial(t - 1)
    )
    return exact, bound


def hardy_ramanujan_report(
    t_max: int,
    x_grid: Sequence[int],
    kappa: float = KAPPA,
    kappa_1: float = KAPPA_1,
    budget: int = _HR_BUDGET,
) -> InequalityReport:
    rows = []
    for x in sorted(set(int(v) for v in x_grid)):
        if x > budget:
            raise BudgetError("omega sieve too large", required=x, budget=budget)
        om = kernels.omega_sieve(x)
        counts = np.bincount(om[2:], minlength=t_max + 1)
        for t in range(1, t_max + 1):
            exact = int(counts[t]) if t < len(counts) else 0
            bound = (
                kappa_1
                * x
                / math.log(x)
                * (kappa + math.log(math.log(x))) ** (t - 1)
                / math.factorial(t - 1)
            )
            rows.append(
                InequalityRow(
                    name="prime-factor-count",
                    params={"t": t, "x": x},
                    lhs=float(exact),
                    rhs=bound,
                    margin=bound - exact,
                    holds=exact <= bound,
                )
            )
    return InequalityReport(name="prime-factor-count", rows=tuple(rows))


def omega_partition_ok(x: int) -> bool:
    """Counts by distinct-prime-factor number partition [2, x] exactly."""
    om = kernels.omega_sieve(x)
    counts = np.bincount(om[2:])
    return int(counts.sum()) == x - 1 and counts[0] == 0


# ---------------------------------------------------------------------------
# radical-weighted tuple sums


_RADICAL_BUDGET = 10_000_000


def radical_sum_check(r: int, T: int, kappa: float = KAPPA, budget: int = _RADICAL_BUDGET) -> tuple:
    """(exact sum over r-tuples of primes <= T of 1/rad(product), bound).

    Exact rational arithmetic; bound is 3^r (kappa + log r + loglog T)^r
    with implied constant 1.
    """
    if r < 0 or T < 2:
        raise ConfigError("need r >= 0 and T >= 2")
    if r == 0:
        return Fraction(1), 1.0  # empty product convention
    ps = [int(p) for p in primes_up_to(T)]
    if len(ps) ** r > budget:
        raise BudgetError("tuple enumeration too large", required=len(ps) ** r, budget=budget)
    total = Fraction(0)
    for tup in itertools.product(ps, repeat=r):
        total += Fraction(1, math.prod(set(tup)))
    bound = 3.0**r * (kappa + math.log(r) + math.log(math.log(T))) ** r
    return total, bound


def radical_sum_report(r_max: int, T: int, **kw) -> InequalityReport:
    rows = []
    for r in range(0, r_max + 1):
        exact, bound = radical_sum_check(r, T, **kw)
        rows.append(
            InequalityRow(
                name="radical-sum",
                params={"r": r, "T": T},
                lhs=float(exact),
                rhs=bound,
                margin=bound - float(exact),
                holds=float(exact) <= bound,
            )
        )
    return InequalityReport(name="radical-sum", rows=tuple(rows))


# ---------------------------------------------------------------------------
# mean values of arithmetic functions over form values


_BOX_BUDGET = 100_000_000
_CHUNK = 1 << 18


def _box_value_blocks(G: IntegerForm, B: int, budget: int):
    """|G(x)| over the full integer box [-B, B]^n, zeros dropped."""
    n = G.nvars
    side = 2 * B + 1
    total = side**n
    if total > budget:
        raise BudgetError("box enumeration too large", required=total, budget=budget)
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        idx = np.arange(lo, hi, dtype=np.int64)
        coords = np.empty((hi - lo, n), dtype=np.int64)
        rem = idx
        for j in range(n - 1, -1, -1):
            rem, dig = np.divmod(rem, side)
            coords[:, j] = dig - B
        vals = np.abs(G.evaluate_block(coords))
        yield vals[vals > 0]


@dataclass(frozen=True)
class MeanValueRow:
    B: int
    lhs: float
    rhs: float
    ratio: float


def nair_tenenbaum_audit(
    G: IntegerForm,
    b_grid: Sequence[int],
    f_kind: str = "power",
    C: float = 1.0,
    s_filter: Callable[[int], bool] | None = None,
    decay: float = 1.0,
    budget: int = _BOX_BUDGET,
) -> list:
    """Audit sum_x f(|G(x)|) against (B^n/log B) prod_p (1 + f(p) rho(p)/p^n).

    f is either C^(#marked primes dividing the value) with the marked set
    given by s_filter (None marks every prime), or exp(-decay * omega).
    Returns MeanValueRow per B; the interesting output is the ratio trend.
    """
    if f_kind not in ("power", "exp-decay"):
        raise ConfigError("f_kind must be 'power' or 'exp-decay'")
    n = G.nvars
    rows = []
    for B in sorted(set(int(b) for b in b_grid)):
        maxval = sum(abs(c) * B ** sum(e) for c, e in G.terms)
        if maxval > budget:
            raise BudgetError("value sieve too large", required=maxval, budget=budget)
        ps = primes_up_to(maxval) if maxval >= 2 else np.empty(0, dtype=np.int64)
        marked = np.zeros(maxval + 1, dtype=np.int16)
        for p in ps.tolist():
            if f_kind == "exp-decay" or s_filter is None or s_filter(int(p)):
                marked[p::p] += 1
        weight = (
            float(C) ** marked.astype(np.float64)
            if f_kind == "power"
            else np.exp(-float(decay) * marked.astype(np.float64))
        )
        lhs = 0.0
        for vals in _box_value_blocks(G, B, budget):
            lhs += float(weight[vals].sum())
        # product side: rho(p) = affine zero count of G mod p
        plim = B**n
        log_prod = 0.0
        for p in primes_up_to(plim).tolist():
            rho = count_zeros_mod_p(G, int(p)).affine
            if f_kind == "power":
                fp = float(C) if (s_filter is None or s_filter(int(p))) else 1.0
            else:
                fp = math.exp(-float(decay))
            log_prod += math.log1p(fp * rho / float(p) ** n)
        rhs = float(B) ** n / math.log(B) * math.exp(log_prod)
        rows.append(MeanValueRow(B=B, lhs=lhs, rhs=rhs, ratio=lhs / rhs))
    return rows


# ---------------------------------------------------------------------------
# truncated exponential moments


@dataclass(frozen=True)
class TruncatedMomentResult:
    B: int
    r0: int
    lhs: float
    reference: float  # B^n / (log B)^N for the chosen N
    N: float


def truncated_moment_audit(
    G: IntegerForm,
    B: int,
    C1: float,
    C2: float,
    y: float,
    N: float = 2.0,
    budget: int = _BOX_BUDGET,
) -> TruncatedMomentResult:
    """LHS = sum_x tail_{r >= y loglog B} (C1 + C2 omega(|G(x)|))^r / r!.

    The inner tail is summed directly per distinct omega value; the
    reference is the user-chosen power B^n/(log B)^N, reported side by side.
    """
    if C1 < 0 or C2 < 0 or y <= 0:
        raise ConfigError("need C1, C2 >= 0 and y > 0")
    if B <= math.exp(math.e):
        raise ConfigError("need B > e^e")
    n = G.nvars
    r0 = math.ceil(y * math.log(math.log(B)))
    maxval = sum(abs(c) * B ** sum(e) for c, e in G.terms)
    if maxval > budget:
        raise BudgetError("value sieve too large", required=maxval, budget=budget)
    om = kernels.omega_sieve(maxval)
    hist = np.zeros(int(om.max()) + 1, dtype=np.int64)
    for vals in _box_value_blocks(G, B, budget):
        hist += np.bincount(om[vals], minlength=len(hist))
    lhs = 0.0
    for k, cnt in enumerate(hist.tolist()):
        if cnt == 0:
            continue
        z = C1 + C2 * k
        if z <= 0.0:
            tail = 1.0 if r0 == 0 else 0.0
        else:
            tail = math.exp(_log_tail_exp_series(z, r0))
        lhs += cnt * tail
    reference = float(B) ** n / math.log(B) ** N
    return TruncatedMomentResult(B=B, r0=r0, lhs=lhs, reference=reference, N=N)
