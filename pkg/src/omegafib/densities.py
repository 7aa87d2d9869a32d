"""Non-split densities sigma_p, their tables, Mertens-type sums, and the
equidistribution cross-check against the leading-constant prediction.

sigma_p is always an exact rational obtained by enumerating the union of
the firing components' projective zero loci over F_p; no point-count
formula is trusted anywhere.  Tables store numerator/denominator arrays so
that million-prime synthetic tables stay exact without a million Fraction
objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import PrimeWindow, factorize, primes_up_to
from .errors import BudgetError, ConfigError, CoverageError
from .fibration import KIND_COIN, FibrationModel
from .forms import IntegerForm, projective_point_count
from . import kernels

__all__ = [
    "SigmaTable",
    "sigma_p_exact",
    "enumerated_sigma_table",
    "synthetic_sigma_table",
    "sigma_table_from_dict",
    "mertens_sum",
    "fit_delta_beta",
    "zeta_value",
    "leading_constant",
    "EquidistResult",
    "equidist_check",
]


# ---------------------------------------------------------------------------
# exact local densities


def _eval_forms_union_mask(forms: Sequence[IntegerForm], coords: np.ndarray, p: int) -> np.ndarray:
    """Boolean mask: some form vanishes mod p at each row of coords."""
    mask = np.zeros(coords.shape[0], dtype=bool)
    for f in forms:
        acc = np.zeros(coords.shape[0], dtype=np.int64)
        for c, exps in f.terms:
            t = np.full(coords.shape[0], c % p, dtype=np.int64)
            for j, e in enumerate(exps):
                if e:
                    col = coords[:, j] % p
                    for _ in range(e):
                        t = (t * col) % p
            acc = (acc + t) % p
        mask |= acc == 0
    return mask


def _stratum_coords(p: int, k: int, nfree: int, lo: int, hi: int) -> np.ndarray:
    """Rows (0,...,0,1,free...) for free-tail indices lo..hi-1 in base p."""
    idx = np.arange(lo, hi, dtype=np.int64)
    out = np.zeros((hi - lo, k + 1 + nfree), dtype=np.int64)
    out[:, k] = 1
    rem = idx
    for j in range(nfree - 1, -1, -1):
        rem, dig = np.divmod(rem, p)
        out[:, k + 1 + j] = dig
    return out


def _union_projective_zero_count(forms: Sequence[IntegerForm], p: int, chunk: int = 1 << 18) -> int:
    """#{x in P^n(F_p) : some form vanishes}, by walking each stratum once."""
    n = forms[0].nvars
    total = 0
    for k in range(n):
        nfree = n - 1 - k
        size = p ** nfree
        for lo in range(0, size, chunk):
            hi = min(lo + chunk, size)
            coords = _stratum_coords(p, k, nfree, lo, hi)
            total += int(_eval_forms_union_mask(forms, coords, p).sum())
    return total


def sigma_p_exact(model: FibrationModel, p: int) -> Fraction:
    """Fraction of P^n(F_p) lying on some component whose rule fires at p.

    Exact rational; 0 when no rule fires.  Direct enumeration of the union,
    never an inclusion-exclusion formula.
    """
    if p <= model.bad_bound:
        raise ConfigError("prime %d is within the bad bound %d" % (p, model.bad_bound))
    firing = [c.form for c in model.components if c.rule.fires(p)]
    if not firing:
        return Fraction(0)
    zeros = _union_projective_zero_count(firing, p)
    return Fraction(zeros, projective_point_count(model.n, p))


# ---------------------------------------------------------------------------
# sigma tables


@dataclass(frozen=True)
class SigmaTable:
    """Per-prime non-split probabilities over a prime window.

    num[i]/den[i] is sigma at primes[i]; entries cover exactly the primes in
    ``window`` (lo exclusive, hi inclusive).
    """

    primes: np.ndarray
    num: np.ndarray
    den: np.ndarray
    provenance: str
    window: PrimeWindow

    def __post_init__(self):
        if not (len(self.primes) == len(self.num) == len(self.den)):
            raise ConfigError("sigma table arrays disagree in length")
        if len(self.primes) and np.any(np.diff(self.primes) <= 0):
            raise ConfigError("sigma table primes must increase strictly")
        if np.any(self.den < 1) or np.any(self.num < 0) or np.any(self.num > self.den):
            raise ConfigError("sigma entries must lie in [0, 1]")

    @property
    def bad_bound(self) -> int:
        return self.window.lo

    def __len__(self) -> int:
        return len(self.primes)

    def values(self) -> np.ndarray:
        return self.num / self.den

    def sigma_of(self, p: int) -> Fraction:
        i = int(np.searchsorted(self.primes, p))
        if i >= len(self.primes) or self.primes[i] != p:
            raise CoverageError("prime %d not covered by the table" % p)
        return Fraction(int(self.num[i]), int(self.den[i]))

    def restrict(self, window: PrimeWindow) -> "SigmaTable":
        if window.lo < self.window.lo or (
            self.window.hi is not None and (window.hi is None or window.hi > self.window.hi)
        ):
            raise CoverageError("restriction window exceeds table coverage")
        keep = self.primes > window.lo
        if window.hi is not None:
            keep &= self.primes <= window.hi
        return SigmaTable(
            primes=self.primes[keep],
            num=self.num[keep],
            den=self.den[keep],
            provenance=self.provenance,
            window=window,
        )


def enumerated_sigma_table(model: FibrationModel, T: int) -> SigmaTable:
    """sigma_p_exact at every prime in (bad_bound, T]."""
    lo = model.bad_bound
    if T <= lo:
        raise ConfigError("table upper end %d within bad bound %d" % (T, lo))
    ps = [int(p) for p in primes_up_to(T) if p > lo]
    num = np.empty(len(ps), dtype=np.int64)
    den = np.empty(len(ps), dtype=np.int64)
    for i, p in enumerate(ps):
        s = sigma_p_exact(model, p)
        if s.denominator > np.iinfo(np.int64).max:
            raise BudgetError("sigma denominator exceeds int64 at p=%d" % p)
        num[i], den[i] = s.numerator, s.denominator
    return SigmaTable(
        primes=np.array(ps, dtype=np.int64),
        num=num,
        den=den,
        provenance="enumerated(%s)" % model.kind,
        window=PrimeWindow(lo, T),
    )


def synthetic_sigma_table(window: PrimeWindow, delta=None, custom=None) -> SigmaTable:
    """Artificial table: sigma_p = min(delta/p, 1), or a custom entry list.

    ``delta`` may be any rational-like; exactness is preserved.  ``custom``
    is a list of (prime, sigma) with rational sigma.
    """
    if (delta is None) == (custom is None):
        raise ConfigError("give exactly one of delta or custom")
    if custom is not None:
        entries = sorted((int(p), Fraction(s)) for p, s in custom)
        ps = np.array([p for p, _ in entries], dtype=np.int64)
        num = np.array([s.numerator for _, s in entries], dtype=np.int64)
        den = np.array([s.denominator for _, s in entries], dtype=np.int64)
        for p in ps:
            if not window.contains(int(p)):
                raise ConfigError("custom prime %d outside the window" % p)
        return SigmaTable(ps, num, den, "synthetic(custom)", window)
    d = Fraction(delta)
    if d < 0:
        raise ConfigError("delta must be nonnegative")
    ps = window.primes()
    num = np.empty(len(ps), dtype=np.int64)
    den = np.empty(len(ps), dtype=np.int64)
    a, b = d.numerator, d.denominator
    for i, p in enumerate(ps):
        if a >= b * int(p):  # delta/p >= 1 gets capped
            num[i], den[i] = 1, 1
        else:
            g = math.gcd(a, b * int(p))
            num[i], den[i] = a // g, b * int(p) // g
    return SigmaTable(ps, num, den, "synthetic(delta=%s)" % d, window)


def sigma_table_from_dict(d: dict, model: FibrationModel | None = None) -> SigmaTable:
    """Build a table from CLI config: synthetic delta/custom or enumerated."""
    kind = d.get("kind")
    if kind == "synthetic-delta":
        window = PrimeWindow(int(d.get("lo", 2)), int(d["T"]))
        return synthetic_sigma_table(window, delta=Fraction(str(d["delta"])))
    if kind == "synthetic-custom":
        entries = [(int(p), Fraction(str(s))) for p, s in d["entries"]]
        lo = int(d.get("lo", 2))
        hi = int(d.get("T", max(p for p, _ in entries)))
        return synthetic_sigma_table(PrimeWindow(lo, hi), custom=entries)
    if kind == "enumerated":
        if model is None:
            raise ConfigError("enumerated sigma table needs a model")
        return enumerated_sigma_table(model, int(d["T"]))
    raise ConfigError("unknown sigma table kind %r" % kind)


# ---------------------------------------------------------------------------
# Mertens-type growth


def mertens_sum(table: SigmaTable, T: int) -> float:
    """Sum of sigma_p over primes p <= T covered by the table."""
    if table.window.hi is not None and T > table.window.hi:
        raise CoverageError(
            "table covers primes up to %d, asked for %d" % (table.window.hi, T)
        )
    keep = table.primes <= T
    return math.fsum((table.num[keep] / table.den[keep]).tolist())


def fit_delta_beta(table: SigmaTable, t_grid: Sequence[int]) -> tuple:
    """Least-squares (delta_hat, beta_hat) for sum(T) ~ delta loglog T + beta."""
    t_grid = sorted(set(int(t) for t in t_grid))
    if len(t_grid) < 2:
        raise ConfigError("need at least two grid points to fit")
    xs = np.array([math.log(math.log(t)) for t in t_grid])
    ys = np.array([mertens_sum(table, t) for t in t_grid])
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


# ---------------------------------------------------------------------------
# zeta and the leading constant


def zeta_value(s: int, cutoff: int = 10_000) -> float:
    """zeta(s) for integer s >= 2 by direct series plus tail corrections.

    Partial sum to the cutoff, then integral + trapezoid + two derivative
    corrections; error well below 1e-12 for the cutoff used here.
    """
    if s < 2:
        raise ConfigError("zeta_value needs s >= 2")
    head = math.fsum(k ** -float(s) for k in range(1, cutoff))
    ks = float(cutoff) ** -s
    tail = (
        cutoff ** (1.0 - s) / (s - 1.0)
        + ks / 2.0
        + s * ks / cutoff / 12.0
        - s * (s + 1) * (s + 2) * ks / cutoff**3 / 720.0
    )
    return head + tail


def leading_constant(n: int) -> float:
    """c_n = 2^n / zeta(n+1): primitive-point density of P^n(Q) by height."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    return 2.0**n / zeta_value(n + 1)


# ---------------------------------------------------------------------------
# equidistribution cross-check


@dataclass(frozen=True)
class EquidistResult:
    observed: int
    predicted: float
    relative_gap: float


_PAIR_SET_BUDGET = 10_000_000
_DIRECT_BUDGET = 300_000_000


def _zero_pairs_mod_p(model: FibrationModel, p: int) -> np.ndarray:
    """(k, 2) array of pairs (a, b) mod p, not both 0, where some firing
    component vanishes.  Only for models over P^1."""
    firing = [c.form for c in model.components if c.rule.fires(p)]
    a, b = np.meshgrid(np.arange(p, dtype=np.int64), np.arange(p, dtype=np.int64), indexing="ij")
    coords = np.stack([a.ravel(), b.ravel()], axis=1)
    mask = _eval_forms_union_mask(firing, coords, p)
    mask &= ~((coords[:, 0] == 0) & (coords[:, 1] == 0))
    return coords[mask]


def _crt_pair_sets(pair_sets: list, primes: list) -> tuple:
    """Combine per-prime pair sets into residues mod prod(primes)."""
    m = 1
    alphas = np.zeros(1, dtype=np.int64)
    betas = np.zeros(1, dtype=np.int64)
    for p, pairs in zip(primes, pair_sets):
        if len(alphas) * len(pairs) > _PAIR_SET_BUDGET:
            raise BudgetError(
                "congruence class set too large",
                required=len(alphas) * len(pairs),
                budget=_PAIR_SET_BUDGET,
            )
        inv = pow(m % p, -1, p)
        # x = alpha (mod m), x = a (mod p)  ->  alpha + m * ((a - alpha) * inv mod p)
        da = (pairs[:, 0][None, :] - alphas[:, None]) % p
        db = (pairs[:, 1][None, :] - betas[:, None]) % p
        alphas = (alphas[:, None] + m * (da * inv % p)).ravel()
        betas = (betas[:, None] + m * (db * inv % p)).ravel()
        m *= p
    return alphas, betas


def _congruent_degenerate_points(model: FibrationModel, qprimes: list, B: int) -> int:
    """Degenerate rational points (zeros of some component form) that meet
    every congruence condition; these are excluded from 'observed'."""
    from .forms import rational_projective_zeros

    pts = set()
    for comp in model.components:
        pts.update(rational_projective_zeros(comp.form))
    count = 0
    for a, b in pts:
        if max(abs(a), abs(b)) > B:
            continue
        ok = True
        for p in qprimes:
            firing = [c.form for c in model.components if c.rule.fires(p)]
            if not any(f.evaluate_mod((a, b), p) == 0 for f in firing):
                ok = False
                break
            if a % p == 0 and b % p == 0:
                ok = False
                break
        if ok:
            count += 1
    return count


def equidist_check(
    model: FibrationModel,
    Q: int,
    B: int,
    threads: int = 1,
    budget: int = _DIRECT_BUDGET,
) -> EquidistResult:
    """Count points x with H(x) <= B insoluble at every p | Q, against the
    prediction c_n * B^(n+1) * prod sigma_p.

    Q must be squarefree and coprime to the model's bad primes; B >= Q^6 so
    the modulus is far below the equidistribution scale.  Models over P^1
    of the coin kind use a Moebius + congruence-class fast path; everything
    else falls back to direct enumeration under the budget.
    """
    if Q < 1:
        raise ConfigError("Q must be positive")
    fac = factorize(Q) if Q > 1 else None
    if fac is not None and any(e > 1 for e in fac.exponents.values()):
        raise ConfigError("Q must be squarefree")
    qprimes = list(fac.primes) if fac is not None else []
    if any(p <= model.bad_bound for p in qprimes):
        raise ConfigError("Q shares a prime with the bad bound %d" % model.bad_bound)
    if B < Q**6:
        raise ConfigError("need B >= Q^6 for a meaningful comparison")

    sigmas = [sigma_p_exact(model, p) for p in qprimes]
    prod = math.prod(sigmas, start=Fraction(1))
    predicted = leading_constant(model.n) * float(B) ** (model.n + 1) * float(prod)
    if prod == 0:
        return EquidistResult(observed=0, predicted=0.0, relative_gap=0.0)

    if not qprimes:
        # Q = 1: conditions are vacuous, observed = all non-degenerate points
        if model.n == 1:
            from .forms import rational_projective_zeros

            total = 2 * int(kernels.coprime_pair_count(B, threads)) + 2
            degen = set()
            for f in model.degenerate_forms():
                degen.update(rational_projective_zeros(f))
            observed = total - sum(1 for a, b in degen if max(abs(a), abs(b)) <= B)
        else:
            observed = _direct_equidist_count(model, qprimes, B, budget)
    elif model.kind == KIND_COIN and model.n == 1:
        pair_sets = [_zero_pairs_mod_p(model, p) for p in qprimes]
        alphas, betas = _crt_pair_sets(pair_sets, qprimes)
        mu = kernels.mobius_sieve(B + 1)
        raw = int(
            kernels.mobius_class_sum(
                mu, B, Q if Q > 1 else 1, np.array(qprimes, dtype=np.int64), alphas, betas
            )
        )
        observed = raw // 2 - _congruent_degenerate_points(model, qprimes, B)
    else:
        observed = _direct_equidist_count(model, qprimes, B, budget)

    gap = abs(observed - predicted) / predicted
    return EquidistResult(observed=observed, predicted=predicted, relative_gap=gap)


def _direct_equidist_count(model: FibrationModel, qprimes: list, B: int, budget: int) -> int:
    from .experiment import point_blocks  # late import: avoids a module cycle

    total = (2 * B + 1) ** (model.n + 1)
    if total > budget:
        raise BudgetError("direct equidistribution scan too large", required=total, budget=budget)
    degenerate = model.degenerate_forms()
    count = 0
    for coords in point_blocks(model.n, B):
        keep = np.ones(coords.shape[0], dtype=bool)
        for f in degenerate:
            keep &= f.evaluate_block(coords) != 0
        coords = coords[keep]
        if coords.shape[0] == 0:
            continue
        if model.kind == KIND_COIN:
            mask = np.ones(coords.shape[0], dtype=bool)
            for p in qprimes:
                firing = [c.form for c in model.components if c.rule.fires(p)]
                mask &= _eval_forms_union_mask(firing, coords, p)
            count += int(mask.sum())
        else:
            from .fibration import ProjectivePoint

            for row in coords:
                pt = ProjectivePoint(tuple(int(v) for v in row))
                if all(model.is_insoluble_at(pt, p) for p in qprimes):
                    count += 1
    return count
