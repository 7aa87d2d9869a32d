"""Integer forms: sparse multivariate polynomials over Z and their
reductions mod p.

A form is stored as a tuple of (coefficient, exponent-vector) terms.  The
text format is one term per line, "coeff e0 e1 ... e_{nvars-1}", with blank
lines and '#' comments skipped, e.g. the binary quadratic x0^2 + 3*x1^2::

    1 2 0
    3 0 2

Zero counting over F_p walks projective representatives stratum by stratum
(leading zeros, then a coordinate pinned to 1, then a free tail) so the cost
is O(p^nvars / (p-1)) points instead of p^(nvars+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .arith import INT128_MAX
from .errors import BudgetError, ConfigError, IntegerBudgetError
from . import kernels

__all__ = [
    "IntegerForm",
    "FpZeroCount",
    "parse_form",
    "projective_point_count",
    "count_zeros_mod_p",
    "lang_weil_ratio",
    "rational_projective_zeros",
]


@dataclass(frozen=True)
class IntegerForm:
    """Sparse polynomial with integer coefficients in ``nvars`` variables."""

    nvars: int
    terms: tuple  # ((coeff, (e0, ..., e_{nvars-1})), ...)

    def __post_init__(self):
        if self.nvars < 1:
            raise ConfigError("form needs at least one variable")
        if not self.terms:
            raise ConfigError("form has no terms")
        seen = set()
        for coeff, exps in self.terms:
            if len(exps) != self.nvars:
                raise ConfigError(
                    "exponent vector length %d != nvars %d" % (len(exps), self.nvars)
                )
            if coeff == 0:
                raise ConfigError("zero coefficient term")
            if any(e < 0 for e in exps):
                raise ConfigError("negative exponent")
            if exps in seen:
                raise ConfigError("duplicate monomial %r" % (exps,))
            seen.add(exps)

    # ---- basic structure -------------------------------------------------

    @property
    def degree(self) -> int:
        return max(sum(exps) for _, exps in self.terms)

    def is_homogeneous(self) -> bool:
        degs = {sum(exps) for _, exps in self.terms}
        return len(degs) == 1

    def leading_coefficients(self) -> tuple:
        """Coefficients of the top-degree monomials."""
        d = self.degree
        return tuple(c for c, exps in self.terms if sum(exps) == d)

    def text(self) -> str:
        lines = ["%d %s" % (c, " ".join(str(e) for e in exps)) for c, exps in self.terms]
        return "\n".join(lines)

    # ---- evaluation ------------------------------------------------------

    def evaluate(self, point: Sequence[int]) -> int:
        """Exact value at an integer point; refuses results beyond 128 bits."""
        if len(point) != self.nvars:
            raise ConfigError("point has %d coords, form has %d" % (len(point), self.nvars))
        # worst-case magnitude estimate before the exact pass
        h = max((abs(int(x)) for x in point), default=0)
        if h > 1:
            bound = sum(abs(c) * h ** sum(exps) for c, exps in self.terms)
            if bound > INT128_MAX:
                raise IntegerBudgetError(
                    "form value may exceed 128 bits at height %d" % h,
                    required=bound,
                    budget=INT128_MAX,
                )
        total = 0
        for c, exps in self.terms:
            t = c
            for x, e in zip(point, exps):
                if e:
                    t *= int(x) ** e
            total += t
        return total

    def evaluate_mod(self, point: Sequence[int], p: int) -> int:
        total = 0
        for c, exps in self.terms:
            t = c % p
            for x, e in zip(point, exps):
                if e:
                    t = (t * pow(int(x) % p, e, p)) % p
            total = (total + t) % p
        return total

    def evaluate_block(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized exact evaluation on an (npts, nvars) int array.

        Uses object dtype only when the int64 bound check fails, so the hot
        path (small heights) stays in native arithmetic.
        """
        coords = np.asarray(coords)
        if coords.ndim != 2 or coords.shape[1] != self.nvars:
            raise ConfigError("coords must be (npts, %d)" % self.nvars)
        h = int(np.abs(coords).max(initial=0))
        bound = sum(abs(c) * max(h, 1) ** sum(exps) for c, exps in self.terms)
        if bound > INT128_MAX:
            raise IntegerBudgetError(
                "block evaluation exceeds 128 bits", required=bound, budget=INT128_MAX
            )
        work = coords.astype(np.int64) if bound <= np.iinfo(np.int64).max else coords.astype(object)
        out = None
        for c, exps in self.terms:
            t = np.full(coords.shape[0], c, dtype=work.dtype)
            for j, e in enumerate(exps):
                for _ in range(e):
                    t = t * work[:, j]
            out = t if out is None else out + t
        return out

    # ---- mod-p structure used by the stratum walker ----------------------

    def _arrays_mod(self, p: int):
        coeffs = np.array([c % p for c, _ in self.terms], dtype=np.int64)
        exps = np.array([list(exps) for _, exps in self.terms], dtype=np.int64)
        return coeffs, exps


def parse_form(text: str, nvars: int | None = None) -> IntegerForm:
    """Parse the line-per-term text format; infers nvars when not given."""
    terms = []
    width = nvars
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ConfigError("bad form line %r" % raw)
        try:
            coeff = int(parts[0])
            exps = tuple(int(q) for q in parts[1:])
        except ValueError as exc:
            raise ConfigError("bad form line %r" % raw) from exc
        if width is None:
            width = len(exps)
        elif len(exps) != width:
            raise ConfigError("inconsistent variable count in %r" % raw)
        terms.append((coeff, exps))
    if not terms:
        raise ConfigError("empty form text")
    return IntegerForm(nvars=width, terms=tuple(terms))


def projective_point_count(n: int, p: int) -> int:
    """#P^n(F_p) = (p^(n+1) - 1) / (p - 1)."""
    return (p ** (n + 1) - 1) // (p - 1)


@dataclass(frozen=True)
class FpZeroCount:
    """Zero counts of a form over F_p, affine and projective."""

    p: int
    affine: int      # zeros in F_p^nvars, including the origin
    projective: int  # zeros in P^{nvars-1}(F_p); -1 when inhomogeneous


_ZERO_BUDGET = 100_000_000  # points walked per count_zeros_mod_p call


def count_zeros_mod_p(form: IntegerForm, p: int, budget: int = _ZERO_BUDGET) -> FpZeroCount:
    """Count F_p zeros by direct enumeration of projective representatives.

    Strata: for k = 0..nvars-1 fix coords (0,...,0,1) in positions 0..k and
    enumerate the remaining nvars-1-k coordinates freely.  Each projective
    point appears exactly once.  For homogeneous forms the affine count is
    recovered as 1 + (p-1) * projective.
    """
    if p < 2:
        raise ConfigError("p must be >= 2")
    n = form.nvars
    homogeneous = form.is_homogeneous()
    # total representatives = #P^{n-1}(F_p); the affine fallback costs p^n
    cost = projective_point_count(n - 1, p) if homogeneous else p ** n
    if cost > budget:
        raise BudgetError("zero count needs %d evaluations" % cost, required=cost, budget=budget)
    coeffs, exps = form._arrays_mod(p)
    if not homogeneous:
        affine = int(kernels.zero_count_stratum(coeffs, exps, p, np.empty(0, dtype=np.int64), n))
        return FpZeroCount(p=p, affine=affine, projective=-1)
    proj = 0
    for k in range(n):
        fixed = np.zeros(k + 1, dtype=np.int64)
        fixed[k] = 1
        proj += int(kernels.zero_count_stratum(coeffs, exps, p, fixed, n - 1 - k))
    affine = 1 + (p - 1) * proj
    return FpZeroCount(p=p, affine=affine, projective=proj)


def lang_weil_ratio(count: FpZeroCount, form: IntegerForm) -> float:
    """affine zeros / p^(nvars-1); hovers near 1 for geometrically nice forms."""
    return count.affine / count.p ** (form.nvars - 1)


def rational_projective_zeros(form: IntegerForm) -> list:
    """Rational zeros of a binary homogeneous form, as canonical (a, b) pairs.

    Only implemented for nvars == 2, where the problem is univariate: strip
    x0^a * x1^b monomial factors (contributing zeros (0:1) and (1:0)), then
    rational-root search on the remaining polynomial in x0/x1.  Pairs are
    coprime with b > 0, or the fixed representative (1, 0).
    """
    if form.nvars != 2:
        raise ConfigError("rational zero search only supports binary forms")
    if not form.is_homogeneous():
        raise ConfigError("form must be homogeneous")
    d = form.degree
    # coefficient of x0^i x1^(d-i)
    coef = [0] * (d + 1)
    for c, (e0, e1) in form.terms:
        coef[e0] = c
    lo = next(i for i in range(d + 1) if coef[i])
    hi = next(i for i in range(d, -1, -1) if coef[i])
    zeros = []
    if lo > 0:
        zeros.append((0, 1))   # x0 divides the form
    if hi < d:
        zeros.append((1, 0))   # x1 divides the form
    # core polynomial sum_{i=lo..hi} coef[i] * t^i with t = x0/x1, t != 0
    if hi > lo:
        c0, cd = abs(coef[lo]), abs(coef[hi])
        for a in _divisors(c0):
            for b in _divisors(cd):
                if math.gcd(a, b) != 1:
                    continue
                for sa in (a, -a):
                    val = sum(coef[i] * Fraction(sa, b) ** (i - lo) for i in range(lo, hi + 1))
                    if val == 0:
                        zeros.append((sa, b))
    return sorted(set(zeros))


def _divisors(m: int) -> list:
    m = abs(m)
    out = []
    i = 1
    while i * i <= m:
        if m % i == 0:
            out.append(i)
            if i != m // i:
                out.append(m // i)
        i += 1
    return sorted(out)
