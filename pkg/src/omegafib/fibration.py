"""Fibration models over P^n: split rules, local insolubility tests, and
the place-counting function they induce on rational points.

Two model kinds are supported:

* ``coin-model``: each component pairs a homogeneous form with a split rule
  deciding, prime by prime, whether fibers over that component's zero locus
  are non-split mod p.  The fiber over x is locally insoluble at p iff some
  component whose rule fires at p vanishes at x mod p.
* ``conic-bundle``: fibers over P^1 are the conics
  u^2 - a(x) v^2 - b(x) w^2 = 0 for auxiliary binary forms a, b; local
  insolubility at p is the Hilbert symbol (a(x), b(x))_p = -1.  Components
  are still present and drive the density bookkeeping.

Primes up to the model's bad bound are excluded everywhere: reduction is
unreliable there (coefficients or rule moduli degenerate).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .arith import PrimeWindow, factorize
from .errors import ConfigError
from .forms import IntegerForm, parse_form

__all__ = [
    "AlwaysNonsplit",
    "QuadraticResidue",
    "ResidueClasses",
    "parse_rule",
    "Component",
    "FibrationModel",
    "ProjectivePoint",
    "legendre_symbol",
    "hilbert_symbol",
    "KIND_COIN",
    "KIND_CONIC",
]

KIND_COIN = "coin-model"
KIND_CONIC = "conic-bundle"


# ---------------------------------------------------------------------------
# quadratic symbols


def legendre_symbol(a: int, p: int) -> int:
    """(a|p) for an odd prime p: 0 if p | a, else +-1 by Euler's criterion.

    Primality of p is the caller's responsibility.
    """
    if p < 3 or p % 2 == 0:
        raise ConfigError("legendre symbol needs an odd prime, got %r" % (p,))
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _vp(x: Fraction, p: int) -> int:
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _unit_residue(x: Fraction, m: int) -> int:
    # x must be a p-adic unit for every p | m
    num, den = x.numerator % m, x.denominator % m
    return num * pow(den, -1, m) % m


def hilbert_symbol(a, b, place) -> int:
    """(a, b)_v for nonzero rationals a, b at a place v of Q.

    ``place`` is a prime, or one of None / math.inf / "inf" for the real
    place.  Returns +1 when u^2 = a x^2 + b y^2 has a nontrivial local
    solution, else -1.  Odd p: valuation-and-Legendre closed form; p = 2:
    the epsilon/omega characters of the odd parts mod 8.
    """
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise ConfigError("hilbert symbol needs nonzero arguments")
    if place is None or place == math.inf or place == "inf":
        return -1 if (a < 0 and b < 0) else 1
    p = int(place)
    if p < 2:
        raise ConfigError("place must be a prime or the real place")
    al, be = _vp(a, p), _vp(b, p)
    u = a / Fraction(p) ** al
    v = b / Fraction(p) ** be
    if p != 2:
        sign = 1
        if (al * be) % 2 == 1 and ((p - 1) // 2) % 2 == 1:
            sign = -sign
        if be % 2 == 1 and legendre_symbol(_unit_residue(u, p), p) == -1:
            sign = -sign
        if al % 2 == 1 and legendre_symbol(_unit_residue(v, p), p) == -1:
            sign = -sign
        return sign
    uu, vv = _unit_residue(u, 8), _unit_residue(v, 8)
    eps_u, eps_v = (uu - 1) // 2 % 2, (vv - 1) // 2 % 2
    om_u, om_v = (uu * uu - 1) // 8 % 2, (vv * vv - 1) // 8 % 2
    return -1 if (eps_u * eps_v + al * om_v + be * om_u) % 2 else 1


# ---------------------------------------------------------------------------
# split rules


@dataclass(frozen=True)
class AlwaysNonsplit:
    """Fibers over the component are non-split at every prime."""

    @property
    def density(self) -> Fraction:
        return Fraction(1)

    def fires(self, p: int) -> bool:
        return True

    def modulus_primes(self) -> tuple:
        return ()

    def text(self) -> str:
        return "always-nonsplit"


@dataclass(frozen=True)
class QuadraticResidue:
    """Fires at p iff the fixed integer is a non-residue mod p.

    Chebotarev density 1/2 over the splitting field Q(sqrt(a)); a must not
    be a square or the rule would never fire.
    """

    a: int

    def __post_init__(self):
        if self.a == 0:
            raise ConfigError("quadratic-residue rule needs a nonzero integer")
        if self.a > 0 and math.isqrt(self.a) ** 2 == self.a:
            raise ConfigError("quadratic-residue rule with a perfect square never fires")

    @property
    def density(self) -> Fraction:
        return Fraction(1, 2)

    def fires(self, p: int) -> bool:
        return legendre_symbol(self.a, p) == -1

    def modulus_primes(self) -> tuple:
        # p | a makes the symbol 0, not -1: no special handling needed
        return ()

    def text(self) -> str:
        return "quadratic-residue(%d)" % self.a


@dataclass(frozen=True)
class ResidueClasses:
    """Fires at p iff p mod m lies in a fixed set of invertible residues."""

    modulus: int
    classes: tuple

    def __post_init__(self):
        if self.modulus < 2:
            raise ConfigError("residue-classes modulus must be >= 2")
        cleaned = tuple(sorted(set(int(c) % self.modulus for c in self.classes)))
        for c in cleaned:
            if math.gcd(c, self.modulus) != 1:
                raise ConfigError("residue class %d not invertible mod %d" % (c, self.modulus))
        object.__setattr__(self, "classes", cleaned)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.classes), _euler_phi(self.modulus))

    def fires(self, p: int) -> bool:
        return p % self.modulus in self.classes

    def modulus_primes(self) -> tuple:
        return factorize(self.modulus).primes

    def text(self) -> str:
        return "residue-classes(%d, [%s])" % (
            self.modulus,
            ", ".join(str(c) for c in self.classes),
        )


def _euler_phi(m: int) -> int:
    out = m
    for p in factorize(m).primes:
        out = out // p * (p - 1)
    return out


_RULE_RE = re.compile(r"^\s*([a-z-]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_rule(text: str):
    """Parse "always-nonsplit" / "quadratic-residue(a)" / "residue-classes(m, [c, ...])"."""
    m = _RULE_RE.match(text)
    if not m:
        raise ConfigError("unparseable split rule %r" % text)
    name, args = m.group(1), m.group(2)
    if name == "always-nonsplit":
        if args:
            raise ConfigError("always-nonsplit takes no arguments")
        return AlwaysNonsplit()
    if name == "quadratic-residue":
        try:
            return QuadraticResidue(a=int(args.strip()))
        except (ValueError, AttributeError) as exc:
            raise ConfigError("quadratic-residue needs one integer: %r" % text) from exc
    if name == "residue-classes":
        nums = re.findall(r"-?\d+", args or "")
        if len(nums) < 1:
            raise ConfigError("residue-classes needs a modulus: %r" % text)
        return ResidueClasses(modulus=int(nums[0]), classes=tuple(int(q) for q in nums[1:]))
    raise ConfigError("unknown split rule %r" % name)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class ProjectivePoint:
    """Canonical representative: coprime integer coords, last nonzero > 0."""

    coords: tuple

    def __post_init__(self):
        if not self.coords or all(c == 0 for c in self.coords):
            raise ConfigError("projective point needs a nonzero coordinate")
        g = math.gcd(*(abs(c) for c in self.coords))
        last = next(c for c in reversed(self.coords) if c != 0)
        if g != 1 or last < 0:
            raise ConfigError("non-canonical coordinates %r" % (self.coords,))

    @classmethod
    def from_coords(cls, coords) -> "ProjectivePoint":
        coords = tuple(int(c) for c in coords)
        if all(c == 0 for c in coords):
            raise ConfigError("projective point needs a nonzero coordinate")
        g = math.gcd(*(abs(c) for c in coords))
        coords = tuple(c // g for c in coords)
        if next(c for c in reversed(coords) if c != 0) < 0:
            coords = tuple(-c for c in coords)
        return cls(coords)

    @property
    def height(self) -> int:
        return max(abs(c) for c in self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)

    def __str__(self):
        return "(%s)" % (" : ".join(str(c) for c in self.coords))


# ---------------------------------------------------------------------------
# components and models


@dataclass(frozen=True)
class Component:
    """A codimension-1 locus (homogeneous form) plus its split rule.

    Irreducibility of the form is assumed, not verified.
    """

    form: IntegerForm
    rule: object

    def __post_init__(self):
        if not self.form.is_homogeneous():
            raise ConfigError("component form must be homogeneous")


@dataclass(frozen=True)
class FibrationModel:
    kind: str
    components: tuple
    conic_a: IntegerForm | None = None
    conic_b: IntegerForm | None = None

    def __post_init__(self):
        if self.kind not in (KIND_COIN, KIND_CONIC):
            raise ConfigError("unknown model kind %r" % self.kind)
        if not self.components:
            raise ConfigError("model needs at least one component")
        widths = {c.form.nvars for c in self.components}
        if len(widths) != 1:
            raise ConfigError("components disagree on variable count")
        if self.delta_invariant <= 0:
            raise ConfigError("total non-split density must be positive")
        if self.kind == KIND_CONIC:
            if self.n != 1:
                raise ConfigError("conic bundles live over P^1")
            if self.conic_a is None or self.conic_b is None:
                raise ConfigError("conic bundle needs auxiliary forms a and b")
            for f in (self.conic_a, self.conic_b):
                if f.nvars != 2 or not f.is_homogeneous():
                    raise ConfigError("auxiliary forms must be binary homogeneous")
        elif self.conic_a is not None or self.conic_b is not None:
            raise ConfigError("auxiliary forms only make sense for conic bundles")

    # ---- invariants --------------------------------------------------

    @property
    def n(self) -> int:
        """Dimension of the base projective space."""
        return self.components[0].form.nvars - 1

    @property
    def delta_invariant(self) -> Fraction:
        """Sum of component non-split densities; drives every asymptotic."""
        return sum((c.rule.density for c in self.components), Fraction(0))

    @property
    def bad_bound(self) -> int:
        """Primes <= this are excluded from reduction-based reasoning.

        Covers 2, primes dividing any form coefficient (all terms of a
        homogeneous form are leading), and primes dividing rule moduli.
        """
        bad = 2
        forms = [c.form for c in self.components]
        if self.conic_a is not None:
            forms += [self.conic_a, self.conic_b]
        for f in forms:
            for coeff, _ in f.terms:
                for p in factorize(abs(coeff)).primes:
                    bad = max(bad, p)
        for c in self.components:
            for p in c.rule.modulus_primes():
                bad = max(bad, p)
        return bad

    # ---- pointwise oracles -------------------------------------------

    def degenerate_forms(self) -> list:
        """Forms whose vanishing makes a fiber non-generic; points on their
        union are discarded by the experiment layer."""
        forms = [c.form for c in self.components]
        if self.kind == KIND_CONIC:
            forms += [self.conic_a, self.conic_b]
        return forms

    def is_degenerate(self, point: ProjectivePoint) -> bool:
        return any(f.evaluate(point.coords) == 0 for f in self.degenerate_forms())

    def is_insoluble_at(self, point: ProjectivePoint, p: int) -> bool:
        """Whether the fiber over the point has no Q_p-point (model sense)."""
        if p <= self.bad_bound:
            raise ConfigError("prime %d is within the bad bound %d" % (p, self.bad_bound))
        if self.kind == KIND_CONIC:
            a = self.conic_a.evaluate(point.coords)
            b = self.conic_b.evaluate(point.coords)
            if a == 0 or b == 0:
                raise ConfigError("degenerate fiber at %s" % point)
            return hilbert_symbol(a, b, p) == -1
        for comp in self.components:
            if comp.rule.fires(p) and comp.form.evaluate_mod(point.coords, p) == 0:
                return True
        return False

    def insoluble_place_count(self, point: ProjectivePoint, window: PrimeWindow) -> int:
        """Number of primes in the window where the fiber is insoluble.

        Candidate primes come from one factorization of the relevant form
        values, never from a loop over all primes in the window.
        """
        lo = max(window.lo, self.bad_bound)
        hi = window.hi

        def in_window(p):
            return p > lo and (hi is None or p <= hi)

        if self.kind == KIND_CONIC:
            a = self.conic_a.evaluate(point.coords)
            b = self.conic_b.evaluate(point.coords)
            if a == 0 or b == 0:
                raise ConfigError("degenerate fiber at %s" % point)
            candidates = set(factorize(abs(a)).primes) | set(factorize(abs(b)).primes)
            return sum(
                1 for p in candidates if in_window(p) and hilbert_symbol(a, b, p) == -1
            )
        count = 0
        seen = set()
        for comp in self.components:
            val = comp.form.evaluate(point.coords)
            if val == 0:
                raise ConfigError("degenerate fiber at %s" % point)
            for p in factorize(abs(val)).primes:
                if p not in seen and in_window(p) and comp.rule.fires(p):
                    seen.add(p)
                    count += 1
        return count

    # ---- serialization -----------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "components": [
                {"form": c.form.text(), "rule": c.rule.text()} for c in self.components
            ],
        }
        if self.kind == KIND_CONIC:
            d["conic"] = {"a": self.conic_a.text(), "b": self.conic_b.text()}
        return d


def model_from_dict(d: dict) -> FibrationModel:
    """Build a model from its JSON dict form (see ``FibrationModel.to_dict``)."""
    if not isinstance(d, dict):
        raise ConfigError("model spec must be an object")
    try:
        kind = d["kind"]
        comp_specs = d["components"]
    except KeyError as exc:
        raise ConfigError("model spec needs 'kind' and 'components'") from exc
    if not isinstance(comp_specs, (list, tuple)) or not comp_specs:
        raise ConfigError("'components' must be a non-empty list")
    comps = []
    for spec in comp_specs:
        try:
            form_text, rule_text = spec["form"], spec["rule"]
        except (TypeError, KeyError) as exc:
            raise ConfigError("component needs 'form' and 'rule'") from exc
        comps.append(Component(form=parse_form(form_text), rule=parse_rule(rule_text)))
    conic_a = conic_b = None
    if "conic" in d and d["conic"] is not None:
        try:
            conic_a = parse_form(d["conic"]["a"], nvars=2)
            conic_b = parse_form(d["conic"]["b"], nvars=2)
        except (TypeError, KeyError) as exc:
            raise ConfigError("'conic' needs form texts 'a' and 'b'") from exc
    model = FibrationModel(
        kind=kind, components=tuple(comps), conic_a=conic_a, conic_b=conic_b
    )
    if "n" in d and d["n"] is not None and int(d["n"]) != model.n:
        raise ConfigError("declared n=%r but forms have %d variables" % (d["n"], model.n + 1))
    return model
