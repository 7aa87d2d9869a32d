import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omegafib.arith import PrimeWindow, primes_up_to
from omegafib.errors import ConfigError
from omegafib.fibration import (
    AlwaysNonsplit,
    Component,
    FibrationModel,
    ProjectivePoint,
    QuadraticResidue,
    ResidueClasses,
    hilbert_symbol,
    legendre_symbol,
    model_from_dict,
    parse_rule,
)
from omegafib.forms import parse_form


# -- local symbols -----------------------------------------------------------


def test_legendre_symbol_values():
    import sympy

    for p in (3, 5, 7, 11, 13, 97):
        for a in range(-20, 21):
            assert legendre_symbol(a, p) == sympy.legendre_symbol(a, p)


def brute_hilbert(a: int, b: int, p: int) -> int:
    """Does a x^2 + b y^2 = z^2 have a primitive solution mod p^k?

    Checking mod p^3 (p odd) or 2^6 with primitive triples is enough for the
    unit-times-small-power inputs used here.
    """
    k = 6 if p == 2 else 3
    m = p**k
    squares = {}
    for z in range(m):
        squares.setdefault(z * z % m, []).append(z)
    for x in range(m):
        for y in range(m):
            for z in squares.get((a * x * x + b * y * y) % m, ()):
                if x % p or y % p or z % p:
                    return 1
    return -1


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_hilbert_symbol_brute_force(p):
    vals = [1, 2, 3, 5, -1, -2, -3, -5, p, 2 * p, -3 * p]
    for a in vals:
        for b in vals:
            got = hilbert_symbol(Fraction(a), Fraction(b), p)
            want = brute_hilbert(a, b, p)
            assert got == want, (a, b, p, got, want)


def test_hilbert_symbol_real_place():
    assert hilbert_symbol(Fraction(-1), Fraction(-1), "inf") == -1
    assert hilbert_symbol(Fraction(-1), Fraction(2), "inf") == 1
    assert hilbert_symbol(Fraction(3), Fraction(5), math.inf) == 1


@settings(max_examples=150, deadline=None)
@given(
    st.integers(min_value=-300, max_value=300).filter(lambda v: v != 0),
    st.integers(min_value=-300, max_value=300).filter(lambda v: v != 0),
)
def test_hilbert_product_formula(a, b):
    # product over all places of (a, b)_v = 1
    places = {2, *primes_up_to(300).tolist()}
    prod = hilbert_symbol(Fraction(a), Fraction(b), "inf")
    for p in places:
        prod *= hilbert_symbol(Fraction(a), Fraction(b), int(p))
    assert prod == 1


@settings(max_examples=100, deadline=None)
@given(
    st.integers(min_value=-99, max_value=99).filter(lambda v: v != 0),
    st.integers(min_value=-99, max_value=99).filter(lambda v: v != 0),
    st.sampled_from([2, 3, 5, 7, 11]),
)
def test_hilbert_symmetry_and_square_scaling(a, b, p):
    A, B = Fraction(a), Fraction(b)
    assert hilbert_symbol(A, B, p) == hilbert_symbol(B, A, p)
    assert hilbert_symbol(A * 4, B * 9, p) == hilbert_symbol(A, B, p)
    assert hilbert_symbol(A, -A, p) == 1


def test_hilbert_rejects_zero():
    with pytest.raises(ConfigError):
        hilbert_symbol(Fraction(0), Fraction(1), 3)


# -- split rules --------------------------------------------------------------


def test_rule_densities():
    assert AlwaysNonsplit().density == 1
    assert QuadraticResidue(5).density == Fraction(1, 2)
    assert ResidueClasses(8, (1, 3, 5)).density == Fraction(3, 4)


def test_quadratic_residue_fires():
    r = QuadraticResidue(5)
    # 5 is a square mod p exactly when p = +-1 mod 5
    for p in (3, 7, 13, 17, 23):
        assert r.fires(p) == (p % 5 in (2, 3)), p
    for p in (11, 19, 29, 31):
        assert not r.fires(p)


def test_quadratic_residue_validation():
    with pytest.raises(ConfigError):
        QuadraticResidue(0)
    with pytest.raises(ConfigError):
        QuadraticResidue(9)  # perfect square never fires


def test_residue_classes_fires_and_validation():
    r = ResidueClasses(4, (3,))
    assert r.fires(3) and r.fires(7) and not r.fires(5)
    assert r.density == Fraction(1, 2)
    with pytest.raises(ConfigError):
        ResidueClasses(4, (2,))  # class not coprime to modulus
    with pytest.raises(ConfigError):
        ResidueClasses(1, (0,))


def test_parse_rule():
    assert parse_rule("always-nonsplit") == AlwaysNonsplit()
    assert parse_rule("quadratic-residue(5)") == QuadraticResidue(5)
    assert parse_rule("residue-classes(8, [1, 3])") == ResidueClasses(8, (1, 3))
    with pytest.raises(ConfigError):
        parse_rule("frobenius(7)")
    with pytest.raises(ConfigError):
        parse_rule("quadratic-residue()")


# -- projective points ---------------------------------------------------------


def test_point_canonicalization():
    p = ProjectivePoint.from_coords((-2, -4))
    assert p.coords == (1, 2)
    q = ProjectivePoint.from_coords((6, -4))
    assert q.coords == (-3, 2)
    r = ProjectivePoint.from_coords((0, 0, -7))
    assert r.coords == (0, 0, 1)
    assert r.height == 7 or r.height == 1  # height of the canonical rep


def test_point_validation():
    with pytest.raises(ConfigError):
        ProjectivePoint((2, 4))  # not primitive
    with pytest.raises(ConfigError):
        ProjectivePoint((1, -1))  # last nonzero must be positive
    with pytest.raises(ConfigError):
        ProjectivePoint((0, 0))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(min_value=-40, max_value=40), min_size=2, max_size=4).filter(
        lambda v: any(v)
    ),
    st.integers(min_value=1, max_value=5),
)
def test_point_scaling_invariance(coords, scale):
    a = ProjectivePoint.from_coords(tuple(coords))
    b = ProjectivePoint.from_coords(tuple(scale * c for c in coords))
    assert a == b


# -- models --------------------------------------------------------------------


def x0_model(rule=None):
    return FibrationModel(
        "coin-model",
        (Component(parse_form("1 1 0"), rule or AlwaysNonsplit()),),
    )


def test_model_validation():
    with pytest.raises(ConfigError):
        FibrationModel("coin-model", ())
    with pytest.raises(ConfigError):
        FibrationModel("martian", (Component(parse_form("1 1 0"), AlwaysNonsplit()),))
    with pytest.raises(ConfigError):
        Component(parse_form("1 2\n1 0"), AlwaysNonsplit())  # inhomogeneous
    with pytest.raises(ConfigError):
        FibrationModel(
            "coin-model",
            (Component(parse_form("1 1 0"), AlwaysNonsplit()),),
            conic_a=parse_form("1 1 0"),
        )


def test_delta_invariant_sums_densities():
    m = FibrationModel(
        "coin-model",
        (
            Component(parse_form("1 1 0"), AlwaysNonsplit()),
            Component(parse_form("1 0 1"), QuadraticResidue(5)),
        ),
    )
    assert m.delta_invariant == Fraction(3, 2)


def test_bad_bound_rule_moduli_only():
    # quadratic-residue parameters are not moduli: they do not enter the bound
    assert x0_model(QuadraticResidue(5)).bad_bound == 2
    m = FibrationModel(
        "coin-model",
        (Component(parse_form("1 1 0"), ResidueClasses(15, (1, 2))),),
    )
    assert m.bad_bound == 5
    m2 = FibrationModel(
        "coin-model",
        (Component(parse_form("6 1 0"), AlwaysNonsplit()),),
    )
    assert m2.bad_bound == 3


def test_coin_insolubility():
    m = x0_model()
    pt = ProjectivePoint.from_coords((15, 2))
    assert m.is_insoluble_at(pt, 3)
    assert m.is_insoluble_at(pt, 5)
    assert not m.is_insoluble_at(pt, 7)
    with pytest.raises(ConfigError):
        m.is_insoluble_at(pt, 2)  # within the bad bound
    assert m.insoluble_place_count(pt, PrimeWindow(2, None)) == 2
    assert m.insoluble_place_count(pt, PrimeWindow(2, 3)) == 1
    assert m.insoluble_place_count(pt, PrimeWindow(4, 4)) == 0


def test_qr_rule_gates_insolubility():
    m = x0_model(QuadraticResidue(5))
    pt = ProjectivePoint.from_coords((21, 2))  # 21 = 3 * 7
    assert m.is_insoluble_at(pt, 3)  # 3 = 3 mod 5: fires
    assert m.is_insoluble_at(pt, 7)  # 7 = 2 mod 5: fires
    pt2 = ProjectivePoint.from_coords((11, 2))
    assert not m.is_insoluble_at(pt2, 11)  # 11 = 1 mod 5: split
    assert m.insoluble_place_count(pt, PrimeWindow(2, None)) == 2
    assert m.insoluble_place_count(pt2, PrimeWindow(2, None)) == 0


def test_conic_bundle_insolubility():
    f = parse_form("1 1 0")
    g = parse_form("1 0 1")
    m = FibrationModel(
        "conic-bundle",
        (Component(f, AlwaysNonsplit()),),
        conic_a=f,
        conic_b=g,
    )
    pt = ProjectivePoint.from_coords((2, 3))
    assert m.is_insoluble_at(pt, 3)
    assert not m.is_insoluble_at(pt, 5)
    assert m.insoluble_place_count(pt, PrimeWindow(2, None)) == 1
    deg = ProjectivePoint.from_coords((0, 1))
    assert m.is_degenerate(deg)
    with pytest.raises(ConfigError):
        m.is_insoluble_at(deg, 7)


def test_degenerate_detection():
    m = x0_model()
    assert m.is_degenerate(ProjectivePoint.from_coords((0, 1)))
    assert not m.is_degenerate(ProjectivePoint.from_coords((1, 1)))


def test_model_dict_roundtrip():
    m = FibrationModel(
        "coin-model",
        (
            Component(parse_form("1 1 0"), QuadraticResidue(5)),
            Component(parse_form("1 0 1"), ResidueClasses(4, (3,))),
        ),
    )
    m2 = model_from_dict(m.to_dict())
    assert m2.delta_invariant == m.delta_invariant
    assert m2.bad_bound == m.bad_bound
    assert [c.rule for c in m2.components] == [c.rule for c in m.components]
    with pytest.raises(ConfigError):
        model_from_dict({"kind": "coin-model"})
