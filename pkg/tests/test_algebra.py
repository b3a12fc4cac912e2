import random
from fractions import Fraction

import pytest

from qkzpsi.algebra import (
    AlgebraError,
    ContextError,
    ExactDivisionError,
    LinearForm,
    Polynomial,
    RationalFunction,
    factor_linear_forms,
    parse_polynomial,
    spectral_context,
)

CTX4 = spectral_context(4)
Z = [None] + [CTX4.z(i) for i in range(1, 5)]
HB = CTX4.hbar()


def test_addition_cancels():
    half = HB * Fraction(1, 2)
    assert (Z[1] + half) + (Z[1] - half) == 2 * Z[1]


def test_difference_of_squares():
    assert (Z[1] - Z[2]) * (Z[1] + Z[2]) == Z[1] ** 2 - Z[2] ** 2


def test_shifted_product_has_six_monomials():
    # oracle: expand (hb + z1 - z2)(2 hb + z1 - z2) by a naive double loop
    # over the factor term lists, in internal half-units (hb = 2h)
    f1 = {(1, 0, 0, 0, 0): 1, (0, 1, 0, 0, 0): -1, (0, 0, 0, 0, 1): 2}
    f2 = {(1, 0, 0, 0, 0): 1, (0, 1, 0, 0, 0): -1, (0, 0, 0, 0, 1): 4}
    expected = {}
    for e1, c1 in f1.items():
        for e2, c2 in f2.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            expected[e] = expected.get(e, 0) + c1 * c2
    expected = {e: c for e, c in expected.items() if c}
    product = (HB + Z[1] - Z[2]) * (2 * HB + Z[1] - Z[2])
    assert product.terms == expected
    assert len(product.terms) == 6


def test_exact_division_by_difference():
    f, sign = LinearForm.make(0, 1, 2)
    assert sign == 1
    assert (Z[1] ** 2 - Z[2] ** 2).exact_div(f) == Z[1] + Z[2]


def test_nondivisible_reports_remainder():
    f, _ = LinearForm.make(0, 1, 2)
    with pytest.raises(ExactDivisionError) as err:
        (HB + Z[1] - Z[2]).exact_div(f)
    assert err.value.remainder == HB


def test_substitute_shift():
    assert (Z[1] - Z[2]).substitute({1: Z[1] + HB}) == -HB


def test_substitute_forced_cancellation():
    half = HB * Fraction(1, 2)
    p = HB + Z[1] - Z[2]
    assert p.substitute({0: Z[1] - half, 1: Z[1] + half}).is_zero()


def test_swap_involution_and_fixed_points():
    assert (Z[1] - Z[2]).swap_z(1, 2) == Z[2] - Z[1]
    assert (Z[1] + Z[2]).swap_z(1, 2) == Z[1] + Z[2]
    p = (HB + Z[1] - Z[3]) * (Z[2] + Z[4])
    assert p.swap_z(1, 3).swap_z(1, 3) == p


def test_rational_function_inverse_pair():
    ctx = spectral_context(1)
    z, hb = ctx.z(1), ctx.hbar()
    plus, _ = LinearForm.make(2, 1)
    r1 = RationalFunction(hb - z, {plus: 1})
    r2 = r1.inverse()
    assert (r1 * r2).equals(ctx.one())
    point = [Fraction(0), Fraction(1, 2)]  # z = 0, hb = 1
    assert r1.evaluate(point) == 1


def test_rational_function_inverse_of_zero():
    ctx = spectral_context(1)
    with pytest.raises(AlgebraError):
        RationalFunction.from_poly(ctx.zero()).inverse()


def test_context_mismatch_raises():
    other = spectral_context(3)
    with pytest.raises(ContextError):
        Z[1] + other.z(1)


def _random_poly(rng, ctx, nterms=4, deg=4):
    terms = {}
    for _ in range(nterms):
        e = [0] * ctx.nvars
        for _ in range(rng.randrange(deg + 1)):
            e[rng.randrange(ctx.nvars)] += 1
        terms[tuple(e)] = terms.get(tuple(e), 0) + rng.randrange(-6, 7)
    return Polynomial(ctx, terms)


def test_ring_axioms_random():
    rng = random.Random(20240817)
    ctx = spectral_context(4)
    for _ in range(40):
        p, q, r = (_random_poly(rng, ctx) for _ in range(3))
        assert (p + q) + r == p + (q + r)
        assert (p * q) * r == p * (q * r)
        assert p * (q + r) == p * q + p * r
        assert p * q == q * p


def test_exact_div_roundtrip_random():
    rng = random.Random(97)
    ctx = spectral_context(4)
    for _ in range(40):
        p = _random_poly(rng, ctx)
        i = rng.randrange(1, 5)
        j = rng.randrange(1, 5)
        while j == i:
            j = rng.randrange(1, 5)
        f, sign = LinearForm.make(rng.randrange(-4, 5), i, j)
        prod = p * (f.to_poly(ctx) * sign)
        assert prod.exact_div(f) == p * sign


def test_substitute_then_swap_commutes():
    # shifting a spectator variable commutes with swapping two others
    rng = random.Random(5)
    ctx = spectral_context(4)
    for _ in range(20):
        p = _random_poly(rng, ctx)
        shifted = p.substitute({3: Z[4] + HB})
        assert shifted.swap_z(1, 2) == p.swap_z(1, 2).substitute({3: Z[4] + HB})


def test_homogeneity_preserved():
    rng = random.Random(11)
    ctx = spectral_context(4)
    for _ in range(20):
        p = ctx.one()
        for _ in range(3):
            a = rng.randrange(-2, 3)
            i = rng.randrange(1, 5)
            j = rng.randrange(1, 5)
            if i == j:
                continue
            form, sign = LinearForm.make(2 * a, i, j)
            p = p * (form.to_poly(ctx) * sign)
        d = p.homogeneous_degree()
        assert d is not None
        assert p.swap_z(1, 3).homogeneous_degree() == d
        assert p.substitute({1: ctx.z(2) + 2 * HB}).homogeneous_degree() in (d, None)


def test_text_roundtrip_random():
    rng = random.Random(23)
    ctx = spectral_context(3)
    for _ in range(30):
        p = _random_poly(rng, ctx)
        assert parse_polynomial(p.text(), ctx) == p


def test_json_roundtrip_random():
    rng = random.Random(29)
    ctx = spectral_context(3)
    for _ in range(30):
        p = _random_poly(rng, ctx)
        assert Polynomial.from_json(p.to_json(), ctx) == p


def test_half_integer_display():
    half = HB * Fraction(1, 2)
    assert half.text() == "1/2*hb"
    assert parse_polynomial("1/2*hb", CTX4) == half


def test_parse_rejects_garbage():
    with pytest.raises(AlgebraError):
        parse_polynomial("z1 +* z2", CTX4)
    with pytest.raises(ContextError):
        parse_polynomial("nope", CTX4)


def test_factor_linear_forms():
    p = (HB + Z[1] - Z[2]) * (2 * HB + Z[3] - Z[4]) * 3
    const, forms = factor_linear_forms(p)
    assert const == 3
    rebuilt = CTX4.const(const)
    for f in forms:
        rebuilt = rebuilt * f.to_poly(CTX4)
    assert rebuilt == p


def test_canonical_form_sign():
    form, sign = LinearForm.make(2, None, 1)  # hb - z1
    assert sign == -1
    assert form == LinearForm(-2, 1, None)
    form2, sign2 = LinearForm.make(0, 3, 1)
    assert (form2.i, form2.j, sign2) == (1, 3, -1)
