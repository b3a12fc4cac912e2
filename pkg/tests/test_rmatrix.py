from fractions import Fraction
from itertools import combinations

import pytest

from qkzpsi.algebra import LinearForm, RationalFunction, spectral_context
from qkzpsi.qkz import build_psi_fundamental
from qkzpsi.rmatrix import (
    CTX1,
    RMatrixError,
    family_slot_applicator,
    fundamental_rcheck,
    fused_rcheck,
    normalization_factor,
    pair_operator,
    product_basis,
    slot_applicator,
    solve_rmatrix_from_exchange,
    verify_commutation,
    verify_unitarity,
    verify_ybe,
)

CTX3 = spectral_context(3)


def _letters(k):
    return [(a,) for a in range(1, k + 1)]


def test_fundamental_at_zero_is_identity():
    R = fundamental_rcheck(3)
    vals = R.evaluate_at_zero()
    for (t, s), v in vals.items():
        assert v == (1 if t == s else 0)


def test_fundamental_diagonal_eigenvector():
    R = fundamental_rcheck(2)
    z, hb = CTX1.z(1), CTX1.hbar()
    plus, _ = LinearForm.make(2, 1)
    want = RationalFunction(hb - z, {plus: 1})
    assert R.entry(((1,), (1,)), ((1,), (1,))).equals(want)


def test_fundamental_unitarity_k3():
    basis = product_basis(_letters(3), 2)
    app = slot_applicator(fundamental_rcheck(3), 0, 2)
    rep = verify_unitarity(app, basis, CTX3, "fund k=3")
    assert rep.passed


def test_fundamental_ybe_k2():
    basis = product_basis(_letters(2), 3)
    R = fundamental_rcheck(2)
    rep = verify_ybe(slot_applicator(R, 0, 3), slot_applicator(R, 1, 3), basis, CTX3)
    assert rep.passed


def test_fundamental_commutation():
    basis = product_basis(_letters(2), 4)
    R = fundamental_rcheck(2)
    rep = verify_commutation(slot_applicator(R, 0, 4), slot_applicator(R, 2, 4), basis, CTX3)
    assert rep.passed


def test_normalization_factor_values():
    z, hb = CTX1.z(1), CTX1.hbar()
    f1 = normalization_factor(1, 1)
    plus, _ = LinearForm.make(2, 1)
    assert f1.equals(RationalFunction(hb - z, {plus: 1}))
    f2 = normalization_factor(2, 2)
    plus2, _ = LinearForm.make(4, 1)
    want = RationalFunction((hb - z) * (2 * hb - z), {plus: 1, plus2: 1})
    assert f2.equals(want)
    # unitarity of the scalar
    flip = f2.substitute_z({1: -z})
    assert (f2 * flip).equals(CTX1.one())


def test_fused_reduces_to_fundamental():
    assert fused_rcheck(3, 1, 1).equals(fundamental_rcheck(3))


def test_fused_k4_22_normalization_and_weights():
    R = pair_operator(4, 2, 2)
    # extreme diagonal matches the normalization scalar
    top = ((1, 2), (1, 2))
    assert R.entry(top, top).equals(normalization_factor(2, 2))
    # weight preservation: matching letter content on each entry
    for (t, s) in R.entries:
        content_t = sorted(x for part in t for x in part)
        content_s = sorted(x for part in s for x in part)
        assert content_t == content_s
    vals = R.evaluate_at_zero()
    for (t, s), v in vals.items():
        assert v == (1 if t == s else 0)


def test_fused_k4_22_unitarity():
    wedges = [tuple(c) for c in combinations(range(1, 5), 2)]
    basis = product_basis(wedges, 2)
    app = slot_applicator(pair_operator(4, 2, 2), 0, 2)
    rep = verify_unitarity(app, basis, CTX3, "fused k=4 a=b=2")
    assert rep.passed


def test_fused_k3_22_ybe():
    wedges = [tuple(c) for c in combinations(range(1, 4), 2)]
    basis = product_basis(wedges, 3)
    R = pair_operator(3, 2, 2)
    rep = verify_ybe(slot_applicator(R, 0, 3), slot_applicator(R, 1, 3), basis, CTX3)
    assert rep.passed


def test_fused_mixed_sizes_ybe():
    # factors of sizes (2, 1, 1) in k=3: the operators change label shapes
    wedge2 = [tuple(c) for c in combinations(range(1, 4), 2)]
    wedge1 = _letters(3)
    basis = [(a, b, c) for a in wedge2 for b in wedge1 for c in wedge1]
    app1 = family_slot_applicator(3, 0)
    app2 = family_slot_applicator(3, 1)
    rep = verify_ybe(app1, app2, basis, CTX3, "mixed (2,1,1)")
    assert rep.passed


def test_fused_mixed_unitarity():
    wedge2 = [tuple(c) for c in combinations(range(1, 4), 2)]
    wedge1 = _letters(3)
    basis = [(a, b) for a in wedge2 for b in wedge1]
    app = family_slot_applicator(3, 0)
    rep = verify_unitarity(app, basis, CTX3, "mixed (2,1)")
    assert rep.passed


def test_solve_fundamental_matches_flip_form():
    # the solved pair operator agrees with the flip form on every pair
    # occurring in the weight space (the (2,2) pair does not occur here)
    psi = build_psi_fundamental(2, (2, 1))
    F = fundamental_rcheck(2)
    for slot in (1, 2):
        R = solve_rmatrix_from_exchange(psi, slot, slotwise=True)
        assert set(R.source) < set(F.source)
        for t in R.target:
            for s in R.source:
                assert R.entry(t, s).equals(F.entry(t, s)), (t, s)


def test_solve_rejects_perturbed_family():
    # adding a non-symmetric linear term makes the exchange system insoluble
    psi = build_psi_fundamental(2, (2, 1))
    bad = dict(psi.entries)
    lab = ((1,), (1,), (2,))
    bad[lab] = bad[lab] + psi.ctx.z(1)
    from qkzpsi.qkz import PsiVector

    broken = PsiVector(psi.k, psi.lam, psi.m, psi.ctx, bad)
    with pytest.raises(RMatrixError):
        solve_rmatrix_from_exchange(broken, 1, slotwise=True)
