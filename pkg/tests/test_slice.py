import random
from fractions import Fraction

import pytest

from qkzpsi.algebra import parse_polynomial, spectral_context
from qkzpsi.combinatorics import spaltenstein_label
from qkzpsi.slice import (
    SliceError,
    SliceModel,
    build_slice,
    elementary_symmetric,
    emit_deformed_equations,
    emit_equations,
    eval_rational,
    intersect_with_n,
    linear_component_multidegree,
    linear_solve,
)


def test_build_slice_block_structure():
    model = build_slice((2, 2, 2, 2))
    assert model.M == 8 and model.N == 4
    assert len(model.coords) == 32  # sum over 16 blocks of min = 2
    c = model.by_name["B12"]
    assert (c.i, c.j, c.col, c.weight_h) == (1, 2, 1, 4)  # scales as t^4, i.e. 2 hb
    a = model.by_name["A12"]
    assert (a.col, a.weight_h) == (2, 2)  # scales as t^2, i.e. hb
    # coordinates sit on the last row of their block
    assert c.row_abs == 1 and c.col_abs == 2
    assert a.row_abs == 1 and a.col_abs == 3


def test_slice_weights_single_boxes():
    model = build_slice((1, 1))
    n_model = intersect_with_n(model)
    ctx = spectral_context(2)
    p = linear_component_multidegree(n_model, ["A12"])
    assert p == ctx.hbar() + ctx.z(1) - ctx.z(2)


def test_slice_weight_perimeter_rule():
    # formula (m_i + m_j)/2 hb + z_i - z_j vs the perimeter count 2*2 = 4 half-units
    model = build_slice((3, 1))
    c = model.by_name["A12"]
    perimeter = 3 + 1
    assert c.weight_h == perimeter - 2 * (c.col - 1) == 4  # = 2 hb
    ctx = spectral_context(2)
    n_model = intersect_with_n(model)
    assert linear_component_multidegree(n_model, ["A12"]) == (
        2 * ctx.hbar() + ctx.z(1) - ctx.z(2)
    )


def test_intersect_with_n_counts():
    model = build_slice((2, 2, 2, 2))
    restricted = intersect_with_n(model)
    names = {c.name for c in restricted.coords}
    assert len(names) == 12
    assert names == {
        f"{letter}{i}{j}" for letter in "AB" for i in range(1, 5) for j in range(i + 1, 5)
    }
    m = (3, 1, 2)
    want = sum(min(m[i], m[j]) for i in range(3) for j in range(3) if i < j)
    assert len(intersect_with_n(build_slice(m)).coords) == want


def test_emit_single_box():
    eqs = emit_equations((1,), (1,))
    nz = eqs.nonzero()
    assert len(nz) == 1
    ctx = eqs.ctx
    assert nz[0][1] == ctx.var("A11")


def test_emit_vacuous_after_restriction():
    eqs = emit_equations((1, 1), (2, 0), restricted=True)
    assert eqs.nonzero() == []


def test_emit_rectangular_vs_matrix_power():
    # m=(2,2), ell=(2,2): X^2 entries over 8 coordinates
    eqs = emit_equations((2, 2), (2, 2))
    assert len(eqs.relations) == 16
    assert any(not p.is_zero() for _, p in eqs.relations)
    model = SliceModel((2, 2))
    for name, p in eqs.relations:
        assert model.relation_is_homogeneous(eqs.ctx, p)


def test_emit_minors_for_general_type():
    eqs = emit_equations((1, 1, 1), (2, 1, 0))
    # rank(X) <= 1 gives 2x2 minors; X^2 = 0 gives 1x1 minors of the square
    names = [n for n, _ in eqs.relations]
    assert any(n.startswith("X^1 minor") for n in names)
    assert any(n.startswith("X^2 minor") for n in names)
    # a rank-1 nilpotent point satisfies everything: X = E_13
    ctx = eqs.ctx
    point = {name: Fraction(0) for name in ctx.names}
    point["A13"] = Fraction(7)
    values = [point[n] for n in ctx.names]
    for _, p in eqs.relations:
        assert p.evaluate(values) == 0


def test_deformed_t_zero_recovers():
    m, ell = (2, 2), (2, 2)
    deformed = emit_deformed_equations(m, ell)
    plain = emit_equations(m, ell)
    ctx = deformed.ctx
    tzero = {ctx.index(f"t{a}"): ctx.zero() for a in (1, 2)}
    lift = {plain.ctx.index(nm): ctx.var(nm) for nm in plain.ctx.names}
    for (nd, pd), (np_, pp) in zip(deformed.relations, plain.relations):
        assert pd.substitute(tzero) == pp.substitute(lift, ctx)


def test_deformed_diagonalizable_point():
    # block-diagonal slice point with eigenvalue pairs (t1,t2),(t3,t4):
    # A_ii = sum of the pair, B_ii = -product, everything else zero
    m, ell = (2, 2), (2, 2)
    eqs = emit_deformed_equations(m, ell)
    ctx = eqs.ctx
    rng = random.Random(7)
    t = {a: Fraction(rng.randrange(-9, 9)) for a in (1, 2, 3, 4)}
    point = {name: Fraction(0) for name in ctx.names}
    point["t1"], point["t2"] = t[1], t[2]
    point["A11"], point["B11"] = t[1] + t[2], -t[1] * t[2]
    # second diagonal block uses the same eigenvalues here (ell rectangular, k=2)
    point["A22"], point["B22"] = t[1] + t[2], -t[1] * t[2]
    values = [point[n] for n in ctx.names]
    for _, p in eqs.relations:
        assert p.evaluate(values) == 0


def test_linear_component_multidegree_trivial_cases():
    model = intersect_with_n(build_slice((2, 2, 2, 2)))
    ctx = spectral_context(4)
    assert linear_component_multidegree(model, []) == ctx.one()
    full = linear_component_multidegree(model, [c.name for c in model.coords])
    assert full.homogeneous_degree() == len(model.coords)


def test_linear_component_multidegree_appendix():
    model = intersect_with_n(build_slice((2, 2, 2, 2)))
    ctx = spectral_context(4)
    got = linear_component_multidegree(model, ["A12", "A34", "B12", "B34"])
    want = parse_polynomial("(hb+z1-z2)*(2*hb+z1-z2)*(hb+z3-z4)*(2*hb+z3-z4)", ctx)
    assert got == want


def test_linear_solve_and_eval_rational():
    from qkzpsi.algebra import coordinate_context

    ctx = coordinate_context(("x", "y", "z"))
    x, y, z = ctx.var("x"), ctx.var("y"), ctx.var("z")
    constraint = x * y + z  # solve: y = -z / x
    num, den = linear_solve(constraint, "y", ctx)
    assert num == -z and den == x
    # substitute back: x*(-z/x) + z = 0
    val, _ = eval_rational(constraint, {"y": (num, den)}, ctx)
    assert val.is_zero()
    with pytest.raises(SliceError):
        linear_solve(x * x + y, "x", ctx)


def test_elementary_symmetric():
    from qkzpsi.algebra import coordinate_context

    ctx = coordinate_context(("t1", "t2", "t3"))
    es = elementary_symmetric(ctx, ("t1", "t2", "t3"))
    t1, t2, t3 = (ctx.var(n) for n in ("t1", "t2", "t3"))
    assert es[1] == t1 + t2 + t3
    assert es[2] == t1 * t2 + t1 * t3 + t2 * t3
    assert es[3] == t1 * t2 * t3


def test_oversize_guard():
    with pytest.raises(SliceError):
        emit_equations((4, 4, 4, 4), (4,) * 4)


def test_inserted_block_weight_product_matches_formula():
    # the coordinates pinned by inserting a full block carry exactly the
    # torus weights of the recurrence prefactor; two independent routes
    from qkzpsi.slice import inserted_block_weight_product

    for m, p, K in (((1, 1), 1, 2), ((1, 1), 2, 2), ((2, 1, 2), 2, 4), ((2, 2), 1, 3)):
        N = len(m)
        ctx = spectral_context(N, zeta=1)
        got = inserted_block_weight_product(m, p, K, ctx)
        half = ctx.hbar() * Fraction(1, 2)
        zeta = ctx.var("zeta")
        want = ctx.one()
        for i in range(1, p):
            for a in range(m[i - 1]):
                want = want * (half * (m[i - 1] + K - 2 * a) + ctx.z(i) - zeta)
        for i in range(p, N + 1):
            for a in range(m[i - 1]):
                want = want * (half * (m[i - 1] + K - 2 * a) + zeta - ctx.z(i))
        assert got == want


def test_verify_component_membership_reports_failure():
    from qkzpsi.algebra import coordinate_context
    from qkzpsi.slice import verify_component_membership

    ctx = coordinate_context(("x", "y"))
    x, y = ctx.var("x"), ctx.var("y")
    ok = verify_component_membership(ctx, 2, ["x"], [], [], [x * y], instance="toy")
    assert ok.passed  # x = 0 kills x*y
    bad = verify_component_membership(ctx, 2, ["x"], [], [], [y], instance="toy")
    assert bad.status == "fail"


def test_spaltenstein_sample_component1():
    from qkzpsi.appendix import load_fixture, sample_component_point

    doc = load_fixture()
    rng = random.Random(20240817)
    X = sample_component_point(doc, 0, rng)
    label = spaltenstein_label(X, (2, 2, 2, 2))
    assert label.as_tableau().rows == ((1, 2), (1, 2), (3, 4), (3, 4))


def test_sampled_points_satisfy_relations():
    # membership double-check at rational points: the three matrix relations
    # vanish numerically on every sampled component point
    from qkzpsi.appendix import load_fixture, sample_component_point
    from qkzpsi.combinatorics import jordan_type

    doc = load_fixture()
    rng = random.Random(3)
    for ci in range(3):
        X = sample_component_point(doc, ci, rng)
        X2 = [[sum(X[i][t] * X[t][j] for t in range(8)) for j in range(8)] for i in range(8)]
        X4 = [[sum(X2[i][t] * X2[t][j] for t in range(8)) for j in range(8)] for i in range(8)]
        assert all(v == 0 for row in X4 for v in row)
        assert jordan_type(X) in {(4, 4), (4, 3, 1), (4, 2, 2), (3, 3, 2), (4, 4, 0)}
