"""The fully worked rank-4 example, embedded as data and verified end to end.

All the printed objects of the example (component constraints, multidegrees,
R-matrices, the rotation matrix, the deformed equations and one deformed
component) live in ``data/appendix.json`` in their printed shapes; this
module parses them and checks every identity against the package's own
constructions.  Nothing here is re-derived by hand: the point is that the
fixture and the code agree.

The suite's eight checks: slice equations, component membership,
multidegrees, R-matrix solve, YBE/unitarity/commutation, cyclicity, wheel
conditions, deformed equations.
"""

from __future__ import annotations

import copy
import json
from fractions import Fraction
from pathlib import Path

from .algebra import LinearForm, RationalFunction, parse_polynomial, spectral_context
from .combinatorics import (
    SignedPermutationOp,
    Tableau,
    enumerate_tableaux,
    epsilon_sign,
    multiplicity_check,
    phi_map,
    rho_matrix,
    weights_from_quiver,
)
from .qkz import PsiVector, check_cyclicity, check_wheel, label_text, wheel_positions
from .reporting import Report, report, timer
from .rmatrix import (
    CTX1,
    ROperator,
    matrix_applicator,
    solve_rmatrix_from_exchange,
    verify_commutation,
    verify_unitarity,
    verify_ybe,
)
from . import slice as slicemod

DATA = Path(__file__).parent / "data" / "appendix.json"


def load_fixture(corrupt=None):
    """Parsed fixture dictionary; ``corrupt`` flips one named datum for
    negative-control tests."""
    with open(DATA) as fh:
        doc = json.load(fh)
    if corrupt is None:
        return doc
    doc = copy.deepcopy(doc)
    if corrupt == "rho":
        doc["rho"][1][1] = -doc["rho"][1][1]
    elif corrupt == "psi":
        doc["components"][0]["multidegree_factors"][0][0] += 1
    elif corrupt == "rmatrix":
        doc["rmatrices"]["R2"][0][1]["num"] = "3*z"
    elif corrupt == "deformed":
        doc["deformed_relations"][0]["terms"][0]["c"] = 2
    else:
        raise ValueError(f"unknown corruption {corrupt!r}")
    return doc


def fixture_labels(doc):
    return [tuple(tuple(r) for r in phi_map(Tableau(tuple(tuple(x) for x in c["tableau"]))))
            for c in doc["components"]]


def fixture_psi(doc):
    """The printed multidegree vector over the component basis."""
    ctx = spectral_context(len(doc["m"]))
    entries = {}
    for comp, lab in zip(doc["components"], fixture_labels(doc)):
        p = ctx.one()
        for a, i, j in comp["multidegree_factors"]:
            form, sign = LinearForm.make(2 * a, i, j)
            p = p * (form.to_poly(ctx) * sign)
        entries[lab] = p
    return PsiVector(4, tuple(doc["quiver"]["k"] * [2]), tuple(doc["m"]), ctx, entries)


def _parse_entry(cell):
    num = parse_polynomial(cell["num"], CTX1)
    den = {}
    for a in cell["den"]:
        f, _ = LinearForm.make(2 * a, 1)
        den[f] = den.get(f, 0) + 1
    return RationalFunction(num, den)


def fixture_rmatrices(doc):
    """The printed matrices as full-basis operators on the component labels."""
    labels = fixture_labels(doc)
    out = {}
    for name, key in (("R1", "R1_equals_R3"), ("R2", "R2")):
        rows = doc["rmatrices"][key]
        entries = {}
        for a, row in enumerate(rows):
            for b, cell in enumerate(row):
                rf = _parse_entry(cell)
                if not rf.is_zero():
                    entries[(labels[a], labels[b])] = rf
        out[name] = ROperator(CTX1, tuple(labels), tuple(labels), entries)
    out["R3"] = out["R1"]
    return out


def fixture_rho(doc):
    labels = fixture_labels(doc)
    mat = doc["rho"]
    mapping = {}
    sign = None
    for b in range(len(labels)):
        hits = [(a, mat[a][b]) for a in range(len(labels)) if mat[a][b]]
        if len(hits) != 1:
            raise ValueError("rotation fixture is not a signed permutation")
        a, val = hits[0]
        if sign is None:
            sign = 1 if val > 0 else -1
        if (1 if val > 0 else -1) != sign:
            raise ValueError("rotation fixture has mixed signs")
        mapping[labels[b]] = labels[a]
    return SignedPermutationOp(tuple(labels), mapping, sign)


# -- the eight checks ------------------------------------------------------------


def check_equations(doc):
    """X^4 on the slice carries exactly the printed matrix relations."""
    with timer() as tm:
        m = tuple(doc["m"])
        ell = tuple(x for x in doc["ell"])
        eqs = slicemod.emit_equations(m, ell)
        ctx = eqs.ctx
        N = len(m)
        mats = {}
        for letter in ("A", "B"):
            mats[letter] = [
                [ctx.var(f"{letter}{i}{j}") for j in range(1, N + 1)]
                for i in range(1, N + 1)
            ]
        by_name = {r["name"]: r["terms"] for r in doc["relations"]}
        r_left = slicemod.matrix_relation_value(by_name["B(A^2+B)"], mats, ctx, N)
        r_right = slicemod.matrix_relation_value(by_name["(A^2+B)B"], mats, ctx, N)
        r_cubic = slicemod.matrix_relation_value(by_name["A^3+AB+BA"], mats, ctx, N)
        cubic_B = slicemod._mat_mul_poly(r_cubic, mats["B"])
        cubic_A = slicemod._mat_mul_poly(r_cubic, mats["A"])
        A_cubic = slicemod._mat_mul_poly(mats["A"], r_cubic)
        L = 4
        X4 = {name: p for name, p in eqs.relations}
        model = slicemod.SliceModel(m)
        first = [model.block_start[i] for i in range(N)]
        last = [model.block_start[i] + m[i] - 1 for i in range(N)]
        for i in range(N):
            for j in range(N):
                pairs = [
                    (X4[f"X^{L}[{first[i] + 1},{first[j] + 1}]"], r_right[i][j], "upper-left"),
                    (X4[f"X^{L}[{first[i] + 1},{last[j] + 1}]"], r_cubic[i][j], "upper-right"),
                    (X4[f"X^{L}[{last[i] + 1},{first[j] + 1}]"], cubic_B[i][j], "lower-left"),
                    (
                        X4[f"X^{L}[{last[i] + 1},{last[j] + 1}]"],
                        r_right[i][j] + cubic_A[i][j],
                        "lower-right",
                    ),
                ]
                for got, want, where in pairs:
                    if got != want:
                        return report(
                            "equations", "appendix", False,
                            witness=f"{where} block entry ({i + 1},{j + 1})",
                            elapsed=tm.elapsed,
                        )
        # the third printed relation is the explicit combination of the others
        for i in range(N):
            for j in range(N):
                want = r_right[i][j] + cubic_A[i][j] - A_cubic[i][j]
                if r_left[i][j] != want:
                    return report(
                        "equations", "appendix", False,
                        witness=f"B(A^2+B) combination fails at ({i + 1},{j + 1})",
                        elapsed=tm.elapsed,
                    )
        # torus homogeneity of every emitted relation
        for name, p in eqs.relations:
            if not model.relation_is_homogeneous(ctx, p):
                return report(
                    "equations", "appendix", False,
                    witness=f"inhomogeneous relation {name}", elapsed=tm.elapsed,
                )
    return report("equations", "appendix", True, elapsed=tm.elapsed)


def check_components(doc):
    """The three printed loci satisfy the matrix relations identically."""
    with timer() as tm:
        m = tuple(doc["m"])
        N = len(m)
        model_n = slicemod.intersect_with_n(slicemod.SliceModel(m))
        ctx = model_n.context()
        names = {}
        for letter in ("A", "B"):
            for i in range(1, N + 1):
                for j in range(i + 1, N + 1):
                    names[(letter, i, j)] = f"{letter}{i}{j}"
        mats = slicemod.upper_triangular_matrices(ctx, N, names)
        relations = [
            entry
            for r in doc["relations"]
            for row in slicemod.matrix_relation_value(r["terms"], mats, ctx, N)
            for entry in row
        ]
        half_dim = len(model_n.coords) - 4  # codim = sum lam_a(lam_a-1)/2 = 4
        for ci, comp in enumerate(doc["components"], start=1):
            cvals = []
            for constraint in comp["matrix_constraints"]:
                val = slicemod.matrix_relation_value(
                    constraint["word_terms"], mats, ctx, N
                )
                r, c = constraint["entry"]
                cvals.append(val[r - 1][c - 1])
            rep = slicemod.verify_component_membership(
                ctx,
                len(model_n.coords),
                comp["vanishing"],
                cvals,
                comp["solve_order"],
                relations,
                free_expected=half_dim,
                instance=f"component {ci}",
            )
            if not rep.passed:
                return report(
                    "components", "appendix", False,
                    witness=f"component {ci}: {rep.witness}", elapsed=tm.elapsed,
                )
    return report("components", "appendix", True, elapsed=tm.elapsed)


def check_multidegrees(doc):
    """The linear component's weight product equals its printed multidegree."""
    with timer() as tm:
        m = tuple(doc["m"])
        model_n = slicemod.intersect_with_n(slicemod.SliceModel(m))
        psi = fixture_psi(doc)
        comp1 = doc["components"][0]
        labels = fixture_labels(doc)
        product = slicemod.linear_component_multidegree(model_n, comp1["vanishing"])
        if product != psi.entries[labels[0]]:
            return report(
                "multidegrees", "appendix", False,
                witness="weight product differs from the printed polynomial",
                elapsed=tm.elapsed,
            )
        want = psi.expected_degree()
        for lab in labels:
            if psi.entries[lab].homogeneous_degree() != want:
                return report(
                    "multidegrees", "appendix", False,
                    witness=f"printed entry {label_text(lab)} not of degree {want}",
                    elapsed=tm.elapsed,
                )
        # translation invariance: only differences of z's occur
        ctx = psi.ctx
        shift = {t: ctx.z(t + 1) + ctx.hbar() for t in range(ctx.nz)}
        for lab in labels:
            if psi.entries[lab].substitute(shift) != psi.entries[lab]:
                return report(
                    "multidegrees", "appendix", False,
                    witness=f"entry {label_text(lab)} not translation invariant",
                    elapsed=tm.elapsed,
                )
    return report("multidegrees", "appendix", True, elapsed=tm.elapsed)


def check_rmatrix_solve(doc):
    """Solving the exchange relation returns the printed matrices."""
    with timer() as tm:
        psi = fixture_psi(doc)
        printed = fixture_rmatrices(doc)
        want = {1: printed["R1"], 2: printed["R2"], 3: printed["R3"]}
        for i in (1, 2, 3):
            solved = solve_rmatrix_from_exchange(psi, i)
            if not solved.equals(want[i]):
                return report(
                    "rmatrix-solve", "appendix", False,
                    witness=f"solved matrix at slot {i} differs", elapsed=tm.elapsed,
                )
    return report("rmatrix-solve", "appendix", True, elapsed=tm.elapsed)


def check_rmatrix_relations(doc):
    """YBE, unitarity and far commutation for the printed matrices."""
    with timer() as tm:
        printed = fixture_rmatrices(doc)
        labels = tuple(fixture_labels(doc))
        ctx3 = spectral_context(3)
        a1 = matrix_applicator(printed["R1"])
        a2 = matrix_applicator(printed["R2"])
        a3 = matrix_applicator(printed["R3"])
        checks = [
            verify_ybe(a1, a2, labels, ctx3, "appendix R1,R2"),
            verify_ybe(a2, a3, labels, ctx3, "appendix R2,R3"),
            verify_unitarity(a1, labels, ctx3, "appendix R1"),
            verify_unitarity(a2, labels, ctx3, "appendix R2"),
            verify_commutation(a1, a3, labels, ctx3, "appendix R1,R3"),
        ]
        for rep in checks:
            if not rep.passed:
                return report(
                    "ybe-unitarity", "appendix", False,
                    witness=f"{rep.instance}: {rep.witness}", elapsed=tm.elapsed,
                )
    return report("ybe-unitarity", "appendix", True, elapsed=tm.elapsed)


def check_cyclicity_fixture(doc):
    """Printed rotation: cyclicity holds, the matrix is promotion, sign is +1."""
    with timer() as tm:
        psi = fixture_psi(doc)
        rho = fixture_rho(doc)
        rep = check_cyclicity(psi, rho, instance="appendix")
        if not rep.passed:
            return Report("cyclicity", "appendix", "fail", rep.witness, tm.elapsed)
        # promotion-derived operator matches the printed matrix
        tabs = [Tableau(tuple(tuple(r) for r in c["tableau"])) for c in doc["components"]]
        labels = fixture_labels(doc)
        m = tuple(doc["m"])
        M = sum(m)
        derived = rho_matrix(tabs, m, M, 4)
        tab_of = dict(zip(labels, tabs))
        lab_of = {t: lab for lab, t in tab_of.items()}
        for lab in labels:
            want = rho.mapping[lab]
            got = lab_of[derived.mapping[tab_of[lab]]]
            if want != got:
                return report(
                    "cyclicity", "appendix", False,
                    witness="promotion disagrees with the printed matrix",
                    elapsed=tm.elapsed,
                )
        eps = epsilon_sign(M, 4)
        if eps != -1 or derived.sign != 1 or rho.sign != 1:
            return report(
                "cyclicity", "appendix", False,
                witness=f"sign bookkeeping: eps={eps}, derived={derived.sign}",
                elapsed=tm.elapsed,
            )
        # closure: four applications of the printed rotation give the identity
        comp = rho
        for _ in range(3):
            comp = comp.compose(rho)
        if not comp.is_identity():
            return report(
                "cyclicity", "appendix", False,
                witness="rho^4 is not the identity", elapsed=tm.elapsed,
            )
    return report("cyclicity", "appendix", True, elapsed=tm.elapsed)


def check_wheel_fixture(doc):
    with timer() as tm:
        psi = fixture_psi(doc)
        placements = wheel_positions(psi.m, psi.k)
        if len(placements) != 4:
            return report(
                "wheel", "appendix", False,
                witness=f"expected 4 placements, found {len(placements)}",
                elapsed=tm.elapsed,
            )
        for pos in placements:
            rep = check_wheel(psi, pos, instance=f"appendix positions={pos}")
            if not rep.passed:
                return report(
                    "wheel", "appendix", False,
                    witness=f"positions {pos}: {rep.witness}", elapsed=tm.elapsed,
                )
    return report("wheel", "appendix", True, elapsed=tm.elapsed)


def check_deformed(doc):
    """Deformed relations: printed shape, t = 0 limit, component membership."""
    with timer() as tm:
        m = tuple(doc["m"])
        N = len(m)
        ell = tuple(doc["ell"])
        eqs = slicemod.emit_deformed_equations(m, ell)
        ctx = eqs.ctx
        tnames = tuple(f"t{a}" for a in range(1, 5))
        es = slicemod.elementary_symmetric(ctx, tnames)
        mats = {}
        for letter in ("A", "B"):
            mats[letter] = [
                [ctx.var(f"{letter}{i}{j}") for j in range(1, N + 1)]
                for i in range(1, N + 1)
            ]
        printed = [
            slicemod.matrix_relation_value(r["terms"], mats, ctx, N, e_polys=es)
            for r in doc["deformed_relations"]
        ]
        r1d, r0d, r2d = printed[0], printed[1], printed[2]
        c_B = slicemod._mat_mul_poly(r2d, mats["B"])
        c_A = slicemod._mat_mul_poly(r2d, mats["A"])
        A_c = slicemod._mat_mul_poly(mats["A"], r2d)
        model = slicemod.SliceModel(m)
        first = [model.block_start[i] for i in range(N)]
        last = [model.block_start[i] + m[i] - 1 for i in range(N)]
        X = {name: p for name, p in eqs.relations}
        for i in range(N):
            for j in range(N):
                quads = [
                    (X[f"prod(X-t)[{first[i] + 1},{first[j] + 1}]"], r1d[i][j], "upper-left"),
                    (X[f"prod(X-t)[{first[i] + 1},{last[j] + 1}]"], r2d[i][j], "upper-right"),
                    (X[f"prod(X-t)[{last[i] + 1},{first[j] + 1}]"], c_B[i][j], "lower-left"),
                    (X[f"prod(X-t)[{last[i] + 1},{last[j] + 1}]"], r1d[i][j] + c_A[i][j], "lower-right"),
                ]
                for got, want, where in quads:
                    if got != want:
                        return report(
                            "deformed-equations", "appendix", False,
                            witness=f"{where} block ({i + 1},{j + 1})", elapsed=tm.elapsed,
                        )
                want = r1d[i][j] + c_A[i][j] - A_c[i][j]
                if r0d[i][j] != want:
                    return report(
                        "deformed-equations", "appendix", False,
                        witness=f"second relation combination at ({i + 1},{j + 1})",
                        elapsed=tm.elapsed,
                    )
        # t = 0 recovers the undeformed equations relation by relation
        zero_map = {name: ctx.zero() for name in tnames}
        undeformed = slicemod.emit_equations(m, ell)
        emb = {nm: ctx.var(nm) for nm in undeformed.ctx.names}
        for (name_d, pd), (name_u, pu) in zip(eqs.relations, undeformed.relations):
            specialized = pd.substitute({ctx.index(t): ctx.zero() for t in tnames})
            lifted = pu.substitute(
                {undeformed.ctx.index(nm): emb[nm] for nm in undeformed.ctx.names}, ctx
            )
            if specialized != lifted:
                return report(
                    "deformed-equations", "appendix", False,
                    witness=f"t=0 limit differs at {name_d}", elapsed=tm.elapsed,
                )
        # membership of the printed deformed component
        rep = _check_deformed_component(doc, printed_relations=doc["deformed_relations"])
        if not rep.passed:
            return Report("deformed-equations", "appendix", "fail", rep.witness, tm.elapsed)
    return report("deformed-equations", "appendix", True, elapsed=tm.elapsed)


def _check_deformed_component(doc, printed_relations):
    """Generic point of the printed deformed component satisfies the relations.

    The printed constraints select the component inside the deformed
    variety, so two coordinates are additionally pinned by (linear-in-them)
    entries of the relations themselves; afterwards every relation entry
    and every printed quadratic must vanish identically and the number of
    free coordinates must equal half the ambient dimension.
    """
    with timer() as tm:
        m = tuple(doc["m"])
        N = len(m)
        dc = doc["deformed_component"]
        alpha = [tuple(s) for s in dc["alpha"]]
        coord_names = []
        for letter in ("A", "B"):
            for i in range(1, N + 1):
                for j in range(i + 1, N + 1):
                    coord_names.append(f"{letter}{i}{j}")
        tnames = tuple(f"t{a}" for a in range(1, 5))
        ctx = slicemod.coordinate_context(tuple(coord_names) + tnames)
        es = slicemod.elementary_symmetric(ctx, tnames)
        names = {}
        for letter in ("A", "B"):
            for i in range(1, N + 1):
                for j in range(i + 1, N + 1):
                    names[(letter, i, j)] = f"{letter}{i}{j}"
        diagonal = {}
        for i, letters in enumerate(alpha, start=1):
            sa = ctx.zero()
            pb = ctx.one()
            for a in letters:
                sa = sa + ctx.var(f"t{a}")
                pb = pb * ctx.var(f"t{a}")
            diagonal[("A", i)] = sa
            diagonal[("B", i)] = -pb
        mats = slicemod.upper_triangular_matrices(ctx, N, names, diagonal=diagonal)
        quadratics = [parse_polynomial(q, ctx) for q in dc["quadratics"]]
        rel_values = [
            slicemod.matrix_relation_value(rel["terms"], mats, ctx, N, e_polys=es)
            for rel in printed_relations
        ]
        constraints = list(quadratics)
        solve_order = list(dc["solve_order"])
        for var, ri, r, c in dc["relation_solve"]:
            constraints.append(rel_values[ri][r - 1][c - 1])
            solve_order.append((var, len(constraints) - 1))
        relations = [entry for val in rel_values for row in val for entry in row]
        rep = slicemod.verify_component_membership(
            ctx,
            len(coord_names),
            [],
            constraints,
            solve_order,
            relations,
            free_expected=8,
            instance="deformed component",
        )
        if not rep.passed:
            return report(
                "deformed-component", "appendix", False,
                witness=rep.witness, elapsed=tm.elapsed,
            )
    return report("deformed-component", "appendix", True, elapsed=tm.elapsed)


def sample_component_point(doc, comp_index, rng):
    """Random rational point of a printed component.

    Free coordinates are integers in [-9, 9]; constrained ones are solved
    from the printed equations (resampling if a pivot degenerates).
    Returns the full 8 x 8 slice matrix.
    """
    comp = doc["components"][comp_index]
    N = len(doc["m"])
    model_n = slicemod.intersect_with_n(slicemod.SliceModel(tuple(doc["m"])))
    ctx = model_n.context()
    names = {
        (letter, i, j): f"{letter}{i}{j}"
        for letter in "AB"
        for i in range(1, N + 1)
        for j in range(i + 1, N + 1)
    }
    mats = slicemod.upper_triangular_matrices(ctx, N, names)
    cvals = []
    for constraint in comp["matrix_constraints"]:
        val = slicemod.matrix_relation_value(constraint["word_terms"], mats, ctx, N)
        r, c = constraint["entry"]
        cvals.append(val[r - 1][c - 1])
    while True:
        point = {c.name: Fraction(rng.randrange(-9, 10)) for c in model_n.coords}
        for name in comp["vanishing"]:
            point[name] = Fraction(0)
        ok = True
        for var, cidx in comp["solve_order"]:
            poly = cvals[cidx]
            vidx = ctx.index(var)
            c1 = c0 = Fraction(0)
            for e, coeff in poly.terms.items():
                term = Fraction(coeff)
                for idx, exp in enumerate(e):
                    if idx == vidx:
                        continue
                    if exp:
                        term *= point[ctx.names[idx]] ** exp
                if e[vidx] == 0:
                    c0 += term
                else:
                    c1 += term
            if c1 == 0:
                ok = False
                break
            point[var] = -c0 / c1
        if ok:
            break
    model = slicemod.SliceModel(tuple(doc["m"]))
    M = model.M
    X = [[Fraction(0)] * M for _ in range(M)]
    for bi, mi in enumerate(model.m):
        s = model.block_start[bi]
        for r in range(mi - 1):
            X[s + r][s + r + 1] = Fraction(1)
    for c in model_n.coords:
        X[c.row_abs][c.col_abs] = point[c.name]
    return X


def check_labelling(doc, seed=1, samples=10):
    """Jordan-chain labels of sampled component points match the subscripts.

    At least 9 of the 10 seeded samples per component must reproduce the
    printed tableau; any minority label must be strictly smaller chainwise
    in dominance order (a non-generic degeneration).
    """
    import random as _random

    from .combinatorics import label_of_tableau, spaltenstein_label

    with timer() as tm:
        m = tuple(doc["m"])
        rng = _random.Random(seed)
        for ci, comp in enumerate(doc["components"]):
            printed_tab = Tableau(tuple(tuple(r) for r in comp["tableau"]))
            printed = label_of_tableau(printed_tab)
            hits = 0
            minority = []
            for _ in range(samples):
                X = sample_component_point(doc, ci, rng)
                label = spaltenstein_label(X, m)
                if label == printed:
                    hits += 1
                else:
                    minority.append(label)
            if hits < samples - 1:
                return report(
                    "labelling", "appendix", False,
                    witness=f"component {ci + 1}: only {hits}/{samples} generic",
                    elapsed=tm.elapsed,
                )
            for label in minority:
                if not (label.dominance_leq(printed) and label != printed):
                    return report(
                        "labelling", "appendix", False,
                        witness=f"component {ci + 1}: minority label not below the printed one",
                        elapsed=tm.elapsed,
                    )
    return report("labelling", "appendix", True, elapsed=tm.elapsed)


SUITE = (
    ("equations", check_equations),
    ("components", check_components),
    ("multidegrees", check_multidegrees),
    ("rmatrix-solve", check_rmatrix_solve),
    ("ybe-unitarity", check_rmatrix_relations),
    ("cyclicity", check_cyclicity_fixture),
    ("wheel", check_wheel_fixture),
    ("deformed-equations", check_deformed),
)


def cmd_appendix_suite(corrupt=None):
    """Run all eight checks; returns the list of reports."""
    doc = load_fixture(corrupt=corrupt)
    reports = []
    for name, fn in SUITE:
        try:
            rep = fn(doc)
        except Exception as exc:  # a failure inside a check is a failing report
            rep = Report(name, "appendix", "fail", witness=f"{type(exc).__name__}: {exc}")
        reports.append(rep)
    return reports
