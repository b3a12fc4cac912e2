"""Symbolic slice models: transverse-slice matrices, orbit equations, weights.

A slice model for a composition m packages the block structure of the
base nilpotent x_m (Jordan blocks of sizes m_1, ..., m_N, ones right above
the diagonal), the free coordinates (in each block (i, j): the last row,
the min(m_i, m_j) leftmost columns), and the torus weight of every
coordinate: (z_i - z_j) plus (m_i + m_j - 2(col-1)) half-units of hb,
the "perimeter" rule.

Equations come from the orbit-closure conditions: X^L = 0 entrywise in the
rectangular case, rank conditions on powers in general, and the regular
deformation prod_a (X - t_a) = 0 with coefficients written through the
elementary symmetric polynomials of the t_a.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import (
    LinearForm,
    Polynomial,
    PolyContext,
    coordinate_context,
    spectral_context,
)


class SliceError(Exception):
    pass


@dataclass(frozen=True)
class SliceCoordinate:
    name: str
    i: int              # block row (1-based)
    j: int              # block column
    col: int            # column within the allowed strip, 1-based
    row_abs: int        # absolute matrix row (0-based)
    col_abs: int        # absolute matrix column (0-based)
    weight_h: int       # torus weight, h-units; z-part is z_i - z_j


def _coord_name(i, j, col, width):
    """Bij / Aij style names when two columns exist, else Xij_c."""
    if width == 2:
        return ("B" if col == 1 else "A") + f"{i}{j}"
    if width == 1:
        return f"A{i}{j}"
    letter = chr(ord("A") + width - col)
    return f"{letter}{i}{j}"


class SliceModel:
    """x_m plus free coordinates, with torus weights; optionally cut to n."""

    def __init__(self, m, restricted=False):
        self.m = tuple(int(x) for x in m)
        if any(x < 1 for x in self.m):
            raise SliceError("m entries must be positive")
        self.N = len(self.m)
        self.M = sum(self.m)
        self.restricted = restricted
        starts = []
        pos = 0
        for mi in self.m:
            starts.append(pos)
            pos += mi
        self.block_start = tuple(starts)
        coords = []
        for i in range(1, self.N + 1):
            for j in range(1, self.N + 1):
                if restricted and not (i < j):
                    continue
                mi, mj = self.m[i - 1], self.m[j - 1]
                width = min(mi, mj)
                row_abs = self.block_start[i - 1] + mi - 1  # last row of block i
                for col in range(1, width + 1):
                    col_abs = self.block_start[j - 1] + (col - 1)
                    coords.append(
                        SliceCoordinate(
                            name=_coord_name(i, j, col, width),
                            i=i,
                            j=j,
                            col=col,
                            row_abs=row_abs,
                            col_abs=col_abs,
                            weight_h=mi + mj - 2 * (col - 1),
                        )
                    )
        self.coords = tuple(coords)
        self.by_name = {c.name: c for c in self.coords}

    def context(self, extra=()):
        return coordinate_context(tuple(c.name for c in self.coords) + tuple(extra))

    def generic_matrix(self, ctx=None):
        """x_m plus the coordinate symbols, as an M x M matrix of polynomials."""
        if ctx is None:
            ctx = self.context()
        X = [[ctx.zero() for _ in range(self.M)] for _ in range(self.M)]
        for bi, mi in enumerate(self.m):
            s = self.block_start[bi]
            for r in range(mi - 1):
                X[s + r][s + r + 1] = ctx.one()
        for c in self.coords:
            X[c.row_abs][c.col_abs] = X[c.row_abs][c.col_abs] + ctx.var(c.name)
        return ctx, X

    def weight_form(self, coord):
        """Torus weight as a linear form over the N-variable spectral context."""
        if coord.i == coord.j:
            return LinearForm.make(coord.weight_h)[0], 1
        return LinearForm.make(coord.weight_h, coord.i, coord.j)

    def weight_vector(self, name):
        """Grading vector (z_1.., z_N, h-units) of a coordinate."""
        c = self.by_name[name]
        z = [0] * self.N
        if c.i != c.j:
            z[c.i - 1] += 1
            z[c.j - 1] -= 1
        return tuple(z) + (c.weight_h,)

    def monomial_weight(self, ctx, exps):
        total = [0] * (self.N + 1)
        for idx, e in enumerate(exps):
            if not e:
                continue
            name = ctx.names[idx]
            if name not in self.by_name:
                continue  # deformation parameters and such carry weight 0 here
            w = self.weight_vector(name)
            for t in range(self.N + 1):
                total[t] += e * w[t]
        return tuple(total)

    def relation_is_homogeneous(self, ctx, poly):
        weights = {self.monomial_weight(ctx, e) for e in poly.terms}
        return len(weights) <= 1


def build_slice(m):
    return SliceModel(m, restricted=False)


def intersect_with_n(model):
    """Keep only coordinates strictly above the block diagonal.

    Within-block coordinates (and everything below) are forced to zero;
    the surviving span is the ambient space for multidegrees, of dimension
    sum_{i<j} min(m_i, m_j).
    """
    return SliceModel(model.m, restricted=True)


@dataclass
class EquationSet:
    m: tuple
    ell: tuple
    ctx: PolyContext
    relations: tuple   # of (name, Polynomial)
    deformed: bool = False

    def nonzero(self):
        return [(n, p) for n, p in self.relations if not p.is_zero()]

    def to_json(self):
        return {
            "schema": 1,
            "m": list(self.m),
            "ell": list(self.ell),
            "deformed": self.deformed,
            "coordinates": [n for n in self.ctx.names],
            "relations": [
                {"name": n, "poly": p.to_json()} for n, p in self.relations
            ],
        }


def _mat_mul_poly(A, B):
    n = len(A)
    zero = A[0][0].ctx.zero()
    out = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for t in range(n):
            a = Ai[t]
            if a.is_zero():
                continue
            Bt = B[t]
            row = out[i]
            for j in range(n):
                b = Bt[j]
                if not b.is_zero():
                    row[j] = row[j] + a * b
    return out


def _mat_pow(X, p):
    out = X
    for _ in range(p - 1):
        out = _mat_mul_poly(out, X)
    return out


def emit_equations(m, ell, restricted=False, max_size=12):
    """Orbit-closure relations for Jordan type at most ell on the slice.

    Rectangular ell (all nonzero parts equal L): the entries of X^L.
    General ell: the rank conditions rank(X^s) <= sum_i max(ell_i - s, 0),
    emitted as vanishing minors of the powers.  Relations come back in a
    fixed row-major order.
    """
    model = SliceModel(m, restricted=restricted)
    if model.M > max_size:
        raise SliceError(f"slice size {model.M} exceeds the desk-scale limit {max_size}")
    ell = tuple(int(x) for x in ell)
    if sum(ell) != model.M:
        raise SliceError("ell must sum to the matrix size")
    parts = [x for x in ell if x > 0]
    ctx, X = model.generic_matrix()
    relations = []
    if len(set(parts)) <= 1:
        L = parts[0] if parts else 1
        P = _mat_pow(X, L)
        for r in range(model.M):
            for c in range(model.M):
                relations.append((f"X^{L}[{r + 1},{c + 1}]", P[r][c]))
    else:
        maxp = max(parts)
        power = X
        for s in range(1, maxp + 1):
            if s > 1:
                power = _mat_mul_poly(power, X)
            bound = sum(max(x - s, 0) for x in parts)
            if bound >= model.M:
                continue
            size = bound + 1
            relations.extend(_minor_relations(power, size, f"X^{s}", model.M))
    return EquationSet(m=model.m, ell=ell, ctx=ctx, relations=tuple(relations))


def _minor_relations(P, size, tag, M):
    from itertools import combinations
    from math import comb

    if comb(M, size) ** 2 > 4000:
        raise SliceError("minor system too large for desk scale")
    out = []
    idx = list(range(M))
    for rows in combinations(idx, size):
        for cols in combinations(idx, size):
            sub = [[P[r][c] for c in cols] for r in rows]
            out.append(
                (
                    f"{tag} minor {tuple(r + 1 for r in rows)}x{tuple(c + 1 for c in cols)}",
                    _poly_det(sub),
                )
            )
    return out


def _poly_det(sub):
    from itertools import permutations

    n = len(sub)
    if n > 4:
        raise SliceError("symbolic minors above size 4 are out of desk scale")
    ctx = sub[0][0].ctx
    total = ctx.zero()
    for perm in permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        term = ctx.one()
        for i in range(n):
            term = term * sub[i][perm[i]]
            if term.is_zero():
                break
        total = total + term * sign
    return total


def elementary_symmetric(ctx, tnames):
    """e_0..e_k of the named deformation parameters, as polynomials."""
    k = len(tnames)
    es = [ctx.one()]
    for a in range(1, k + 1):
        es.append(ctx.zero())
    for name in tnames:
        t = ctx.var(name)
        for a in range(len(tnames), 0, -1):
            es[a] = es[a] + es[a - 1] * t
    return es


def emit_deformed_equations(m, ell, max_size=12):
    """Entries of prod_a (X - t_a) on the slice; rectangular ell only.

    The deformation moves the nilpotent orbit to the regular orbit with
    eigenvalues t_1..t_k; at t = 0 this reproduces emit_equations exactly.
    """
    model = SliceModel(m, restricted=False)
    if model.M > max_size:
        raise SliceError("slice size exceeds the desk-scale limit")
    ell = tuple(int(x) for x in ell)
    parts = [x for x in ell if x > 0]
    if len(set(parts)) > 1:
        raise SliceError("deformed equations are modeled for rectangular ell only")
    L = parts[0]
    tnames = tuple(f"t{a}" for a in range(1, L + 1))
    ctx = model.context(extra=tnames)
    _, X = model.generic_matrix(ctx)
    es = elementary_symmetric(ctx, tnames)
    powers = [None] * (L + 1)
    ident = [
        [ctx.one() if r == c else ctx.zero() for c in range(model.M)]
        for r in range(model.M)
    ]
    powers[0] = ident
    for p in range(1, L + 1):
        powers[p] = _mat_mul_poly(powers[p - 1], X)
    relations = []
    for r in range(model.M):
        for c in range(model.M):
            val = ctx.zero()
            for s in range(L + 1):
                coeff = es[s] * ((-1) ** s)
                val = val + coeff * powers[L - s][r][c]
            relations.append((f"prod(X-t)[{r + 1},{c + 1}]", val))
    return EquationSet(m=model.m, ell=ell, ctx=ctx, relations=tuple(relations), deformed=True)


def linear_component_multidegree(model, vanishing):
    """Product of the torus weights of the vanishing coordinates.

    The ambient is the restricted slice (inside the strict block-upper
    part); the multidegree of a coordinate subspace is just this product,
    a polynomial in z_1..z_N and hb.
    """
    if not model.restricted:
        raise SliceError("multidegrees live in the restricted (block-upper) model")
    ctx = spectral_context(model.N)
    p = ctx.one()
    for name in vanishing:
        c = model.by_name.get(name)
        if c is None:
            raise SliceError(f"unknown coordinate {name}")
        form, sign = model.weight_form(c)
        p = p * (form.to_poly(ctx) * sign)
    return p


# -- generic points with rational coordinates -----------------------------------


def linear_solve(poly, var, ctx):
    """Solve a polynomial linear in ``var``: returns (num, den) with var = num/den."""
    vidx = ctx.index(var)
    c0 = {}
    c1 = {}
    for e, coeff in poly.terms.items():
        d = e[vidx]
        le = list(e)
        le[vidx] = 0
        key = tuple(le)
        if d == 0:
            c0[key] = coeff
        elif d == 1:
            c1[key] = coeff
        else:
            raise SliceError(f"constraint is not linear in {var}")
    num = -Polynomial(ctx, c0)
    den = Polynomial(ctx, c1)
    if den.is_zero():
        raise SliceError(f"constraint does not involve {var}")
    return num, den


def eval_rational(poly, assignment, ctx):
    """Evaluate with some variables set to num/den pairs; returns (num, den).

    Unassigned variables stay symbolic.  The result denominator is the
    product of the assignment denominators raised to the maximal exponents,
    so membership checks reduce to `num == 0`.
    """
    maxdeg = {}
    for e in poly.terms:
        for name, (num, den) in assignment.items():
            idx = ctx.index(name)
            if e[idx] > maxdeg.get(name, 0):
                maxdeg[name] = e[idx]
    den_total = ctx.one()
    for name, d in maxdeg.items():
        den_total = den_total * (assignment[name][1] ** d)
    assigned_idx = {ctx.index(name): name for name in maxdeg}
    total = ctx.zero()
    for e, coeff in poly.terms.items():
        factor = ctx.const(coeff)
        for idx, exp in enumerate(e):
            if idx in assigned_idx:
                continue
            if exp:
                factor = factor * (ctx.var(idx) ** exp)
        for idx, name in assigned_idx.items():
            num, den = assignment[name]
            exp = e[idx]
            if exp:
                factor = factor * (num ** exp)
            pad = maxdeg[name] - exp
            if pad:
                factor = factor * (den ** pad)
        total = total + factor
    return total, den_total


def verify_component_membership(
    ctx, n_coords, vanishing, constraints, solve_order, relations,
    free_expected=None, instance="",
):
    """Generic-point membership: a constrained locus sits inside a variety.

    ``vanishing`` names coordinates set to zero; ``constraints`` are
    polynomial conditions, of which those named in ``solve_order`` (pairs
    of variable name and constraint index) are eliminated linearly, leaving
    the rest as identities to verify; ``relations`` must then vanish
    identically in the remaining free symbols.  Exact throughout: the
    generic point uses fresh symbols, not random numbers.
    """
    from .reporting import report, timer

    with timer() as tm:
        assignment = {}
        zero, one = ctx.zero(), ctx.one()
        for name in vanishing:
            assignment[name] = (zero, one)
        solved = set()
        for var, cidx in solve_order:
            num, _ = eval_rational(constraints[cidx], assignment, ctx)
            vn, vd = linear_solve(num, var, ctx)
            assignment[var] = (vn, vd)
            solved.add(cidx)
        for cidx, c in enumerate(constraints):
            if cidx in solved:
                continue
            num, _ = eval_rational(c, assignment, ctx)
            if not num.is_zero():
                return report(
                    "membership", instance, False,
                    witness=f"constraint {cidx} does not vanish on the locus",
                    elapsed=tm.elapsed,
                )
        if free_expected is not None:
            free = n_coords - len(assignment)
            if free != free_expected:
                return report(
                    "membership", instance, False,
                    witness=f"dimension {free}, want {free_expected}",
                    elapsed=tm.elapsed,
                )
        for ri, rel in enumerate(relations):
            if rel.is_zero():
                continue
            num, _ = eval_rational(rel, assignment, ctx)
            if not num.is_zero():
                return report(
                    "membership", instance, False,
                    witness=f"relation {ri} does not vanish", elapsed=tm.elapsed,
                )
    return report("membership", instance, True, elapsed=tm.elapsed)


def inserted_block_weight_product(m, p, block_size, ctx):
    """Weight product of the coordinates wiped out by a full-block insertion.

    Inserting a Jordan block of size ``block_size`` at position p pins the
    coordinates of the enlarged slice that sit in the new block's row and
    column strips; their torus weights multiply to the linear-factor
    prefactor of the insertion recurrence.  ``ctx`` must carry z_1..z_N and
    a ``zeta`` variable for the inserted spectral parameter.
    """
    m = tuple(m)
    N = len(m)
    m_big = m[:p - 1] + (block_size,) + m[p - 1:]
    model = SliceModel(m_big, restricted=True)
    ins = p  # block index of the insertion in the enlarged model
    zeta_idx = ctx.index("zeta") + 1  # 1-based for linear forms

    def zvar(block):
        if block == ins:
            return zeta_idx
        return block if block < ins else block - 1

    product = ctx.one()
    for c in model.coords:
        if ins not in (c.i, c.j):
            continue
        form, sign = LinearForm.make(c.weight_h, zvar(c.i), zvar(c.j))
        product = product * (form.to_poly(ctx) * sign)
    return product


def upper_triangular_matrices(ctx, N, names, diagonal=None):
    """Symbolic N x N upper-triangular matrices from coordinate names.

    ``names`` maps (letter, i, j) -> variable name for i < j; ``diagonal``
    optionally maps (letter, i) -> Polynomial for the diagonal entries
    (strict upper triangular when omitted).
    """
    mats = {}
    for letter in ("A", "B"):
        rows = []
        for i in range(1, N + 1):
            row = []
            for j in range(1, N + 1):
                if i < j:
                    row.append(ctx.var(names[(letter, i, j)]))
                elif i == j and diagonal is not None:
                    row.append(diagonal.get((letter, i), ctx.zero()))
                else:
                    row.append(ctx.zero())
            rows.append(row)
        mats[letter] = rows
    return mats


def word_value(word, mats, ctx, N):
    """Product of the matrices named by ``word`` ("" means the identity)."""
    ident = [
        [ctx.one() if r == c else ctx.zero() for c in range(N)] for r in range(N)
    ]
    out = ident
    for letter in word:
        out = _mat_mul_poly(out, mats[letter])
    return out


def matrix_relation_value(terms, mats, ctx, N, e_polys=None):
    """Evaluate a sum of scalar-weighted matrix words as an N x N matrix."""
    total = [[ctx.zero() for _ in range(N)] for _ in range(N)]
    for term in terms:
        c = term.get("c", 1)
        word = term.get("word", "")
        val = word_value(word, mats, ctx, N)
        scalar = ctx.const(c)
        if "e" in term:
            if e_polys is None:
                raise SliceError("relation uses deformation coefficients but none given")
            scalar = scalar * e_polys[term["e"]]
        for r in range(N):
            for cc in range(N):
                if not val[r][cc].is_zero():
                    total[r][cc] = total[r][cc] + scalar * val[r][cc]
    return total
