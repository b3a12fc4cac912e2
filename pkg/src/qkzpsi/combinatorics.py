"""Weight, diagram and tableau combinatorics.

Covers the translation from quiver dimension data (k, w, v) to weight
data (mu, lambda, m, ell), the enumeration of the column-strict tableaux
indexing irreducible components, the subset-sequence picture and the map
between the two, tableau promotion and the rotation operator built from it,
tensor-product multiplicities, and the Jordan-chain labelling of points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class CombinatoricsError(Exception):
    pass


# -- quiver data -------------------------------------------------------------


@dataclass(frozen=True)
class QuiverData:
    k: int
    w: tuple
    v: tuple
    mu: tuple       # GL(k) weight, length k, last entry 0
    lam: tuple      # GL(k) weight, length k, weakly decreasing
    N: int          # number of framing vectors = len(m)
    M: int          # total number of boxes
    m: tuple        # column heights of mu's diagram, in the chosen order
    ell: tuple      # column heights of lam's diagram, zero-padded to length N


def _column_heights(weight):
    """Column heights of the box diagram of a weakly decreasing weight."""
    if not weight or weight[0] == 0:
        return ()
    return tuple(sum(1 for r in weight if r >= c) for c in range(1, weight[0] + 1))


def weights_from_quiver(k, w, v, m_order=None):
    """Build the combinatorial package attached to dimension vectors (w, v).

    mu_j = sum_{a>=j} w_a (j < k) with mu_k = 0; lam = mu - sum v_a alpha_a.
    Rejects non-dominant lam, reporting the offending adjacent pair of rows.
    ``m_order`` optionally fixes the order of the column-height sequence m
    (constructions for different orders are isomorphic but distinct).
    """
    if k < 2:
        raise CombinatoricsError("k must be at least 2")
    w = tuple(int(x) for x in w)
    v = tuple(int(x) for x in v)
    if len(w) != k - 1 or len(v) != k - 1:
        raise CombinatoricsError("w and v must have length k-1")
    if any(x < 0 for x in w) or any(x < 0 for x in v):
        raise CombinatoricsError("w and v must be non-negative")
    mu = tuple(sum(w[a] for a in range(j, k - 1)) for j in range(k))
    lam = list(mu)
    for a in range(k - 1):
        # alpha_a = e_a - e_{a+1} (1-based simple root a)
        lam[a] -= v[a]
        lam[a + 1] += v[a]
    lam = tuple(lam)
    for a in range(k - 1):
        if lam[a] < lam[a + 1]:
            raise CombinatoricsError(
                f"lambda is not dominant: rows {a + 1},{a + 2} are ({lam[a]},{lam[a + 1]})"
            )
    if lam[-1] < 0:
        raise CombinatoricsError("lambda has a negative row")
    N = sum(w)
    M = sum((a + 1) * w[a] for a in range(k - 1))
    m_default = tuple(sorted(_column_heights(mu), reverse=True))
    if m_order is None:
        m = m_default
    else:
        m = tuple(int(x) for x in m_order)
        if tuple(sorted(m, reverse=True)) != m_default:
            raise CombinatoricsError("m_order is not a permutation of the column heights")
    ell = _column_heights(lam)
    if len(ell) > N:
        raise CombinatoricsError("lambda has more columns than N")
    ell = ell + (0,) * (N - len(ell))
    if sum(m) != M or sum(ell) != M:
        raise CombinatoricsError("internal inconsistency: box counts disagree")
    for mi in m:
        if not (1 <= mi <= k - 1):
            raise CombinatoricsError("m entries must lie in 1..k-1")
    return QuiverData(k=k, w=w, v=v, mu=mu, lam=lam, N=N, M=M, m=m, ell=ell)


# -- tableaux ----------------------------------------------------------------


@dataclass(frozen=True)
class Tableau:
    """Filling of the diagram of lam, one letter per box.

    Rows are strictly increasing left to right, columns weakly increasing
    top to bottom (the conjugate of a semistandard tableau); letter i is
    used m_i times.
    """

    rows: tuple  # tuple of tuples of letters

    def __post_init__(self):
        for r in self.rows:
            for a, b in zip(r, r[1:]):
                if a >= b:
                    raise CombinatoricsError(f"row {r} is not strictly increasing")
        for ri in range(1, len(self.rows)):
            upper, lower = self.rows[ri - 1], self.rows[ri]
            if len(lower) > len(upper):
                raise CombinatoricsError("row lengths must weakly decrease")
            for c, x in enumerate(lower):
                if upper[c] > x:
                    raise CombinatoricsError(
                        f"column {c + 1} not weakly increasing at rows {ri},{ri + 1}"
                    )

    @property
    def shape(self):
        return tuple(len(r) for r in self.rows)

    def content(self):
        """Number of occurrences of each letter 1..max."""
        top = max((x for r in self.rows for x in r), default=0)
        counts = [0] * top
        for r in self.rows:
            for x in r:
                counts[x - 1] += 1
        return tuple(counts)

    def reading_word(self):
        return tuple(x for r in self.rows for x in r)

    def transpose(self):
        """Rows of the conjugate filling (a genuine semistandard tableau)."""
        shape = self.shape
        if not shape:
            return ()
        cols = []
        for c in range(shape[0]):
            cols.append(tuple(r[c] for r in self.rows if len(r) > c))
        return tuple(cols)

    @staticmethod
    def from_transpose(cols):
        nrows = max((len(c) for c in cols), default=0)
        rows = []
        for r in range(nrows):
            rows.append(tuple(c[r] for c in cols if len(c) > r))
        return Tableau(tuple(rows))

    def to_json(self):
        return [list(r) for r in self.rows]

    def __str__(self):
        return " / ".join("".join(str(x) for x in r) for r in self.rows)


def enumerate_tableaux(lam, m):
    """All tableaux of shape lam with letter i used m_i times.

    Letters are placed in increasing order; at each stage the occupied boxes
    must form a partition shape inside lam, which is exactly the
    column-weak/row-strict condition.  Output is sorted by reading word.
    """
    lam = tuple(x for x in lam if x > 0)
    m = tuple(m)
    if sum(lam) != sum(m):
        raise CombinatoricsError("box counts of lam and m differ")
    nrows = len(lam)
    results = []
    row_sets = [None] * len(m)

    def place(letter, lengths):
        if letter == len(m):
            rows = [[] for _ in range(nrows)]
            for i, rs in enumerate(row_sets):
                for r in rs:
                    rows[r].append(i + 1)
            results.append(Tableau(tuple(tuple(r) for r in rows)))
            return
        need = m[letter]
        choices = [r for r in range(nrows) if lengths[r] < lam[r]]

        def choose(start, picked):
            if len(picked) == need:
                new_lengths = list(lengths)
                ok = True
                for r in picked:
                    new_lengths[r] += 1
                for r in range(1, nrows):
                    if new_lengths[r] > new_lengths[r - 1]:
                        ok = False
                        break
                if ok:
                    row_sets[letter] = tuple(picked)
                    place(letter + 1, tuple(new_lengths))
                return
            for idx in range(start, len(choices)):
                picked.append(choices[idx])
                choose(idx + 1, picked)
                picked.pop()

        choose(0, [])

    place(0, (0,) * nrows)
    results.sort(key=lambda t: t.reading_word())
    return results


def phi_map(t):
    """Subset sequence of a tableau: alpha_i = rows containing letter i."""
    content = t.content()
    out = []
    for letter in range(1, len(content) + 1):
        rows = tuple(
            ri + 1 for ri, r in enumerate(t.rows) if letter in r
        )
        if len(rows) != content[letter - 1]:
            raise CombinatoricsError("letter repeated within a row")
        out.append(rows)
    return tuple(out)


# -- promotion and the rotation operator --------------------------------------


def _bender_knuth(cols, i):
    """Bender-Knuth involution t_i on a semistandard tableau (given as rows).

    Swaps the number of free i's and (i+1)'s in every row; an i is bound to
    an i+1 directly below it in the same column and bound pairs stay put.
    """
    rows = [list(r) for r in cols]
    nr = len(rows)
    for ri in range(nr):
        row = rows[ri]
        below = rows[ri + 1] if ri + 1 < nr else []
        above = rows[ri - 1] if ri > 0 else []
        free = []
        for ci, x in enumerate(row):
            if x == i:
                if ci < len(below) and below[ci] == i + 1:
                    continue
                free.append(ci)
            elif x == i + 1:
                if ci < len(above) and above[ci] == i:
                    continue
                free.append(ci)
        if not free:
            continue
        r_count = sum(1 for ci in free if row[ci] == i)
        s_count = len(free) - r_count
        for pos, ci in enumerate(free):
            row[ci] = i if pos < s_count else i + 1
    return tuple(tuple(r) for r in rows)


def promotion(t, m):
    """Tableau promotion for rectangular shapes of full height.

    Realized as the composite of Bender-Knuth involutions t_1, ..., t_{N-1}
    on the conjugate (semistandard) filling; the content rotates from
    (m_1, ..., m_N) to (m_2, ..., m_N, m_1).  Non-rectangular shapes are
    not supported (there is no combinatorial rotation operator for them).
    """
    shape = t.shape
    if len(set(shape)) > 1:
        raise CombinatoricsError("promotion implemented for rectangular shapes only")
    n = len(m)
    cols = t.transpose()
    for i in range(1, n):
        cols = _bender_knuth(cols, i)
    return Tableau.from_transpose(cols)


class SignedPermutationOp:
    """A constant operator: basis label -> (image label, sign)."""

    def __init__(self, basis, mapping, sign=1, name="rho"):
        self.basis = tuple(basis)
        self.mapping = dict(mapping)  # label -> label (the permutation p)
        self.sign = sign
        self.name = name
        if set(self.mapping) != set(self.basis) or set(self.mapping.values()) != set(self.basis):
            raise CombinatoricsError("mapping is not a permutation of the basis")

    def matrix(self):
        """Entries rho[a][b] so that (rho v)_a = sum_b rho[a][b] v_b."""
        n = len(self.basis)
        idx = {lab: t for t, lab in enumerate(self.basis)}
        mat = [[0] * n for _ in range(n)]
        for b_lab in self.basis:
            a_lab = self.mapping[b_lab]
            mat[idx[a_lab]][idx[b_lab]] = self.sign
        return mat

    def apply(self, entries):
        """Apply to a vector given as {label: value}: (rho v)_{p(b)} = sign * v_b."""
        out = {}
        for b_lab, val in entries.items():
            out[self.mapping[b_lab]] = val * self.sign if self.sign != 1 else val
        return out

    def inverse(self):
        inv = {v: k for k, v in self.mapping.items()}
        return SignedPermutationOp(self.basis, inv, self.sign, name=self.name + "^-1")

    def compose(self, other):
        mapping = {lab: self.mapping[other.mapping[lab]] for lab in self.basis}
        return SignedPermutationOp(self.basis, mapping, self.sign * other.sign)

    def is_identity(self):
        return self.sign == 1 and all(self.mapping[lab] == lab for lab in self.basis)


def epsilon_sign(M, k):
    """The sign (-1)^(M/k - 1) entering the rotation operator for full rectangles."""
    if M % k:
        raise CombinatoricsError("M must be divisible by k for the rectangular case")
    return -1 if (M // k - 1) % 2 else 1


def rho_matrix(basis, m, M, k):
    """Rotation operator on a component (tableau) basis via promotion.

    rho[a][b] = eps^{m_1} * delta(a, promotion(b)) with eps = (-1)^(M/k-1).
    """
    eps = epsilon_sign(M, k)
    sign = eps if m[0] % 2 else 1
    mapping = {}
    for t in basis:
        mapping[t] = promotion(t, m)
    return SignedPermutationOp(tuple(basis), mapping, sign)


def sequence_rotation(basis, m, M, k):
    """Rotation operator on the standard (subset-sequence) basis.

    Acts by (rho v)_{(S_1..S_N)} = sign * v_{(S_2..S_N, S_1)}; the scalar is
    eps^{m_1} times the parity (-1)^(M - M/k) of moving the first group past
    the rest, matching the convention in which the vectors are built by
    exchange propagation.  Defined for full-height rectangles, where every
    letter appears M/k times.
    """
    eps = epsilon_sign(M, k)
    sign = (eps if m[0] % 2 else 1) * (-1 if (M - M // k) % 2 else 1)
    mapping = {}
    for lab in basis:
        mapping[lab] = (lab[-1],) + lab[:-1]
    return SignedPermutationOp(tuple(basis), mapping, sign)


# -- tensor multiplicities -----------------------------------------------------


def _add_vertical_strip(p, a, k):
    """All partitions (length <= k) obtained from p by adding a vertical a-strip."""
    from itertools import combinations

    p = tuple(p) + (0,) * (k - len(p))
    out = []
    for rows in combinations(range(k), a):
        q = list(p)
        for r in rows:
            q[r] += 1
        if all(q[i] >= q[i + 1] for i in range(k - 1)):
            out.append(tuple(q))
    return out


def tensor_multiplicity(lam, m, k):
    """Multiplicity of the weight lam in the product of column reps omega_{m_i}.

    Iterated Pieri rule for elementary symmetric functions: tensoring with a
    column of height a adds a vertical a-strip in all possible ways.
    """
    lam = tuple(lam) + (0,) * (k - len(lam))
    state = {(0,) * k: 1}
    for a in m:
        new = {}
        for p, mult in state.items():
            for q in _add_vertical_strip(p, a, k):
                new[q] = new.get(q, 0) + mult
        state = new
    return state.get(lam, 0)


def multiplicity_check(qd):
    """Component count cross-check: tableau enumeration vs Pieri multiplicity.

    Returns the common value; raises if the two independent routes disagree.
    """
    count = len(enumerate_tableaux(qd.lam, qd.m))
    mult = tensor_multiplicity(qd.lam, qd.m, qd.k)
    if count != mult:
        raise CombinatoricsError(
            f"tableau count {count} != tensor multiplicity {mult} for {qd}"
        )
    return count


# -- Jordan chains and point labelling -----------------------------------------


def exact_rank(rows):
    """Rank of a matrix with Fraction entries, by Gaussian elimination."""
    mat = [list(map(Fraction, r)) for r in rows]
    nr = len(mat)
    nc = len(mat[0]) if nr else 0
    rank = 0
    for col in range(nc):
        piv = None
        for r in range(rank, nr):
            if mat[r][col]:
                piv = r
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        prow = mat[rank]
        inv = 1 / prow[col]
        for r in range(rank + 1, nr):
            f = mat[r][col]
            if f:
                f *= inv
                row = mat[r]
                for c in range(col, nc):
                    row[c] -= f * prow[c]
        rank += 1
    return rank


def _mat_mul(a, b):
    n = len(a)
    return [
        [sum(a[i][t] * b[t][j] for t in range(n)) for j in range(n)]
        for i in range(n)
    ]


def jordan_type(mat):
    """Jordan type of a nilpotent rational matrix (partition, decreasing)."""
    n = len(mat)
    ranks = [n]
    power = [row[:] for row in mat]
    while True:
        r = exact_rank(power)
        ranks.append(r)
        if r == 0:
            break
        power = _mat_mul(power, mat)
        if len(ranks) > n + 1:
            raise CombinatoricsError("matrix is not nilpotent")
    # blocks of size exactly p: (ranks[p-1]-ranks[p]) - (ranks[p]-ranks[p+1])
    sizes = []
    for p in range(1, len(ranks)):
        exactly = (ranks[p - 1] - ranks[p]) - (ranks[p] - ranks[p + 1] if p + 1 < len(ranks) else 0)
        sizes.extend([p] * exactly)
    sizes.sort(reverse=True)
    return tuple(sizes)


def conjugate_partition(p):
    p = tuple(x for x in p if x > 0)
    if not p:
        return ()
    return tuple(sum(1 for x in p if x >= c) for c in range(1, p[0] + 1))


@dataclass(frozen=True)
class MVyLabel:
    """Increasing chain of Jordan types of the leading principal submatrices."""

    chain: tuple  # tuple of partitions

    def as_tableau(self):
        """Rebuild the tableau: letter h occupies the rows added at step h (conjugates)."""
        prev = ()
        row_sets = []
        for part in self.chain:
            conj = conjugate_partition(part)
            prev_p = conjugate_partition(prev)
            prev_p = prev_p + (0,) * (len(conj) - len(prev_p))
            rows = tuple(r + 1 for r in range(len(conj)) if conj[r] > prev_p[r])
            added = sum(conj) - sum(prev_p)
            if added != len(rows):
                raise CombinatoricsError("chain does not grow by a vertical strip")
            row_sets.append(rows)
            prev = part
        final = conjugate_partition(self.chain[-1])
        rows = [[] for _ in final]
        for letter, rs in enumerate(row_sets, start=1):
            for r in rs:
                rows[r - 1].append(letter)
        return Tableau(tuple(tuple(r) for r in rows))

    def dominance_leq(self, other):
        """Chainwise dominance: every Jordan type at or below the other's."""
        if len(self.chain) != len(other.chain):
            return False
        for p, q in zip(self.chain, other.chain):
            if not partition_dominance_leq(p, q):
                return False
        return True


def partition_dominance_leq(p, q):
    """p <= q in dominance order (partial sums)."""
    if sum(p) != sum(q):
        return False
    sp = sq = 0
    for t in range(max(len(p), len(q))):
        sp += p[t] if t < len(p) else 0
        sq += q[t] if t < len(q) else 0
        if sp > sq:
            return False
    return True


def label_of_tableau(t):
    """The Jordan-type chain a generic point of the tableau's component has."""
    content = t.content()
    chain = []
    for h in range(1, len(content) + 1):
        rows = tuple(
            sum(1 for x in r if x <= h) for r in t.rows
        )
        chain.append(conjugate_partition(tuple(x for x in rows if x)))
    return MVyLabel(tuple(chain))


def sweep_instances(max_k=4, max_M=10):
    """Every valid quiver datum with k <= max_k and M <= max_M."""
    from itertools import product as iproduct

    out = []
    for k in range(2, max_k + 1):
        ranges = [range(0, max_M // a + 1) for a in range(1, k)]
        for w in iproduct(*ranges):
            M = sum((a + 1) * w[a] for a in range(k - 1))
            if M == 0 or M > max_M:
                continue
            vranges = [range(0, M + 1) for _ in range(k - 1)]
            for v in iproduct(*vranges):
                try:
                    qd = weights_from_quiver(k, w, v)
                except CombinatoricsError:
                    continue
                out.append(qd)
    return out


def spaltenstein_label(X, m):
    """Label a nilpotent M x M matrix by its chain of principal Jordan types.

    The h-th entry of the chain is the Jordan type of the upper-left block
    of size m_1 + ... + m_h.  For a generic point of a component the chain
    is the component's tableau.
    """
    M = len(X)
    if sum(m) != M:
        raise CombinatoricsError("matrix size must equal sum(m)")
    chain = []
    size = 0
    for mi in m:
        size += mi
        sub = [row[:size] for row in X[:size]]
        chain.append(jordan_type(sub))
    return MVyLabel(tuple(chain))
