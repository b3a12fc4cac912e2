"""Construction of the multidegree vectors and their functional identities.

The vector for the fundamental sequence m = (1,...,1) is built from its
extreme entry (the product of hb + z_i - z_j over equal-letter pairs) by
repeated use of the exchange relation, one inversion at a time; every
division this takes must be exact and every derivation path must agree,
which the builder enforces.  Vectors for general m are produced from the
fundamental one by the fusion specialization: group the variables into
arithmetic progressions of step hb and contract with unnormalized
antisymmetrizers.

Verification operations cover the exchange relation, wheel conditions,
the insertion recurrence, cyclicity under rotation of the factors, and the
difference (qKZ-type) step assembled from exchange moves plus one
cyclicity wrap.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .algebra import (
    ExactDivisionError,
    LinearForm,
    Polynomial,
    RationalFunction,
    spectral_context,
)
from .combinatorics import sequence_rotation
from .reporting import Report, report, timer
from . import rmatrix as _rm


class PsiError(Exception):
    pass


class PsiVector:
    """Basis-labelled vector of polynomials in z_1..z_N, hb.

    Labels are tuples of sorted letter tuples (subset sequences); in the
    fundamental case every subset is a singleton.  Entries may be zero but
    every content-compatible label is present.
    """

    def __init__(self, k, lam, m, ctx, entries):
        self.k = k
        self.lam = tuple(lam)
        self.m = tuple(m)
        self.ctx = ctx
        self.entries = dict(entries)
        self.basis = tuple(sorted(self.entries))

    @property
    def N(self):
        return len(self.m)

    def expected_degree(self):
        return sum(a * (a - 1) // 2 for a in self.lam)

    def copy_entries(self):
        return dict(self.entries)

    def degree_report(self, instance=""):
        """Every entry homogeneous of degree sum lam_a (lam_a - 1)/2."""
        want = self.expected_degree()
        with timer() as tm:
            for lab, p in self.entries.items():
                if p.is_zero():
                    continue
                d = p.homogeneous_degree()
                if d != want:
                    return report(
                        "degree", instance or self.instance_name(), False,
                        witness=f"label {label_text(lab)} has degree {d}, want {want}",
                        elapsed=tm.elapsed,
                    )
        return report("degree", instance or self.instance_name(), True, elapsed=tm.elapsed)

    def instance_name(self):
        lam = ",".join(str(x) for x in self.lam)
        m = ",".join(str(x) for x in self.m)
        return f"k={self.k} lambda=({lam}) m=({m})"

    def to_json(self):
        return {
            "schema": 1,
            "k": self.k,
            "lambda": list(self.lam),
            "m": list(self.m),
            "vars": self.ctx.nz,
            "entries": [
                {"label": [list(S) for S in lab], "poly": self.entries[lab].to_json()}
                for lab in self.basis
            ],
        }

    @staticmethod
    def from_json(doc):
        k = doc["k"]
        lam = tuple(doc["lambda"])
        m = tuple(doc["m"])
        ctx = spectral_context(doc["vars"])
        entries = {}
        for row in doc["entries"]:
            lab = tuple(tuple(S) for S in row["label"])
            entries[lab] = Polynomial.from_json(row["poly"], ctx)
        return PsiVector(k, lam, m, ctx, entries)


def label_text(lab):
    return "(" + ",".join("{" + ",".join(str(x) for x in S) + "}" for S in lab) + ")"


def content_labels(k, lam, m):
    """All subset sequences with |S_i| = m_i and letter a used lam_a times."""
    from itertools import combinations

    lam_full = tuple(lam) + (0,) * (k - len(lam))
    out = []

    def rec(slot, remaining, acc):
        if slot == len(m):
            if all(r == 0 for r in remaining):
                out.append(tuple(acc))
            return
        tail = sum(m[slot:])
        if sum(remaining) != tail:
            return
        letters = [a for a in range(1, k + 1) if remaining[a - 1] > 0]
        for S in combinations(letters, m[slot]):
            nxt = list(remaining)
            for a in S:
                nxt[a - 1] -= 1
            # feasibility: no letter may need more slots than remain
            if max(nxt) <= len(m) - slot - 1:
                acc.append(S)
                rec(slot + 1, nxt, acc)
                acc.pop()

    rec(0, list(lam_full), [])
    out.sort()
    return out


# -- fundamental construction ---------------------------------------------------


def extreme_component(lam):
    """The weakly increasing label and its product-form entry.

    The label reads (1^{lam_1}, 2^{lam_2}, ...); the polynomial is the
    product of hb + z_i - z_j over pairs i < j carrying the same letter.
    """
    lam = tuple(x for x in lam if x > 0)
    M = sum(lam)
    seq = []
    for a, la in enumerate(lam, start=1):
        seq.extend([a] * la)
    ctx = spectral_context(M)
    p = ctx.one()
    for i in range(M):
        for j in range(i + 1, M):
            if seq[i] == seq[j]:
                p = p * LinearForm(2, i + 1, j + 1).to_poly(ctx)
    label = tuple((a,) for a in seq)
    return label, p


def _inversions(seq):
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return inv


def _multiset_permutations(items):
    items = sorted(items)
    out = []

    def rec(remaining, acc):
        if not remaining:
            out.append(tuple(acc))
            return
        seen = set()
        for idx, x in enumerate(remaining):
            if x in seen:
                continue
            seen.add(x)
            rec(remaining[:idx] + remaining[idx + 1:], acc + [x])

    rec(items, [])
    return out


@lru_cache(maxsize=None)
def build_psi_fundamental(k, lam, check_invariants=True):
    """Fundamental-case vector, seeded at the extreme entry and propagated.

    Each label with a descent at position i is derived from its ascent
    partner beta' = s_i beta via

        entry(beta) = (hb*entry(beta') - (hb + z_i - z_{i+1}) * tau_i entry(beta'))
                      / (z_i - z_{i+1})

    The division must be exact and all derivation paths must produce the
    same polynomial; either failure raises immediately.
    """
    lam = tuple(lam)
    if any(x <= 0 for x in lam):
        raise PsiError("lambda rows must be positive")
    if list(lam) != sorted(lam, reverse=True):
        raise PsiError("lambda must be weakly decreasing")
    if len(lam) > k:
        raise PsiError("lambda has more rows than k")
    M = sum(lam)
    ctx = spectral_context(M)
    hb = ctx.hbar()
    base = []
    for a, la in enumerate(lam, start=1):
        base.extend([a] * la)
    seqs = _multiset_permutations(base)
    seqs.sort(key=lambda s: (_inversions(s), s))
    entries_seq = {}
    _, extreme = extreme_component(lam)
    entries_seq[tuple(base)] = extreme

    def derive(partner_entry, i):
        tau = partner_entry.swap_z(i, i + 1)
        shifted = LinearForm(2, i, i + 1).to_poly(ctx)  # hb + z_i - z_{i+1}
        num = hb * partner_entry - shifted * tau
        wform, _ = LinearForm.make(0, i, i + 1)
        return num.exact_div(wform)

    for seq in seqs:
        if seq in entries_seq:
            continue
        descents = [i for i in range(1, M) if seq[i - 1] > seq[i]]
        if not descents:
            raise PsiError(f"no descent and no seed for {seq}")
        value = None
        for i in descents:
            partner = seq[:i - 1] + (seq[i], seq[i - 1]) + seq[i + 1:]
            cand = derive(entries_seq[partner], i)
            if value is None:
                value = cand
            elif cand != value:
                raise PsiError(f"propagation path mismatch at {seq}, slot {i}")
        entries_seq[seq] = value

    want = sum(a * (a - 1) // 2 for a in lam)
    for seq, p in entries_seq.items():
        if p.homogeneous_degree() != want:
            raise PsiError(f"entry {seq} is not homogeneous of degree {want}")
    if check_invariants:
        for seq, p in entries_seq.items():
            for i in range(1, M):
                if seq[i - 1] == seq[i]:
                    form = LinearForm(2, i, i + 1)
                    try:
                        q = p.exact_div(form)
                    except ExactDivisionError:
                        raise PsiError(
                            f"entry {seq} not divisible by hb + z_{i} - z_{i+1}"
                        ) from None
                    if q.swap_z(i, i + 1) != q:
                        raise PsiError(f"quotient at {seq}, slot {i} not symmetric")

    entries = {tuple((a,) for a in seq): p for seq, p in entries_seq.items()}
    return PsiVector(k, lam, (1,) * M, ctx, entries)


# -- fusion ----------------------------------------------------------------------


def _perm_sign(perm):
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def fuse_psi(psi1, m):
    """Contract a fundamental vector to the sequence m by specialization.

    Group i of the variables is set to the progression
    z_i - (m_i-1)/2 hb, ..., z_i + (m_i-1)/2 hb, and the groups are
    contracted with idempotent-normalized antisymmetrizers: the entry at
    (S_1, ..., S_N) is 1/prod(m_i!) times the signed sum over orderings of
    each S_i of the specialized fundamental entries.  This scale makes the
    extreme entry a monic product of linear forms.
    """
    from itertools import permutations, product
    from math import factorial

    m = tuple(m)
    M = sum(m)
    if psi1.m != (1,) * M:
        raise PsiError("fuse_psi expects a fundamental vector matching sum(m)")
    if m == psi1.m:
        return psi1
    N = len(m)
    k = psi1.k
    ctx = spectral_context(N)
    # variable mapping: big position (1-based) -> z_group + offset*h
    half = ctx.hbar() * Fraction(1, 2)
    mapping = {}
    pos = 0
    for gi, mi in enumerate(m, start=1):
        for t in range(mi):
            pos += 1
            mapping[pos - 1] = ctx.z(gi) + half * (2 * t - mi + 1)
    mapping[psi1.ctx.h_index] = ctx.hbar() * Fraction(1, 2)
    specialized = {}

    def special(seq):
        val = specialized.get(seq)
        if val is None:
            lab = tuple((a,) for a in seq)
            val = psi1.entries[lab].substitute(mapping, ctx)
            specialized[seq] = val
        return val

    scale = Fraction(1)
    for mi in m:
        scale /= factorial(mi)
    labels = content_labels(k, psi1.lam, m)
    entries = {}
    for lab in labels:
        total = ctx.zero()
        for orderings in product(*[list(permutations(S)) for S in lab]):
            seq = tuple(x for block in orderings for x in block)
            sign = 1
            for block in orderings:
                sign *= _perm_sign(block)
            total = total + special(seq) * sign
        entries[lab] = total * scale
    return PsiVector(k, psi1.lam, m, ctx, entries)


# -- checks ----------------------------------------------------------------------


def _pair_operator(k, a, b):
    return _rm.pair_operator(k, a, b)


def check_exchange(psi, i, operator=None, slotwise=None, instance=None):
    """Verify tau_i Psi = R_i(z_i - z_{i+1}) Psi, exactly.

    With ``slotwise`` (default when no operator is given) the pair operator
    for (m_i, m_{i+1}) acts on factors i, i+1; otherwise ``operator`` acts
    on the whole basis.  Requires m_i == m_{i+1} so that both sides live in
    the same space.
    """
    name = instance or f"{psi.instance_name()} i={i}"
    m = psi.m
    if m[i - 1] != m[i]:
        return Report("exchange", name, "skipped", witness="inhomogeneous adjacent m")
    if operator is None:
        operator = _pair_operator(psi.k, m[i - 1], m[i])
    if slotwise is None:
        # a full-basis operator carries the psi labels themselves
        slotwise = tuple(operator.source) != tuple(psi.basis)
    form, sign = LinearForm.make(0, i, i + 1)
    with timer() as tm:
        sub = operator.substitute_spectral(form, sign, psi.ctx)
        if slotwise:
            applied = _apply_pair_operator(sub, psi.entries, i - 1)
        else:
            applied = sub.apply(psi.entries)
        for lab in psi.basis:
            lhs = psi.entries[lab].swap_z(i, i + 1)
            rhs = applied.get(lab)
            if rhs is None:
                ok = lhs.is_zero()
            else:
                ok = rhs.equals(lhs)
            if not ok:
                return report(
                    "exchange", name, False,
                    witness=f"first offending label {label_text(lab)}",
                    elapsed=tm.elapsed,
                )
    return report("exchange", name, True, elapsed=tm.elapsed)


def _apply_pair_operator(sub, entries, slot):
    out = {}
    by_source = sub.by_source()
    for label, val in entries.items():
        if val.is_zero():
            continue
        pair = (label[slot], label[slot + 1])
        for (P, Q), rf in by_source.get(pair, ()):
            new_label = label[:slot] + (P, Q) + label[slot + 2:]
            term = rf * val
            if new_label in out:
                out[new_label] = out[new_label] + term
            else:
                out[new_label] = term
    return out


def wheel_positions(m, k):
    """Minimal-length ordered position tuples with sum of m-entries > k."""
    from itertools import combinations

    N = len(m)
    for r in range(1, N + 1):
        tuples = [c for c in combinations(range(1, N + 1), r) if sum(m[p - 1] for p in c) > k]
        if tuples:
            return tuples
    return []


def check_wheel(psi, positions, instance=None):
    """Vanishing under zeta_{t+1} - zeta_t = (n_t + n_{t+1})/2 hb at the positions.

    The positions are arbitrary but must be increasing; the entries of m
    there play the role of the n_t and must satisfy sum n_t > k, otherwise
    the specialization is not a wheel and the check refuses to run.
    """
    positions = tuple(positions)
    if list(positions) != sorted(set(positions)):
        raise PsiError("wheel positions must be strictly increasing")
    n = [psi.m[p - 1] for p in positions]
    if sum(n) <= psi.k:
        raise PsiError(
            f"wheel requires sum(n) > k, got sum{tuple(n)} = {sum(n)} <= k = {psi.k}"
        )
    name = instance or f"{psi.instance_name()} positions={positions}"
    ctx = psi.ctx
    half = ctx.hbar() * Fraction(1, 2)
    base = ctx.z(positions[0])
    mapping = {}
    offset = 0
    for t in range(1, len(positions)):
        offset += n[t - 1] + n[t]  # in h-units
        mapping[positions[t] - 1] = base + half * offset
    with timer() as tm:
        for lab in psi.basis:
            val = psi.entries[lab].substitute(mapping)
            if not val.is_zero():
                return report(
                    "wheel", name, False,
                    witness=f"non-vanishing entry at {label_text(lab)}",
                    elapsed=tm.elapsed,
                )
    return report("wheel", name, True, elapsed=tm.elapsed)


def check_recurrence(psi_big, psi_small, p, n, instance=None):
    """Insertion recurrence: specializing the inserted block reproduces psi_small.

    The big vector has m-sequence (m_1..m_{p-1}, n_1..n_r, m_p..m_N) with
    sum(n) = k; the specialization sets zeta_{t+1} - zeta_t =
    (n_t + n_{t+1})/2 hb.  Entrywise on the standard basis this forces:

    * entries whose inserted letters repeat a row vanish identically;
    * entries whose inserted letters are distinct but out of order collapse,
      with the sign of the sorting permutation, onto the sorted arrangement
      (the exchange relation at the specialized point has a vanishing
      prefactor, which pairs the two entries);
    * entries with increasing inserted rows equal the matching small entry
      times an explicit product of linear factors.

    A single global sign relating the two constructions is allowed and must
    be consistent across all surviving entries.  The collapse branch is
    implemented for singleton inserts (n = (1, ..., 1)).
    """
    r = len(n)
    n = tuple(n)
    k = psi_big.k
    if sum(n) != k:
        raise PsiError("recurrence requires sum(n) = k")
    m_small = psi_small.m
    N = len(m_small)
    expect_big = m_small[:p - 1] + n + m_small[p - 1:]
    if psi_big.m != expect_big:
        raise PsiError(f"big m-sequence {psi_big.m} does not match insertion {expect_big}")
    name = instance or (
        f"k={k} insert n={n} at p={p}: m={psi_big.m} -> m={m_small}"
    )
    ctx = spectral_context(N, zeta=1)
    zeta = ctx.var("zeta")
    half = ctx.hbar() * Fraction(1, 2)
    # variable mapping from the big context
    mapping = {}
    offsets = [0]
    for t in range(1, r):
        offsets.append(offsets[-1] + n[t - 1] + n[t])
    for pos in range(1, psi_big.N + 1):
        if pos < p:
            mapping[pos - 1] = ctx.z(pos)
        elif pos < p + r:
            mapping[pos - 1] = zeta + half * offsets[pos - p]
        else:
            mapping[pos - 1] = ctx.z(pos - r)
    mapping[psi_big.ctx.h_index] = ctx.hbar() * Fraction(1, 2)
    # the prefactor of the surviving entries
    zeta_r = zeta + half * offsets[-1]
    pref = ctx.one()
    for i in range(1, p):
        mi = m_small[i - 1]
        for a in range(mi):
            pref = pref * (half * (mi + n[0] - 2 * a) + ctx.z(i) - zeta)
    for i in range(p, N + 1):
        mi = m_small[i - 1]
        for a in range(mi):
            pref = pref * (half * (mi + n[-1] - 2 * a) + zeta_r - ctx.z(i))
    small_map = {t: ctx.z(t + 1) for t in range(psi_small.ctx.nz)}
    small_map[psi_small.ctx.h_index] = ctx.hbar() * Fraction(1, 2)

    def classify(inserted):
        """'zero' | ('collapse', sorted_insert, sign) | 'survives'."""
        letters = [x for S in inserted for x in S]
        if len(set(letters)) != len(letters):
            return ("zero", None, 0)
        increasing = all(
            max(inserted[t]) < min(inserted[t + 1]) for t in range(len(inserted) - 1)
        )
        if increasing:
            return ("survives", None, 0)
        if any(len(S) != 1 for S in inserted):
            raise PsiError("out-of-order inserts supported for singleton rows only")
        sign = _perm_sign(tuple(x for S in inserted for x in S))
        srt = tuple((x,) for x in sorted(letters))
        return ("collapse", srt, sign)

    with timer() as tm:
        sigma = 0
        specialized = {}
        for lab in psi_big.basis:
            specialized[lab] = psi_big.entries[lab].substitute(mapping, ctx)
        seen_zero = seen_collapse = seen_survive = 0
        for lab in psi_big.basis:
            inserted = lab[p - 1:p - 1 + r]
            lhs = specialized[lab]
            kind, srt, sign = classify(inserted)
            if kind == "zero":
                seen_zero += 1
                if not lhs.is_zero():
                    return report(
                        "recurrence", name, False,
                        witness=f"repeated-row entry {label_text(lab)} should vanish",
                        elapsed=tm.elapsed,
                    )
                continue
            if kind == "collapse":
                seen_collapse += 1
                partner = lab[:p - 1] + srt + lab[p - 1 + r:]
                if lhs != specialized[partner] * sign:
                    return report(
                        "recurrence", name, False,
                        witness=f"entry {label_text(lab)} does not collapse onto "
                        f"{label_text(partner)} with sign {sign}",
                        elapsed=tm.elapsed,
                    )
                continue
            seen_survive += 1
            small_lab = lab[:p - 1] + lab[p - 1 + r:]
            rhs = pref * psi_small.entries[small_lab].substitute(small_map, ctx)
            if lhs.is_zero() and rhs.is_zero():
                continue
            if sigma == 0:
                for s in (1, -1):
                    if lhs == rhs * s:
                        sigma = s
                        break
                if sigma == 0:
                    return report(
                        "recurrence", name, False,
                        witness=f"no global sign matches at {label_text(lab)}",
                        elapsed=tm.elapsed,
                    )
            elif lhs != rhs * sigma:
                return report(
                    "recurrence", name, False,
                    witness=f"sign-inconsistent entry {label_text(lab)}",
                    elapsed=tm.elapsed,
                )
        if seen_survive == 0:
            return report(
                "recurrence", name, False,
                witness="no surviving entries at all", elapsed=tm.elapsed,
            )
    return report("recurrence", name, True, elapsed=tm.elapsed)


def cyclic_shift_mapping(ctx, N, k):
    """Substitution realizing arguments (z_2, ..., z_N, z_1 + (k+1) hb)."""
    s_h = 2 * (k + 1)
    half = ctx.hbar() * Fraction(1, 2)
    mapping = {}
    for t in range(1, N):
        mapping[t - 1] = ctx.z(t + 1)
    mapping[N - 1] = ctx.z(1) + half * s_h
    return mapping


def check_cyclicity(psi, rho_op, instance=None):
    """Psi(z_2, ..., z_N, z_1 + (k+1) hb) = rho Psi(z_1, ..., z_N), exactly."""
    name = instance or psi.instance_name()
    if len(set(psi.m)) > 1:
        return Report("cyclicity", name, "skipped", witness="m not homogeneous")
    mapping = cyclic_shift_mapping(psi.ctx, psi.N, psi.k)
    with timer() as tm:
        rhs = rho_op.apply(psi.entries)
        for lab in psi.basis:
            lhs = psi.entries[lab].substitute(mapping)
            if lhs != rhs.get(lab, psi.ctx.zero()):
                return report(
                    "cyclicity", name, False,
                    witness=f"first offending label {label_text(lab)}",
                    elapsed=tm.elapsed,
                )
    return report("cyclicity", name, True, elapsed=tm.elapsed)


def default_rho(psi):
    """Rotation operator on the standard basis (full-rectangle content only)."""
    return sequence_rotation(psi.basis, psi.m, sum(psi.lam), psi.k)


# -- the difference step ----------------------------------------------------------


def _applicators(psi, full_ops=None):
    """Per-slot applicators: apply(vec, form, sign) for slots 1..N-1."""
    if full_ops is not None:
        return {j: _rm.matrix_applicator(op) for j, op in full_ops.items()}
    out = {}
    for j in range(1, psi.N):
        rop = _pair_operator(psi.k, psi.m[j - 1], psi.m[j])
        out[j] = _rm.slot_applicator(rop, j - 1, psi.N)
    return out


def qkz_step(psi, i, rho_op, full_ops=None, instance=None, closure=True):
    """The difference step in z_i, assembled from exchange moves and one wrap.

    Route A moves slot i down to slot 1 implicitly: S_i is the composite

        R_i(z_{i+1} - z_i - s) ... R_{N-1}(z_N - z_i - s) rho
            R_1(z_1 - z_i) ... R_{i-1}(z_{i-1} - z_i)

    applied right to left, with s = (k+1) hb; the relation checked is
    Psi(..., z_i + s, ...) = S_i Psi.  Route B wraps through the inverse
    rotation and checks Psi(..., z_i - s, ...) = C_i Psi; route
    independence is certified by S_i(z_i -> z_i - s) C_i = identity.
    """
    name = instance or f"{psi.instance_name()} i={i}"
    N = psi.N
    k = psi.k
    ctx = psi.ctx
    s_h = 2 * (k + 1)  # shift in h-units
    apply_at = _applicators(psi, full_ops)
    half = ctx.hbar() * Fraction(1, 2)

    def run_chain(vec, steps):
        for (j, hcoef, a, b) in steps:
            form, sign = LinearForm.make(hcoef, a, b)
            vec = apply_at[j](vec, form, sign)
        return vec

    # route A: v = R_{i-1}(z_{i-1}-z_i) ... then rho ... then R_{N-1}..R_i
    steps_pre = [(j, 0, j, i) for j in range(i - 1, 0, -1)]
    steps_post = [(j, -s_h, j + 1, i) for j in range(N - 1, i - 1, -1)]
    with timer() as tm:
        v = run_chain(dict(psi.entries), steps_pre)
        v = rho_op.apply(v)
        v = run_chain(v, steps_post)
        lhs = {
            lab: psi.entries[lab].substitute({i - 1: ctx.z(i) + half * s_h})
            for lab in psi.basis
        }
        ok, where = _vec_equal_rf(lhs, v, ctx)
        if not ok:
            return report(
                "qkz", name, False,
                witness=f"route A mismatch at {label_text(where)}", elapsed=tm.elapsed,
            )
        # route B: move right, wrap via the inverse rotation
        steps_right = [(j, 0, i, j + 1) for j in range(i, N)]
        steps_back = [(j, -s_h, i, j) for j in range(1, i)]
        v2 = run_chain(dict(psi.entries), steps_right)
        v2 = rho_op.inverse().apply(v2)
        v2 = run_chain(v2, steps_back)
        lhs2 = {
            lab: psi.entries[lab].substitute({i - 1: ctx.z(i) - half * s_h})
            for lab in psi.basis
        }
        ok, where = _vec_equal_rf(lhs2, v2, ctx)
        if not ok:
            return report(
                "qkz", name, False,
                witness=f"route B mismatch at {label_text(where)}", elapsed=tm.elapsed,
            )
        if closure:
            # materialize both composites and check S_i(z_i -> z_i - s) C_i = 1
            S = _materialize(psi, apply_at, steps_pre, rho_op, steps_post, ctx)
            C = _materialize(psi, apply_at, steps_right, rho_op.inverse(), steps_back, ctx)
            shift_map = {i: ctx.z(i) - half * s_h}
            S_shifted = _substitute_operator(S, shift_map, ctx)
            prod = S_shifted.matmul(C)
            if not prod.is_identity():
                return report(
                    "qkz", name, False,
                    witness="route composites are not mutually inverse",
                    elapsed=tm.elapsed,
                )
    return report("qkz", name, True, elapsed=tm.elapsed)


def _vec_equal_rf(poly_vec, rf_vec, ctx):
    zero = ctx.zero()
    keys = set(poly_vec) | set(rf_vec)
    for lab in keys:
        lhs = poly_vec.get(lab, zero)
        rhs = rf_vec.get(lab)
        if rhs is None:
            if not lhs.is_zero():
                return False, lab
        elif isinstance(rhs, Polynomial):
            if rhs != lhs:
                return False, lab
        elif not rhs.equals(lhs):
            return False, lab
    return True, None


def _materialize(psi, apply_at, steps1, rho_op, steps2, ctx):
    """Build the composite operator column by column on the basis."""
    one = ctx.one()
    entries = {}
    for src in psi.basis:
        vec = {src: RationalFunction.from_poly(one)}
        for (j, hcoef, a, b) in steps1:
            form, sign = LinearForm.make(hcoef, a, b)
            vec = apply_at[j](vec, form, sign)
        vec = rho_op.apply(vec)
        for (j, hcoef, a, b) in steps2:
            form, sign = LinearForm.make(hcoef, a, b)
            vec = apply_at[j](vec, form, sign)
        for tgt, rf in vec.items():
            if not rf.is_zero():
                entries[(tgt, src)] = rf
    return _rm.ROperator(ctx, psi.basis, psi.basis, entries)


def _substitute_operator(rop, zmapping, ctx):
    entries = {}
    for key, rf in rop.entries.items():
        entries[key] = rf.substitute_z(zmapping)
    return _rm.ROperator(ctx, rop.source, rop.target, entries)
