import random
from fractions import Fraction
from itertools import product

import pytest

from qkzpsi.combinatorics import (
    CombinatoricsError,
    MVyLabel,
    Tableau,
    enumerate_tableaux,
    epsilon_sign,
    jordan_type,
    multiplicity_check,
    partition_dominance_leq,
    phi_map,
    promotion,
    rho_matrix,
    sequence_rotation,
    spaltenstein_label,
    tensor_multiplicity,
    weights_from_quiver,
)


def test_weights_example_mixed():
    qd = weights_from_quiver(4, (2, 1, 3), (1, 0, 1))
    assert qd.mu == (6, 4, 3, 0)
    assert qd.lam == (5, 5, 2, 1)
    assert qd.N == 6 and qd.M == 13
    assert tuple(sorted(qd.m, reverse=True)) == (3, 3, 3, 2, 1, 1)
    assert qd.ell == (4, 3, 2, 2, 2, 0)


def test_weights_worked_example():
    qd = weights_from_quiver(4, (0, 4, 0), (2, 4, 2))
    assert qd.mu == (4, 4, 0, 0)
    assert qd.lam == (2, 2, 2, 2)
    assert qd.m == (2, 2, 2, 2)
    # ell is zero-padded to length N and must sum to M
    assert qd.ell == (4, 4, 0, 0)
    assert sum(qd.ell) == qd.M == 8


def test_weights_highest_weight_case():
    qd = weights_from_quiver(2, (3,), (0,))
    assert qd.lam == qd.mu == (3, 0)
    assert len(enumerate_tableaux(qd.lam, qd.m)) == 1


def test_weights_reject_nondominant():
    with pytest.raises(CombinatoricsError, match="dominant"):
        weights_from_quiver(2, (2,), (2,))


def _ballot_count(n_pairs):
    """Brute-force oracle: lattice words in {1,2}^(2 n_pairs) with balanced content."""
    count = 0
    for word in product((1, 2), repeat=2 * n_pairs):
        if word.count(1) != n_pairs:
            continue
        ones = twos = 0
        good = True
        for x in word:
            if x == 1:
                ones += 1
            else:
                twos += 1
            if twos > ones:
                good = False
                break
        if good:
            count += 1
    return count


def test_enumerate_tableaux_catalan():
    tabs = enumerate_tableaux((2, 2), (1, 1, 1, 1))
    assert len(tabs) == _ballot_count(2) == 2


def test_enumerate_tableaux_single_column():
    tabs = enumerate_tableaux((1, 1, 1), (3,))
    assert len(tabs) == 1
    assert tabs[0].rows == ((1,), (1,), (1,))


def test_enumerate_tableaux_worked_example():
    tabs = enumerate_tableaux((2, 2, 2, 2), (2, 2, 2, 2))
    assert len(tabs) == 3
    rows = {t.rows for t in tabs}
    assert ((1, 2), (1, 2), (3, 4), (3, 4)) in rows
    assert ((1, 2), (1, 3), (2, 4), (3, 4)) in rows
    assert ((1, 3), (1, 3), (2, 4), (2, 4)) in rows


def test_phi_map_examples():
    t = Tableau(((1, 2), (1, 2), (3, 4), (3, 4)))
    assert phi_map(t) == ((1, 2), (1, 2), (3, 4), (3, 4))
    t2 = Tableau(((1, 2), (1, 3), (2, 4), (3, 4)))
    assert phi_map(t2) == ((1, 2), (1, 3), (2, 4), (3, 4))
    col = Tableau(((1,), (1,), (1,)))
    assert phi_map(col) == ((1, 2, 3),)


def test_phi_subset_sizes():
    for lam, m in (((2, 2), (1, 1, 1, 1)), ((2, 2, 2, 2), (2, 2, 2, 2))):
        for t in enumerate_tableaux(lam, m):
            alpha = phi_map(t)
            assert tuple(len(s) for s in alpha) == tuple(m)
            lam_rows = [0] * (max(max(s) for s in alpha))
            for s in alpha:
                for a in s:
                    lam_rows[a - 1] += 1
            assert tuple(x for x in lam_rows if x) == tuple(x for x in lam if x)


def test_multiplicity_worked_example():
    qd = weights_from_quiver(4, (0, 4, 0), (2, 4, 2))
    assert multiplicity_check(qd) == 3


def test_multiplicity_highest_weight():
    qd = weights_from_quiver(3, (1, 1), (0, 0))
    assert multiplicity_check(qd) == 1


def test_multiplicity_matches_ballot_oracle():
    assert tensor_multiplicity((2, 2), (1, 1, 1, 1), 2) == _ballot_count(2)
    assert tensor_multiplicity((3, 3), (1,) * 6, 2) == _ballot_count(3)


def test_count_invariant_under_m_reordering():
    a = len(enumerate_tableaux((2, 2, 1), (2, 1, 1, 1)))
    b = len(enumerate_tableaux((2, 2, 1), (1, 1, 2, 1)))
    c = len(enumerate_tableaux((2, 2, 1), (1, 1, 1, 2)))
    assert a == b == c > 0


def test_promotion_worked_example():
    t1 = Tableau(((1, 2), (1, 2), (3, 4), (3, 4)))
    t2 = Tableau(((1, 2), (1, 3), (2, 4), (3, 4)))
    t3 = Tableau(((1, 3), (1, 3), (2, 4), (2, 4)))
    m = (2, 2, 2, 2)
    assert promotion(t1, m) == t3
    assert promotion(t2, m) == t2
    assert promotion(t3, m) == t1


def test_promotion_order_four():
    m = (2, 2, 2, 2)
    for t in enumerate_tableaux((2, 2, 2, 2), m):
        cur = t
        for _ in range(4):
            cur = promotion(cur, m)
        assert cur == t


def test_promotion_rejects_nonrectangular():
    t = Tableau(((1, 2), (1,)))
    with pytest.raises(CombinatoricsError):
        promotion(t, (2, 1, 1))


def test_promotion_content_rotates():
    # content (1,2,1) rotates to (2,1,1)
    t = Tableau(((1, 2), (2, 3)))
    out = promotion(t, (1, 2, 1))
    assert out.content() == (2, 1, 1)


def test_epsilon_and_rho_matrix():
    assert epsilon_sign(8, 4) == -1
    assert epsilon_sign(4, 2) == -1
    assert epsilon_sign(2, 2) == 1
    tabs = enumerate_tableaux((2, 2, 2, 2), (2, 2, 2, 2))
    rho = rho_matrix(tabs, (2, 2, 2, 2), 8, 4)
    assert rho.sign == 1  # eps^2
    mat = rho.matrix()
    assert mat == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    assert rho.compose(rho).is_identity()


def test_sequence_rotation_shape():
    basis = [((1,), (2,)), ((2,), (1,))]
    rho = sequence_rotation(basis, (1, 1), 2, 2)
    assert rho.sign == -1
    assert rho.mapping[((1,), (2,))] == ((2,), (1,))


def test_jordan_type_basics():
    zero2 = [[Fraction(0)] * 2 for _ in range(2)]
    assert jordan_type(zero2) == (1, 1)
    nilp = [[0, 1], [0, 0]]
    assert jordan_type([[Fraction(x) for x in r] for r in nilp]) == (2,)
    with pytest.raises(CombinatoricsError):
        jordan_type([[Fraction(1)]])


def test_spaltenstein_zero_matrix():
    # the zero matrix is the (single) point of the zero-orbit slice, whose
    # shape is the conjugate of the Jordan type (1,1): one row with 1, 2
    X = [[Fraction(0)] * 2 for _ in range(2)]
    label = spaltenstein_label(X, (1, 1))
    assert label.chain == ((1,), (1, 1))
    assert label.as_tableau().rows == ((1, 2),)


def test_spaltenstein_base_point():
    # the base nilpotent itself: chain of Jordan types of its truncations
    m = (2, 2)
    X = [[Fraction(0)] * 4 for _ in range(4)]
    X[0][1] = Fraction(1)
    X[2][3] = Fraction(1)
    label = spaltenstein_label(X, m)
    assert label.chain == ((2,), (2, 2))


def test_dominance_order():
    assert partition_dominance_leq((2, 2), (3, 1))
    assert not partition_dominance_leq((3, 1), (2, 2))
    assert partition_dominance_leq((2, 1), (2, 1))
    a = MVyLabel(((1,), (1, 1)))
    b = MVyLabel(((1,), (2,)))
    assert a.dominance_leq(b)
    assert not b.dominance_leq(a)
