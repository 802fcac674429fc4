import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracle import index_map, numerical_rank, valid_cols
from sadic_shifts.adic import Vertex
from sadic_shifts.cuntz import (
    LineOperator,
    LineSpace,
    WindowError,
    WordMap,
    all_words,
    closed_form_correction,
    correction_count,
    iota,
    line_generator,
    line_generator_adjoint,
    line_word,
    line_word_adjoint,
    multiplicativity_defect,
    phi,
    phi_inv,
    toeplitz_S,
    ts_correction,
    word_operator,
)
from sadic_shifts.hilbert import TruncatedSpace, compare, identity
from sadic_shifts.shifts import cuntz_word


def brute_ts_word(s, N, n, x, m, y):
    """Dense iota* u_(n,x) u*_(m,y) iota from a direct scan over the tree."""
    idx = index_map(s, N)
    where = {s**k + z: (k, z) for (k, z) in idx}
    out = np.zeros((len(idx), len(idx)))
    for (k, z), c in idx.items():
        l = s**k + z
        if (l - y) % s**m:
            continue
        t = s**n * ((l - y) // s**m) + x
        if t in where:
            out[idx[where[t]], c] = 1
    return out


# phi


def test_phi_examples():
    assert phi(2, 3, 2) == 7
    assert phi_inv(5, 3) == Vertex(1, 2)
    assert phi_inv(2, 3) is None
    assert phi_inv(0, 2) is None and phi_inv(-4, 2) is None


@given(st.sampled_from([2, 3, 5]), st.integers(0, 6), st.data())
def test_phi_roundtrip(s, n, data):
    x = data.draw(st.integers(0, s**n - 1))
    assert phi_inv(phi(n, x, s), s) == Vertex(n, x)


@given(st.sampled_from([2, 3, 5]), st.integers(-50, 3000))
def test_phi_inv_is_partial_inverse(s, l):
    v = phi_inv(l, s)
    in_range = any(s**n <= l < 2 * s**n for n in range(12))
    assert (v is not None) == in_range
    if v is not None:
        assert phi(v.n, v.x, s) == l


# line operators


def test_line_generator_examples():
    line = LineSpace(2, -8, 16)
    assert line_generator(line, 1).apply(1) == {3: 1}
    assert line_generator_adjoint(line, 1).apply(2) == {}
    assert line_word(line, 2, 2).apply(0) == {2: 1}


@pytest.mark.parametrize("s", [2, 3])
def test_line_cuntz_relations(s):
    line = LineSpace(s, -(s**3), 2 * s**3)
    gens = [line_generator(line, j) for j in range(s)]
    adj = [line_generator_adjoint(line, j) for j in range(s)]
    for j in range(s):
        for k in range(s):
            prod = adj[j] @ gens[k]
            cols = prod.interior()
            want = np.eye(line.dim)[:, cols] * (j == k)
            assert np.abs(prod.matrix.toarray()[:, cols] - want).max() == 0
    total = gens[0] @ adj[0]
    for j in range(1, s):
        total = total + gens[j] @ adj[j]
    cols = total.interior()
    assert cols.size > 0
    assert np.abs(total.matrix.toarray()[:, cols] - np.eye(line.dim)[:, cols]).max() == 0


def test_line_adjoint_is_transpose():
    line = LineSpace(3, -9, 18)
    a = line_generator(line, 2)
    assert np.array_equal(line_generator_adjoint(line, 2).matrix.toarray(), a.matrix.toarray().T)


def test_lost_columns_raise():
    line = LineSpace(2, -4, 8)
    u = line_generator(line, 0)
    with pytest.raises(WindowError):
        u.apply(6)
    with pytest.raises(WindowError):
        line.index(100)


def test_line_space_validation():
    with pytest.raises(ValueError):
        LineSpace(2, 1, 5)
    with pytest.raises(ValueError):
        line_generator(LineSpace(2, -2, 2), 2)
    with pytest.raises(ValueError):
        line_word(LineSpace(2, -2, 2), 1, 2)


# iota and T_S


@pytest.mark.parametrize("s,N", [(2, 4), (3, 3)])
def test_iota_is_isometry(s, N):
    space = TruncatedSpace(s, N)
    i = iota(space, LineSpace.for_tree(space))
    assert np.array_equal((i.conj().T @ i).toarray(), np.eye(space.dim))


def test_iota_window_too_small():
    space = TruncatedSpace(2, 4)
    with pytest.raises(WindowError):
        iota(space, LineSpace(2, -1, 10))


def test_toeplitz_S_examples():
    space = TruncatedSpace(2, 4)
    line = LineSpace.for_tree(space)
    assert compare(toeplitz_S(space, LineOperator.identity(line)), identity(space))[0] == 0
    T = toeplitz_S(space, line_generator(line, 1), raise_=1, dmin=1, dmax=1)
    assert T.apply(0, 0) == {(1, 1): 1}


def test_toeplitz_S_adjoint_preserving():
    space = TruncatedSpace(2, 4)
    line = LineSpace.for_tree(space, extra_levels=1)
    a = line_word(line, 2, 1) @ line_word_adjoint(line, 1, 0)
    lhs = toeplitz_S(space, a).adjoint()
    rhs = toeplitz_S(space, a.adjoint())
    assert np.array_equal(lhs.toarray(), rhs.toarray())


@pytest.mark.parametrize("s,N", [(2, 4), (3, 3)])
def test_toeplitz_S_of_words_matches_brute_force(s, N):
    space = TruncatedSpace(s, N)
    line = LineSpace.for_tree(space, extra_levels=2)
    for n in range(3):
        for m in range(3):
            for x in range(s**n):
                for y in range(s**m):
                    word = line_word(line, n, x) @ line_word_adjoint(line, m, y)
                    T = toeplitz_S(space, word)
                    assert np.array_equal(T.toarray(), brute_ts_word(s, N, n, x, m, y))
                    W = word_operator(space, WordMap(s, n, x, m, y))
                    assert np.array_equal(W.toarray(), brute_ts_word(s, N, n, x, m, y))


# corrections


def test_correction_examples():
    space = TruncatedSpace(2, 4)
    C = ts_correction(space, 1, 1, 1, 1)
    cols = C.valid_columns()
    dense = C.toarray()[:, cols]
    want = np.zeros_like(dense)
    want[space.index(0, 0), list(cols).index(space.index(0, 0))] = 1
    assert np.abs(dense - want).max() < 1e-14
    assert C.toarray()[:, cols].nonzero()[0].size == 1
    zero = ts_correction(space, 1, 0, 1, 0)
    assert np.abs(zero.toarray()[:, zero.valid_columns()]).max() == 0


def test_equal_indices_outside_phi_range():
    space = TruncatedSpace(3, 3)
    # 2 lies between 1 and 3 so it is not a value of phi for s=3
    assert phi_inv(2, 3) is None
    C = ts_correction(space, 1, 2, 1, 2)
    assert np.abs(C.toarray()[:, C.valid_columns()]).max() < 1e-14
    assert closed_form_correction(space, 1, 2, 1, 2).nnz == 0


@pytest.mark.parametrize("s,N,L", [(2, 5, 3), (3, 4, 2)])
def test_closed_form_agrees_with_direct(s, N, L):
    space = TruncatedSpace(s, N)
    line = LineSpace.for_tree(space, extra_levels=L)
    for n in range(L + 1):
        for m in range(L + 1):
            for x in range(s**n):
                for y in range(s**m):
                    direct = ts_correction(space, n, x, m, y, line)
                    closed = closed_form_correction(space, n, x, m, y)
                    res, count = compare(direct, closed)
                    assert count > 0 and res < 1e-13
                    cols = valid_cols(s, N, direct.raise_)
                    assert numerical_rank(direct.toarray()[:, cols]) <= 1


def test_j_l_zero_case_is_nonzero():
    # x = y = 1 = s^0 + 0; a reading with j, l >= 1 would predict no correction here
    space = TruncatedSpace(2, 4)
    assert closed_form_correction(space, 1, 1, 1, 1).nnz == 1


# word maps


@given(st.sampled_from([2, 3]), st.data())
def test_word_map_product_matches_composition(s, data):
    words = all_words(s, 2)
    a = data.draw(st.sampled_from(words))
    b = data.draw(st.sampled_from(words))
    ab = a @ b
    for l in range(-30, 60):
        mid = b(l)
        want = None if mid is None else a(mid)
        assert ab(l) == want


def test_word_map_zero():
    z = WordMap(2, None)
    assert z.is_zero and z(5) is None
    a = WordMap(2, 0, 0, 1, 0)  # u_0*
    b = WordMap(2, 1, 1, 0, 0)  # u_1
    assert (a @ b).is_zero


def test_multiplicativity_rank_bound_s2():
    space = TruncatedSpace(2, 7)
    words = all_words(2, 2)
    for a in words:
        for b in words:
            rank, count = multiplicativity_defect(space, a, b)
            assert count > 0
            assert rank <= correction_count(space, a, b, a @ b)


def test_correction_count():
    space = TruncatedSpace(2, 4)
    assert correction_count(space, WordMap(2, 1, 1, 1, 1)) == 1
    assert correction_count(space, WordMap(2, 1, 0, 1, 0)) == 0
    assert correction_count(space, WordMap(2, None)) == 0


def test_word_operator_agrees_with_tree_words():
    # S_(n,x) S*_(m,y) and T_S of the same word differ by the correction only
    space = TruncatedSpace(2, 5)
    w = WordMap(2, 2, 2, 1, 0)
    diff = word_operator(space, w) - cuntz_word(space, 2, 2) @ cuntz_word(space, 1, 0).adjoint()
    assert compare(diff, closed_form_correction(space, 2, 2, 1, 0))[0] < 1e-14
