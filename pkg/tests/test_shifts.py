import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracle import dense_shift, index_map, valid_cols
from sadic_shifts.adic import CylinderFunction, endo_map, residue_indicator
from sadic_shifts.hilbert import TruncatedSpace, compare, diag, identity
from sadic_shifts.shifts import (
    KINDS,
    bd_projection,
    cuntz_generator,
    cuntz_word,
    elementary_unit,
    hensel_projection,
    make_shift,
    make_shift_adjoint,
    matrix_unit,
    p00,
    projection,
    range_indicator_bd,
    serre_projection,
)

SN = [(2, 5), (3, 4), (5, 3)]


def vec(space, n, x):
    return space.basis_vector(n, x)


def image(op, n, x):
    return op.apply(n, x)


# shifts and adjoints


def test_U_examples():
    space = TruncatedSpace(2, 3)
    assert image(make_shift(space, "U"), 1, 1) == {(2, 2): 1}
    assert image(make_shift_adjoint(space, "U"), 2, 3) == {}


def test_S_examples():
    # isometric normalisation: coefficients are 1/sqrt(2), not 1/2
    space = TruncatedSpace(2, 3)
    r = 1 / math.sqrt(2)
    assert image(make_shift(space, "S"), 1, 1) == pytest.approx({(2, 2): r, (2, 3): r})
    assert image(make_shift_adjoint(space, "S"), 2, 3) == pytest.approx({(1, 1): r})


def test_one_over_s_bernoulli_is_not_isometric():
    s, N = 2, 3
    half = dense_shift("S", s, N, bernoulli_scale=1 / s)
    gram = half.conj().T @ half
    cols = valid_cols(s, N, 1)
    assert np.allclose(gram[np.ix_(cols, cols)], np.eye(len(cols)) / s)


def test_W_examples():
    space = TruncatedSpace(2, 3)
    r = 1 / math.sqrt(2)
    assert image(make_shift(space, "W"), 1, 1) == pytest.approx({(2, 1): r, (2, 3): r})
    assert image(make_shift_adjoint(space, "W"), 2, 3) == pytest.approx({(1, 1): r})


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("s,N", SN)
def test_shift_matches_dense_oracle(kind, s, N):
    J = make_shift(TruncatedSpace(s, N), kind)
    assert np.abs(J.toarray() - dense_shift(kind, s, N)).max() < 1e-15


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("s,N", SN)
def test_closed_adjoint_matches_transpose(kind, s, N):
    space = TruncatedSpace(s, N)
    closed = make_shift_adjoint(space, kind).toarray()
    transposed = dense_shift(kind, s, N).conj().T
    # rows of level N receive nothing from the truncated shift; the closed form keeps them
    top = [i for (n, _), i in index_map(s, N).items() if n == N]
    transposed[top, :] = closed[top, :]
    assert np.abs(closed - transposed).max() < 1e-14


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("s,N", SN)
def test_isometry(kind, s, N):
    space = TruncatedSpace(s, N)
    J = make_shift(space, kind)
    res, count = compare(make_shift_adjoint(space, kind) @ J, identity(space))
    assert res < 1e-12 and count == space.dim - s**N


def test_U_adjoint_kernel():
    space = TruncatedSpace(3, 3)
    Us = make_shift_adjoint(space, "U")
    assert image(Us, 0, 0) == {}
    assert image(Us, 2, 0) == {}
    assert all(image(Us, 2, x) == {} for x in range(4, 9))
    assert image(Us, 2, 3) == {(1, 2): 1}


def test_V_adjoint_kernel():
    space = TruncatedSpace(3, 3)
    Vs = make_shift_adjoint(space, "V")
    assert image(Vs, 2, 4) == {}
    assert image(Vs, 2, 6) == {(1, 2): 1}


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_shift(TruncatedSpace(2, 2), "X")


# Cuntz generators and words


def test_generator_examples():
    space = TruncatedSpace(2, 4)
    assert image(cuntz_generator(space, 1), 1, 1) == pytest.approx({(2, 3): 1})
    assert image(cuntz_word(space, 2, 2), 0, 0) == pytest.approx({(2, 2): 1})


@given(st.sampled_from([2, 3]), st.data())
def test_word_action(s, data):
    N = 4
    space = TruncatedSpace(s, N)
    n = data.draw(st.integers(0, 2))
    x = data.draw(st.integers(0, s**n - 1))
    k = data.draw(st.integers(0, N - n))
    z = data.draw(st.integers(0, s**k - 1))
    word = cuntz_word(space, n, x)
    assert word.raise_ == n
    assert image(word, k, z) == pytest.approx({(k + n, s**n * z + x): 1})


def test_generator_range_checks():
    space = TruncatedSpace(2, 3)
    with pytest.raises(ValueError):
        cuntz_generator(space, 2)


@pytest.mark.parametrize("s,N", SN)
def test_cuntz_toeplitz_relations(s, N):
    space = TruncatedSpace(s, N)
    gens = [cuntz_generator(space, j) for j in range(s)]
    total = None
    for j, a in enumerate(gens):
        for k, b in enumerate(gens):
            want = identity(space) if j == k else identity(space) * 0
            assert compare(a.adjoint() @ b, want)[0] < 1e-12
        term = a @ a.adjoint()
        total = term if total is None else total + term
    assert compare(total, identity(space) - p00(space))[0] < 1e-12


@pytest.mark.parametrize("s,N", SN)
def test_residue_diagonal_splits(s, N):
    space = TruncatedSpace(s, N)
    for j in range(s):
        Sj = cuntz_generator(space, j)
        want = Sj @ Sj.adjoint() + (p00(space) if j == 0 else p00(space) * 0)
        assert compare(diag(space, residue_indicator(s, j)), want)[0] < 1e-12


# projections


def test_bd_projection_examples():
    space = TruncatedSpace(2, 3)
    P0 = projection(space, "bd_P", 0)
    assert image(P0, 2, 3) == {(2, 3): 1}
    assert image(P0, 1, 1) == {}


def test_serre_diagonal_example():
    space = TruncatedSpace(2, 4)
    P = projection(space, "serre_P", 0)
    for n in range(1, 5):
        for x in range(2**n):
            assert P.entry((n, x), (n, x)) == pytest.approx(0.5, abs=1e-15)


def test_serre_P0_at_root_is_one():
    # I - WW* fixes E_(0,0); recorded as an erratum in the suite
    assert serre_projection(TruncatedSpace(3, 3), 0).entry((0, 0), (0, 0)) == 1


def test_hensel_projection_is_rank_one():
    space = TruncatedSpace(2, 4)
    P = projection(space, "hensel_P", 2)
    assert compare(P, elementary_unit(space, 2, 0, 2, 0))[0] < 1e-15


def test_projection_errors():
    space = TruncatedSpace(2, 3)
    with pytest.raises(ValueError):
        projection(space, "bd_P", 4)
    with pytest.raises(ValueError):
        projection(space, "nope", 0)


@pytest.mark.parametrize("s,N", SN)
def test_bd_range_includes_x0(s, N):
    space = TruncatedSpace(s, N)
    for n in range(N + 1):
        diag_entries = bd_projection(space, n).toarray().diagonal().real
        assert np.array_equal(np.round(diag_entries), range_indicator_bd(space, n))


@pytest.mark.parametrize("family", ["bd_P", "hensel_P", "serre_P"])
@pytest.mark.parametrize("s,N", [(2, 5), (3, 4)])
def test_projections_self_adjoint_idempotent(family, s, N):
    space = TruncatedSpace(s, N)
    for n in range(N + 1):
        P = projection(space, family, n)
        assert compare(P.adjoint(), P)[0] < 1e-12
        assert compare(P @ P, P)[0] < 1e-12


@pytest.mark.parametrize("s,N", [(2, 5), (3, 4)])
def test_bd_projections_orthogonal_and_commute(s, N):
    space = TruncatedSpace(s, N)
    Ps = [bd_projection(space, n) for n in range(N + 1)]
    zero = identity(space) * 0
    for i, a in enumerate(Ps):
        for b in Ps[i + 1 :]:
            assert compare(a @ b, zero)[0] < 1e-12
    f = diag(space, CylinderFunction(s, 2, np.arange(s * s) + 1j))
    for P in Ps:
        assert compare(P @ f, f @ P)[0] < 1e-12


@pytest.mark.parametrize("kind,build", [("U", bd_projection), ("V", hensel_projection), ("W", serre_projection)])
def test_projection_ladders(kind, build):
    space = TruncatedSpace(2, 5)
    J = make_shift(space, kind)
    Js = make_shift_adjoint(space, kind)
    assert compare(Js @ build(space, 0) @ J, identity(space) * 0)[0] < 1e-12
    for n in range(1, 5):
        assert compare(Js @ build(space, n) @ J, build(space, n - 1))[0] < 1e-12
        assert compare(J @ build(space, n - 1) @ Js, build(space, n))[0] < 1e-12


def test_hensel_base_uses_a_V():
    space = TruncatedSpace(3, 3)
    V = make_shift(space, "V")
    base = diag(space, endo_map("V", "a", CylinderFunction.constant(3, 1.0))) - V @ V.adjoint()
    assert compare(base, p00(space))[0] < 1e-15


# matrix units


def test_bernoulli_unit_example():
    space = TruncatedSpace(2, 4)
    P = matrix_unit(space, "bernoulli", 1, 1, 2, 2)
    assert compare(P, elementary_unit(space, 1, 1, 2, 2))[0] < 1e-15


def test_serre_unit_example():
    space = TruncatedSpace(2, 4)
    P = matrix_unit(space, "serre", 0, 0, 1, 1)
    assert image(P, 1, 1) == pytest.approx({(0, 0): 1})
    assert compare(P, elementary_unit(space, 0, 0, 1, 1))[0] < 1e-12


@pytest.mark.parametrize("family", ["bernoulli", "serre"])
@pytest.mark.parametrize("s", [2, 3])
def test_units_compose(family, s):
    space = TruncatedSpace(s, 4)
    a, b, c = (1, s - 1), (2, 1), (0, 0)
    lhs = matrix_unit(space, family, *a, *b) @ matrix_unit(space, family, *b, *c)
    assert compare(lhs, matrix_unit(space, family, *a, *c))[0] < 1e-12
    assert compare(lhs, elementary_unit(space, *a, *c))[0] < 1e-12


def test_unit_bad_index():
    with pytest.raises(ValueError):
        matrix_unit(TruncatedSpace(2, 3), "serre", 1, 2, 0, 0)
    with pytest.raises(ValueError):
        matrix_unit(TruncatedSpace(2, 3), "other", 0, 0, 0, 0)
