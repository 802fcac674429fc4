import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracle import dense_shift, index_map, level_of, valid_cols
from sadic_shifts.adic import CylinderFunction, residue_indicator
from sadic_shifts.coeff import (
    ConvergentSequence,
    XVFunction,
    fourier_coefficient,
    fourier_reconstruct,
    seq_endo,
    shift_sequence,
    toeplitz_U,
    toeplitz_V,
    toeplitz_W,
)
from sadic_shifts.hilbert import TruncatedSpace, compare, degree_component, diag, spectral_norm, tail_norm
from sadic_shifts.shifts import make_shift, serre_projection


def cyl(s, depth, seed):
    rng = np.random.default_rng(seed)
    size = s**depth
    return CylinderFunction(s, depth, rng.normal(size=size) + 1j * rng.normal(size=size))


@st.composite
def sequences(draw, s=2, max_K=3, max_depth=2):
    K = draw(st.integers(0, max_K))
    seeds = draw(st.lists(st.integers(0, 10**6), min_size=K + 1, max_size=K + 1))
    depths = draw(st.lists(st.integers(0, max_depth), min_size=K + 1, max_size=K + 1))
    terms = [cyl(s, d, sd) for d, sd in zip(depths, seeds)]
    return ConvergentSequence(terms[:-1], terms[-1])


@st.composite
def xv_functions(draw, s=2, max_K=3, max_depth=2):
    f = cyl(s, draw(st.integers(0, max_depth)), draw(st.integers(0, 10**6)))
    K = draw(st.integers(0, max_K))
    xs = draw(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=K, max_size=K))
    return XVFunction(f, xs)


def bd_slot(s, n, y):
    """Index k with E_(n,y) in the range of P_k, or None."""
    for k in range(n + 1):
        m, x = n - k, y - k
        if x == 0 or (m >= 1 and s ** (m - 1) < x < s**m):
            return k
    return None


def dense_toeplitz_U(s, N, F):
    out = np.zeros(len(index_map(s, N)), dtype=complex)
    for (n, y), i in index_map(s, N).items():
        k = bd_slot(s, n, y)
        out[i] = F.term(k)(y) if k is not None and k < F.K else F.tail(y)
    return np.diag(out)


def dense_toeplitz_V(s, N, F):
    idx = index_map(s, N)
    out = np.diag([F.f(y) for (_, y) in idx])
    for n in range(F.K):
        out[idx[(n, 0)], idx[(n, 0)]] = F.x(n)
    return out


def dense_serre_P(s, N, n):
    W = dense_shift("W", s, N)
    Wn = np.linalg.matrix_power(W, n)
    return Wn @ (np.eye(len(W)) - W @ W.conj().T) @ Wn.conj().T


def dense_toeplitz_W(s, N, G):
    idx = index_map(s, N)
    tail = np.diag([G.tail(y) for (_, y) in idx])
    out = tail.copy()
    for n in range(G.K):
        P = dense_serre_P(s, N, n)
        out += P @ (np.diag([G.term(n)(y) for (_, y) in idx]) - tail) @ P
    return out


# data types


def test_sequence_semantics():
    a, t = residue_indicator(2, 0), CylinderFunction.constant(2, 1.0)
    F = ConvergentSequence([a], t)
    assert F.K == 1 and F.term(0) == a and F.term(7) == t
    assert F.depth == 1 and F.sup_norm() == 1


def test_sequence_base_mismatch():
    with pytest.raises(ValueError):
        ConvergentSequence([residue_indicator(3, 0)], CylinderFunction.constant(2, 1.0))


def test_xv_tail_is_f_at_zero():
    F = XVFunction(CylinderFunction(2, 1, [4, 2]), [1])
    assert F.x(0) == 1 and F.x(5) == 4


# Toeplitz maps


def test_toeplitz_U_examples():
    space = TruncatedSpace(2, 4)
    F = ConvergentSequence([residue_indicator(2, 0)], CylinderFunction.constant(2, 1.0))
    T = toeplitz_U(space, F)
    assert T.apply(2, 3) == {}
    assert T.apply(1, 1) == pytest.approx({(1, 1): 1})


def test_toeplitz_constant_is_diag():
    space = TruncatedSpace(3, 3)
    f = cyl(3, 1, 4)
    d = diag(space, f)
    assert compare(toeplitz_U(space, ConvergentSequence([f, f], f)), d)[0] < 1e-15
    assert compare(toeplitz_W(space, ConvergentSequence([f, f], f)), d)[0] < 1e-15
    assert compare(toeplitz_V(space, XVFunction(f)), d)[0] == 0


def test_toeplitz_V_examples():
    space = TruncatedSpace(2, 3)
    T = toeplitz_V(space, XVFunction(residue_indicator(2, 0), [5]))
    assert T.apply(0, 0) == pytest.approx({(0, 0): 5})
    assert T.apply(1, 1) == {}


def test_toeplitz_W_examples():
    space = TruncatedSpace(2, 4)
    zero, one = CylinderFunction.constant(2, 0.0), CylinderFunction.constant(2, 1.0)
    for n in range(3):
        G = ConvergentSequence([zero] * n + [one], zero)
        assert compare(toeplitz_W(space, G), serre_projection(space, n))[0] < 1e-15
    T = toeplitz_W(space, ConvergentSequence([one], zero))
    assert T.entry((1, 1), (1, 1)) == pytest.approx(0.5)


def test_prefix_too_long():
    space = TruncatedSpace(2, 2)
    t = CylinderFunction.constant(2, 1.0)
    with pytest.raises(ValueError):
        toeplitz_U(space, ConvergentSequence([t] * 3, t))
    with pytest.raises(ValueError):
        toeplitz_V(space, XVFunction(t, [1, 2, 3]))


@given(sequences(), st.sampled_from([(2, 4), (2, 5)]))
def test_toeplitz_U_matches_range_oracle(F, sN):
    s, N = sN
    T = toeplitz_U(TruncatedSpace(s, N), F)
    assert np.abs(T.toarray() - dense_toeplitz_U(s, N, F)).max() < 1e-12


@given(xv_functions())
def test_toeplitz_V_matches_oracle(F):
    T = toeplitz_V(TruncatedSpace(2, 4), F)
    assert np.abs(T.toarray() - dense_toeplitz_V(2, 4, F)).max() < 1e-12


@given(sequences())
def test_toeplitz_W_matches_oracle(G):
    T = toeplitz_W(TruncatedSpace(2, 4), G)
    assert np.abs(T.toarray() - dense_toeplitz_W(2, 4, G)).max() < 1e-12


@given(sequences(), sequences())
def test_toeplitz_U_multiplicative(F, G):
    space = TruncatedSpace(2, 5)
    assert compare(toeplitz_U(space, F) @ toeplitz_U(space, G), toeplitz_U(space, F * G))[0] < 1e-13
    assert compare(toeplitz_U(space, F).adjoint(), toeplitz_U(space, F.conj()))[0] < 1e-13


@given(xv_functions(), xv_functions())
def test_toeplitz_V_multiplicative(F, G):
    space = TruncatedSpace(2, 5)
    assert compare(toeplitz_V(space, F) @ toeplitz_V(space, G), toeplitz_V(space, F * G))[0] < 1e-13
    assert compare(toeplitz_V(space, F).adjoint(), toeplitz_V(space, F.conj()))[0] < 1e-13


@given(sequences(), sequences())
def test_toeplitz_W_multiplicative_above_cutoff(G, H):
    space = TruncatedSpace(2, 6)
    diff = toeplitz_W(space, G) @ toeplitz_W(space, H) - toeplitz_W(space, G * H)
    cutoff = max(G.K, H.K) + max(G.depth, H.depth) + 1
    assert degree_component(diff, 0).nnz == diff.nnz
    if cutoff <= space.N:
        assert tail_norm(diff, cutoff) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_toeplitz_U_norm_identity(seed):
    space = TruncatedSpace(2, 6)
    F = ConvergentSequence([cyl(2, 2, seed * 10 + k) for k in range(3)], cyl(2, 2, seed * 10 + 9))
    assert spectral_norm(toeplitz_U(space, F)) == pytest.approx(F.sup_norm(), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_toeplitz_V_norm_identity(seed):
    space = TruncatedSpace(2, 6)
    rng = np.random.default_rng(seed)
    F = XVFunction(cyl(2, 2, seed), 3 * rng.normal(size=3))
    assert spectral_norm(toeplitz_V(space, F)) == pytest.approx(F.sup_norm(), abs=1e-9)


# tilde maps


def test_alpha_U_of_one():
    one = CylinderFunction.constant(2, 1.0)
    A = seq_endo("U", "alpha", ConvergentSequence.constant(one))
    assert A.K == 1 and A.term(0) == CylinderFunction.constant(2, 0.0) and A.tail == one


def test_alpha_V_slot_zero():
    A = seq_endo("V", "alpha", XVFunction(residue_indicator(2, 1), [7]))
    assert A.x(0) == 0 and A.x(1) == 7


@given(sequences())
def test_beta_after_alpha_U(F):
    assert seq_endo("U", "beta", seq_endo("U", "alpha", F)).equals(F)


@given(xv_functions())
def test_beta_after_alpha_V(F):
    assert seq_endo("V", "beta", seq_endo("V", "alpha", F)).equals(F)


def test_seq_endo_bad_args():
    with pytest.raises(ValueError):
        seq_endo("W", "alpha", ConvergentSequence.constant(CylinderFunction.constant(2, 1.0)))


@given(sequences(max_K=2))
def test_U_intertwining(F):
    space = TruncatedSpace(2, 5)
    U = make_shift(space, "U")
    T = toeplitz_U(space, F)
    # conjugation by U realises the alpha tilde map, and U* ... U the beta one
    assert compare(U @ T @ U.adjoint(), toeplitz_U(space, seq_endo("U", "alpha", F)))[0] < 1e-12
    assert compare(U.adjoint() @ T @ U, toeplitz_U(space, seq_endo("U", "beta", F)))[0] < 1e-12


@given(xv_functions(max_K=2))
def test_V_intertwining(F):
    space = TruncatedSpace(2, 5)
    V = make_shift(space, "V")
    T = toeplitz_V(space, F)
    assert compare(V @ T @ V.adjoint(), toeplitz_V(space, seq_endo("V", "alpha", F)))[0] < 1e-12
    assert compare(V.adjoint() @ T @ V, toeplitz_V(space, seq_endo("V", "beta", F)))[0] < 1e-12


@given(sequences(max_K=2, max_depth=1))
def test_serre_conjugation_finite_support(G):
    space = TruncatedSpace(2, 6)
    W = make_shift(space, "W")
    diff = W @ toeplitz_W(space, G) @ W.adjoint() - toeplitz_W(space, shift_sequence(G))
    cutoff = G.K + G.depth + 2
    lv = level_of(2, 6)
    cols = valid_cols(2, 6, diff.raise_)
    big = np.abs(diff.toarray()[:, cols]).max(axis=0) > 1e-12
    assert np.all(lv[cols][big] < cutoff)


# Fourier coefficients


def test_fourier_of_diagonal():
    space = TruncatedSpace(2, 4)
    d = diag(space, cyl(2, 2, 1))
    assert compare(fourier_coefficient(d, 0, "U"), d)[0] == 0
    for k in (-2, -1, 1, 2):
        assert fourier_coefficient(d, k, "U").nnz == 0


@pytest.mark.parametrize("kind", ["U", "V", "S", "W"])
def test_fourier_degree_two(kind):
    space = TruncatedSpace(2, 5)
    J = make_shift(space, kind)
    a = diag(space, residue_indicator(2, 0)) @ J @ J
    a2 = fourier_coefficient(a, 2, kind)
    assert compare(a2 @ J @ J, a)[0] < 1e-12
    assert compare(a2 @ J @ J @ J.adjoint() @ J.adjoint(), a2)[0] < 1e-12


def test_fourier_U_plus_U_star():
    space = TruncatedSpace(2, 5)
    U = make_shift(space, "U")
    a = U + U.adjoint()
    a1, am1 = fourier_coefficient(a, 1, "U"), fourier_coefficient(a, -1, "U")
    assert compare(a1 @ U, degree_component(a, 1))[0] < 1e-12
    assert compare(U.adjoint() @ am1, degree_component(a, -1))[0] < 1e-12
    rebuilt = fourier_reconstruct({-1: am1, 0: fourier_coefficient(a, 0, "U"), 1: a1}, "U")
    assert compare(rebuilt, a)[0] < 1e-12
