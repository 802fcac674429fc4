"""Every registered verification.

Each check builds its operators at the requested ``(s, N)``, compares the
two sides of an identity on the validity set implied by their level
profiles, and feeds the residual into the tally.  Random inputs come from a
per-check generator derived from the seed.
"""

from __future__ import annotations

import cmath
import itertools
import math
from functools import reduce

import numpy as np
import scipy.sparse as sp

from . import adic, coeff, cuntz, shifts
from .adic import CylinderFunction, TreeFunction, endo_map, tree_map_W
from .harness import CheckParams, InfeasibleParams, Tally, register
from .hilbert import (
    TruncatedOperator,
    TruncatedSpace,
    compare,
    degree_component,
    diag,
    expectation,
    gauge_rotate,
    identity,
    max_abs,
    quadrature_expectation,
    spectral_norm,
    tail_norm,
)
from .shifts import KINDS, make_shift, make_shift_adjoint

# random inputs ----------------------------------------------------------------


def rand_cyl(rng: np.random.Generator, s: int, depth: int) -> CylinderFunction:
    n = s**depth
    return CylinderFunction(s, depth, rng.standard_normal(n) + 1j * rng.standard_normal(n))


def rand_tree(rng: np.random.Generator, s: int, M: int, depth: int) -> TreeFunction:
    levels = [rng.standard_normal(s**n) + 1j * rng.standard_normal(s**n) for n in range(M + 1)]
    return TreeFunction(s, levels, rand_cyl(rng, s, min(depth, M)))


def rand_seq(rng: np.random.Generator, s: int, K: int, depth: int) -> coeff.ConvergentSequence:
    pick = lambda: rand_cyl(rng, s, int(rng.integers(0, depth + 1)))
    return coeff.ConvergentSequence([pick() for _ in range(K)], pick())


def rand_xv(rng: np.random.Generator, s: int, K: int, depth: int) -> coeff.XVFunction:
    f = rand_cyl(rng, s, int(rng.integers(0, depth + 1)))
    return coeff.XVFunction(f, rng.standard_normal(K) + 1j * rng.standard_normal(K))


def rand_word(rng: np.random.Generator, space: TruncatedSpace, kind: str, max_len: int = 4) -> TruncatedOperator:
    """Coefficient times a product of at most ``max_len`` factors from ``{J, J*, M_f}``."""
    J = make_shift(space, kind)
    Jt = make_shift_adjoint(space, kind)
    out = identity(space)
    for _ in range(int(rng.integers(1, max_len + 1))):
        pick = int(rng.integers(0, 3))
        if pick == 0:
            f = J
        elif pick == 1:
            f = Jt
        else:
            f = diag(space, rand_cyl(rng, space.s, int(rng.integers(0, 3))))
        out = out @ f
    c = complex(rng.standard_normal(), rng.standard_normal())
    return out * c


def rand_element(rng: np.random.Generator, space: TruncatedSpace, kind: str, terms: int = 2) -> TruncatedOperator:
    return reduce(lambda a, b: a + b, (rand_word(rng, space, kind) for _ in range(terms)))


def rand_sparse(rng: np.random.Generator, space: TruncatedSpace, density: float = 0.05) -> TruncatedOperator:
    n = space.dim
    m = sp.random(n, n, density=density, random_state=rng, format="coo")
    im = rng.standard_normal(m.nnz)
    return TruncatedOperator(space, sp.coo_matrix((m.data + 1j * im, (m.row, m.col)), shape=(n, n)))


def _samples(params: CheckParams, default: int) -> int:
    return params.samples if params.samples is not None else default


def _space(params: CheckParams) -> TruncatedSpace:
    return TruncatedSpace(params.s, params.N)


def _unit_levels(s: int, cap: int = 15) -> int:
    """Largest L with at most ``cap`` vertices on levels ``0..L``."""
    L = 0
    while (s ** (L + 2) - 1) // (s - 1) <= cap:
        L += 1
    return L


def _vertices(s: int, L: int) -> list[tuple[int, int]]:
    return [(n, x) for n in range(L + 1) for x in range(s**n)]


def _toeplitz_budget(N: int) -> tuple[int, int]:
    """Prefix length K and cylinder depth with ``N >= K + depth + 1``."""
    K = min(3, N - 2)
    depth = min(2, N - K - 1)
    if K < 1 or depth < 1:
        raise InfeasibleParams(f"Toeplitz checks need N >= 3, got {N}")
    return K, depth


def _pairs(lhs: TruncatedOperator, rhs: TruncatedOperator, t: Tally) -> None:
    t.pair(compare(lhs, rhs))


# shifts ------------------------------------------------------------------------


def _isometry(kind):
    def check(params: CheckParams, t: Tally) -> None:
        space = _space(params)
        J = make_shift(space, kind)
        _pairs(J.adjoint() @ J, identity(space), t)
        _pairs(make_shift_adjoint(space, kind) @ J, identity(space), t)

    check.__doc__ = f"{kind}* {kind} = I below the top level."
    return check


def _adjoint(kind):
    def check(params: CheckParams, t: Tally) -> None:
        space = _space(params)
        closed = make_shift_adjoint(space, kind)
        mech = make_shift(space, kind).adjoint()
        t.add(max_abs(closed - mech), space.dim)

    check.__doc__ = f"Closed-form {kind}* equals the conjugate transpose."
    return check


for _k in KINDS:
    register(f"isometry.{_k}", "shift-isometries")(_isometry(_k))
    register(f"adjoint.{_k}", "shift-adjoints", tolerance=1e-14)(_adjoint(_k))


@register("gauge.relations", "gauge-action")
def gauge_relations(params: CheckParams, t: Tally) -> None:
    """rho_theta fixes M_f and rotates every shift by exp(2 pi i theta)."""
    space = _space(params)
    rng = params.rng("gauge.relations")
    for theta in [0.5, 0.25, *rng.random(6)]:
        ph = cmath.exp(2j * math.pi * theta)
        f = diag(space, rand_cyl(rng, space.s, 2))
        t.add(max_abs(gauge_rotate(f, theta) - f), space.dim)
        for k in KINDS:
            J = make_shift(space, k)
            t.add(max_abs(gauge_rotate(J, theta) - J * ph), space.dim)
            t.add(max_abs(gauge_rotate(J.adjoint(), theta) - J.adjoint() * ph.conjugate()), space.dim)


@register("gauge.grading", "expectation")
def gauge_grading(params: CheckParams, t: Tally) -> None:
    """Quadrature average with Q = 2N+1 equals the degree-0 part; E is idempotent and contractive."""
    space = _space(params)
    rng = params.rng("gauge.grading")
    Q = 2 * space.N + 1
    for _ in range(_samples(params, 50)):
        a = rand_sparse(rng, space)
        E = expectation(a)
        t.add(max_abs(quadrature_expectation(a, Q) - E), space.dim)
        t.add(max_abs(expectation(E) - E), space.dim)
        total = reduce(lambda x, y: x + y, (degree_component(a, d) for d in range(-space.N, space.N + 1)))
        t.add(max_abs(total - a), space.dim)
        t.add(max(0.0, spectral_norm(E) - spectral_norm(a) - 1e-10), 1)
    for k in KINDS:
        J = make_shift(space, k)
        for d in range(-space.N, space.N + 1):
            if d != 1:
                t.add(max_abs(degree_component(J, d)), 1)


def _transfer(kind):
    def check(params: CheckParams, t: Tally) -> None:
        space = _space(params)
        rng = params.rng(f"transfer.{kind}")
        J = make_shift(space, kind)
        Jt = J.adjoint()
        alpha = lambda x: J @ x @ Jt
        beta = lambda x: Jt @ x @ J
        I = identity(space)
        _pairs(beta(I), I, t)
        for _ in range(_samples(params, 100)):
            a = rand_element(rng, space, kind)
            b = rand_element(rng, space, kind)
            _pairs(beta(alpha(a)), a, t)
            _pairs(beta(alpha(a) @ b), a @ beta(b), t)
            _pairs(alpha(beta(a)), alpha(I) @ a @ alpha(I), t)

    check.__doc__ = f"Transfer-operator identities for alpha/beta built from {kind}."
    return check


for _k in KINDS:
    register(f"transfer.{_k}", "transfer-operator", tolerance=1e-11)(_transfer(_k))


@register("odonovan", "odonovan")
def odonovan(params: CheckParams, t: Tally) -> None:
    """||E(x)|| <= ||x|| on random words and on Toeplitz images times shift powers."""
    space = _space(params)
    rng = params.rng("odonovan")
    n = _samples(params, 10)
    for kind in KINDS:
        for _ in range(n):
            a = rand_element(rng, space, kind)
            t.add(max(0.0, spectral_norm(expectation(a)) - spectral_norm(a)), 1)
    K, depth = _toeplitz_budget(space.N)
    U, V = make_shift(space, "U"), make_shift(space, "V")
    for d in range(3):
        TU = coeff.toeplitz_U(space, rand_seq(rng, space.s, K, depth)) @ U.power(d)
        TV = coeff.toeplitz_V(space, rand_xv(rng, space.s, K, depth)) @ V.power(d)
        for x in (TU, TV):
            t.add(max(0.0, spectral_norm(expectation(x)) - spectral_norm(x)), 1)


@register("fourier.recovery", "fourier-coefficients")
def fourier_recovery(params: CheckParams, t: Tally) -> None:
    """Coefficients of sum a_d J^d are recovered by E(a J*^d) and E(J^|d| a)."""
    space = _space(params)
    rng = params.rng("fourier.recovery")
    dmax = min(3, space.N - 2)
    for kind in KINDS:
        J = make_shift(space, kind)
        Jt = J.adjoint()
        for _ in range(_samples(params, 3)):
            coeffs = {}
            for d in range(-dmax, dmax + 1):
                m = diag(space, rand_cyl(rng, space.s, 2))
                r = J.power(abs(d)) @ Jt.power(abs(d))
                coeffs[d] = m @ r if d >= 0 else r @ m
            a = coeff.fourier_reconstruct(coeffs, kind)
            for d, want in coeffs.items():
                got = coeff.fourier_coefficient(a, d, kind)
                _pairs(got, want, t)
                norm_form = got @ J.power(d) @ Jt.power(d) if d >= 0 else J.power(-d) @ Jt.power(-d) @ got
                _pairs(norm_form, got, t)
            rebuilt = coeff.fourier_reconstruct(
                {d: coeff.fourier_coefficient(a, d, kind) for d in coeffs}, kind
            )
            _pairs(rebuilt, a, t)


# Bunce-Deddens -----------------------------------------------------------------


@register("bunce-deddens.lemma", "bd-lemma")
def bd_lemma(params: CheckParams, t: Tally) -> None:
    """M_f U = U M_{b f} and U M_f U* = M_{a f} U U*."""
    space = _space(params)
    U = make_shift(space, "U")
    for f in _rand_cyls(params, "bunce-deddens.lemma", 3):
        Mf = diag(space, f)
        _pairs(Mf @ U, U @ diag(space, endo_map("U", "b", f)), t)
        _pairs(U @ Mf @ U.adjoint(), diag(space, endo_map("U", "a", f)) @ U @ U.adjoint(), t)


def _rand_cyls(params: CheckParams, salt: str, max_depth: int):
    rng = params.rng(salt)
    return [rand_cyl(rng, params.s, int(rng.integers(0, max_depth + 1))) for _ in range(_samples(params, 50))]


@register("bunce-deddens.projections", "bd-projections")
def bd_projections(params: CheckParams, t: Tally) -> None:
    """P_n are self-adjoint, idempotent and mutually orthogonal."""
    space = _space(params)
    P = [shifts.bd_projection(space, n) for n in range(space.N + 1)]
    for n, p in enumerate(P):
        t.add(max_abs(p - p.adjoint()), space.dim)
        _pairs(p @ p, p, t)
        for m in range(n + 1, len(P)):
            _pairs(p @ P[m], TruncatedOperator.zero(space), t)


@register("bunce-deddens.commutation", "bd-projections")
def bd_commutation(params: CheckParams, t: Tally) -> None:
    """Each P_n commutes with every M_f."""
    space = _space(params)
    for f in _rand_cyls(params, "bunce-deddens.commutation", 3)[:10]:
        Mf = diag(space, f)
        for n in range(space.N + 1):
            p = shifts.bd_projection(space, n)
            _pairs(p @ Mf, Mf @ p, t)


@register("bunce-deddens.ladder", "bd-projections")
def bd_ladder(params: CheckParams, t: Tally) -> None:
    """U* P_n U = P_{n-1}, U* P_0 U = 0 and U P_n U* = P_{n+1}."""
    space = _space(params)
    _ladder(space, "U", lambda n: shifts.bd_projection(space, n), t)


def _ladder(space, kind, proj, t: Tally) -> None:
    J = make_shift(space, kind)
    Jt = J.adjoint()
    _pairs(Jt @ proj(0) @ J, TruncatedOperator.zero(space), t)
    for n in range(1, space.N + 1):
        _pairs(Jt @ proj(n) @ J, proj(n - 1), t)
    for n in range(space.N):
        _pairs(J @ proj(n) @ Jt, proj(n + 1), t)


@register("bunce-deddens.range", "bd-projections")
def bd_range(params: CheckParams, t: Tally) -> None:
    """Ran P_n is spanned by E_(m+n, x+n) with x = 0 or s^(m-1) < x < s^m."""
    space = _space(params)
    for n in range(space.N + 1):
        p = shifts.bd_projection(space, n)
        want = TruncatedOperator(space, sp.diags(shifts.range_indicator_bd(space, n)))
        t.add(max_abs(p - want), space.dim)


@register("bunce-deddens.toeplitz_hom", "bd-toeplitz", tolerance=1e-13)
def bd_toeplitz_hom(params: CheckParams, t: Tally) -> None:
    """T_U is multiplicative, unital and *-preserving."""
    space = _space(params)
    rng = params.rng("bunce-deddens.toeplitz_hom")
    K, depth = _toeplitz_budget(space.N)
    one = CylinderFunction.constant(space.s, 1.0)
    _pairs(coeff.toeplitz_U(space, coeff.ConvergentSequence.constant(one)), identity(space), t)
    for _ in range(_samples(params, 20)):
        F, G = rand_seq(rng, space.s, K, depth), rand_seq(rng, space.s, K, depth)
        TF, TG = coeff.toeplitz_U(space, F), coeff.toeplitz_U(space, G)
        _pairs(coeff.toeplitz_U(space, F * G), TF @ TG, t)
        _pairs(coeff.toeplitz_U(space, F.conj()), TF.adjoint(), t)


@register("bunce-deddens.toeplitz_norm", "bd-toeplitz", tolerance=1e-9)
def bd_toeplitz_norm(params: CheckParams, t: Tally) -> None:
    """||T_U(F)|| = sup_n ||f_n||_inf."""
    space = _space(params)
    rng = params.rng("bunce-deddens.toeplitz_norm")
    K, depth = _toeplitz_budget(space.N)
    for _ in range(_samples(params, 20)):
        F = rand_seq(rng, space.s, K, depth)
        t.add(abs(spectral_norm(coeff.toeplitz_U(space, F)) - F.sup_norm()), space.dim)


@register("bunce-deddens.intertwining", "bd-tilde-maps")
def bd_intertwining(params: CheckParams, t: Tally) -> None:
    """U T_U(F) U* = T_U(alpha~ F) and U* T_U(F) U = T_U(beta~ F)."""
    space = _space(params)
    rng = params.rng("bunce-deddens.intertwining")
    K, depth = _toeplitz_budget(space.N)
    K = min(K, space.N - 1)
    U = make_shift(space, "U")
    swapped = 0.0
    for _ in range(_samples(params, 10)):
        F = rand_seq(rng, space.s, K, depth)
        T = coeff.toeplitz_U(space, F)
        up, down = U @ T @ U.adjoint(), U.adjoint() @ T @ U
        Ta = coeff.toeplitz_U(space, coeff.seq_endo("U", "alpha", F))
        Tb = coeff.toeplitz_U(space, coeff.seq_endo("U", "beta", F))
        _pairs(up, Ta, t)
        _pairs(down, Tb, t)
        swapped = max(swapped, compare(down, Ta)[0], compare(up, Tb)[0])
    t.note(
        "erratum",
        "bunce-deddens.intertwining",
        "U T_U(F) U* matches T_U(alpha~ F) and U* T_U(F) U matches T_U(beta~ F); "
        f"pairing U* T_U(F) U with alpha~ fails (residual {swapped:.3e}).",
    )


# Hensel ------------------------------------------------------------------------


@register("hensel.lemma", "hensel-lemma")
def hensel_lemma(params: CheckParams, t: Tally) -> None:
    """M_f V = V M_{b f}, V M_f V* = M_{a f}(I - P_(0,0)), V* M_f V = M_{b f}."""
    space = _space(params)
    V = make_shift(space, "V")
    I = identity(space)
    P00 = shifts.p00(space)
    for f in _rand_cyls(params, "hensel.lemma", 3):
        Mf = diag(space, f)
        b, a = diag(space, endo_map("V", "b", f)), diag(space, endo_map("V", "a", f))
        _pairs(Mf @ V, V @ b, t)
        _pairs(V @ Mf @ V.adjoint(), a @ (I - P00), t)
        _pairs(V.adjoint() @ Mf @ V, b, t)


@register("hensel.p00", "hensel-p00")
def hensel_p00(params: CheckParams, t: Tally) -> None:
    """M_{a_V(1)} - V V* is the projection onto E_(0,0)."""
    space = _space(params)
    _pairs(shifts.hensel_projection(space, 0), shifts.p00(space), t)


@register("hensel.projections", "hensel-p00")
def hensel_projections(params: CheckParams, t: Tally) -> None:
    """P_(n,0) is the rank-one projection onto E_(n,0); V-ladder relations."""
    space = _space(params)
    for n in range(space.N + 1):
        want = shifts.elementary_unit(space, n, 0, n, 0)
        t.add(max_abs(shifts.hensel_projection(space, n) - want), space.dim)
    _ladder(space, "V", lambda n: shifts.hensel_projection(space, n), t)


@register("hensel.toeplitz_hom", "hensel-toeplitz", tolerance=1e-13)
def hensel_toeplitz_hom(params: CheckParams, t: Tally) -> None:
    """T_V is multiplicative, unital and *-preserving."""
    space = _space(params)
    rng = params.rng("hensel.toeplitz_hom")
    K, depth = _toeplitz_budget(space.N)
    _pairs(coeff.toeplitz_V(space, coeff.XVFunction(CylinderFunction.constant(space.s, 1.0))), identity(space), t)
    for _ in range(_samples(params, 20)):
        F, G = rand_xv(rng, space.s, K, depth), rand_xv(rng, space.s, K, depth)
        TF, TG = coeff.toeplitz_V(space, F), coeff.toeplitz_V(space, G)
        _pairs(coeff.toeplitz_V(space, F * G), TF @ TG, t)
        _pairs(coeff.toeplitz_V(space, F.conj()), TF.adjoint(), t)


@register("hensel.toeplitz_norm", "hensel-toeplitz", tolerance=1e-9)
def hensel_toeplitz_norm(params: CheckParams, t: Tally) -> None:
    """||T_V(F)|| = ||F||_inf."""
    space = _space(params)
    rng = params.rng("hensel.toeplitz_norm")
    K, depth = _toeplitz_budget(space.N)
    for _ in range(_samples(params, 20)):
        F = rand_xv(rng, space.s, K, depth)
        t.add(abs(spectral_norm(coeff.toeplitz_V(space, F)) - F.sup_norm()), space.dim)


@register("hensel.intertwining", "hensel-tilde-maps")
def hensel_intertwining(params: CheckParams, t: Tally) -> None:
    """V T_V(F) V* = T_V(alpha~ F) and V* T_V(F) V = T_V(beta~ F)."""
    space = _space(params)
    rng = params.rng("hensel.intertwining")
    K, depth = _toeplitz_budget(space.N)
    K = min(K, space.N - 1)
    V = make_shift(space, "V")
    for _ in range(_samples(params, 10)):
        F = rand_xv(rng, space.s, K, depth)
        T = coeff.toeplitz_V(space, F)
        _pairs(V @ T @ V.adjoint(), coeff.toeplitz_V(space, coeff.seq_endo("V", "alpha", F)), t)
        _pairs(V.adjoint() @ T @ V, coeff.toeplitz_V(space, coeff.seq_endo("V", "beta", F)), t)


# Bernoulli and Cuntz-Toeplitz --------------------------------------------------


@register("bernoulli.lemma", "bernoulli-lemma")
def bernoulli_lemma(params: CheckParams, t: Tally) -> None:
    """S* M_f S = M_{b f} and S M_f = M_{a f} S."""
    space = _space(params)
    S = make_shift(space, "S")
    for f in _rand_cyls(params, "bernoulli.lemma", 3):
        Mf = diag(space, f)
        _pairs(S.adjoint() @ Mf @ S, diag(space, endo_map("S", "b", f)), t)
        _pairs(S @ Mf, diag(space, endo_map("S", "a", f)) @ S, t)


@register("bernoulli.generators", "cuntz-toeplitz-generators")
def bernoulli_generators(params: CheckParams, t: Tally) -> None:
    """S_j E_(n,x) = E_(n+1, sx+j); S_(n,x) E_(k,z) = E_(k+n, s^n z + x); M_chi_j = S_j S_j* + delta_j0 P_(0,0)."""
    space = _space(params)
    s = space.s
    P00 = shifts.p00(space)
    for j in range(s):
        Sj = shifts.cuntz_generator(space, j)
        rows = [space.index(n + 1, s * x + j) for n in range(space.N) for x in range(s**n)]
        cols = [space.index(n, x) for n in range(space.N) for x in range(s**n)]
        want = TruncatedOperator.from_entries(space, rows, cols, np.ones(len(rows)), raise_=1, dmin=1, dmax=1)
        _pairs(Sj, want, t)
        lhs = diag(space, adic.residue_indicator(s, j))
        rhs = Sj @ Sj.adjoint() + (P00 if j == 0 else TruncatedOperator.zero(space))
        _pairs(lhs, rhs, t)
    for n, x in _vertices(s, min(3, space.N)):
        w = shifts.cuntz_word(space, n, x)
        rows, cols = [], []
        for k in range(space.N - n + 1):
            for z in range(s**k):
                rows.append(space.index(k + n, s**n * z + x))
                cols.append(space.index(k, z))
        want = TruncatedOperator.from_entries(space, rows, cols, np.ones(len(rows)), raise_=n, dmin=n, dmax=n)
        _pairs(w, want, t)


def _unit_axioms(space: TruncatedSpace, units: dict, t: Tally) -> None:
    """Equality with elementary units, adjoints, and P_ab P_cd = delta_bc P_ad.

    Products are taken against all right factors at once: the right units are
    stacked side by side and one sparse product per left unit covers every
    ``(c, d)``.
    """
    for (a, b), u in units.items():
        _pairs(u, shifts.elementary_unit(space, *a, *b).with_profile(u.raise_, u.dmin, u.dmax), t)
        _pairs(u.adjoint(), units[(b, a)], t)
    keys = list(units)
    right = sp.hstack([units[k].matrix for k in keys], format="csr")
    levels = space.levels
    zero = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for a, b in keys:
        left = units[(a, b)]
        prod = left.matrix @ right
        want = sp.hstack([units[(a, d)].matrix if b == c else zero for c, d in keys], format="csr")
        raises = [max(units[k].raise_, units[k].dmax + left.raise_) for k in keys]
        mask = np.concatenate([levels + r <= space.N for r in raises])
        diff = (prod - want)[:, np.flatnonzero(mask)]
        t.add(float(np.max(np.abs(diff.data))) if diff.nnz else 0.0, int(mask.sum()))


@register("bernoulli.matrix_units", "bernoulli-matrix-units")
def bernoulli_matrix_units(params: CheckParams, t: Tally) -> None:
    """S_(n,x) P_(0,0) S_(m,y)* form a system of matrix units."""
    space = _space(params)
    L = min(_unit_levels(space.s), space.N // 2)
    verts = _vertices(space.s, L)
    units = {(a, b): shifts.matrix_unit(space, "bernoulli", *a, *b) for a in verts for b in verts}
    _unit_axioms(space, units, t)


@register("bernoulli.block_diagonal", "gauge-block-structure")
def bernoulli_block_diagonal(params: CheckParams, t: Tally) -> None:
    """Gauge-invariant matrix units are exactly the level-preserving ones."""
    space = _space(params)
    L = min(_unit_levels(space.s), space.N // 2)
    verts = _vertices(space.s, L)
    for a in verts:
        for b in verts:
            u = shifts.matrix_unit(space, "bernoulli", *a, *b)
            E = expectation(u)
            if a[0] == b[0]:
                t.add(max_abs(E - u), space.dim)
                for d in range(-space.N, space.N + 1):
                    if d:
                        t.add(max_abs(degree_component(u, d)), 1)
            else:
                t.add(max_abs(E), space.dim)


@register("cuntz.orthogonality", "cuntz-toeplitz-relations")
def cuntz_orthogonality(params: CheckParams, t: Tally) -> None:
    """S_j* S_k = delta_jk I."""
    space = _space(params)
    I, Z = identity(space), TruncatedOperator.zero(space)
    for j in range(space.s):
        for k in range(space.s):
            lhs = shifts.cuntz_generator(space, j).adjoint() @ shifts.cuntz_generator(space, k)
            _pairs(lhs, I if j == k else Z, t)


@register("cuntz.sum_relation", "cuntz-toeplitz-relations")
def cuntz_sum_relation(params: CheckParams, t: Tally) -> None:
    """sum_j S_j S_j* = I - P_(0,0)."""
    space = _space(params)
    total = reduce(
        lambda a, b: a + b,
        (shifts.cuntz_generator(space, j) @ shifts.cuntz_generator(space, j).adjoint() for j in range(space.s)),
    )
    _pairs(total, identity(space) - shifts.p00(space), t)


# line representation and T_S ---------------------------------------------------


@register("line.cuntz_relations", "line-representation")
def line_cuntz_relations(params: CheckParams, t: Tally) -> None:
    """u_j* u_k = delta_jk and sum_j u_j u_j* = 1 on the window interior."""
    space = _space(params)
    line = cuntz.LineSpace.for_tree(space)
    s = space.s
    gens = [cuntz.line_generator(line, j) for j in range(s)]
    adjs = [cuntz.line_generator_adjoint(line, j) for j in range(s)]
    eye = sp.identity(line.dim, format="csr")
    for j in range(s):
        t.add(_line_diff(adjs[j].matrix - gens[j].adjoint().matrix, np.arange(line.dim)), line.dim)
        for k in range(s):
            prod = adjs[j] @ gens[k]
            want = eye if j == k else 0 * eye
            t.add(_line_diff(prod.matrix - want, prod.interior()), prod.interior().size)
    total = reduce(lambda a, b: a + b, (g @ a for g, a in zip(gens, adjs)))
    t.add(_line_diff(total.matrix - eye, total.interior()), total.interior().size)
    for n in range(min(3, space.N) + 1):
        for x in range(s**n):
            w = cuntz.line_word(line, n, x)
            built = reduce(lambda a, b: a @ b, (gens[d] for d in adic.digits(x, n, s)), cuntz.LineOperator.identity(line))
            cols = np.intersect1d(w.interior(), built.interior())
            t.add(_line_diff(w.matrix - built.matrix, cols), cols.size)


def _line_diff(m, cols) -> float:
    sub = sp.csr_matrix(m)[:, cols]
    return float(np.max(np.abs(sub.data))) if sub.nnz else 0.0


@register("line.toeplitz_map", "ts-map")
def line_toeplitz_map(params: CheckParams, t: Tally) -> None:
    """iota* iota = I, T_S(1) = 1, T_S(a*) = T_S(a)*, T_S(u_j) = S_j."""
    space = _space(params)
    line = cuntz.LineSpace.for_tree(space)
    i = cuntz.iota(space, line)
    t.add(float(np.max(np.abs((i.conj().T @ i - sp.identity(space.dim)).toarray()))), space.dim)
    I = cuntz.LineOperator.identity(line)
    _pairs(cuntz.toeplitz_S(space, I), identity(space), t)
    for j in range(space.s):
        Tj = cuntz.toeplitz_S(space, cuntz.line_generator(line, j), raise_=1, dmin=1, dmax=1)
        _pairs(Tj, shifts.cuntz_generator(space, j), t)
    L = min(_unit_levels(space.s), space.N - 1)
    for n, x in _vertices(space.s, L):
        for m, y in _vertices(space.s, L):
            a = cuntz.line_word(line, n, x) @ cuntz.line_word_adjoint(line, m, y)
            aa = cuntz.line_word(line, m, y) @ cuntz.line_word_adjoint(line, n, x)
            Ta = cuntz.toeplitz_S(space, a, raise_=max(0, n - m))
            Taa = cuntz.toeplitz_S(space, aa, raise_=max(0, m - n))
            t.add(max_abs(Taa - Ta.adjoint()), space.dim)


def _correction_words(space: TruncatedSpace):
    L = min(_unit_levels(space.s), space.N - 1)
    return [(n, x, m, y) for n, x in _vertices(space.s, L) for m, y in _vertices(space.s, L)]


@register("tsproduct.sweep", "ts-product", tolerance=1e-13)
def tsproduct_sweep(params: CheckParams, t: Tally) -> None:
    """T_S(u_(n,x) u*_(m,y)) - S_(n,x) S*_(m,y) equals the closed-form correction."""
    space = _space(params)
    line = cuntz.LineSpace.for_tree(space)
    low_index = 0
    for n, x, m, y in _correction_words(space):
        got = cuntz.ts_correction(space, n, x, m, y, line)
        want = cuntz.closed_form_correction(space, n, x, m, y)
        _pairs(got, want, t)
        src, dst = cuntz.phi_inv(y, space.s), cuntz.phi_inv(x, space.s)
        if src is not None and dst is not None and (src.n == 0 or dst.n == 0) and max_abs(got) > 0:
            low_index += 1
    t.note(
        "erratum",
        "tsproduct.sweep",
        f"correction is nonzero whenever x = s^j + x' and y = s^l + y' with j, l >= 0; "
        f"{low_index} words with j = 0 or l = 0 carry a nonzero correction.",
    )


@register("tsproduct.rank", "ts-product", tolerance=1e-10)
def tsproduct_rank(params: CheckParams, t: Tally) -> None:
    """Every correction has numerical rank at most one (residual: second singular value)."""
    space = _space(params)
    line = cuntz.LineSpace.for_tree(space)
    for n, x, m, y in _correction_words(space):
        c = cuntz.ts_correction(space, n, x, m, y, line)
        cols = c.valid_columns()
        sub = c.matrix[:, cols]
        if sub.nnz == 0:
            t.add(0.0, cols.size)
            continue
        rows = np.unique(sub.tocoo().row)
        sv = np.linalg.svd(sub[rows].toarray(), compute_uv=False)
        t.add(sv[1] if sv.size > 1 else 0.0, cols.size)


@register("tsproduct.multiplicativity", "ts-product", tolerance=1e-10)
def tsproduct_multiplicativity(params: CheckParams, t: Tally) -> None:
    """rank(T_S(ab) - T_S(a) T_S(b)) is bounded by the number of nonzero corrections.

    Residual: singular value of the defect just past the bound.
    """
    space = _space(params)
    L = min(_unit_levels(space.s), space.N - 1)
    words = cuntz.all_words(space.s, L)
    for a in words:
        for b in words:
            sv, count = cuntz.defect_singular_values(space, a, b)
            bound = cuntz.correction_count(space, a, b, a @ b)
            t.add(sv[bound] if sv.size > bound else 0.0, count)


# Serre -------------------------------------------------------------------------


@register("serre.lemma", "serre-lemma")
def serre_lemma(params: CheckParams, t: Tally) -> None:
    """W* M_F W = M_{b_W F}, W M_F = M_{a_W F} W, and W M_f W* = f(x mod s^(n-1)) W W*."""
    space = _space(params)
    W = make_shift(space, "W")
    rng = params.rng("serre.lemma")
    for f in _rand_cyls(params, "serre.lemma", 3):
        F = TreeFunction.from_cylinder(f)
        _pairs(W @ diag(space, f) @ W.adjoint(), diag(space, tree_map_W("a", F)) @ W @ W.adjoint(), t)
        _pairs(W.adjoint() @ diag(space, f) @ W, diag(space, tree_map_W("b", F)), t)
    for _ in range(_samples(params, 50) // 5):
        F = rand_tree(rng, space.s, int(rng.integers(0, 3)), 2)
        MF = diag(space, F)
        _pairs(W.adjoint() @ MF @ W, diag(space, tree_map_W("b", F)), t)
        _pairs(W @ MF, diag(space, tree_map_W("a", F)) @ W, t)


@register("serre.diagonal_algebra", "serre-diagonal-algebra")
def serre_diagonal_algebra(params: CheckParams, t: Tally) -> None:
    """The tree-function algebra is closed under a_W, b_W with the tail kept; h_n matches its closed form."""
    space = _space(params)
    s = space.s
    rng = params.rng("serre.diagonal_algebra")
    for _ in range(_samples(params, 20)):
        F = rand_tree(rng, s, int(rng.integers(0, 3)), 2)
        G = rand_tree(rng, s, int(rng.integers(0, 3)), 2)
        for H in (tree_map_W("a", F), tree_map_W("b", F)):
            t.flag(not H.tail == F.tail)
            for n in range(H.M + 1, H.M + 3):
                t.add(adic.limit_deviation(H, n))
        _pairs(diag(space, F * G), diag(space, F) @ diag(space, G), t)
    for n in range(9):
        for m in range(9):
            t.add(abs(adic.level_phase_average(s, n, m) - _h_closed(s, n, m)))


def _h_closed(s: int, n: int, m: int) -> complex:
    """Dirichlet-kernel form of h_n(m), free of the cancellation in (1 - q^s) / (1 - q)."""
    if m > n:
        return 1.0
    theta = 2 * math.pi / s ** (n + 1 - m)
    return cmath.exp(0.5j * (s - 1) * theta) * math.sin(s * theta / 2) / (s * math.sin(theta / 2))


@register("serre.induction", "serre-diagonal-algebra")
def serre_induction(params: CheckParams, t: Tally) -> None:
    """W* M_chi_1 W = M_chi_1 (1 - M_g0) and W* M_chi_(n+1) W = M_chi_(n+1) h_n."""
    space = _space(params)
    s = space.s
    W = make_shift(space, "W")
    chi1 = diag(space, adic.character(s, 1))
    _pairs(W.adjoint() @ chi1 @ W, chi1 @ (identity(space) - diag(space, adic.level_indicator(s, 0))), t)
    for n in range(min(4, space.N - 1) + 1):
        chi = diag(space, adic.character(s, n + 1))
        _pairs(W.adjoint() @ chi @ W, chi @ diag(space, adic.level_phase_function(s, n)), t)


@register("serre.matrix_units", "serre-matrix-units")
def serre_matrix_units(params: CheckParams, t: Tally) -> None:
    """s^((n+m)/2) M_chi(n,x) W^n W*^m M_chi(m,y) form a system of matrix units."""
    space = _space(params)
    L = min(_unit_levels(space.s), space.N // 2)
    verts = _vertices(space.s, L)
    units = {(a, b): shifts.matrix_unit(space, "serre", *a, *b) for a in verts for b in verts}
    _unit_axioms(space, units, t)


@register("serre.commutator", "serre-commutator")
def serre_commutator(params: CheckParams, t: Tally) -> None:
    """[M_F, W] = M_{F - a_W F} W, and F - a_W F lives on levels <= M + 1."""
    space = _space(params)
    W = make_shift(space, "W")
    rng = params.rng("serre.commutator")
    for _ in range(_samples(params, 20)):
        F = rand_tree(rng, space.s, int(rng.integers(0, space.N - 1)), 2)
        D = F - tree_map_W("a", F)
        MF = diag(space, F)
        _pairs(MF @ W - W @ MF, diag(space, D) @ W, t)
        support = D.extend(space.N).support_levels()
        t.flag(bool(support) and max(support) > F.M + 1)


@register("serre.projections", "serre-projection-ladder")
def serre_projections(params: CheckParams, t: Tally) -> None:
    """Ladder W P_n W* = P_(n+1), W* P_n W = P_(n-1), W* P_0 W = 0; diagonal of P_0 is 1 - 1/s off the root."""
    space = _space(params)
    s = space.s
    P = [shifts.serre_projection(space, n) for n in range(space.N + 1)]
    for n, p in enumerate(P):
        t.add(max_abs(p - p.adjoint()), space.dim)
        _pairs(p @ p, p, t)
        for m in range(n + 1, len(P)):
            _pairs(p @ P[m], TruncatedOperator.zero(space), t)
    _ladder(space, "W", lambda n: P[n], t)
    d = P[0].matrix.diagonal()
    want = np.full(space.dim, 1 - 1 / s)
    want[0] = 1.0
    t.add(float(np.max(np.abs(d - want))), space.dim)
    t.note(
        "erratum",
        "serre.projections",
        f"P_0 = I - W W* fixes E_(0,0) (diagonal entry {d[0].real:.1f}), not 0; "
        f"every other diagonal entry is 1 - 1/s = {1 - 1 / s:.6g}.",
    )


@register("serre.toeplitz", "serre-toeplitz")
def serre_toeplitz(params: CheckParams, t: Tally) -> None:
    """T_W(G_n) = P_n, T_W(const g) = M_g, T_W images are gauge invariant."""
    space = _space(params)
    s = space.s
    rng = params.rng("serre.toeplitz")
    zero = CylinderFunction.constant(s, 0.0)
    one = CylinderFunction.constant(s, 1.0)
    for n in range(space.N):
        Gn = coeff.ConvergentSequence([zero] * n + [one], zero)
        _pairs(coeff.toeplitz_W(space, Gn), shifts.serre_projection(space, n), t)
    K, depth = _toeplitz_budget(space.N)
    for _ in range(_samples(params, 10)):
        g = rand_cyl(rng, s, depth)
        _pairs(coeff.toeplitz_W(space, coeff.ConvergentSequence.constant(g)), diag(space, g), t)
        T = coeff.toeplitz_W(space, rand_seq(rng, s, K, depth))
        t.add(max_abs(T - expectation(T)), space.dim)
    G = coeff.ConvergentSequence([one], zero)
    d = coeff.toeplitz_W(space, G).matrix.diagonal()
    t.add(float(np.max(np.abs(d[1:] - (1 - 1 / s)))), space.dim - 1)


@register("serre.product", "serre-toeplitz-product")
def serre_product(params: CheckParams, t: Tally) -> None:
    """T_W(G) T_W(G') - T_W(G G') vanishes above level K + depth + 1."""
    space = _space(params)
    rng = params.rng("serre.product")
    K, depth = _toeplitz_budget(space.N)
    cut = K + depth + 1
    if cut > space.N:
        raise InfeasibleParams(f"serre.product needs N >= {cut}")
    for _ in range(_samples(params, 10)):
        G, H = rand_seq(rng, space.s, K, depth), rand_seq(rng, space.s, K, depth)
        D = coeff.toeplitz_W(space, G) @ coeff.toeplitz_W(space, H) - coeff.toeplitz_W(space, G * H)
        t.add(tail_norm(D, cut), space.dim - space.offset(cut))
        t.add(max_abs(D - expectation(D)), space.dim)


@register("serre.conjugation", "serre-projection-ladder")
def serre_conjugation(params: CheckParams, t: Tally) -> None:
    """W T_W(G) W* - T_W(0, g_0, g_1, ...) vanishes above the cylinder depth."""
    space = _space(params)
    rng = params.rng("serre.conjugation")
    K, depth = _toeplitz_budget(space.N)
    K = min(K, space.N - 1)
    W = make_shift(space, "W")
    for _ in range(_samples(params, 10)):
        G = rand_seq(rng, space.s, K, depth)
        D = W @ coeff.toeplitz_W(space, G) @ W.adjoint() - coeff.toeplitz_W(space, coeff.shift_sequence(G))
        cut = G.depth + 1
        t.add(tail_norm(D, cut), space.dim - space.offset(cut))
