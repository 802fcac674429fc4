"""The four shifts on the tree space, their generators, projections and matrix units.

All four shifts are built as isometries.  The Bernoulli shift uses the
normalisation ``S E_(n,x) = s**-0.5 * sum_j E_(n+1, sx+j)``; with a ``1/s``
prefactor the operator would have norm ``s**-0.5`` and ``S* S = I`` would fail.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .adic import digits, endo_map, CylinderFunction, residue_indicator, vertex_indicator
from .hilbert import TruncatedOperator, TruncatedSpace, diag, identity

KINDS = ("U", "V", "S", "W")


def _check_kind(kind: str) -> str:
    k = kind.upper()
    if k not in KINDS:
        raise ValueError(f"unknown shift {kind!r}; expected one of {KINDS}")
    return k


def _targets(space: TruncatedSpace, kind: str, n: int, x: int) -> list[tuple[int, int, float]]:
    s = space.s
    if kind == "U":
        return [(n + 1, x + 1, 1.0)]
    if kind == "V":
        return [(n + 1, s * x, 1.0)]
    c = 1.0 / math.sqrt(s)
    if kind == "S":
        return [(n + 1, s * x + j, c) for j in range(s)]
    return [(n + 1, x + j * s**n, c) for j in range(s)]


@lru_cache(maxsize=64)
def make_shift(space: TruncatedSpace, kind: str) -> TruncatedOperator:
    """Shift operator; columns of level N map out of the truncation and are zero."""
    kind = _check_kind(kind)
    rows, cols, vals = [], [], []
    for n in range(space.N):
        for x in range(space.s**n):
            c = space.index(n, x)
            for m, y, v in _targets(space, kind, n, x):
                rows.append(space.index(m, y))
                cols.append(c)
                vals.append(v)
    return TruncatedOperator.from_entries(space, rows, cols, vals, raise_=1, dmin=1, dmax=1)


@lru_cache(maxsize=64)
def make_shift_adjoint(space: TruncatedSpace, kind: str) -> TruncatedOperator:
    """Adjoint built from the case formulas, independently of transposition."""
    kind = _check_kind(kind)
    s = space.s
    rows, cols, vals = [], [], []
    for n in range(1, space.N + 1):
        below = s ** (n - 1)
        for x in range(s**n):
            if kind == "U":
                if not 0 < x <= below:
                    continue
                target, v = (n - 1, x - 1), 1.0
            elif kind == "V":
                if x % s:
                    continue
                target, v = (n - 1, x // s), 1.0
            elif kind == "S":
                target, v = (n - 1, (x - x % s) // s), 1.0 / math.sqrt(s)
            else:
                target, v = (n - 1, x % below), 1.0 / math.sqrt(s)
            rows.append(space.index(*target))
            cols.append(space.index(n, x))
            vals.append(v)
    return TruncatedOperator.from_entries(space, rows, cols, vals, raise_=0, dmin=-1, dmax=-1)


def shift_and_adjoint(space: TruncatedSpace, kind: str) -> tuple[TruncatedOperator, TruncatedOperator]:
    J = make_shift(space, kind)
    return J, J.adjoint()


@lru_cache(maxsize=256)
def cuntz_generator(space: TruncatedSpace, j: int) -> TruncatedOperator:
    """``S_j = sqrt(s) M_{chi_j} S``, i.e. ``S_j E_(n,x) = E_(n+1, sx+j)``."""
    if not 0 <= j < space.s:
        raise ValueError(f"generator index {j} out of range for s={space.s}")
    return diag(space, residue_indicator(space.s, j)) @ make_shift(space, "S") * math.sqrt(space.s)


@lru_cache(maxsize=4096)
def cuntz_word(space: TruncatedSpace, n: int, x: int) -> TruncatedOperator:
    """``S_(n,x) = S_{x_0} S_{x_1} ... S_{x_{n-1}}`` for the little-endian digits of x."""
    out = identity(space)
    for d in reversed(digits(x, n, space.s)):
        out = cuntz_generator(space, d) @ out
    return out


@lru_cache(maxsize=64)
def p00(space: TruncatedSpace) -> TruncatedOperator:
    """Rank-one projection onto ``E_(0,0)``."""
    return TruncatedOperator.from_entries(space, [0], [0], [1.0])


def _conjugate_power(J: TruncatedOperator, base: TruncatedOperator, n: int) -> TruncatedOperator:
    Jn = J.power(n)
    return Jn @ base @ Jn.adjoint()


@lru_cache(maxsize=256)
def bd_projection(space: TruncatedSpace, n: int) -> TruncatedOperator:
    """``P_n = U^n (I - U U*) U*^n``."""
    _check_level(space, n)
    U = make_shift(space, "U")
    return _conjugate_power(U, identity(space) - U @ U.adjoint(), n)


@lru_cache(maxsize=256)
def hensel_projection(space: TruncatedSpace, n: int) -> TruncatedOperator:
    """``P_(n,0) = V^n (M_{a_V(1)} - V V*) V*^n``."""
    _check_level(space, n)
    V = make_shift(space, "V")
    one = CylinderFunction.constant(space.s, 1.0)
    base = diag(space, endo_map("V", "a", one)) - V @ V.adjoint()
    return _conjugate_power(V, base, n)


@lru_cache(maxsize=256)
def serre_projection(space: TruncatedSpace, n: int) -> TruncatedOperator:
    """``W^n (I - W W*) W*^n``."""
    _check_level(space, n)
    W = make_shift(space, "W")
    return _conjugate_power(W, identity(space) - W @ W.adjoint(), n)


def _check_level(space: TruncatedSpace, n: int) -> None:
    if not 0 <= n <= space.N:
        raise ValueError(f"projection index {n} outside 0..{space.N}")


def projection(space: TruncatedSpace, family: str, n: int = 0) -> TruncatedOperator:
    table = {"bd_P": bd_projection, "hensel_P": hensel_projection, "serre_P": serre_projection}
    if family == "P00":
        return p00(space)
    try:
        return table[family](space, n)
    except KeyError:
        raise ValueError(f"unknown projection family {family!r}") from None


def matrix_unit(space: TruncatedSpace, family: str, n: int, x: int, m: int, y: int) -> TruncatedOperator:
    """Operator sending ``E_(m,y)`` to ``E_(n,x)`` and every other basis vector to zero.

    ``family="bernoulli"`` builds it from Cuntz words around ``P00``;
    ``family="serre"`` from powers of W between vertex indicators.
    """
    for lvl, pos in ((n, x), (m, y)):
        if not (0 <= lvl <= space.N and 0 <= pos < space.s**lvl):
            raise ValueError(f"vertex ({lvl}, {pos}) not in the truncated space")
    if family == "bernoulli":
        return cuntz_word(space, n, x) @ p00(space) @ cuntz_word(space, m, y).adjoint()
    if family == "serre":
        W = make_shift(space, "W")
        left = diag(space, vertex_indicator(space.s, n, x))
        right = diag(space, vertex_indicator(space.s, m, y))
        core = W.power(n) @ W.adjoint().power(m)
        return (left @ core @ right) * (space.s ** ((n + m) / 2))
    raise ValueError(f"unknown matrix-unit family {family!r}")


def elementary_unit(space: TruncatedSpace, n: int, x: int, m: int, y: int) -> TruncatedOperator:
    """``|E_(n,x)><E_(m,y)|`` written down directly."""
    return TruncatedOperator.from_entries(space, [space.index(n, x)], [space.index(m, y)], [1.0])


def range_indicator_bd(space: TruncatedSpace, n: int) -> np.ndarray:
    """0/1 vector of basis vectors ``E_(m+n, x+n)`` with ``x = 0`` or ``s^(m-1) < x < s^m``.

    These are the images under ``U^n`` of the kernel of ``U*``.
    """
    out = np.zeros(space.dim)
    for m in range(0, space.N - n + 1):
        xs = [0] if m == 0 else [0, *range(space.s ** (m - 1) + 1, space.s**m)]
        for x in xs:
            out[space.index(m + n, x + n)] = 1.0
    return out
