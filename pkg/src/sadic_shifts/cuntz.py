"""The Cuntz representation on l^2(Z), the embedding of the tree into Z, and T_S.

Two views of the same operators live here.  ``LineSpace``/``LineOperator``
are honest sparse matrices on a finite window of Z; columns whose image
leaves the window are zeroed and remembered as lost.  ``WordMap`` is the
exact partial map ``l -> s^n (l - y) / s^m + x`` of a word
``u_(n,x) u*_(m,y)`` on all of Z, used for sweeps where matrix products
would dominate the runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .adic import Vertex
from .hilbert import TruncatedOperator, TruncatedSpace
from .shifts import cuntz_word


class WindowError(ValueError):
    """An exact line computation left the finite window."""


def phi(n: int, x: int, s: int) -> int:
    return s**n + x


def phi_inv(l: int, s: int) -> Optional[Vertex]:
    """Unique ``(n, x)`` with ``s^n <= l < 2 s^n``, or None."""
    if l < 1:
        return None
    n, p = 0, 1
    while p * s <= l:
        p *= s
        n += 1
    return Vertex(n, l - p) if l < 2 * p else None


@dataclass(frozen=True)
class LineSpace:
    """Window ``lo..hi`` (inclusive) of the basis ``e_l`` of l^2(Z)."""

    s: int
    lo: int
    hi: int

    def __post_init__(self):
        if self.s < 2:
            raise ValueError("s must be at least 2")
        if not self.lo <= 0 < self.hi:
            raise ValueError(f"window [{self.lo}, {self.hi}] must satisfy lo <= 0 < hi")

    @classmethod
    def for_tree(cls, space: TruncatedSpace, extra_levels: int = 0) -> "LineSpace":
        top = space.s ** (space.N + extra_levels)
        return cls(space.s, -top, 2 * top)

    @property
    def dim(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, l: int) -> bool:
        return self.lo <= l <= self.hi

    def index(self, l: int) -> int:
        if l not in self:
            raise WindowError(f"e_{l} outside window [{self.lo}, {self.hi}]")
        return l - self.lo

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


class LineOperator:
    """Sparse matrix on a ``LineSpace`` with the mask of columns whose image was cut off."""

    def __init__(self, space: LineSpace, matrix, lost: Optional[np.ndarray] = None):
        m = sp.csr_matrix(matrix, dtype=np.complex128, shape=(space.dim, space.dim))
        m.eliminate_zeros()
        self.space = space
        self.matrix = m
        self.lost = np.zeros(space.dim, dtype=bool) if lost is None else np.asarray(lost, dtype=bool)

    @classmethod
    def identity(cls, space: LineSpace) -> "LineOperator":
        return cls(space, sp.identity(space.dim, dtype=np.complex128, format="csr"))

    @classmethod
    def from_map(cls, space: LineSpace, fn) -> "LineOperator":
        """Partial isometry ``e_l -> e_{fn(l)}``; ``fn`` returns None for zero."""
        rows, cols = [], []
        lost = np.zeros(space.dim, dtype=bool)
        for i, l in enumerate(space.points):
            t = fn(int(l))
            if t is None:
                continue
            if t in space:
                rows.append(t - space.lo)
                cols.append(i)
            else:
                lost[i] = True
        m = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(space.dim, space.dim))
        return cls(space, m.tocsr(), lost)

    def _check(self, other: "LineOperator"):
        if other.space != self.space:
            raise ValueError("line operators on different windows")

    def __matmul__(self, other: "LineOperator") -> "LineOperator":
        self._check(other)
        reach = (abs(other.matrix).T @ self.lost.astype(float)) > 0
        return LineOperator(self.space, self.matrix @ other.matrix, other.lost | reach)

    def __add__(self, other: "LineOperator") -> "LineOperator":
        self._check(other)
        return LineOperator(self.space, self.matrix + other.matrix, self.lost | other.lost)

    def __sub__(self, other: "LineOperator") -> "LineOperator":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "LineOperator":
        return LineOperator(self.space, self.matrix * complex(c), self.lost)

    def adjoint(self) -> "LineOperator":
        """Conjugate transpose.

        For partial isometries built from maps this is exact on the window;
        for other operators with lost columns every column is marked lost.
        """
        lost = self.lost
        if lost.any() and np.any(np.diff(self.matrix.tocsc().indptr) > 1):
            lost = np.ones_like(lost)
        else:
            lost = np.zeros_like(lost)
        return LineOperator(self.space, self.matrix.conj().T.tocsr(), lost)

    def apply(self, l: int) -> dict[int, complex]:
        i = self.space.index(l)
        if self.lost[i]:
            raise WindowError(f"image of e_{l} leaves the window")
        col = self.matrix[:, i].tocoo()
        return {int(r) + self.space.lo: complex(v) for r, v in zip(col.row, col.data)}

    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.lost)


def line_generator(line: LineSpace, j: int) -> LineOperator:
    """``u_j e_l = e_{sl+j}``."""
    if not 0 <= j < line.s:
        raise ValueError(f"generator index {j} out of range for s={line.s}")
    return LineOperator.from_map(line, lambda l: line.s * l + j)


def line_generator_adjoint(line: LineSpace, j: int) -> LineOperator:
    """``u_j* e_l = e_{(l-j)/s}`` when ``l = j mod s``, else 0."""
    if not 0 <= j < line.s:
        raise ValueError(f"generator index {j} out of range for s={line.s}")
    s = line.s
    return LineOperator.from_map(line, lambda l: (l - j) // s if (l - j) % s == 0 else None)


def line_word(line: LineSpace, n: int, x: int) -> LineOperator:
    """``u_(n,x) e_l = e_{s^n l + x}``."""
    _check_word(line.s, n, x)
    return LineOperator.from_map(line, lambda l: line.s**n * l + x)


def line_word_adjoint(line: LineSpace, n: int, x: int) -> LineOperator:
    _check_word(line.s, n, x)
    p = line.s**n
    return LineOperator.from_map(line, lambda l: (l - x) // p if (l - x) % p == 0 else None)


def _check_word(s: int, n: int, x: int) -> None:
    if n < 0 or not 0 <= x < s**n:
        raise ValueError(f"invalid word index ({n}, {x}) for s={s}")


def iota(space: TruncatedSpace, line: LineSpace) -> sp.csr_matrix:
    """Rectangular ``dim(line) x dim(space)`` matrix of ``E_(n,x) -> e_phi(n,x)``."""
    if line.s != space.s:
        raise ValueError("tree and line use different bases")
    if phi(space.N, space.s**space.N - 1, space.s) not in line:
        raise WindowError(f"window [{line.lo}, {line.hi}] misses phi of level {space.N}")
    cols = np.arange(space.dim)
    rows = _phi_rows(space, line)
    return sp.csr_matrix((np.ones(space.dim), (rows, cols)), shape=(line.dim, space.dim), dtype=np.complex128)


def _phi_rows(space: TruncatedSpace, line: LineSpace) -> np.ndarray:
    return space.s ** space.levels + space.xs - line.lo


def toeplitz_S(space: TruncatedSpace, a: LineOperator, raise_: int = 0, dmin: int = 0, dmax: int = 0) -> TruncatedOperator:
    """``T_S(a) = iota* a iota``; the level profile of the result is supplied by the caller.

    Columns whose line image left the window must lie outside the validity
    set that profile implies.
    """
    i = iota(space, a.space)
    out = TruncatedOperator(space, i.conj().T @ a.matrix @ i, raise_, dmin, dmax)
    lost = np.flatnonzero(a.lost[_phi_rows(space, a.space)])
    if np.intersect1d(lost, out.valid_columns()).size:
        raise WindowError("window too small for the claimed validity set")
    return out


def _word_profile(n: int, m: int) -> dict:
    return {"raise_": max(0, n - m), "dmin": min(0, n - m) - max(n, m), "dmax": max(0, n - m)}


def ts_correction(space: TruncatedSpace, n: int, x: int, m: int, y: int, line: Optional[LineSpace] = None) -> TruncatedOperator:
    """``T_S(u_(n,x) u*_(m,y)) - S_(n,x) S*_(m,y)`` computed through the line."""
    line = line or LineSpace.for_tree(space)
    word = line_word(line, n, x) @ line_word_adjoint(line, m, y)
    ts = toeplitz_S(space, word, **_word_profile(n, m))
    tree = cuntz_word(space, n, x) @ cuntz_word(space, m, y).adjoint()
    return ts - tree


def closed_form_correction(space: TruncatedSpace, n: int, x: int, m: int, y: int) -> TruncatedOperator:
    """Rank <= 1 correction: ``E_(l,y') -> E_(j,x')`` when ``x = s^j + x'`` and ``y = s^l + y'``.

    Both ``j`` and ``l`` may be zero.
    """
    s = space.s
    _check_word(s, n, x)
    _check_word(s, m, y)
    src, dst = phi_inv(y, s), phi_inv(x, s)
    profile = _word_profile(n, m)
    if src is None or dst is None:
        return TruncatedOperator.zero(space).with_profile(**profile)
    return TruncatedOperator.from_entries(space, [space.index(*dst)], [space.index(*src)], [1.0], **profile)


# exact partial maps ------------------------------------------------------------


@dataclass(frozen=True)
class WordMap:
    """``u_(n,x) u*_(m,y)`` on all of Z, or the zero operator when ``n`` is None."""

    s: int
    n: Optional[int]
    x: int = 0
    m: int = 0
    y: int = 0

    def __call__(self, l: int) -> Optional[int]:
        if self.n is None:
            return None
        q, r = divmod(l - self.y, self.s**self.m)
        return None if r else self.s**self.n * q + self.x

    def __matmul__(self, other: "WordMap") -> "WordMap":
        """Reduced form of the product, using ``u_j* u_k = delta_jk``."""
        if self.n is None or other.n is None:
            return WordMap(self.s, None)
        s = self.s
        # u*_(m,y) u_(n',x'): compare the shorter digit string with the prefix of the longer
        if self.m <= other.n:
            if other.x % s**self.m != self.y:
                return WordMap(s, None)
            rest_n, rest_x = other.n - self.m, other.x // s**self.m
            return WordMap(s, self.n + rest_n, self.x + s**self.n * rest_x, other.m, other.y)
        if self.y % s**other.n != other.x:
            return WordMap(s, None)
        rest_m, rest_y = self.m - other.n, self.y // s**other.n
        return WordMap(s, self.n, self.x, other.m + rest_m, other.y + s**other.m * rest_y)

    @property
    def is_zero(self) -> bool:
        return self.n is None


def tree_map(space: TruncatedSpace, w: WordMap) -> np.ndarray:
    """Target level and position of ``T_S(w) E_(k,z)`` for every basis vector.

    Returns an ``(dim, 2)`` integer array; rows are ``(-1, -1)`` for a zero image.
    The level may exceed ``N``: nothing is truncated.
    """
    out = np.full((space.dim, 2), -1, dtype=np.int64)
    if w.is_zero:
        return out
    s = space.s
    for i, (k, z) in enumerate(zip(space.levels, space.xs)):
        t = w(int(s ** int(k) + z))
        v = None if t is None else phi_inv(t, s)
        if v is not None:
            out[i] = (v.n, v.x)
    return out


@lru_cache(maxsize=4096)
def _tree_map_cached(space: TruncatedSpace, w: WordMap) -> np.ndarray:
    arr = tree_map(space, w)
    arr.setflags(write=False)
    return arr


def word_operator(space: TruncatedSpace, w: WordMap) -> TruncatedOperator:
    """``T_S(w)`` truncated to ``H_{<=N}``, built from the exact map."""
    tm = _tree_map_cached(space, w)
    keep = (tm[:, 0] >= 0) & (tm[:, 0] <= space.N)
    cols = np.flatnonzero(keep)
    rows = [space.index(int(a), int(b)) for a, b in tm[cols]]
    profile = _word_profile(w.n, w.m) if not w.is_zero else {}
    return TruncatedOperator.from_entries(space, rows, cols, np.ones(len(rows)), **profile)


def defect_singular_values(space: TruncatedSpace, a: WordMap, b: WordMap) -> tuple[np.ndarray, int]:
    """Singular values of ``T_S(ab) - T_S(a) T_S(b)`` and the number of exact columns.

    A column counts when every image involved (``T_S(b)``, ``T_S(a)`` of that,
    ``T_S(ab)``) stays inside the truncation, so the finite computation equals
    the one on the full tree.
    """
    N, s = space.N, space.s
    tb = _tree_map_cached(space, b)
    ta = _tree_map_cached(space, a)
    tab = _tree_map_cached(space, a @ b)
    mid_ok = tb[:, 0] <= N
    hit = mid_ok & (tb[:, 0] >= 0)
    mid_idx = (s ** tb[hit, 0] - 1) // (s - 1) + tb[hit, 1]
    comp = np.full_like(tb, -1)
    comp[hit] = ta[mid_idx]
    valid = mid_ok & (comp[:, 0] <= N) & (tab[:, 0] <= N)
    count = int(valid.sum())
    cols = np.flatnonzero(valid & np.any(comp != tab, axis=1))
    if cols.size == 0:
        return np.zeros(0), count
    rows: dict[tuple[int, int], int] = {}
    entries = []
    for j, c in enumerate(cols):
        for sign, tgt in ((1.0, tab[c]), (-1.0, comp[c])):
            if tgt[0] >= 0:
                r = rows.setdefault((int(tgt[0]), int(tgt[1])), len(rows))
                entries.append((r, j, sign))
    mat = np.zeros((len(rows), cols.size))
    for r, j, v in entries:
        mat[r, j] += v
    return np.linalg.svd(mat, compute_uv=False), count


def multiplicativity_defect(space: TruncatedSpace, a: WordMap, b: WordMap, tol: float = 1e-10) -> tuple[int, int]:
    """Numerical rank of ``T_S(ab) - T_S(a) T_S(b)`` and the number of exact columns."""
    sv, count = defect_singular_values(space, a, b)
    return int(np.sum(sv > tol)), count


def correction_count(space: TruncatedSpace, *words: WordMap) -> int:
    """How many of the given words carry a nonzero correction."""
    s = space.s
    return sum(
        1 for w in words if not w.is_zero and phi_inv(w.x, s) is not None and phi_inv(w.y, s) is not None
    )


def all_words(s: int, max_len: int) -> list[WordMap]:
    """Every ``u_(n,x) u*_(m,y)`` with ``n, m <= max_len``."""
    return [
        WordMap(s, n, x, m, y)
        for n in range(max_len + 1)
        for x in range(s**n)
        for m in range(max_len + 1)
        for y in range(s**m)
    ]
