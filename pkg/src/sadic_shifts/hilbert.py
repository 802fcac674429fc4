"""Truncated tree Hilbert space and sparse operators on it.

``H_{<=N}`` is spanned by ``E_(n,x)`` with ``n <= N``, ordered level by level
and by ``x`` inside a level.  Operators are compressions of operators on the
full space.  Each operator carries a small level profile (``raise_``,
``dmin``, ``dmax``) that bounds how far above its starting level any path
through the defining word climbs; a product of compressions agrees with the
compression of the product on every basis column ``(n, x)`` with
``n + raise_ <= N`` (the validity set).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .adic import CylinderFunction, TreeFunction

DENSE_LIMIT = 512
BLOCK_LIMIT = 1024
FALLBACK_LIMIT = 2048
POWER_MAX_ITER = 10_000
_POWER_SEED = 20240611


class SpaceMismatchError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Power iteration hit its iteration cap; ``bracket`` holds the last two estimates."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class TruncatedSpace:
    s: int
    N: int

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 2:
            raise ValueError(f"s must be an integer >= 2, got {self.s!r}")
        if self.N < 0:
            raise ValueError("N must be non-negative")

    @property
    def dim(self) -> int:
        return (self.s ** (self.N + 1) - 1) // (self.s - 1)

    def offset(self, n: int) -> int:
        return (self.s**n - 1) // (self.s - 1)

    def index(self, n: int, x: int) -> int:
        if not (0 <= n <= self.N and 0 <= x < self.s**n):
            raise ValueError(f"vertex ({n}, {x}) not in H_<= {self.N} for s={self.s}")
        return self.offset(n) + x

    def vertex(self, i: int) -> tuple[int, int]:
        n = int(self.levels[i])
        return n, i - self.offset(n)

    @cached_property
    def levels(self) -> np.ndarray:
        return np.concatenate([np.full(self.s**n, n) for n in range(self.N + 1)])

    @cached_property
    def xs(self) -> np.ndarray:
        return np.concatenate([np.arange(self.s**n) for n in range(self.N + 1)])

    def level_slice(self, n: int) -> slice:
        return slice(self.offset(n), self.offset(n + 1))

    def basis_vector(self, n: int, x: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(n, x)] = 1.0
        return v

    def __hash__(self):
        return hash((self.s, self.N))


Scalar = Union[int, float, complex]


class TruncatedOperator:
    """Sparse complex matrix on ``H_{<=N}`` with its level profile."""

    __array_priority__ = 100

    def __init__(self, space: TruncatedSpace, matrix, raise_: int = 0, dmin: int = 0, dmax: int = 0):
        m = sp.csr_matrix(matrix, dtype=np.complex128, shape=(space.dim, space.dim))
        m.eliminate_zeros()
        m.sort_indices()
        self.space = space
        self.matrix = m
        self.raise_ = raise_
        self.dmin = dmin
        self.dmax = dmax

    # construction helpers

    @classmethod
    def from_entries(cls, space, rows, cols, vals, **profile) -> "TruncatedOperator":
        m = sp.coo_matrix((vals, (rows, cols)), shape=(space.dim, space.dim), dtype=np.complex128)
        return cls(space, m.tocsr(), **profile)

    @classmethod
    def identity(cls, space: TruncatedSpace) -> "TruncatedOperator":
        return cls(space, sp.identity(space.dim, dtype=np.complex128, format="csr"))

    @classmethod
    def zero(cls, space: TruncatedSpace) -> "TruncatedOperator":
        return cls(space, sp.csr_matrix((space.dim, space.dim), dtype=np.complex128))

    # algebra

    def _check(self, other: "TruncatedOperator"):
        if not isinstance(other, TruncatedOperator):
            raise TypeError(f"expected TruncatedOperator, got {type(other).__name__}")
        if other.space != self.space:
            raise SpaceMismatchError(f"operators on {self.space} and {other.space}")

    def __add__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check(other)
            return TruncatedOperator(
                self.space,
                self.matrix + other.matrix,
                max(self.raise_, other.raise_),
                min(self.dmin, other.dmin),
                max(self.dmax, other.dmax),
            )
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TruncatedOperator):
            return self + (-other)
        return NotImplemented

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c: Scalar) -> "TruncatedOperator":
        return TruncatedOperator(self.space, self.matrix * complex(c), self.raise_, self.dmin, self.dmax)

    def __mul__(self, c):
        if np.isscalar(c):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, TruncatedOperator):
            self._check(other)
            return TruncatedOperator(
                self.space,
                self.matrix @ other.matrix,
                max(other.raise_, other.dmax + self.raise_),
                self.dmin + other.dmin,
                self.dmax + other.dmax,
            )
        if isinstance(other, np.ndarray):
            return self.matrix @ other
        return NotImplemented

    def adjoint(self) -> "TruncatedOperator":
        return TruncatedOperator(
            self.space, self.matrix.conj().T.tocsr(), self.raise_ - self.dmin, -self.dmax, -self.dmin
        )

    @property
    def H(self) -> "TruncatedOperator":
        return self.adjoint()

    def power(self, k: int) -> "TruncatedOperator":
        out = TruncatedOperator.identity(self.space)
        for _ in range(k):
            out = self @ out
        return out

    def with_profile(self, raise_: int, dmin: int, dmax: int) -> "TruncatedOperator":
        return TruncatedOperator(self.space, self.matrix, raise_, dmin, dmax)

    # inspection

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def entry(self, row: tuple[int, int], col: tuple[int, int]) -> complex:
        return complex(self.matrix[self.space.index(*row), self.space.index(*col)])

    def apply(self, n: int, x: int) -> dict[tuple[int, int], complex]:
        """Image of ``E_(n,x)`` as a sparse dict ``{(level, x): coefficient}``."""
        col = self.matrix[:, self.space.index(n, x)].tocoo()
        return {self.space.vertex(int(r)): complex(v) for r, v in zip(col.row, col.data)}

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def valid_columns(self, extra_raise: int = 0) -> np.ndarray:
        r = max(self.raise_, extra_raise)
        return np.flatnonzero(self.space.levels + r <= self.space.N)

    def __repr__(self):
        sp_ = self.space
        return f"TruncatedOperator(s={sp_.s}, N={sp_.N}, nnz={self.nnz}, raise={self.raise_})"


Operator = TruncatedOperator


def identity(space: TruncatedSpace) -> TruncatedOperator:
    return TruncatedOperator.identity(space)


def adjoint(a: TruncatedOperator) -> TruncatedOperator:
    return a.adjoint()


def compare(lhs: TruncatedOperator, rhs: TruncatedOperator) -> tuple[float, int]:
    """Max entrywise mismatch over the columns valid for both sides, and their count."""
    lhs._check(rhs)
    cols = lhs.valid_columns(rhs.raise_)
    if cols.size == 0:
        return 0.0, 0
    diff = (lhs.matrix - rhs.matrix)[:, cols]
    return (float(np.max(np.abs(diff.data))) if diff.nnz else 0.0), int(cols.size)


def diag(space: TruncatedSpace, f: Union[CylinderFunction, TreeFunction, Scalar]) -> TruncatedOperator:
    """Multiplication operator ``M_f`` (cylinder) or ``M_F`` (tree function)."""
    if isinstance(f, CylinderFunction):
        if f.s != space.s:
            raise SpaceMismatchError("function and space over different bases")
        vals = f.at(space.xs)
    elif isinstance(f, TreeFunction):
        if f.s != space.s:
            raise SpaceMismatchError("function and space over different bases")
        vals = np.concatenate([f.level(n) for n in range(space.N + 1)])
    elif np.isscalar(f):
        vals = np.full(space.dim, complex(f))
    else:
        raise TypeError(f"cannot build a diagonal from {type(f).__name__}")
    return TruncatedOperator(space, sp.diags(vals, format="csr"))


# gauge grading ---------------------------------------------------------------


def _level_diff(a: TruncatedOperator) -> tuple[sp.coo_matrix, np.ndarray]:
    coo = a.matrix.tocoo()
    lv = a.space.levels
    return coo, lv[coo.row] - lv[coo.col]


def degree_component(a: TruncatedOperator, d: int) -> TruncatedOperator:
    """Entries mapping level n to level n + d."""
    coo, deg = _level_diff(a)
    keep = deg == d
    m = sp.coo_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])), shape=coo.shape)
    return TruncatedOperator(a.space, m.tocsr(), a.raise_, d, d)


def degrees(a: TruncatedOperator) -> list[int]:
    _, deg = _level_diff(a)
    return sorted(set(int(d) for d in deg))


def expectation(a: TruncatedOperator) -> TruncatedOperator:
    return degree_component(a, 0)


def gauge_rotate(a: TruncatedOperator, theta: float) -> TruncatedOperator:
    """``U_theta a U_theta^{-1}`` with ``U_theta E_(n,x) = exp(2 pi i n theta) E_(n,x)``."""
    phases = np.exp(2j * np.pi * a.space.levels * theta)
    u = sp.diags(phases, format="csr")
    u_inv = sp.diags(np.conj(phases), format="csr")
    return TruncatedOperator(a.space, u @ a.matrix @ u_inv, a.raise_, a.dmin, a.dmax)


def quadrature_expectation(a: TruncatedOperator, Q: int) -> TruncatedOperator:
    """Average of the gauge rotations at the Q-th roots of unity."""
    if Q < 1:
        raise ValueError("Q must be positive")
    total = sp.csr_matrix(a.matrix.shape, dtype=np.complex128)
    for q in range(Q):
        total = total + gauge_rotate(a, q / Q).matrix
    out = total / Q
    # cancellation leaves roundoff-level entries where the degree is nonzero
    return TruncatedOperator(a.space, out, a.raise_, a.dmin, a.dmax)


# blocks and norms --------------------------------------------------------------


def block(a: TruncatedOperator, n: int) -> np.ndarray:
    sl = a.space.level_slice(n)
    return a.matrix[sl, sl].toarray()


def compress_levels(a: TruncatedOperator, m: int) -> sp.csr_matrix:
    start = a.space.offset(m)
    return a.matrix[start:, start:]


def tail_norm(a: TruncatedOperator, m: int, tol: float = 1e-12) -> float:
    """Spectral norm of the compression of ``a`` to levels ``>= m``."""
    if not 0 <= m <= a.space.N:
        raise ValueError(f"level {m} outside 0..{a.space.N}")
    return _matrix_norm(compress_levels(a, m), tol, a.space, first_level=m)


def spectral_norm(a: TruncatedOperator, tol: float = 1e-12) -> float:
    """Largest singular value.

    Dense SVD when ``dim <= 512``; for level-preserving operators whose
    blocks have at most 1024 rows, the maximum of exact block norms; otherwise power
    iteration on ``a* a`` from a fixed-seed start vector.  If the iteration
    stalls on a matrix of at most 2048 rows the dense SVD is used instead;
    larger matrices raise ``ConvergenceError``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _matrix_norm(a.matrix, tol, a.space, first_level=0)


def _matrix_norm(m: sp.spmatrix, tol: float, space: TruncatedSpace, first_level: int) -> float:
    m = sp.csr_matrix(m)
    if m.nnz == 0:
        return 0.0
    if m.shape[0] <= DENSE_LIMIT:
        return _dense_norm(m)
    coo = m.tocoo()
    lv = space.levels[space.offset(first_level):]
    if np.all(lv[coo.row] == lv[coo.col]) and space.s**space.N <= BLOCK_LIMIT:
        best = 0.0
        for n in range(first_level, space.N + 1):
            lo = space.offset(n) - space.offset(first_level)
            hi = lo + space.s**n
            blk = m[lo:hi, lo:hi]
            if blk.nnz:
                best = max(best, _dense_norm(blk))
        return best
    try:
        return power_norm(m, tol)
    except ConvergenceError:
        if m.shape[0] <= FALLBACK_LIMIT:
            return _dense_norm(m)
        raise


def _dense_norm(m: sp.spmatrix) -> float:
    return float(np.linalg.norm(m.toarray(), 2))


def power_norm(m: sp.spmatrix, tol: float, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest singular value by power iteration on ``m* m``.

    Stops once two successive estimates differ by at most ``tol`` relative to
    the estimate; the estimate only increases towards the true value.
    """
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    mh = m.conj().T.tocsr()
    prev = 0.0
    est = 0.0
    for _ in range(max_iter):
        w = mh @ (m @ v)
        lam = float(np.real(np.vdot(v, w)))
        est = math.sqrt(max(lam, 0.0))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(est - prev) <= tol * max(est, 1.0):
            return est
        prev = est
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations", (min(prev, est), max(prev, est))
    )


# text dump -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v + 0.0:.16e}"


def dump(a: TruncatedOperator) -> str:
    """Bit-exact text dump: header line then ``row col re im`` in row-major order."""
    sp_ = a.space
    lines = [f"# s={sp_.s} N={sp_.N} dim={sp_.dim} ordering=level-lex"]
    coo = a.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for k in order:
        z = coo.data[k]
        lines.append(f"{coo.row[k]} {coo.col[k]} {_fmt(z.real)} {_fmt(z.imag)}")
    return "\n".join(lines) + "\n"


def parse_dump(text: str) -> TruncatedOperator:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(tok.split("=") for tok in lines[0].lstrip("# ").split())
    space = TruncatedSpace(int(header["s"]), int(header["N"]))
    if int(header["dim"]) != space.dim:
        raise ValueError("dimension in header does not match s and N")
    rows, cols, vals = [], [], []
    for ln in lines[1:]:
        r, c, re, im = ln.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(complex(float(re), float(im)))
    return TruncatedOperator.from_entries(space, rows, cols, vals)


def max_abs(a: TruncatedOperator, cols: Optional[np.ndarray] = None) -> float:
    m = a.matrix if cols is None else a.matrix[:, cols]
    return float(np.max(np.abs(m.data))) if m.nnz else 0.0
