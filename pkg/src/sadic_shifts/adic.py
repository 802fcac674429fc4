"""Residues, tree vertices and locally constant functions on the s-adic integers.

A continuous function on Z_s is modelled by a :class:`CylinderFunction`: a
table of ``s**depth`` values indexed by ``x mod s**depth``.  Functions on the
vertex set of the s-adic tree that converge to a cylinder function along the
levels are modelled by :class:`TreeFunction`.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

Scalar = Union[int, float, complex]


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


def _check_s(s: int) -> None:
    if int(s) != s or s < 2:
        raise ValueError(f"base s must be an integer >= 2, got {s!r}")


@dataclass(frozen=True)
class Vertex:
    """Tree vertex ``(n, x)``: the ball of radius ``s**-n`` around ``x``."""

    n: int
    x: int

    def validate(self, s: int) -> "Vertex":
        if self.n < 0 or not 0 <= self.x < s**self.n:
            raise ValueError(f"invalid vertex {tuple(self)} for s={s}")
        return self

    def __iter__(self):
        return iter((self.n, self.x))


def vertex_parent(v: Vertex, s: int) -> Optional[Vertex]:
    v.validate(s)
    if v.n == 0:
        return None
    return Vertex(v.n - 1, v.x % s ** (v.n - 1))


def vertex_children(v: Vertex, s: int) -> list[Vertex]:
    v.validate(s)
    step = s**v.n
    return [Vertex(v.n + 1, v.x + j * step) for j in range(s)]


def digits(x: int, n: int, s: int) -> list[int]:
    """Little-endian base-s digits ``x_0, ..., x_{n-1}`` of ``0 <= x < s**n``."""
    if not 0 <= x < s**n:
        raise ValueError(f"{x} has more than {n} base-{s} digits")
    out = []
    for _ in range(n):
        x, d = divmod(x, s)
        out.append(d)
    return out


class CylinderFunction:
    """Locally constant function on Z_s depending only on ``x mod s**depth``.

    Instances are immutable.  Pointwise algebra lifts both operands to the
    larger depth; depth is never reduced automatically.
    """

    __slots__ = ("s", "depth", "values")

    def __init__(self, s: int, depth: int, values: Sequence[Scalar] | np.ndarray):
        _check_s(s)
        if depth < 0:
            raise ValueError("depth must be non-negative")
        arr = _frozen(values)
        if arr.shape != (s**depth,):
            raise ValueError(
                f"depth-{depth} table for s={s} needs {s**depth} values, got shape {arr.shape}"
            )
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("CylinderFunction is immutable")

    @classmethod
    def constant(cls, s: int, c: Scalar = 1.0) -> "CylinderFunction":
        return cls(s, 0, [c])

    @classmethod
    def from_function(cls, s: int, depth: int, fn: Callable[[int], Scalar]) -> "CylinderFunction":
        return cls(s, depth, [fn(r) for r in range(s**depth)])

    @property
    def period(self) -> int:
        return self.s**self.depth

    def __call__(self, x: int) -> complex:
        return complex(self.values[x % self.period])

    def at(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised evaluation at an integer array."""
        return self.values[np.asarray(xs) % self.period]

    def lift(self, depth: int) -> "CylinderFunction":
        if depth < self.depth:
            raise ValueError(f"cannot lift depth {self.depth} to smaller depth {depth}")
        if depth == self.depth:
            return self
        return CylinderFunction(self.s, depth, self.at(np.arange(self.s**depth)))

    def _common(self, other: "CylinderFunction") -> tuple[np.ndarray, np.ndarray, int]:
        if other.s != self.s:
            raise ValueError("cylinder functions over different bases")
        k = max(self.depth, other.depth)
        return self.lift(k).values, other.lift(k).values, k

    def _binary(self, other, op) -> "CylinderFunction":
        if isinstance(other, CylinderFunction):
            a, b, k = self._common(other)
            return CylinderFunction(self.s, k, op(a, b))
        if np.isscalar(other):
            return CylinderFunction(self.s, self.depth, op(self.values, complex(other)))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return CylinderFunction(self.s, self.depth, -self.values)

    def conj(self) -> "CylinderFunction":
        return CylinderFunction(self.s, self.depth, np.conj(self.values))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __eq__(self, other):
        if not isinstance(other, CylinderFunction):
            return NotImplemented
        if other.s != self.s:
            return False
        a, b, _ = self._common(other)
        return bool(np.array_equal(a, b))

    __hash__ = None  # type: ignore[assignment]

    def allclose(self, other: "CylinderFunction", atol: float = 1e-12) -> bool:
        a, b, _ = self._common(other)
        return bool(np.max(np.abs(a - b), initial=0.0) <= atol)

    def __repr__(self):
        return f"CylinderFunction(s={self.s}, depth={self.depth}, values={self.values.tolist()})"


def cyl_eval(f: CylinderFunction, x: int) -> complex:
    return f(x)


def cyl_lift(f: CylinderFunction, depth: int) -> CylinderFunction:
    return f.lift(depth)


def endo_map(kind: str, direction: str, f: CylinderFunction) -> CylinderFunction:
    """Apply one of the function maps attached to the shifts U, V and S.

    ``direction`` is ``"a"`` (the map implemented by conjugating with the
    shift) or ``"b"`` (its one-sided inverse).  Results are exact tables:
    U keeps the depth, ``b`` for V and S drops one level, ``a`` for V and S
    adds one.
    """
    s, k = f.s, f.depth
    key = (kind.upper(), direction.lower())
    if key == ("U", "a"):
        r = np.arange(s**k)
        return CylinderFunction(s, k, f.at(r - 1))
    if key == ("U", "b"):
        r = np.arange(s**k)
        return CylinderFunction(s, k, f.at(r + 1))
    if key == ("V", "b"):
        k2 = max(k - 1, 0)
        r = np.arange(s**k2)
        return CylinderFunction(s, k2, f.at(s * r))
    if key == ("V", "a"):
        r = np.arange(s ** (k + 1))
        vals = np.where(r % s == 0, f.at(r // s), 0.0)
        return CylinderFunction(s, k + 1, vals)
    if key == ("S", "b"):
        k2 = max(k - 1, 0)
        r = np.arange(s**k2)
        vals = sum(f.at(s * r + j) for j in range(s)) / s
        return CylinderFunction(s, k2, vals)
    if key == ("S", "a"):
        r = np.arange(s ** (k + 1))
        return CylinderFunction(s, k + 1, f.at(r // s))
    raise ValueError(f"no function map for shift {kind!r} direction {direction!r}")


class TreeFunction:
    """Bounded function F on tree vertices with a cylinder limit ``f_F``.

    ``levels[n]`` holds ``F(n, .)`` for ``n <= M``; beyond ``M`` the value is
    ``tail(x)``.  The constructor pads ``levels`` from the tail so that
    ``M >= tail.depth`` always holds, which makes ``F(n, x) = f_F(x)`` exact for
    every ``n > M``.
    """

    __slots__ = ("s", "levels", "tail")

    def __init__(self, s: int, levels: Sequence[Sequence[Scalar] | np.ndarray], tail: CylinderFunction):
        _check_s(s)
        if tail.s != s:
            raise ValueError("tail over a different base")
        lv = []
        for n, row in enumerate(levels):
            arr = _frozen(row)
            if arr.shape != (s**n,):
                raise ValueError(f"level {n} needs {s**n} values, got shape {arr.shape}")
            lv.append(arr)
        while len(lv) - 1 < tail.depth:
            n = len(lv)
            lv.append(_frozen(tail.at(np.arange(s**n))))
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "levels", tuple(lv))
        object.__setattr__(self, "tail", tail)

    def __setattr__(self, name, value):
        raise AttributeError("TreeFunction is immutable")

    @classmethod
    def from_cylinder(cls, f: CylinderFunction) -> "TreeFunction":
        return cls(f.s, [], f)

    @property
    def M(self) -> int:
        return len(self.levels) - 1

    def level(self, n: int) -> np.ndarray:
        if n <= self.M:
            return self.levels[n]
        return self.tail.at(np.arange(self.s**n))

    def __call__(self, n: int, x: int) -> complex:
        if not 0 <= x < self.s**n:
            raise ValueError(f"invalid vertex ({n}, {x})")
        if n <= self.M:
            return complex(self.levels[n][x])
        return self.tail(x)

    def extend(self, M: int) -> "TreeFunction":
        if M <= self.M:
            return self
        return TreeFunction(self.s, [self.level(n) for n in range(M + 1)], self.tail)

    def _coerce(self, other) -> Optional["TreeFunction"]:
        if isinstance(other, TreeFunction):
            return other
        if isinstance(other, CylinderFunction):
            return TreeFunction.from_cylinder(other)
        return None

    def _binary(self, other, op) -> "TreeFunction":
        o = self._coerce(other)
        if o is None:
            if np.isscalar(other):
                c = complex(other)
                return TreeFunction(self.s, [op(r, c) for r in self.levels], op(self.tail, c))
            return NotImplemented
        if o.s != self.s:
            raise ValueError("tree functions over different bases")
        M = max(self.M, o.M)
        a, b = self.extend(M), o.extend(M)
        levels = [op(x, y) for x, y in zip(a.levels, b.levels)]
        return TreeFunction(self.s, levels, op(a.tail, b.tail))

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, lambda x, y: x * y)

    __rmul__ = __mul__

    def __neg__(self):
        return TreeFunction(self.s, [-r for r in self.levels], -self.tail)

    def conj(self) -> "TreeFunction":
        return TreeFunction(self.s, [np.conj(r) for r in self.levels], self.tail.conj())

    def __eq__(self, other):
        if not isinstance(other, TreeFunction):
            return NotImplemented
        if other.s != self.s or not self.tail == other.tail:
            return False
        M = max(self.M, other.M)
        a, b = self.extend(M), other.extend(M)
        return all(np.array_equal(x, y) for x, y in zip(a.levels, b.levels))

    __hash__ = None  # type: ignore[assignment]

    def support_levels(self, atol: float = 0.0) -> list[int]:
        """Levels ``n <= M`` on which F is not identically zero.

        Only meaningful when the tail vanishes; levels past ``M`` are then zero.
        """
        return [n for n, row in enumerate(self.levels) if np.max(np.abs(row)) > atol]

    def __repr__(self):
        return f"TreeFunction(s={self.s}, M={self.M}, tail={self.tail!r})"


def tree_map_W(direction: str, F: TreeFunction) -> TreeFunction:
    """Function maps attached to the Serre shift; both keep the tail of F."""
    s = F.s
    if direction == "a":
        levels = [np.zeros(1, dtype=complex)]
        for n in range(1, F.M + 2):
            levels.append(F.level(n - 1)[np.arange(s**n) % s ** (n - 1)])
        return TreeFunction(s, levels, F.tail)
    if direction == "b":
        levels = []
        for n in range(F.M + 1):
            up = F.level(n + 1)
            x = np.arange(s**n)
            levels.append(sum(up[x + j * s**n] for j in range(s)) / s)
        return TreeFunction(s, levels, F.tail)
    raise ValueError(f"unknown direction {direction!r}")


def limit_deviation(F: TreeFunction, n: int) -> float:
    """``sup_x |F(n, x mod s^n) - f_F(x)|`` over residues mod ``s^max(n, depth)``."""
    s = F.s
    k = max(n, F.tail.depth)
    x = np.arange(s**k)
    diff = F.level(n)[x % s**n] - F.tail.at(x)
    return float(np.max(np.abs(diff)))


# special functions ---------------------------------------------------------


def residue_indicator(s: int, j: int) -> CylinderFunction:
    """Indicator of the ball ``x = j mod s``."""
    if not 0 <= j < s:
        raise ValueError(f"residue {j} out of range for s={s}")
    vals = np.zeros(s)
    vals[j] = 1.0
    return CylinderFunction(s, 1, vals)


def character(s: int, n: int) -> CylinderFunction:
    """``x -> exp(2 pi i x / s^n)``, a depth-n cylinder function."""
    if n < 0:
        raise ValueError("n must be non-negative")
    r = np.arange(s**n)
    return CylinderFunction(s, n, np.exp(2j * np.pi * r / s**n))


def level_indicator(s: int, n: int) -> TreeFunction:
    """``g_n``: one on level n, zero elsewhere (tail zero)."""
    levels = [np.zeros(s**m) for m in range(n + 1)]
    levels[n] = np.ones(s**n)
    return TreeFunction(s, levels, CylinderFunction.constant(s, 0.0))


def vertex_indicator(s: int, m: int, l: int) -> TreeFunction:
    """Indicator of the single vertex ``(m, l)``."""
    Vertex(m, l).validate(s)
    levels = [np.zeros(s**k) for k in range(m + 1)]
    levels[m][l] = 1.0
    return TreeFunction(s, levels, CylinderFunction.constant(s, 0.0))


def level_phase_average(s: int, n: int, m: int) -> complex:
    """``h_n(m) = (1/s) sum_{j<s} exp(2 pi i j s^m / s^(n+1))``.

    Equals 1 for ``m > n`` and 0 for ``m == n``.
    """
    if m > n:
        return 1.0 + 0j
    return sum(cmath.exp(2j * cmath.pi * j / s ** (n + 1 - m)) for j in range(s)) / s


def level_phase_function(s: int, n: int) -> TreeFunction:
    """``h_n`` as a function of the level only; tail is the constant 1."""
    levels = [np.full(s**m, level_phase_average(s, n, m)) for m in range(n + 1)]
    return TreeFunction(s, levels, CylinderFunction.constant(s, 1.0))


def special(kind: str, s: int, *params: int):
    """Dispatch by name to the special functions above."""
    table = {
        "chi_j": residue_indicator,
        "chi_character": character,
        "g_n": level_indicator,
        "chi_vertex": vertex_indicator,
        "h_n": level_phase_average,
    }
    try:
        fn = table[kind]
    except KeyError:
        raise ValueError(f"unknown special function {kind!r}") from None
    return fn(s, *params)
