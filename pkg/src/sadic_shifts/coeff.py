"""Coefficient-algebra data, Toeplitz maps and Fourier coefficients.

Sequences of cylinder functions and elements of ``C(X_V)`` are eventually
constant by construction, so every Toeplitz image is a finite sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adic import CylinderFunction, endo_map
from .hilbert import TruncatedOperator, TruncatedSpace, diag, expectation
from .shifts import bd_projection, hensel_projection, make_shift, serre_projection


@dataclass(frozen=True)
class ConvergentSequence:
    """``(f_0, ..., f_{K-1}, f_inf, f_inf, ...)``."""

    prefix: tuple[CylinderFunction, ...]
    tail: CylinderFunction

    def __init__(self, prefix: Sequence[CylinderFunction], tail: CylinderFunction):
        if any(f.s != tail.s for f in prefix):
            raise ValueError("sequence terms over different bases")
        object.__setattr__(self, "prefix", tuple(prefix))
        object.__setattr__(self, "tail", tail)

    @classmethod
    def constant(cls, f: CylinderFunction) -> "ConvergentSequence":
        return cls((), f)

    @property
    def s(self) -> int:
        return self.tail.s

    @property
    def K(self) -> int:
        return len(self.prefix)

    def term(self, n: int) -> CylinderFunction:
        return self.prefix[n] if n < self.K else self.tail

    @property
    def depth(self) -> int:
        return max([self.tail.depth, *(f.depth for f in self.prefix)])

    def sup_norm(self) -> float:
        return max([self.tail.max_abs(), *(f.max_abs() for f in self.prefix)])

    def __mul__(self, other: "ConvergentSequence") -> "ConvergentSequence":
        K = max(self.K, other.K)
        return ConvergentSequence([self.term(n) * other.term(n) for n in range(K)], self.tail * other.tail)

    def __add__(self, other: "ConvergentSequence") -> "ConvergentSequence":
        K = max(self.K, other.K)
        return ConvergentSequence([self.term(n) + other.term(n) for n in range(K)], self.tail + other.tail)

    def conj(self) -> "ConvergentSequence":
        return ConvergentSequence([f.conj() for f in self.prefix], self.tail.conj())

    def equals(self, other: "ConvergentSequence") -> bool:
        K = max(self.K, other.K)
        return all(self.term(n) == other.term(n) for n in range(K + 1))


@dataclass(frozen=True)
class XVFunction:
    """Continuous function on X_V: a cylinder function f and values ``x_n -> f(0)``."""

    f: CylinderFunction
    prefix: tuple[complex, ...]

    def __init__(self, f: CylinderFunction, prefix: Sequence[complex] = ()):
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "prefix", tuple(complex(v) for v in prefix))

    @property
    def K(self) -> int:
        return len(self.prefix)

    def x(self, n: int) -> complex:
        return self.prefix[n] if n < self.K else self.f(0)

    def sup_norm(self) -> float:
        return max([self.f.max_abs(), *(abs(v) for v in self.prefix)])

    def __mul__(self, other: "XVFunction") -> "XVFunction":
        K = max(self.K, other.K)
        return XVFunction(self.f * other.f, [self.x(n) * other.x(n) for n in range(K)])

    def conj(self) -> "XVFunction":
        return XVFunction(self.f.conj(), [np.conj(v) for v in self.prefix])

    def equals(self, other: "XVFunction") -> bool:
        K = max(self.K, other.K)
        return self.f == other.f and all(self.x(n) == other.x(n) for n in range(K + 1))


def _check_prefix(space: TruncatedSpace, K: int) -> None:
    if K > space.N:
        raise ValueError(f"{K} prefix slots do not fit in N={space.N}")


def toeplitz_U(space: TruncatedSpace, F: ConvergentSequence) -> TruncatedOperator:
    _check_prefix(space, F.K)
    out = diag(space, F.tail)
    for n, f in enumerate(F.prefix):
        out = out + diag(space, f - F.tail) @ bd_projection(space, n)
    return out


def toeplitz_V(space: TruncatedSpace, F: XVFunction) -> TruncatedOperator:
    _check_prefix(space, F.K)
    out = diag(space, F.f)
    f0 = F.f(0)
    for n, xn in enumerate(F.prefix):
        out = out + hensel_projection(space, n) * (xn - f0)
    return out


def toeplitz_W(space: TruncatedSpace, G: ConvergentSequence) -> TruncatedOperator:
    _check_prefix(space, G.K)
    out = diag(space, G.tail)
    for n, g in enumerate(G.prefix):
        P = serre_projection(space, n)
        out = out + P @ diag(space, g - G.tail) @ P
    return out


def seq_endo(kind: str, direction: str, data):
    """Tilde endomorphisms on sequences (kind U) and on ``C(X_V)`` (kind V).

    ``alpha`` shifts the data one slot to the right, filling slot 0 with zero;
    ``beta`` drops slot 0.  Functions are pushed through the matching
    ``a``/``b`` cylinder maps.
    """
    kind, direction = kind.upper(), direction.lower()
    if kind == "U" and isinstance(data, ConvergentSequence):
        zero = CylinderFunction.constant(data.s, 0.0)
        if direction == "alpha":
            prefix = [zero] + [endo_map("U", "a", f) for f in data.prefix]
            return ConvergentSequence(prefix, endo_map("U", "a", data.tail))
        if direction == "beta":
            prefix = [endo_map("U", "b", f) for f in data.prefix[1:]]
            return ConvergentSequence(prefix, endo_map("U", "b", data.tail))
    if kind == "V" and isinstance(data, XVFunction):
        if direction == "alpha":
            return XVFunction(endo_map("V", "a", data.f), [0.0, *data.prefix])
        if direction == "beta":
            return XVFunction(endo_map("V", "b", data.f), data.prefix[1:])
    raise ValueError(f"no tilde map for kind={kind!r}, direction={direction!r}, data={type(data).__name__}")


def shift_sequence(G: ConvergentSequence) -> ConvergentSequence:
    """``(0, g_0, g_1, ...)`` with the same limit."""
    zero = CylinderFunction.constant(G.s, 0.0)
    return ConvergentSequence([zero, *G.prefix], G.tail)


def fourier_coefficient(a: TruncatedOperator, d: int, kind: str) -> TruncatedOperator:
    """Coefficient ``a_d`` of ``a`` in powers of the shift ``kind``.

    ``E(a J*^d)`` for ``d >= 0`` and ``E(J^|d| a)`` for ``d < 0``; the result
    already satisfies ``a_d = a_d J^d J*^d`` (resp. ``J^|d| J*^|d| a_d``).
    """
    J = make_shift(a.space, kind)
    if d >= 0:
        return expectation(a @ J.adjoint().power(d))
    return expectation(J.power(-d) @ a)


def fourier_reconstruct(coeffs: dict[int, TruncatedOperator], kind: str) -> TruncatedOperator:
    """``sum_{d>=0} a_d J^d + sum_{d<0} J*^|d| a_d``."""
    it = iter(coeffs.items())
    space = next(iter(coeffs.values())).space
    J = make_shift(space, kind)
    out = None
    for d, c in it:
        term = c @ J.power(d) if d >= 0 else J.adjoint().power(-d) @ c
        out = term if out is None else out + term
    return out
