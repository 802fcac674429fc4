"""Tiny operator-expression language used by the CLI.

A spec is a product of factors separated by ``.``, applied right to left
like ordinary operator composition.  Factors:

    U V S W        shifts; a trailing ``*`` takes the adjoint (``U*``)
    I              identity
    P<n>           Bunce-Deddens projection P_n
    PV<n>          Hensel projection P_(n,0)
    PW<n>          Serre projection
    P00            projection onto E_(0,0)
    S<j>           Cuntz generator S_j
    G<n>           diagonal of the level indicator g_n
    CHI<j>         diagonal of the residue indicator chi_j

Examples: ``U``, ``U*.U``, ``S1.S1*``, ``PW0``.
"""

from __future__ import annotations

import re

from . import adic, shifts
from .hilbert import TruncatedOperator, TruncatedSpace, diag, identity

_FACTOR = re.compile(r"^(P00|PV\d+|PW\d+|P\d+|CHI\d+|G\d+|S\d+|[UVSWI])(\*?)$")


class OpSpecError(ValueError):
    pass


def _factor(space: TruncatedSpace, token: str) -> TruncatedOperator:
    m = _FACTOR.match(token.strip().upper())
    if not m:
        raise OpSpecError(f"cannot parse factor {token!r}")
    head, star = m.groups()
    if head in shifts.KINDS:
        op = shifts.make_shift(space, head)
    elif head == "I":
        op = identity(space)
    elif head == "P00":
        op = shifts.p00(space)
    elif head.startswith("PV"):
        op = shifts.hensel_projection(space, int(head[2:]))
    elif head.startswith("PW"):
        op = shifts.serre_projection(space, int(head[2:]))
    elif head.startswith("P"):
        op = shifts.bd_projection(space, int(head[1:]))
    elif head.startswith("CHI"):
        op = diag(space, adic.residue_indicator(space.s, int(head[3:])))
    elif head.startswith("G"):
        op = diag(space, adic.level_indicator(space.s, int(head[1:])))
    else:
        op = shifts.cuntz_generator(space, int(head[1:]))
    return op.adjoint() if star else op


def parse(spec: str, space: TruncatedSpace) -> TruncatedOperator:
    tokens = [t for t in spec.split(".") if t.strip()]
    if not tokens:
        raise OpSpecError("empty operator spec")
    out = _factor(space, tokens[0])
    for tok in tokens[1:]:
        out = out @ _factor(space, tok)
    return out
