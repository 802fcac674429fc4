"""Check registry, runner and report emission.

A check is a function ``(params, ctx) -> None`` that feeds residuals into a
``Tally``; ``run_check`` wraps it into a ``CheckResult``.  Registration
happens in :mod:`sadic_shifts.checks`, imported lazily on first use.
"""

from __future__ import annotations

import csv
import fnmatch
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

SUITE_NAME = "sadic-shifts"


class UnknownCheck(KeyError):
    pass


class InfeasibleParams(ValueError):
    """Parameters too small for a check to have a non-empty validity set."""


@dataclass(frozen=True)
class CheckParams:
    s: int = 2
    N: int = 6
    tol: Optional[float] = None
    seed: int = 0
    samples: Optional[int] = None
    filters: tuple[str, ...] = ()

    def __post_init__(self):
        if self.s < 2:
            raise ValueError(f"s must be >= 2, got {self.s}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be positive")

    def rng(self, salt: str) -> np.random.Generator:
        # per-check stream so a check's inputs do not depend on suite order
        key = [self.seed, self.s, self.N, *salt.encode()]
        return np.random.default_rng(key)


@dataclass
class CheckResult:
    name: str
    paper_ref: str
    params: CheckParams
    validity_count: int
    max_residual: float
    tolerance: float
    passed: bool
    notes: list[dict] = field(default_factory=list)

    def row(self) -> dict:
        return {
            "name": self.name,
            "paper_ref": self.paper_ref,
            "max_residual": self.max_residual if math.isfinite(self.max_residual) else "inf",
            "tolerance": self.tolerance,
            "validity_count": self.validity_count,
            "pass": self.passed,
            "notes": self.notes,
        }


class Tally:
    """Running max residual and validity count for one check."""

    def __init__(self):
        self.max_residual = 0.0
        self.validity_count = 0
        self.notes: list[dict] = []

    def add(self, residual: float, count: int = 1) -> None:
        r = float(residual)
        if math.isnan(r):
            r = math.inf
        self.max_residual = max(self.max_residual, r)
        self.validity_count += int(count)

    def pair(self, result: tuple[float, int]) -> None:
        self.add(*result)

    def flag(self, bad: bool, count: int = 1) -> None:
        """Boolean condition: a failure counts as an infinite residual."""
        self.add(math.inf if bad else 0.0, count)

    def note(self, kind: str, ident: str, text: str) -> None:
        self.notes.append({"kind": kind, "id": ident, "text": text})


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    tolerance: float
    fn: Callable[[CheckParams, Tally], None]
    doc: str = ""


_REGISTRY: dict[str, Check] = {}


def register(name: str, anchor: str, tolerance: float = 1e-12):
    def deco(fn):
        if name in _REGISTRY:
            raise ValueError(f"check {name!r} registered twice")
        _REGISTRY[name] = Check(name, anchor, tolerance, fn, (fn.__doc__ or "").strip())
        return fn

    return deco


def registry() -> dict[str, Check]:
    from . import checks  # noqa: F401  (registers on import)

    return dict(sorted(_REGISTRY.items()))


def run_check(name: str, params: CheckParams) -> CheckResult:
    reg = registry()
    if name not in reg:
        raise UnknownCheck(name)
    chk = reg[name]
    tally = Tally()
    chk.fn(params, tally)
    if tally.validity_count == 0:
        raise InfeasibleParams(f"{name}: empty validity set at s={params.s}, N={params.N}")
    tol = chk.tolerance if params.tol is None else params.tol
    return CheckResult(
        name=name,
        paper_ref=chk.anchor,
        params=params,
        validity_count=tally.validity_count,
        max_residual=tally.max_residual,
        tolerance=tol,
        passed=tally.max_residual <= tol,
        notes=tally.notes,
    )


def select(pattern: str) -> list[str]:
    """Names matching a glob; a bare name also selects its dotted children."""
    names = list(registry())
    if pattern in ("", "*"):
        return names
    hits = [n for n in names if fnmatch.fnmatchcase(n, pattern)]
    if not hits and not any(ch in pattern for ch in "*?["):
        hits = [n for n in names if n.startswith(pattern + ".")]
    return hits


def run_suite(pattern: str, params: CheckParams) -> list[CheckResult]:
    names = select(pattern)
    if params.filters:
        names = [n for n in names if any(fnmatch.fnmatchcase(n, f) for f in params.filters)]
    return [_run_reported(n, params) for n in names]


def _run_reported(name: str, params: CheckParams) -> CheckResult:
    """Like ``run_check`` but an infeasible check becomes a failing result."""
    try:
        return run_check(name, params)
    except InfeasibleParams as exc:
        chk = registry()[name]
        return CheckResult(
            name=name,
            paper_ref=chk.anchor,
            params=params,
            validity_count=0,
            max_residual=math.inf,
            tolerance=chk.tolerance if params.tol is None else params.tol,
            passed=False,
            notes=[{"kind": "infeasible", "id": name, "text": str(exc)}],
        )


def emit_report(results: Iterable[CheckResult], fmt: str = "json", params: Optional[CheckParams] = None) -> str:
    results = list(results)
    if params is None and results:
        params = results[0].params
    if fmt == "json":
        doc = {
            "suite": SUITE_NAME,
            "s": params.s if params else None,
            "depth": params.N if params else None,
            "checks": [r.row() for r in results],
            "passed": all(r.passed for r in results),
        }
        return json.dumps(doc, indent=2, default=_json_default) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        cols = ["name", "paper_ref", "max_residual", "tolerance", "validity_count", "pass", "notes"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in results:
            row = r.row()
            row["max_residual"] = str(row["max_residual"])
            row["tolerance"] = str(row["tolerance"])
            row["notes"] = ";".join(f"{n['kind']}:{n['id']}" for n in row["notes"])
            w.writerow(row)
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def _json_default(o):
    if isinstance(o, CheckParams):
        return asdict(o)
    raise TypeError(type(o).__name__)


def with_tol(params: CheckParams, tol: Optional[float]) -> CheckParams:
    return replace(params, tol=tol)
