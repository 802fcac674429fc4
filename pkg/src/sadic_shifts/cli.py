"""Command line: ``python -m sadic_shifts {check,suite,dump,norm}``."""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import harness, hilbert, opspec

SEED_ENV = "SADIC_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV} must be an integer, got {raw!r}")


def _params(args) -> harness.CheckParams:
    seed = args.seed if args.seed is not None else _default_seed()
    return harness.CheckParams(s=args.s, N=args.depth, tol=args.tol, seed=seed, samples=args.samples)


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s", type=int, default=2, help="tree branching (s >= 2)")
    p.add_argument("--depth", type=int, default=6, help="truncation level N")


def _add_run(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None, help="override the per-check tolerance")
    p.add_argument("--seed", type=int, default=None, help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--samples", type=int, default=None, help="override per-check sample counts")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sadic-shifts", description="Truncated shift operators on the s-adic tree.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", help="run one named check")
    p.add_argument("--name", required=True)
    _add_grid(p)
    _add_run(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("suite", help="run every check matching a glob")
    p.add_argument("--filter", default="*")
    _add_grid(p)
    _add_run(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")

    p = sub.add_parser("dump", help="print an operator in the text matrix format")
    p.add_argument("--op", required=True)
    _add_grid(p)

    p = sub.add_parser("norm", help="spectral norm of an operator")
    p.add_argument("--op", required=True)
    _add_grid(p)
    p.add_argument("--tol", type=float, default=1e-12)

    sub.add_parser("list", help="list registered checks")
    return ap


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SystemExit(f"cannot write report to {out}: {exc.strerror}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "list":
            for name, chk in harness.registry().items():
                print(f"{name}\t{chk.anchor}")
            return 0
        if args.cmd in ("dump", "norm"):
            space = hilbert.TruncatedSpace(args.s, args.depth)
            op = opspec.parse(args.op, space)
            if args.cmd == "dump":
                sys.stdout.write(hilbert.dump(op))
            else:
                print(repr(hilbert.spectral_norm(op, args.tol)))
            return 0
        params = _params(args)
        if args.cmd == "check":
            results = [harness.run_check(args.name, params)]
            _write(harness.emit_report(results, args.format, params), None)
        else:
            results = harness.run_suite(args.filter, params)
            if not results:
                print(f"no checks match {args.filter!r}", file=sys.stderr)
                return 2
            _write(harness.emit_report(results, args.format, params), args.out)
        return 0 if all(r.passed for r in results) else 1
    except harness.UnknownCheck as exc:
        print(f"unknown check: {exc.args[0]}", file=sys.stderr)
        return 2
    except (harness.InfeasibleParams, opspec.OpSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
