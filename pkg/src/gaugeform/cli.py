"""Command-line front end: ``gaugeform <command> FILE ...``; all I/O is JSON."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import serialize as js
from .errors import GaugeFormError, InsufficientPrecision, ParseError
from .galois import coxeter_check, equivalent, regular_invariants
from .gauge import apply_gauge, verify_equivalence
from .liealg import GroupContext
from .reduce import (determinacy_window, ramification_bound, reduce_connection,
                     regular_ramification_bound)
from .scalars import degree_limit


def _load_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _load(path, args):
    return js.parse_connection(_load_json(path), args.degree_cap, args.precision)


def _emit(obj, out=None):
    text = js.dumps(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _invariant_record(result, ctx, a):
    rec = {"canonical": js.exact(result.canonical.invariants())}
    if ctx.is_reductive and ctx.levi and not result.canonical.levels:
        rec["monodromy"] = js.exact(regular_invariants(a, ctx, result).to_json())
    return rec


def cmd_reduce(args):
    a, ctx, fld = _load(args.file, args)
    result = reduce_connection(a, ctx, fld)
    check = result.verify()
    if not check.ok:  # pragma: no cover - a failure here is a reducer bug
        raise GaugeFormError(f"certificate failed verification at t^{check.first_discrepancy}")
    cert = js.gauge(result.certificate, result.field)
    report = {
        "status": "ok",
        "group": ctx.to_json(),
        "canonical": js.canonical(result.canonical),
        "invariants": _invariant_record(result, ctx, a),
        "bounds": {"used_ramification": result.used_ram, "ramification_bound": ramification_bound(ctx)},
        "verified_window": js.exact(check.window),
    }
    if ctx.is_reductive and ctx.levi:
        report["coxeter"] = js.exact(vars(coxeter_check(result, ctx)))
    if args.certificate:
        _emit(cert, args.certificate)
        report["certificate"] = args.certificate
    else:
        report["certificate"] = cert
    if args.trace:
        report["trace"] = js.exact(result.trace)
    _emit(report, args.out)
    return 0


def cmd_invariants(args):
    a, ctx, fld = _load(args.file, args)
    result = reduce_connection(a, ctx, fld)
    _emit(_invariant_record(result, ctx, a), args.out)
    return 0


def cmd_equiv(args):
    a1, ctx1, _ = _load(args.first, args)
    a2, ctx2, _ = _load(args.second, args)
    if ctx1 != ctx2:
        raise ParseError("the two files use different groups")
    d = equivalent(a1, a2, ctx1, args.over)
    out = {"equivalent": d.equivalent, "over": d.over,
           "witness": js.gauge(d.witness) if d.witness is not None else None,
           "distinguisher": js.exact(d.distinguisher)}
    _emit(out, args.out)
    return 0


def cmd_apply(args):
    a, ctx, fld = _load(args.file, args)
    g = js.parse_gauge(_load_json(args.gauge), ctx.n, fld)
    _emit(js.connection(apply_gauge(g, a, ctx), ctx, fld), args.out)
    return 0


def cmd_verify(args):
    a, ctx, fld = _load(args.source, args)
    b, _, _ = _load(args.target, args)
    g = js.parse_gauge(_load_json(args.certificate), ctx.n, fld)
    rep = verify_equivalence(g, a, b, ctx)
    out = {"ok": rep.ok, "window": js.exact(rep.window)}
    if not rep.ok:
        out["first_discrepancy"] = js.exact(rep.first_discrepancy)
        out["difference"] = js.matrix(rep.difference)
    _emit(out, args.out)
    return 0 if rep.ok else 1


def _window_json(w):
    return {k: js.exact(v) for k, v in vars(w).items() if v is not None}


def cmd_bounds(args):
    if args.file:
        ctx = js.parse_connection(_load_json(args.file), args.degree_cap)[1]
    else:
        try:
            ctx = GroupContext.from_json(json.loads(args.group))
        except (ValueError, KeyError, AttributeError) as exc:
            raise ParseError(f"bad group literal: {exc}") from exc
    table = []
    orders = [Fraction(-k) for k in range(2, 5)]
    if ctx.is_reductive and ctx.levi:
        table += [dict(kind="irregular", order=js.rational(r), **_window_json(determinacy_window(ctx, r)))
                  for r in orders]
        table += [dict(kind="regular", k=k, **_window_json(determinacy_window(ctx, -1, "regular", k=k)))
                  for k in range(3)]
    elif not ctx.levi:
        table += [dict(kind="unipotent", order=js.rational(r), **_window_json(determinacy_window(ctx, r, "unipotent")))
                  for r in orders]
    else:
        table += [dict(kind="solvable", order=js.rational(r),
                       **_window_json(determinacy_window(ctx, r, "solvable", torus_order=Fraction(-1))))
                  for r in orders]
    out = {"group": ctx.to_json(), "ramification_bound": ramification_bound(ctx),
           "regular_ramification_bound": regular_ramification_bound(ctx), "determinacy": table}
    _emit(out, args.out)
    return 0


def cmd_lift(args):
    a, ctx, fld = _load(args.file, args)
    b = args.by or a.ram
    if b % a.ram:
        raise ParseError(f"--by {b} is not a multiple of the file's ramification {a.ram}")
    _emit(js.connection(a.to_ram(b).b_lift(b), ctx, fld), args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="gaugeform", description="Canonical forms of formal connections.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=Fraction, default=None,
                        help="truncate inputs below this t-exponent")
    common.add_argument("--degree-cap", type=int, default=None, help="maximal [K:Q] for field growth")
    common.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", parents=[common], help="reduce to canonical form with a certificate")
    r.add_argument("file")
    r.add_argument("--certificate", default=None, help="write the certificate to this file")
    r.add_argument("--trace", action="store_true", help="include the operation trace")
    r.set_defaults(func=cmd_reduce)

    i = sub.add_parser("invariants", parents=[common], help="invariant record")
    i.add_argument("file")
    i.set_defaults(func=cmd_invariants)

    e = sub.add_parser("equiv", parents=[common], help="decide gauge equivalence")
    e.add_argument("first")
    e.add_argument("second")
    e.add_argument("--over", choices=["F", "Fbar"], default="Fbar")
    e.set_defaults(func=cmd_equiv)

    a = sub.add_parser("apply", parents=[common], help="apply a certificate to a connection")
    a.add_argument("file")
    a.add_argument("--gauge", required=True)
    a.set_defaults(func=cmd_apply)

    v = sub.add_parser("verify", parents=[common], help="check certificate . source = target")
    v.add_argument("source")
    v.add_argument("target")
    v.add_argument("--certificate", required=True)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bounds", parents=[common], help="ramification and determinacy bounds")
    b.add_argument("file", nargs="?")
    b.add_argument("--group", default='{"group": "SL", "n": 2}', help="group literal when no file is given")
    b.set_defaults(func=cmd_bounds)

    lf = sub.add_parser("lift", parents=[common], help="transport a connection over F_b to F")
    lf.add_argument("file")
    lf.add_argument("--by", type=int, default=None, help="ramification index b (default: the file's)")
    lf.set_defaults(func=cmd_lift)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with degree_limit(args.degree_cap):
            return args.func(args)
    except InsufficientPrecision as exc:
        need = exc.needed if exc.needed is not None else "unknown"
        print(f"insufficient precision: {exc} (required window: {need})", file=sys.stderr)
        return exc.exit_code
    except GaugeFormError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
