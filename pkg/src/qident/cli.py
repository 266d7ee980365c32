"""Command-line front end: list, verify, suite, series, dump-form."""
from __future__ import annotations

import argparse
import csv
import json
import sys

from . import prodexpr
from .characters import LabelError
from .qfunctions import VanishingProductError
from .fermionic import FAMILIES, DomainError, PruningError, build_form
from .series import SeriesError, SubstrateError, format_series, to_csv_rows
from .verify import DEFAULT_CAPS, PrefactorError, catalog, get_record, run_suite, verify

EXIT_OK, EXIT_DISCREPANCY, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _key_values(pairs, what) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"{what} must look like key=value, got {item!r}")
        try:
            out[key.strip()] = int(value)
        except ValueError:
            raise UsageError(f"{what} {key} must be an integer, got {value!r}") from None
    return out


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("order must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qident", description="Exact q-series identity checker.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list catalog identities")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("verify", help="verify one identity instance")
    p.add_argument("--id", required=True)
    p.add_argument("--param", action="append", default=[], metavar="K=V")
    p.add_argument("--order", type=_positive, default=40, help="order in powers of q")
    p.add_argument("--json", action="store_true")
    p.add_argument("--no-certify", action="store_true", help="skip the doubled-budget pruning check")

    p = sub.add_parser("suite", help="verify every catalog record over capped parameter ranges")
    p.add_argument("--order", type=_positive, default=40)
    p.add_argument("--cap", action="append", default=[], metavar="K=V",
                   help=f"parameter caps; defaults {DEFAULT_CAPS}")
    p.add_argument("--id", action="append", default=None, help="restrict to these record ids")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("series", help="expand a product expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--order", type=_positive, required=True)
    p.add_argument("--denom", type=_positive, default=None, help="substrate q^(1/D); default: coarsest")
    p.add_argument("--csv", action="store_true")

    p = sub.add_parser("dump-form", help="print a fermionic form as JSON")
    p.add_argument("--id", required=True, help="record id or fermionic family name")
    p.add_argument("--param", action="append", default=[], metavar="K=V")
    return ap


def _describe(params: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in params.items())


def _report_line(r) -> str:
    head = f"{r.id} {_describe(r.params)}".strip()
    tag = " (conjectural)" if r.conjectural else ""
    if r.status == "verified":
        return f"{head}: verified through q^{r.order_q} (D={r.D}){tag} [{r.wall_time_ms:.1f} ms]"
    if r.status == "discrepancy":
        d = r.first_discrepancy
        return f"{head}: DISCREPANCY at t^{d['t_exp']} (D={r.D}): lhs {d['lhs']} vs rhs {d['rhs']}{tag}"
    return f"{head}: ERROR {r.message}"


def _cmd_list(args, out) -> int:
    recs = catalog()
    if args.json:
        rows = [{"id": r.id, "family": r.family, "params": list(r.params), "domain": r.domain_text,
                 "provenance": r.provenance, "conjectural": r.conjectural} for r in recs]
        out.write(json.dumps(rows, indent=2) + "\n")
        return EXIT_OK
    for r in recs:
        params = ",".join(r.params) or "-"
        flag = "  [conjectural]" if r.conjectural else ""
        out.write(f"{r.id:24s} {params:18s} {r.provenance}{flag}\n")
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    params = _key_values(args.param, "--param")
    report = verify(args.id, params, args.order, certify=not args.no_certify)
    if args.json:
        out.write(json.dumps(report.to_json()) + "\n")
    else:
        out.write(_report_line(report) + "\n")
    return EXIT_OK if report.ok else EXIT_DISCREPANCY


def _cmd_suite(args, out) -> int:
    caps = _key_values(args.cap, "--cap")
    unknown = set(caps) - set(DEFAULT_CAPS)
    if unknown:
        raise UsageError(f"unknown caps {sorted(unknown)}; known: {sorted(DEFAULT_CAPS)}")
    if args.id:
        for i in args.id:
            get_record(i)
    reports = run_suite(args.order, caps, workers=max(args.jobs, 1), ids=args.id)
    counts = {"verified": 0, "discrepancy": 0, "error": 0}
    for r in reports:
        counts[r.status] += 1
    if args.json:
        payload = {"order_q": args.order, "caps": {**DEFAULT_CAPS, **caps}, "summary": counts,
                   "reports": [r.to_json() for r in reports]}
        out.write(json.dumps(payload) + "\n")
    else:
        for r in reports:
            if not r.ok:
                out.write(_report_line(r) + "\n")
        out.write(f"{len(reports)} instances: {counts['verified']} verified, "
                  f"{counts['discrepancy']} discrepancies, {counts['error']} errors\n")
    if counts["error"]:
        return EXIT_INTERNAL
    return EXIT_DISCREPANCY if counts["discrepancy"] else EXIT_OK


def _cmd_series(args, out) -> int:
    expr = prodexpr.parse(args.expr)
    need = expr.min_denom()
    denom = args.denom or need
    if denom % need:
        raise UsageError(f"expression needs a substrate q^(1/D) with D a multiple of {need}, got D={denom}")
    s = prodexpr.evaluate(expr, denom, args.order * denom)
    if args.csv:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["t_exponent", "q_exponent", "coefficient"])
        w.writerows(to_csv_rows(s))
    else:
        out.write(format_series(s) + "\n")
    return EXIT_OK


def _cmd_dump(args, out) -> int:
    params = _key_values(args.param, "--param")
    if args.id in FAMILIES:
        spec = build_form(args.id, **params)
    else:
        spec = get_record(args.id).form_spec(params)
    out.write(json.dumps(spec.to_json(), indent=2) + "\n")
    return EXIT_OK


_COMMANDS = {"list": _cmd_list, "verify": _cmd_verify, "suite": _cmd_suite, "series": _cmd_series,
             "dump-form": _cmd_dump}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out)
    except (UsageError, DomainError, LabelError, prodexpr.ParseError, VanishingProductError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (SeriesError, SubstrateError, PruningError, PrefactorError, RuntimeError, ArithmeticError) as exc:
        sys.stderr.write(f"internal evaluation error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
