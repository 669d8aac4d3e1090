"""Command line entry point: ``twoenum {verify,count,enumerate,reduce,export-graph}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

from . import formulas
from .asm import BottomSpec, bottom_values, enumerate_full_asms, enumerate_halved_asms, weight_stats
from .bijections import verify_partition
from .exact import format_rational
from .graphs import (WeightedGraph, build_aztec_rectangle, build_aztec_rectangle_kept_bottom, build_fortress,
                     build_gn, build_teeth_region, normalize_fortress_bottom)
from .matchings import matching_sum
from .renewal import TraceVerificationError, RewriteError, reduce_gn_once, replay

MAX_N_ENV = "TWOENUM_MAX_N"
DEFAULT_MAX_N = 4


class GuardrailError(Exception):
    pass


def _max_n() -> int:
    raw = os.environ.get(MAX_N_ENV)
    if not raw:
        return DEFAULT_MAX_N
    try:
        return int(raw)
    except ValueError:
        raise GuardrailError(f"{MAX_N_ENV} must be an integer, got {raw!r}")


def _guard(args: argparse.Namespace, *sizes: int) -> None:
    ceiling = _max_n()
    big = [s for s in sizes if s > ceiling]
    if big and not getattr(args, "allow_large", False):
        raise GuardrailError(f"size {max(big)} exceeds the size limit {ceiling} "
                             f"(set {MAX_N_ENV} or pass --allow-large)")


def parse_range(text: str) -> list[int]:
    """``"3"``, ``"1..4"`` or ``"1-4"`` to a list of ints."""
    text = text.strip()
    for sep in ("..", "-"):
        if sep in text:
            lo, hi = text.split(sep, 1)
            a, b = int(lo), int(hi)
            if a > b:
                raise argparse.ArgumentTypeError(f"empty range {text!r}")
            return list(range(a, b + 1))
    return [int(text)]


def _range_arg(text: str) -> list[int]:
    try:
        return parse_range(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a range: {text!r}")


# ----------------------------------------------------------------------
# verify


class Report:
    def __init__(self, out) -> None:
        self.out = out
        self.failures = 0

    def line(self, label: str, values: dict[str, object]) -> None:
        shown = {k: (format_rational(v) if not isinstance(v, str) else v) for k, v in values.items()}
        ok = len(set(shown.values())) == 1
        if not ok:
            self.failures += 1
        body = "  ".join(f"{k}={v}" for k, v in shown.items())
        print(f"{'ok  ' if ok else 'FAIL'}  {label}  {body}", file=self.out)

    def flag(self, label: str, ok: bool, detail: str = "") -> None:
        if not ok:
            self.failures += 1
        print(f"{'ok  ' if ok else 'FAIL'}  {label}  {detail}".rstrip(), file=self.out)


def _engine_sum(g: WeightedGraph, engine: str):
    return matching_sum(g, engine)


def _verify_theorem1(ns, engine, rep: Report) -> None:
    for n in ns:
        asms = sum(2 ** weight_stats(a).n_minus for a in enumerate_halved_asms(n))
        rep.line(f"theorem1 n={n}", {"asm": asms, f"teeth[{engine}]": _engine_sum(build_teeth_region(n), engine),
                                    "formula": formulas.theorem1_value(n)})


def _verify_theorem2(ns, engine, rep: Report) -> None:
    for n in ns:
        asms = sum(2 ** weight_stats(a).fortress_exponent for a in enumerate_halved_asms(n))
        fort = sum(_engine_sum(build_fortress(n, cs), engine) for cs in BottomSpec.free(n).configurations())
        rep.line(f"theorem2 n={n}", {"asm": asms, f"2^(n^2)*M(G_n)[{engine}]": 2 ** (n * n) * _engine_sum(build_gn(n), engine),
                                    f"fortress[{engine}]": fort, "formula": formulas.theorem2_value(n)})


def _verify_theorem3(ns, engine, rep: Report) -> None:
    for n in ns:
        for variant, c in (("n+1", n + 1), ("n-1", n - 1)):
            spec = BottomSpec.fixed(n, c)
            asms = sum(2 ** weight_stats(a).fortress_exponent for a in enumerate_halved_asms(n, spec))
            rep.line(f"theorem3 n={n} c={variant}", {"asm": asms,
                                                      f"fortress[{engine}]": _engine_sum(build_fortress(n, spec), engine),
                                                      "formula": formulas.theorem3_value(n, variant)})


def _verify_lemma(ms, engine, rep: Report, kmax: int = 4) -> None:
    for m in ms:
        for k in range(m, kmax + 1):
            for xs in combinations(range(1, k + 1), m):
                g = build_aztec_rectangle_kept_bottom(m, k, xs)
                rep.line(f"lemma m={m} k={k} xs={list(xs)}",
                         {f"graph[{engine}]": _engine_sum(g, engine), "formula": formulas.aztec_rect_count(m, xs)})


def _verify_remarks(ns, engine, rep: Report) -> None:
    for k in ns:
        full, fort = formulas.remark_values(k)
        rep.line(f"full ASMs order={k}", {"asm": sum(2 ** weight_stats(a).n_minus for a in enumerate_full_asms(k)),
                                            "formula": full})
        if 2 * k <= 6:
            rep.line(f"full ASMs order={2 * k} even/odd weight",
                     {"asm": sum(2 ** weight_stats(a).fortress_exponent for a in enumerate_full_asms(2 * k)),
                      "formula": fort})


def _verify_recursion(ns, engine, rep: Report) -> None:
    for n in ns:
        if n == 1:
            rep.line("recursion n=1", {f"M(G_1)[{engine}]": _engine_sum(build_gn(1), engine), "formula": formulas.gn_value(1)})
            continue
        ratio = _engine_sum(build_gn(n), engine) / _engine_sum(build_gn(n - 1), engine)
        trace = reduce_gn_once(n)
        rep.line(f"recursion n={n}", {f"ratio[{engine}]": ratio, "reduction": trace.cumulative,
                                      "formula": formulas.gn_ratio(n)})


def _verify_partition(ns, engine, rep: Report) -> None:
    for n in ns:
        for family in ("teeth", "fortress"):
            r = verify_partition(n, family)
            rep.flag(f"partition {family} n={n}", r.ok, r.summary())


VERIFIERS: dict[str, Callable] = {
    "1": _verify_theorem1,
    "2": _verify_theorem2,
    "3": _verify_theorem3,
    "lemma": _verify_lemma,
    "remarks": _verify_remarks,
    "recursion": _verify_recursion,
    "partition": _verify_partition,
}

DEFAULT_RANGES = {"1": "1..4", "2": "1..4", "3": "1..4", "lemma": "1..3", "remarks": "1..4",
                  "recursion": "1..3", "partition": "1..2"}


def cmd_verify(args: argparse.Namespace) -> int:
    ns = args.n if args.n is not None else parse_range(DEFAULT_RANGES[args.theorem])
    _guard(args, *ns)
    rep = Report(sys.stdout)
    VERIFIERS[args.theorem](ns, args.engine, rep)
    print(f"{'all identities hold' if not rep.failures else f'{rep.failures} mismatch(es)'}")
    return 0 if rep.failures == 0 else 1


# ----------------------------------------------------------------------
# graphs from flags


def _keep(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def build_from_args(args: argparse.Namespace) -> WeightedGraph:
    kind = args.builder
    if kind in ("teeth", "gn", "fortress", "fortress-normalized"):
        if args.n is None:
            raise SystemExit(f"{kind} needs --n")
        _guard(args, args.n)
    if kind == "teeth":
        return build_teeth_region(args.n)
    if kind == "gn":
        return build_gn(args.n)
    if kind in ("fortress", "fortress-normalized"):
        spec = BottomSpec.parse(args.n, args.c)
        if not spec.is_fixed:
            raise ValueError("a fortress needs every c_i fixed: --c n+1, --c n-1 or a comma list")
        g = build_fortress(args.n, spec)
        return normalize_fortress_bottom(g, args.n) if kind == "fortress-normalized" else g
    if kind == "aztec-rect":
        if args.m is None or args.k is None:
            raise SystemExit("aztec-rect needs --m and --k")
        _guard(args, args.m)
        if args.keep is None:
            return build_aztec_rectangle(args.m, args.k)
        return build_aztec_rectangle_kept_bottom(args.m, args.k, _keep(args.keep))
    raise SystemExit(f"unknown builder {kind!r}")


def cmd_count(args: argparse.Namespace) -> int:
    g = build_from_args(args)
    print(format_rational(matching_sum(g, args.engine)))
    return 0


def cmd_export_graph(args: argparse.Namespace) -> int:
    g = build_from_args(args)
    text = g.to_json(indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------------
# enumerate


def enumerate_rows(n: int, spec: BottomSpec) -> list[dict]:
    rows = []
    for k, a in enumerate(enumerate_halved_asms(n, spec)):
        st = weight_stats(a)
        rows.append({
            "index": k,
            "asm": [list(r) for r in a],
            "c": list(bottom_values(a)),
            "stats": st.to_dict(),
            "weight_minus": 2 ** st.n_minus,
            "weight_even_odd": 2 ** st.fortress_exponent,
        })
    return rows


def cmd_enumerate(args: argparse.Namespace) -> int:
    _guard(args, args.n)
    spec = BottomSpec.parse(args.n, args.fix_c)
    rows = enumerate_rows(args.n, spec)
    if args.format == "json":
        payload = {"n": args.n, "bottom": [c if c is not None else "free" for c in spec.values],
                   "count": len(rows), "rows": rows}
        print(json.dumps(payload, sort_keys=True))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        fields = ["n_minus", "n_minus_even", "n_minus_odd", "n_plus_even", "n_plus_odd"]
        w.writerow(["index", "asm", "c"] + fields + ["weight_minus", "weight_even_odd"])
        for r in rows:
            asm = ";".join(" ".join(str(x) for x in row) for row in r["asm"])
            w.writerow([r["index"], asm, " ".join(map(str, r["c"]))] + [r["stats"][f] for f in fields]
                       + [r["weight_minus"], r["weight_even_odd"]])
        sys.stdout.write(buf.getvalue())
    return 0


# ----------------------------------------------------------------------
# reduce


def cmd_reduce(args: argparse.Namespace) -> int:
    if args.replay:
        with open(args.replay) as fh:
            data = json.load(fh)
        _guard(args, int(data["n"]))
        try:
            trace = replay(data)
        except (TraceVerificationError, RewriteError) as exc:
            print(f"replay failed: {exc}", file=sys.stderr)
            return 1
        print(f"replayed {len(trace.steps)} steps for n={trace.n}: cumulative factor "
              f"{format_rational(trace.cumulative)} verified")
        return 0
    if args.n is None:
        raise SystemExit("reduce needs --n or --replay")
    _guard(args, args.n)
    try:
        trace = reduce_gn_once(args.n, verify=args.verify)
    except (TraceVerificationError, RewriteError) as exc:
        print(f"reduction failed: {exc}", file=sys.stderr)
        return 1
    for line in trace.checks:
        print(f"checked {line}")
    print(f"steps: {len(trace.steps)}")
    print(f"cumulative factor: {format_rational(trace.cumulative)}")
    print(f"expected 3*5^(n-1)/2^(2n-1): {format_rational(formulas.gn_ratio(args.n))}")
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(trace.to_json() + "\n")
    return 0 if trace.cumulative == formulas.gn_ratio(args.n) else 1


# ----------------------------------------------------------------------


def _add_graph_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("builder", choices=["teeth", "gn", "fortress", "fortress-normalized", "aztec-rect"])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--keep", help="kept bottom positions, e.g. 1,3")
    p.add_argument("--c", help="fortress bottom: n+1, n-1 or a comma list of values")
    p.add_argument("--allow-large", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twoenum", description="Exact 2-enumeration checks for halved ASMs.")
    sub = parser.add_subparsers(dest="command", required=True)
    engines = ["brute", "pfaffian", "both"]

    p = sub.add_parser("verify", help="check an identity over a range of sizes")
    p.add_argument("theorem", choices=sorted(VERIFIERS))
    p.add_argument("--n", type=_range_arg, help="size or range, e.g. 3 or 1..4")
    p.add_argument("--engine", choices=engines, default="pfaffian")
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("count", help="weighted perfect-matching sum of a graph")
    _add_graph_flags(p)
    p.add_argument("--engine", choices=engines, default="pfaffian")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("enumerate", help="list halved ASMs with their statistics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fix-c", help="n+1, n-1 or a comma list (use * for free)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("reduce", help="run the order-lowering rewrite and report its factor")
    p.add_argument("--n", type=int)
    p.add_argument("--trace", help="write the step trace as JSON")
    p.add_argument("--replay", help="re-execute and check a saved trace")
    p.add_argument("--verify", choices=["none", "phases", "steps"], default="phases")
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("export-graph", help="write a graph as JSON")
    _add_graph_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_graph)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GuardrailError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
