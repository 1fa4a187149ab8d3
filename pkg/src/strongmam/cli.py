"""Command line: normalize, trace, compare, check, stats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import CorpusSpec, gen_named_corpus
from .decoding import decode
from .harness import Report, compare_corpus, run_and_compare
from .lsc import normalize_lo, unfold
from .machine import (
    CheckLevel, Label, NotClosed, Outcome, dump, init, run, state_dict,
)
from .terms import BudgetExhausted, ParseError, beta_normalize, parse, show

DEFAULT_BUDGET = 100_000
TRACE_SCHEMA = 1


def _read_term(arg: str):
    p = Path(arg)
    if p.is_file():
        return parse(p.read_text().split("#", 1)[0])
    return parse(arg)


def cmd_normalize(ns) -> int:
    t = _read_term(ns.term)
    if ns.engine == "mam":
        ex = run(init(t), budget=ns.budget, keep_states=False)
        if ex.outcome is not Outcome.FINAL:
            print(f"budget of {ns.budget} transitions exhausted", file=sys.stderr)
            return 3
        print(show(unfold(decode(ex.final))))
    elif ns.engine == "lsc":
        nf, _, _, done = normalize_lo(t, ns.budget)
        if not done:
            print(f"budget of {ns.budget} steps exhausted", file=sys.stderr)
            return 3
        print(show(nf if ns.keep_es else unfold(nf)))
    else:
        r = beta_normalize(t, ns.budget)
        if isinstance(r, BudgetExhausted):
            print(f"budget of {ns.budget} steps exhausted", file=sys.stderr)
            return 3
        print(show(r.term))
    return 0


def cmd_trace(ns) -> int:
    t = _read_term(ns.term)
    s0 = init(t)
    ex = run(s0, budget=ns.budget)
    if ns.format == "json":
        doc = {"schema": TRACE_SCHEMA, "term": show(t), "steps": []}
        if ns.states:
            doc["initial"] = state_dict(s0)
        for lab, s in ex.steps:
            rec = {"label": lab.value}
            if ns.states:
                rec["state"] = state_dict(s)
            doc["steps"].append(rec)
        doc["outcome"] = ex.outcome.value
        doc["counters"] = {lab.value: ex.counters[lab] for lab in Label}
        json.dump(doc, sys.stdout, ensure_ascii=False, indent=1)
        print()
    else:
        if ns.states:
            print(dump(s0, "initial"))
        for lab, s in ex.steps:
            print(lab.value.upper())
            if ns.states:
                print(dump(s))
        print("FINAL" if ex.outcome is Outcome.FINAL else "BUDGET-EXHAUSTED")
    return 0


def _entries(ns):
    if ns.corpus:
        return gen_named_corpus(CorpusSpec.parse(ns.corpus))
    if ns.term is None:
        raise SystemExit("give a term or --corpus")
    return [(ns.term, _read_term(ns.term))]


def _report_line(r: Report) -> str:
    flags = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in r.checks.items())
    c = r.counters
    return (f"{'PASS' if r.ok else 'FAIL'} {r.name or r.term}  |t0|={r.size} {r.outcome} "
            f"m={c['m']} e={c['e']} c={r.commutative} strategy=({r.strategy['m']},"
            f"{r.strategy['e']}) {flags}")


def cmd_compare(ns) -> int:
    reports = compare_corpus(_entries(ns), ns.budget, workers=ns.workers)
    if ns.format == "json":
        json.dump([r.to_json() for r in reports], sys.stdout, ensure_ascii=False, indent=1)
        print()
    else:
        for r in reports:
            print(_report_line(r))
            for f in r.failures[:5]:
                print("    " + f)
        print(f"{sum(r.ok for r in reports)}/{len(reports)} passed")
    return 0 if all(r.ok for r in reports) else 1


def cmd_check(ns) -> int:
    t = _read_term(ns.term)
    r = run_and_compare(t, ns.budget)
    print(_report_line(r))
    for f in r.failures:
        print("    " + f)
    return 0 if r.ok else 1


def cmd_stats(ns) -> int:
    reports = compare_corpus(gen_named_corpus(CorpusSpec.parse(ns.corpus)), ns.budget,
                             workers=ns.workers, distill=False, checks=CheckLevel.COUNTERS)
    cols = ["term", "|t0|", "m", "e", "c-ev", "c-bt", "ev_bound", "bt_bound", "total_bound"]
    rows = [[r.name or r.term, r.size, r.counters["m"], r.counters["e"], r.c_ev, r.c_bt,
             r.margins["ev_bound"], r.margins["bt_bound"], r.margins["total_bound"]]
            for r in reports]
    widths = [max(len(str(x)) for x in col) for col in zip(cols, *rows)]
    for row in [cols] + rows:
        print("  ".join(str(x).rjust(w) for x, w in zip(row, widths)))
    return 0 if all(r.ok for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strongmam",
                                 description="Strong MAM and LSC normaliser")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("normalize", help="print the normal form")
    p.add_argument("term", help="term text or a file holding one term")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--engine", choices=("mam", "lsc", "beta"), default="mam")
    p.add_argument("--keep-es", action="store_true",
                   help="lsc engine: print the result with its substitutions")
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("trace", help="print the labelled transitions")
    p.add_argument("term")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--states", action="store_true", help="include every state")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("compare", help="machine vs strategy vs β, with reports")
    p.add_argument("term", nargs="?")
    p.add_argument("--corpus", help="church:N, ski:N[:seed=S:count=C], random:N[...], file:PATH")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("check", help="run every invariant and distillation check")
    p.add_argument("term")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("stats", help="counters and bound margins per corpus term")
    p.add_argument("--corpus", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_stats)
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.fn(ns)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except NotClosed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
