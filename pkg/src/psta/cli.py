"""Command-line front end.

Exit codes: 0 success, 1 a negative answer (rejected derivation, strategies
disagree, compiled term and oracle differ), 2 fuel exhausted, 3 bad input
(unreadable file, syntax or schema error, bad arguments).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .derivations import DerivationError, metrics, rank, weight
from .evaluation import FuelExhausted, LimitExceeded, Strategy, confluence_oracle, default_fuel, evaluate
from .ptm import PtmError, ptm_run
from .sugar import elaborate
from .syntax import (
    ParseError, SchemaError, check_with_paths, derivation_to_json, format_distribution,
    parse_derivation, parse_ptm, parse_term,
)

__all__ = ["CliConfig", "main", "EXIT_OK", "EXIT_NO", "EXIT_FUEL", "EXIT_INPUT"]

EXIT_OK, EXIT_NO, EXIT_FUEL, EXIT_INPUT = 0, 1, 2, 3


@dataclass
class CliConfig:
    fuel: int
    strategy: Strategy
    json: bool = False
    memo: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        fuel = args.fuel if getattr(args, "fuel", None) is not None else default_fuel()
        try:
            strategy = Strategy.parse(getattr(args, "strategy", None) or "leftmost-outermost")
        except ValueError as e:
            raise _Failure(EXIT_INPUT, "usage", str(e)) from None
        return cls(fuel, strategy, args.json, getattr(args, "memo", False))


class _Failure(Exception):
    def __init__(self, code: int, error: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.error = error
        self.extra = extra


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _Failure(EXIT_INPUT, "usage", message)


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise _Failure(EXIT_INPUT, "io", f"{path}: {e.strerror}") from None


def _load_json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise _Failure(EXIT_INPUT, "schema", f"{path}: {e.msg}", path=f"line {e.lineno}") from None


def _emit(cfg: CliConfig, payload: dict, text: str) -> None:
    print(json.dumps(payload, indent=2) if cfg.json else text)


def _fmt(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args, cfg: CliConfig) -> int:
    term = elaborate(parse_term(_read(args.file)))
    rep = evaluate(term, cfg.strategy, cfg.fuel, memo=cfg.memo)
    rows = format_distribution(rep.distribution)
    text = "\n".join(f"{r['prob']}\t{r['term']}" for r in rows)
    _emit(cfg, {"distribution": rows, "branch_depth": rep.branch_depth,
                "steps": rep.steps_total}, text)
    return EXIT_OK


def _derivation(path: str):
    d = parse_derivation(_load_json(path))
    check_with_paths(d)
    return d


def cmd_check(args, cfg: CliConfig) -> int:
    d = _derivation(args.file)
    c = d.conclusion
    _emit(cfg, {"ok": True, "judgment": str(c)}, f"ok: {c}")
    return EXIT_OK


def cmd_metrics(args, cfg: CliConfig) -> int:
    d = _derivation(args.file)
    rs = tuple(args.r) if args.r else (1, rank(d))
    m = metrics(d, rs)
    payload = {"rank": m.rank, "depth": m.depth, "size": d.subject.size,
               "weights": {str(r): w for r, w in m.weights.items()}}
    text = f"rank {m.rank}\ndepth {m.depth}\nsize {d.subject.size}\n" + "\n".join(
        f"w(r={r}) {w}" for r, w in m.weights.items())
    _emit(cfg, payload, text)
    return EXIT_OK


def cmd_reduce(args, cfg: CliConfig) -> int:
    from .reduction import first_redex
    from .transform import subject_reduce

    d = _derivation(args.file)
    r = args.r or rank(d)
    log: list[dict] = []
    todo: list[tuple[str, object, dict | None]] = [("", d, None)]
    while todo:
        label, cur, entry = todo.pop()
        if entry is not None:
            log.append(entry)
        site = first_redex(cur.subject)
        if site is None:
            log.append({"branch": label, "normal_form": str(cur.subject), "weight": weight(cur, r)})
            continue
        if len(log) >= args.limit:
            raise _Failure(EXIT_FUEL, "fuel-exhausted", f"more than {args.limit} reduction steps")
        outs = subject_reduce(cur, site, r)
        w0 = weight(cur, r)
        labels = [label + "0", label + "1"] if site.kind == "proj" else [label]
        for lab, o in reversed(list(zip(labels, outs))):
            todo.append((lab, o, {"branch": lab, "kind": site.kind, "path": list(site.path),
                                  "weight_before": w0, "weight_after": weight(o, r),
                                  "subject": str(o.subject)}))
    if args.trace:
        text = "\n".join(
            f"[{e['branch'] or '-'}] {e['kind']} at {e['path']}: {e['weight_before']} -> {e['weight_after']}"
            if "kind" in e else f"[{e['branch'] or '-'}] normal form {e['normal_form']} (weight {e['weight']})"
            for e in log)
    else:
        text = "\n".join(e["normal_form"] for e in log if "normal_form" in e)
    _emit(cfg, {"r": r, "trace": log}, text)
    return EXIT_OK


def cmd_confluence(args, cfg: CliConfig) -> int:
    term = elaborate(parse_term(_read(args.file)))
    try:
        rep = confluence_oracle(term, fuel=cfg.fuel if args.fuel else 200, branch_limit=args.limit)
    except LimitExceeded as e:
        raise _Failure(EXIT_FUEL, "fuel-exhausted", str(e)) from None
    dists = [format_distribution(x) for x in rep.distributions]
    _emit(cfg, {"agree": rep.agree, "states": rep.states, "distributions": dists},
          f"{'agree' if rep.agree else 'DISAGREE'} ({rep.states} states, {len(dists)} distinct outcome(s))")
    return EXIT_OK if rep.agree else EXIT_NO


def _polys(args):
    from .encodings import Poly

    try:
        if args.time_poly is not None or args.space_poly is not None:
            if args.time_poly is None or args.space_poly is None:
                raise _Failure(EXIT_INPUT, "usage", "give both --time-poly and --space-poly")
            return Poly.parse(args.time_poly), Poly.parse(args.space_poly)
        if getattr(args, "steps", None) is not None and getattr(args, "tape", None) is not None:
            return Poly((args.steps,)), Poly((args.tape,))
    except ValueError as e:
        raise _Failure(EXIT_INPUT, "usage", str(e)) from None
    raise _Failure(EXIT_INPUT, "usage", "give --time-poly/--space-poly or --steps/--tape")


def cmd_compile(args, cfg: CliConfig) -> int:
    from .encodings import Layout, ptm_compile

    spec = parse_ptm(_load_json(args.file))
    p, q = _polys(args)
    enc = ptm_compile(spec, p, q, args.output)
    lay = Layout(p, q)
    if args.emit == "derivation":
        print(json.dumps(derivation_to_json(enc.derivation)))
        return EXIT_OK
    _emit(cfg, {"term": str(enc.term), "type": str(enc.type), "size": enc.term.size,
                "input_bangs": lay.bangs, "index": lay.index}, str(enc.term))
    return EXIT_OK


def cmd_oracle(args, cfg: CliConfig) -> int:
    spec = parse_ptm(_load_json(args.file))
    out = ptm_run(spec, args.input, args.steps, args.tape)
    tapes = sorted(out.tapes.items(), key=lambda kv: (-kv[1], kv[0]))
    verdicts = sorted(out.verdicts.items())
    _emit(cfg, {"tapes": [{"tape": t, "prob": _fmt(p)} for t, p in tapes],
                "verdicts": {v: _fmt(p) for v, p in verdicts}},
          "\n".join(f"{_fmt(p)}\t{t}" for t, p in tapes) + "\n"
          + "  ".join(f"{v}: {_fmt(p)}" for v, p in verdicts))
    return EXIT_OK


def compare_one(spec, s: str, p, q, fuel: int | None = None) -> dict:
    """Compiled-term and oracle distributions (tapes and verdicts) on input ``s``."""
    from .encodings import compiled_input, decode_bool, decode_string, ptm_compile
    from .terms import App

    n = len(s)
    oracle = ptm_run(spec, s, p(n), q(n))
    arg = compiled_input(s, p, q)
    tapes = evaluate(App(ptm_compile(spec, p, q).term, arg), fuel=fuel, memo=True).distribution
    verdicts = evaluate(App(ptm_compile(spec, p, q, "verdict").term, arg), fuel=fuel, memo=True).distribution
    term_tapes = {decode_string(t): tapes.prob(t) for t in tapes.support()}
    term_verdicts = {("accept" if decode_bool(t) == 0 else "reject"): verdicts.prob(t)
                     for t in verdicts.support()}
    return {"input": s, "oracle_tapes": oracle.tapes, "oracle_verdicts": oracle.verdicts,
            "term_tapes": term_tapes, "term_verdicts": term_verdicts,
            "equal": oracle.tapes == term_tapes and oracle.verdicts == term_verdicts}


def cmd_compare(args, cfg: CliConfig) -> int:
    spec = parse_ptm(_load_json(args.file))
    p, q = _polys(args)
    results = [compare_one(spec, s, p, q, cfg.fuel) for s in args.input]

    def fmt(dist):
        return {k: _fmt(v) for k, v in sorted(dist.items())}

    payload = [{**r, **{k: fmt(r[k]) for k in ("oracle_tapes", "oracle_verdicts", "term_tapes", "term_verdicts")}}
               for r in results]
    text = "\n".join(f"{r['input']!r}: {'equal' if r['equal'] else 'DIFFERENT'} "
                     f"term={fmt(r['term_tapes'])} oracle={fmt(r['oracle_tapes'])}" for r in results)
    _emit(cfg, {"results": payload, "equal": all(r["equal"] for r in results)}, text)
    return EXIT_OK if all(r["equal"] for r in results) else EXIT_NO


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="psta", description="Probabilistic soft type assignment toolkit")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        return p

    p = common(sub.add_parser("eval", help="evaluate a term to its exact distribution"))
    p.add_argument("file")
    p.add_argument("--strategy", default=None,
                   help="leftmost-outermost | rightmost-innermost | random[:seed] | site-index[:k]")
    p.add_argument("--fuel", type=int, default=None)
    p.add_argument("--memo", action="store_true", help="share results of identical branches")
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("check", help="check a derivation (JSON)"))
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = common(sub.add_parser("metrics", help="rank, depth and weights of a derivation"))
    p.add_argument("file")
    p.add_argument("--r", type=int, action="append")
    p.set_defaults(func=cmd_metrics)

    p = common(sub.add_parser("reduce", help="iterate subject reduction to normal forms"))
    p.add_argument("file")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--limit", type=int, default=10000)
    p.set_defaults(func=cmd_reduce)

    p = common(sub.add_parser("confluence", help="compare all reduction orders"))
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=20000, help="maximum number of explored states")
    p.add_argument("--fuel", type=int, default=None)
    p.set_defaults(func=cmd_confluence)

    p = common(sub.add_parser("compile-ptm", help="compile a machine to a closed term"))
    p.add_argument("file")
    p.add_argument("--time-poly", default=None)
    p.add_argument("--space-poly", default=None)
    p.add_argument("--emit", choices=("term", "derivation"), default="term")
    p.add_argument("--output", choices=("string", "verdict"), default="string")
    p.set_defaults(func=cmd_compile)

    p = common(sub.add_parser("oracle", help="run a machine exactly"))
    p.add_argument("file")
    p.add_argument("--input", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--tape", type=int, required=True)
    p.set_defaults(func=cmd_oracle)

    p = common(sub.add_parser("compare", help="compiled term against the oracle"))
    p.add_argument("file")
    p.add_argument("--input", action="append", required=True)
    p.add_argument("--steps", type=int, default=None, help="constant time bound")
    p.add_argument("--tape", type=int, default=None, help="constant space bound")
    p.add_argument("--time-poly", default=None)
    p.add_argument("--space-poly", default=None)
    p.add_argument("--fuel", type=int, default=None)
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    want_json = "--json" in (argv if argv is not None else sys.argv[1:])
    try:
        args = ap.parse_args(argv)
        cfg = CliConfig.from_args(args)
        return args.func(args, cfg)
    except _Failure as f:
        return _fail(want_json, f.code, f.error, str(f), **f.extra)
    except ParseError as e:
        return _fail(want_json, EXIT_INPUT, "syntax", e.msg,
                     span={"line": e.span.line, "col": e.span.col, "start": e.span.start, "end": e.span.end})
    except SchemaError as e:
        # a malformed document is an input error; a rule violation is a rejection
        bad_input = e.code in ("schema", "non-total-table") or e.code.startswith("bad")
        code = EXIT_INPUT if bad_input else EXIT_NO
        return _fail(want_json, code, e.code, e.msg, path=e.path)
    except FuelExhausted as e:
        return _fail(want_json, EXIT_FUEL, "fuel-exhausted", str(e))
    except PtmError as e:
        return _fail(want_json, EXIT_INPUT if e.code in ("bad-input", "bad-spec") else EXIT_NO, e.code, str(e))
    except DerivationError as e:
        return _fail(want_json, EXIT_NO, e.code, str(e))


def _fail(want_json: bool, code: int, error: str, message: str, **extra) -> int:
    if want_json:
        print(json.dumps({"error": error, "message": message, **extra}))
    else:
        where = ""
        if "span" in extra:
            where = f" at {extra['span']['line']}:{extra['span']['col']}"
        elif "path" in extra:
            where = f" at {extra['path']}"
        print(f"error ({error}){where}: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
