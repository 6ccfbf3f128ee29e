"""Command-line entry point: ordinal queries, proof checking, embedding and reduction."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import calculus as C
from . import language as L
from . import ordinals as O
from . import reducer as R
from . import sexpr
from . import transforms as T

EXIT_OK = 0
EXIT_DIAG = 1
EXIT_PARSE = 2
EXIT_UNDECIDABLE = 3
EXIT_STUCK = 4
EXIT_STEP_LIMIT = 5


@dataclass
class Config:
    fuel: int = 10_000
    pool: tuple = ()
    max_steps: int = 10_000
    trace: Optional[str] = None
    strict: bool = True
    axioms: Optional[str] = None

    def checker(self) -> C.Checker:
        ev = L.Evaluator(budget=L.Budget(pool=self.pool, fuel=self.fuel))
        axioms = C.parse_axioms(Path(self.axioms).read_text()) if self.axioms else ()
        return C.Checker(ev=ev, axioms=axioms, strict=self.strict)


def _out(s: str) -> None:
    print(s)


def _set_str(vals) -> str:
    return "{" + ", ".join(sorted(O.to_str(v) for v in vals)) + "}"


def cmd_ord(op: str, args: list) -> int:
    arity = {"cmp": 2, "nsum": None, "nprod": 2, "g": 2, "region": 1}[op]
    if arity is not None and len(args) != arity:
        print(f"ord {op}: expected {arity} argument(s), got {len(args)}", file=sys.stderr)
        return EXIT_PARSE
    ts = [O.parse(a) for a in args]
    if op == "cmp":
        _out(O.compare(*ts).name)
    elif op == "nsum":
        _out(O.to_str(O.nsum(*ts)))
    elif op == "nprod":
        _out(O.to_str(O.nprod(*ts)))
    elif op == "g":
        _out(_set_str(O.gset(*ts)))
    else:
        _out(str(O.region(ts[0])))
    return EXIT_OK


def _load_proof(path: str) -> tuple:
    return C.loads(Path(path).read_text())


def cmd_check(path: str, cfg: Config) -> int:
    p, stocks = _load_proof(path)
    diags, ann = C.validate(p, stocks, cfg.checker())
    for d in diags:
        _out(str(d))
    if diags:
        return EXIT_DIAG
    _out(f"ok  o = {O.to_str(ann.o[p.root])}")
    return EXIT_OK


def cmd_embed(path: str, out: Optional[str], k: Optional[int]) -> int:
    sk = T.loads_skeleton(Path(path).read_text())
    q1 = T.embed_q1(sk)
    k = T.cut_degree_bound(q1) if k is None else k
    p, stocks = T.wrap(q1, k)
    text = C.dumps(p, stocks, comment=f"embedded from {Path(path).name}\nk = {k}")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_reduce(path: str, cfg: Config) -> int:
    p, stocks = _load_proof(path)
    chk = cfg.checker()
    diags, _ = C.validate(p, stocks, chk)
    if diags:
        for d in diags:
            _out(str(d))
        return EXIT_DIAG
    fh = open(cfg.trace, "w") if cfg.trace else None

    def emit(i: int, step: R.ReductionStep) -> None:
        rec = step.to_json(i)
        if fh:
            fh.write(json.dumps(rec) + "\n")
        _out(f"{i:4d} {step.case:22s} {rec['o_before']}  >  {rec['o_after']}")

    try:
        outcome = R.run(p, stocks, chk, max_steps=cfg.max_steps, on_step=emit)
    finally:
        if fh:
            fh.close()
    _out(str(outcome))
    return {"witness": EXIT_OK, "stuck": EXIT_STUCK}.get(outcome.tag, EXIT_STEP_LIMIT)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ordproof", description=__doc__)
    ap.add_argument("--fuel", type=int, default=10_000)
    ap.add_argument("--max-steps", type=int, default=10_000)
    ap.add_argument("--trace", metavar="PATH")
    ap.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True)
    ap.add_argument("--axioms", metavar="PATH")
    ap.add_argument("--pool", default="", help="comma-separated ordinal terms")
    sub = ap.add_subparsers(dest="cmd", required=True)

    o = sub.add_parser("ord", help="ordinal queries")
    o.add_argument("op", choices=["cmp", "nsum", "nprod", "g", "region"])
    o.add_argument("args", nargs="*")

    c = sub.add_parser("check", help="validate a proof with stock")
    c.add_argument("proof")

    e = sub.add_parser("embed", help="embed a skeleton into a proof with stock")
    e.add_argument("skeleton")
    e.add_argument("-o", "--output")
    e.add_argument("-k", type=int, help="number of (h) rules (default max(10, degrees))")

    r = sub.add_parser("reduce", help="reduce a proof until a witness appears")
    r.add_argument("proof")
    return ap


def _split_pool(text: str) -> tuple:
    # commas inside parentheses belong to the term
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    out.append(cur)
    return tuple(O.parse(s) for s in out if s.strip())


def main(argv: Optional[list] = None) -> int:
    # global flags may also follow the subcommand
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    globals_ = {"--fuel", "--max-steps", "--trace", "--axioms", "--pool"}
    front, rest, i = [], [], 0
    while i < len(argv):
        a = argv[i]
        name = a.split("=", 1)[0]
        if name in globals_:
            front.append(a)
            if "=" not in a and i + 1 < len(argv):
                front.append(argv[i + 1])
                i += 1
        elif a in ("--strict", "--no-strict"):
            front.append(a)
        else:
            rest.append(a)
        i += 1
    ns = ap.parse_args(front + rest)
    try:
        cfg = Config(fuel=ns.fuel, pool=_split_pool(ns.pool), max_steps=ns.max_steps,
                     trace=ns.trace, strict=ns.strict, axioms=ns.axioms)
        if ns.cmd == "ord":
            return cmd_ord(ns.op, ns.args)
        if ns.cmd == "check":
            return cmd_check(ns.proof, cfg)
        if ns.cmd == "embed":
            return cmd_embed(ns.skeleton, ns.output, ns.k)
        return cmd_reduce(ns.proof, cfg)
    except (sexpr.ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except O.Undecidable as e:
        print(f"undecidable: {e}", file=sys.stderr)
        return EXIT_UNDECIDABLE
    except T.TransformError as e:
        print(f"embed: {e}", file=sys.stderr)
        return EXIT_DIAG


if __name__ == "__main__":
    sys.exit(main())
