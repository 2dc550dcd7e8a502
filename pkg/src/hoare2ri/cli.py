"""Command-line front end.

Exit codes: 0 proved / valid / halted, 1 refuted or invalid, 2 unknown or
out of fuel, 3 usage or input error."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from hoare2ri.convert import convert, make_check_rules, make_goal, with_check
from hoare2ri.lctrs import format_lctrs, parse_lctrs, rewrite_innermost, show_equation, show_rule
from hoare2ri.pipeline import EXIT_CODES, PROVED, loop_ranks, prove
from hoare2ri.ri import ReplayMismatch, replay_trace, trace_document
from hoare2ri.solver import DEFAULT_TIMEOUT_MS, Solver, set_default_solver
from hoare2ri.syntax import SyntaxErr, parse_term, show
from hoare2ri.tableau import check_tableau
from hoare2ri.terms import INT
from hoare2ri.transform import TransformError, transform
from hoare2ri.whilelang import (
    COMMANDS, SOURCE, Halted, format_program, interpret, parse_program, strip_annotations,
)

USAGE_EXIT = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2, which means "unknown" here
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--solver-cmd", help="SMT-LIB2 solver command (default: $HOARE2RI_SOLVER or 'z3 -in')")
    p.add_argument("--builtin-solver", action="store_true", help="never start an external solver")
    p.add_argument("--timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=[COMMANDS, SOURCE], default=COMMANDS,
                   help="state index numbering (default: commands)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hoare2ri", description="Hoare-logic proof tableaux to rewriting induction.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", help="parse a .whl file and print it with line labels")
    p.add_argument("file")
    p.add_argument("--numbers", choices=[COMMANDS, SOURCE, "none"], default=COMMANDS)
    p.add_argument("--strip", action="store_true", help="drop annotations")
    _common(p)

    p = sub.add_parser("interpret", help="run a program on an input valuation")
    p.add_argument("file")
    p.add_argument("--input", required=True, help="e.g. x=3,i=0,z=0")
    p.add_argument("--fuel", type=int, default=100_000)
    p.add_argument("--start", type=int, help="command number to start at")
    _common(p)

    p = sub.add_parser("convert", help="compile a program into an LCTRS")
    p.add_argument("file")
    p.add_argument("--emit-lctrs", action="store_true", help="print the full textual LCTRS format")
    p.add_argument("--with-check", action="store_true", help="add the check rules for the postcondition")
    _common(p)

    p = sub.add_parser("check-tableau", help="validate the annotations as a proof tableau")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    _common(p)

    for name, text in (("transform", "translate a valid tableau into an RI inference sequence"),
                       ("prove", "tableau, transformation, replay and termination")):
        p = sub.add_parser(name, help=text)
        p.add_argument("file")
        p.add_argument("--emit-proof", metavar="PATH", help="write the replayable proof trace JSON")
        p.add_argument("--narrate", action="store_true", help="print the step-by-step transcript")
        p.add_argument("--aliases", help="comma-separated display names for equations in creation order")
        p.add_argument("--json", action="store_true", help="print the JSON report/trace")
        if name == "prove":
            p.add_argument("--rank", action="append", default=[], metavar="[K=]EXPR",
                           help="ranking expression for the while at command K (or for every loop)")
            p.add_argument("--report", metavar="PATH", help="write the pipeline report JSON")
            p.add_argument("--refute", action="store_true",
                           help="search small inputs for a counterexample when the tableau is invalid")
        _common(p)

    p = sub.add_parser("rewrite", help="rewrite a term innermost with a textual LCTRS")
    p.add_argument("file", help=".lctrs file, or a .whl file (its converted rules)")
    p.add_argument("term")
    p.add_argument("--fuel", type=int, default=100_000)
    p.add_argument("--quiet", action="store_true", help="print only the normal form")
    _common(p)

    p = sub.add_parser("replay", help="re-check a proof trace written by --emit-proof")
    p.add_argument("file")
    _common(p)
    return ap


def _solver(args) -> Solver:
    s = Solver(cmd=args.solver_cmd, timeout_ms=args.timeout_ms, external=not args.builtin_solver,
               seed=args.seed)
    if s.external:
        s.external_available  # warns once if the binary is missing
    set_default_solver(s)
    return s


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _program(path: str):
    return parse_program(_read(path))


def _valuation(text: str) -> dict[str, int]:
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, _, val = part.partition("=")
        try:
            out[name.strip()] = int(val)
        except ValueError:
            raise UsageError(f"bad input binding {part!r} (expected name=integer)") from None
    return out


def _ranks(prog, items: Sequence[str]) -> dict:
    sorts = {v.name: INT for v in prog.vars}
    out: dict = {}
    for item in items:
        key, sep, expr = item.partition("=")
        key = key.strip()
        if sep and (key.isdigit() or key == "*"):
            out[int(key) if key.isdigit() else "*"] = parse_term(expr, sort=INT, var_sorts=dict(sorts))
        else:
            out["*"] = parse_term(item, sort=INT, var_sorts=dict(sorts))
    return out


def _write(path: str, data) -> None:
    try:
        Path(path).write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


def _aliases(args) -> list[str]:
    return [a.strip() for a in args.aliases.split(",")] if args.aliases else []


# --- subcommands -----------------------------------------------------------------

def cmd_parse(args) -> int:
    prog = _program(args.file)
    if args.strip:
        prog = strip_annotations(prog)
    print(format_program(prog, None if args.numbers == "none" else args.numbers), end="")
    return 0


def cmd_interpret(args) -> int:
    prog = _program(args.file)
    try:
        run = interpret(prog, _valuation(args.input), fuel=args.fuel, start=args.start)
    except ValueError as e:
        raise UsageError(str(e)) from None
    vals = ",".join(f"{k}={v}" for k, v in run.valuation.items())
    if isinstance(run, Halted):
        print(vals)
        return 0
    print(f"OutOfFuel after {run.steps} steps ({vals})")
    return 2


def cmd_convert(args) -> int:
    prog = _program(args.file)
    R, cmap = convert(strip_annotations(prog), args.scheme)
    if args.with_check:
        anns = prog.assertions
        if not anns:
            raise UsageError("--with-check needs a postcondition annotation")
        R = with_check(R, anns[-1].content.cond, cmap)
    if args.emit_lctrs:
        print(format_lctrs(R, with_names=True), end="")
    else:
        for r in R.rules:
            print(show_rule(r, with_name=True))
    return 0


def cmd_check_tableau(args) -> int:
    prog = _program(args.file)
    res = check_tableau(prog, _solver(args), jobs=args.jobs)
    if args.json:
        print(res.report())
    else:
        for o in res.obligations:
            print(f"{o.verdict():10s} {o.describe()}")
            for w in o.warnings:
                print(f"{'':10s} warning: {w}")
            for c in o.claims:
                if c.counterexample:
                    cex = ", ".join(f"{k}={v}" for k, v in c.counterexample.items())
                    print(f"{'':10s} counterexample: {cex}")
        print("VALID" if res.ok else ("UNKNOWN" if res.unknown else "INVALID"))
    return 0 if res.ok else (2 if res.unknown else 1)


def cmd_transform(args) -> int:
    prog = _program(args.file)
    solver = _solver(args)
    res = check_tableau(prog, solver)
    if not res.ok:
        for o in res.violations:
            print(f"{o.verdict()}: {o.describe()}", file=sys.stderr)
        print("TABLEAU_INVALID" if not res.unknown else "UNKNOWN")
        return 2 if res.unknown else 1
    try:
        tr = transform(res.tableau, args.scheme, solver, _aliases(args))
    except TransformError as e:
        print(f"transformation failed: {e}", file=sys.stderr)
        return 2 if e.unknown else 1
    doc = trace_document(tr.R, tr.start, tr.steps)
    if args.emit_proof:
        _write(args.emit_proof, doc)
    if args.json:
        print(json.dumps(tr.trace_json(), indent=2, ensure_ascii=False))
    if args.narrate or not args.json:
        print(tr.transcript(), end="")
    return 0


def cmd_prove(args) -> int:
    prog = _program(args.file)
    solver = _solver(args)
    try:
        ranks = _ranks(prog, args.rank)
    except SyntaxErr as e:
        raise UsageError(f"bad --rank: {e}") from None
    rep = prove(prog, solver, args.scheme, ranks, _aliases(args), source=args.file,
                refute=args.refute, seed=args.seed)
    if args.emit_proof and rep.trans is not None:
        _write(args.emit_proof, trace_document(rep.trans.R, rep.trans.start, rep.trans.steps))
        rep.artifacts["proof"] = args.emit_proof
    if args.report:
        rep.artifacts["report"] = args.report
        _write(args.report, rep.to_json())
    if args.narrate and rep.trans is not None:
        print(rep.trans.transcript(), end="")
    if args.json:
        print(json.dumps(rep.to_json(), indent=2, ensure_ascii=False))
    else:
        for name, st in rep.stages.items():
            print(f"{name:12s} {st.status}")
        if rep.trans is not None:
            print(f"hypotheses   {len(rep.trans.hypotheses)}")
            for r in rep.trans.hypotheses:
                print(f"  {show_rule(r, with_name=True)}")
        for cert in rep.stages["termination"].detail.get("certificates", []):
            print(f"rank         state index {cert['header']}: {', '.join(cert['rank'])}")
        for name, st in rep.stages.items():
            for key in ("violations", "error", "failures"):
                for item in st.detail.get(key, []) if isinstance(st.detail.get(key), list) else (
                        [st.detail[key]] if key in st.detail else []):
                    print(f"{name}: {item if isinstance(item, str) else json.dumps(item)}")
            if "refutation" in st.detail:
                print(f"{name}: counterexample run {json.dumps(st.detail['refutation'])}")
        print(rep.verdict)
    return rep.exit_code


def cmd_rewrite(args) -> int:
    text = _read(args.file)
    if args.file.endswith(".whl"):
        prog = parse_program(text)
        R, _ = convert(strip_annotations(prog), args.scheme)
    else:
        R = parse_lctrs(text)
    t = parse_term(args.term, R.signature, var_sorts={})
    run = rewrite_innermost(R, t, fuel=args.fuel)
    if not args.quiet:
        print(show(t))
        for p, name, u in run.steps:
            where = ".".join(map(str, p)) or "ε"
            print(f"  -> {show(u)}    [{name} at {where}]")
    print(show(run.normal_form))
    if not args.quiet:
        print(f"{run.length} step(s)")
    return 2 if run.exhausted else 0


def cmd_replay(args) -> int:
    try:
        doc = json.loads(_read(args.file))
    except json.JSONDecodeError as e:
        raise UsageError(f"{args.file}: not JSON ({e})") from None
    try:
        final = replay_trace(doc, _solver(args))
    except ReplayMismatch as e:
        print(f"MISMATCH at step {e.index}: {e.reason}")
        return 1
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(f"replayed {len(doc['steps'])} step(s); final process {final}")
    return 0 if final.finished else 1


COMMANDS_TABLE = {
    "parse": cmd_parse, "interpret": cmd_interpret, "convert": cmd_convert,
    "check-tableau": cmd_check_tableau, "transform": cmd_transform, "prove": cmd_prove,
    "rewrite": cmd_rewrite, "replay": cmd_replay,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:  # argparse exits on usage errors and --help
        return e.code if isinstance(e.code, int) else USAGE_EXIT
    try:
        return COMMANDS_TABLE[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except SyntaxErr as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return USAGE_EXIT
    finally:
        set_default_solver(None)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
