"""Compilation of while programs into state-machine LCTRSs, plus the check
rules and the initial goal equation used by the tableau transformation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from hoare2ri import theory as th
from hoare2ri.lctrs import (
    CHECK, PROGRAM, ConstrainedEquation, ConstrainedRule, Lctrs,
)
from hoare2ri.terms import App, BOOL, DEFINED, FunSym, INT, STATE, Term, Var, apply_subst
from hoare2ri.whilelang import (
    COMMANDS, Assign, Blank, Close, ElseOpen, IfOpen, Line, Skip, WhileOpen, WhileProgram,
)

CHK = FunSym("chk", (STATE,), BOOL, DEFINED)
END_NAME = "end"


class ConversionError(Exception):
    pass


@dataclass(frozen=True)
class ConversionMap:
    vars: tuple[Var, ...]
    scheme: str
    state_of: dict = field(hash=False)       # line index -> state symbol
    successor: dict = field(hash=False)      # line index -> index of next command line
    start: FunSym
    end: FunSym
    rule_line: dict = field(hash=False)      # rule name -> line index it came from

    def state(self, index: int, args: Optional[Sequence[Term]] = None) -> App:
        return App(self.state_of[index], tuple(self.vars if args is None else args))

    @property
    def start_term(self) -> App:
        return App(self.start, self.vars)

    @property
    def end_term(self) -> App:
        return App(self.end, self.vars)


def _state_symbol(name: str, n: int) -> FunSym:
    return FunSym(name, (INT,) * n, STATE, DEFINED)


def convert(prog: WhileProgram, scheme: str = COMMANDS) -> tuple[Lctrs, ConversionMap]:
    """One group of rules per command line.  Assertions are skipped; under
    the ``source`` scheme they leave gaps in the state indices."""
    xs = tuple(prog.vars)
    n = len(xs)
    cmds = [ln for ln in prog.lines if ln.is_command]
    if not cmds or not isinstance(cmds[-1].content, Blank):
        raise ConversionError("program must end with its blank exit line")
    idx = {id(ln): ln.index(scheme) for ln in cmds}
    state_of: dict[int, FunSym] = {}
    for ln in cmds:
        k = idx[id(ln)]
        name = END_NAME if isinstance(ln.content, Blank) else f"state{k}"
        state_of[k] = _state_symbol(name, n)
    succ: dict[int, int] = {}
    for a, b in zip(cmds, cmds[1:]):
        succ[idx[id(a)]] = idx[id(b)]
    lines = prog.lines

    def at(ln: Line, args=None) -> App:
        return App(state_of[idx[id(ln)]], tuple(xs if args is None else args))

    def nxt(ln: Line, args=None) -> App:
        return App(state_of[succ[idx[id(ln)]]], tuple(xs if args is None else args))

    rules: list[ConstrainedRule] = []
    origin: dict[str, int] = {}

    def emit(name: str, ln: Line, lhs: Term, rhs: Term, phi: Term = th.TRUE) -> None:
        rules.append(ConstrainedRule(lhs, rhs, phi, PROGRAM, name))
        origin[name] = idx[id(ln)]

    for ln in cmds:
        c = ln.content
        k = idx[id(ln)]
        tag = f"L{k}"
        if isinstance(c, Assign):
            if c.var not in xs:
                raise ConversionError(f"variable {c.var.name} missing from the variable list")
            args = [c.expr if v == c.var else v for v in xs]
            emit(tag, ln, at(ln), nxt(ln, args))
        elif isinstance(c, Skip):
            emit(tag, ln, at(ln), nxt(ln))
        elif isinstance(c, IfOpen):
            else_ln = lines[ln.partner[1]]
            emit(tag + ".t", ln, at(ln), nxt(ln), c.cond)
            emit(tag + ".f", ln, at(ln), nxt(else_ln), th.neg(c.cond))
        elif isinstance(c, ElseOpen):
            emit(tag, ln, at(ln), nxt(lines[ln.partner[2]]))
        elif isinstance(c, WhileOpen):
            close = lines[ln.partner[1]]
            emit(tag + ".t", ln, at(ln), nxt(ln), c.guard)
            emit(tag + ".f", ln, at(ln), nxt(close), th.neg(c.guard))
        elif isinstance(c, Close):
            opener = lines[ln.partner[0]]
            if isinstance(opener.content, WhileOpen):
                emit(tag, ln, at(ln), at(opener))
            else:
                emit(tag, ln, at(ln), nxt(ln))
        elif isinstance(c, Blank):
            pass
        else:
            raise ConversionError(f"unsupported line {c!r}")

    first = idx[id(cmds[0])]
    end_idx = idx[id(cmds[-1])]
    sig = {f.name: f for f in state_of.values()}
    cmap = ConversionMap(xs, scheme, state_of, succ, state_of[first], state_of[end_idx], origin)
    return Lctrs(tuple(rules), sig, xs), cmap


def make_check_rules(post: Term, xs: Sequence[Var], end: Optional[FunSym] = None) -> list[ConstrainedRule]:
    end = end or _state_symbol(END_NAME, len(xs))
    lhs = App(CHK, (App(end, tuple(xs)),))
    return [ConstrainedRule(lhs, th.TRUE, post, CHECK, "chk.true"),
            ConstrainedRule(lhs, th.FALSE, th.neg(post), CHECK, "chk.false")]


def make_goal(pre: Term, cmap: ConversionMap) -> ConstrainedEquation:
    return ConstrainedEquation(App(CHK, (cmap.start_term,)), th.TRUE, pre)


def with_check(R: Lctrs, post: Term, cmap: ConversionMap) -> Lctrs:
    rules = make_check_rules(post, cmap.vars, cmap.end)
    sig = dict(R.signature)
    sig[CHK.name] = CHK
    return Lctrs(R.rules + tuple(rules), sig, R.state_vars)


def run_from(R: Lctrs, cmap: ConversionMap, valuation: dict, fuel: int = 100_000,
             start: Optional[int] = None):
    """Rewrite ``state_start(θ)`` innermost; returns the final valuation if an
    ``end`` term is reached, ``None`` if fuel ran out or the run got stuck."""
    from hoare2ri.lctrs import rewrite_innermost
    sym = cmap.start if start is None else cmap.state_of[start]
    env = {v: th.int_value(int(valuation[v.name])) for v in cmap.vars}
    t = apply_subst(App(sym, cmap.vars), env)
    run = rewrite_innermost(R, t, fuel=fuel)
    nf = run.normal_form
    if run.exhausted or not isinstance(nf, App) or nf.fun != cmap.end:
        return None
    return {v.name: th.decode(a) for v, a in zip(cmap.vars, nf.args)}
