"""Annotated while programs: parser, line numbering, printer and a reference
interpreter.

Concrete syntax (``.whl`` files)::

    vars x, i, z;                      # optional: fixes the variable order
    @ x >= 0;                          # assertion
    i := 0;
    while @ 2*z = i*(i+1) && x >= i @rank x - i (x > i) {
        z := z + i + 1;
        i := i + 1;
    }
    if (x > 0) { skip; } else { x := 0 - x; }

A program is kept as a flat list of lines.  Each command, ``} else {`` and
closing brace is one line; the implicit blank line at the end is the exit
point.  Two numberings are carried side by side: ``cmd_number`` counts
command lines only (annotations get ``A1``, ``A2``, ... labels) and
``number`` counts every line, annotations included.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Mapping, Optional, Union

from hoare2ri import theory as th
from hoare2ri.syntax import (
    Scope, SyntaxErr, TokenStream, clear_denominators, elaborate, parse_expr, show,
    tokenize,
)
from hoare2ri.terms import BOOL, INT, Term, Var, ordered_vars, var_set

COMMANDS, SOURCE = "commands", "source"


# --- line contents -------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    var: Var
    expr: Term


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class IfOpen:
    cond: Term


@dataclass(frozen=True)
class ElseOpen:
    pass


@dataclass(frozen=True)
class Close:
    pass


@dataclass(frozen=True)
class WhileOpen:
    guard: Term
    invariant: Optional[Term] = None
    rank: Optional[Term] = None


@dataclass(frozen=True)
class Assert:
    cond: Term


@dataclass(frozen=True)
class Blank:
    pass


Content = Union[Assign, Skip, IfOpen, ElseOpen, Close, WhileOpen, Assert, Blank]


@dataclass(frozen=True)
class Line:
    number: int                 # position among all lines (1-based)
    cmd_number: Optional[int]   # position among command lines, None for assertions
    content: Content
    depth: int = 0
    label: str = ""             # "A3" for assertions, the command number otherwise
    partner: tuple[int, ...] = ()  # indices of matching structural lines
    src_line: int = 0

    @property
    def is_assert(self) -> bool:
        return isinstance(self.content, Assert)

    @property
    def is_command(self) -> bool:
        return not self.is_assert

    def index(self, scheme: str = COMMANDS) -> int:
        if scheme == SOURCE:
            return self.number
        if self.cmd_number is None:
            raise ValueError(f"assertion {self.label} has no command number")
        return self.cmd_number


@dataclass(frozen=True)
class WhileProgram:
    lines: tuple[Line, ...]
    vars: tuple[Var, ...]

    def __iter__(self) -> Iterator[Line]:
        return iter(self.lines)

    def __len__(self) -> int:
        return len(self.lines)

    @property
    def commands(self) -> list[Line]:
        return [ln for ln in self.lines if ln.is_command]

    @property
    def assertions(self) -> list[Line]:
        return [ln for ln in self.lines if ln.is_assert]

    def by_label(self, label: str) -> Line:
        for ln in self.lines:
            if ln.label == label:
                return ln
        raise KeyError(label)

    def has_annotations(self) -> bool:
        return any(ln.is_assert for ln in self.lines) or any(
            isinstance(ln.content, WhileOpen) and ln.content.invariant is not None
            for ln in self.lines)

    def __str__(self) -> str:
        return format_program(self)


class WhileSyntaxError(SyntaxErr):
    pass


# --- parsing -------------------------------------------------------------------

_PROGRAM_CALLS = {"div", "mod", "exp"}


class _Parser:
    def __init__(self, src: str):
        self.ts = TokenStream(tokenize(src))
        self.scope = Scope({}, {})
        self.items: list[tuple[Content, int, int]] = []  # content, depth, source line
        self.declared: list[str] = []

    def error(self, msg: str) -> WhileSyntaxError:
        t = self.ts.peek()
        return WhileSyntaxError(msg, t.line, t.col)

    def expr(self, sort, assertion: bool = False) -> Term:
        raw = parse_expr(self.ts, lambda n: n in _PROGRAM_CALLS)
        self.scope.rationals = assertion
        try:
            t = elaborate(raw, self.scope, sort)
        finally:
            self.scope.rationals = False
        if assertion:
            t = clear_denominators(t)
        return t

    def emit(self, content: Content, depth: int, line: int) -> None:
        self.items.append((content, depth, line))

    def program(self) -> None:
        ts = self.ts
        if ts.at("vars"):
            ts.next()
            while True:
                tok = ts.next()
                if tok.kind != "ID":
                    raise WhileSyntaxError("expected a variable name", tok.line, tok.col)
                self.declared.append(tok.text)
                self.scope.var(tok.text, INT, None)
                if not ts.accept(","):
                    break
            ts.expect(";")
        self.sequence(0, top=True)
        if ts.peek().kind != "EOF":
            raise self.error(f"unexpected {ts.peek().text!r}")

    def sequence(self, depth: int, top: bool = False) -> None:
        ts = self.ts
        while True:
            if ts.peek().kind == "EOF" or ts.at("}"):
                return
            self.statement(depth)
            # ';' separates commands; it may follow a closing brace too
            ts.accept(";")

    def statement(self, depth: int) -> None:
        ts = self.ts
        tok = ts.peek()
        if ts.accept("@"):
            self.emit(Assert(self.expr(BOOL, assertion=True)), depth, tok.line)
            return
        if ts.accept("skip"):
            self.emit(Skip(), depth, tok.line)
            return
        if ts.at("if"):
            ts.next()
            ts.expect("(")
            cond = self.expr(BOOL)
            ts.expect(")")
            ts.expect("{")
            self.emit(IfOpen(cond), depth, tok.line)
            self.sequence(depth + 1)
            close = ts.expect("}")
            if not ts.at("else"):
                raise self.error("'if' needs an 'else' branch")
            ts.next()
            ts.expect("{")
            self.emit(ElseOpen(), depth, close.line)
            self.sequence(depth + 1)
            end = ts.expect("}")
            self.emit(Close(), depth, end.line)
            return
        if ts.at("while"):
            ts.next()
            inv = rank = None
            if ts.accept("@"):
                if ts.at("rank"):
                    raise self.error("'@rank' must follow the loop invariant")
                inv = self.expr(BOOL, assertion=True)
                if ts.accept("@"):
                    if not ts.accept("rank"):
                        raise self.error("expected 'rank' after the invariant")
                    rank = self.expr(INT)
            ts.expect("(")
            guard = self.expr(BOOL)
            ts.expect(")")
            ts.expect("{")
            self.emit(WhileOpen(guard, inv, rank), depth, tok.line)
            self.sequence(depth + 1)
            end = ts.expect("}")
            self.emit(Close(), depth, end.line)
            return
        if tok.kind == "ID" and ts.peek(1).text == ":=":
            ts.next()
            ts.next()
            if ts.at(";") or ts.at("}") or ts.peek().kind == "EOF":
                raise self.error("missing expression after ':='")
            v = self.scope.var(tok.text, INT, None)
            self.emit(Assign(v, self.expr(INT)), depth, tok.line)
            return
        found = tok.text or "end of input"
        raise WhileSyntaxError(f"expected a command but found {found!r}", tok.line, tok.col)


def _content_terms(c: Content) -> list[Term]:
    if isinstance(c, Assign):
        return [c.var, c.expr]
    if isinstance(c, (IfOpen,)):
        return [c.cond]
    if isinstance(c, WhileOpen):
        return [t for t in (c.invariant, c.guard, c.rank) if t is not None]
    if isinstance(c, Assert):
        return [c.cond]
    return []


def build_program(contents: list[tuple[Content, int, int]],
                  var_order: Optional[list[Var]] = None) -> WhileProgram:
    """Number the lines, append the final blank line and link braces."""
    items = list(contents) + [(Blank(), 0, contents[-1][2] + 1 if contents else 1)]
    lines: list[Line] = []
    n_cmd = n_ann = 0
    stack: list[int] = []
    partners: dict[int, list[int]] = {}
    for k, (c, depth, src) in enumerate(items):
        if isinstance(c, Assert):
            n_ann += 1
            lines.append(Line(k + 1, None, c, depth, f"A{n_ann}", (), src))
            continue
        n_cmd += 1
        lines.append(Line(k + 1, n_cmd, c, depth, str(n_cmd), (), src))
        if isinstance(c, (IfOpen, WhileOpen)):
            stack.append(k)
            partners[k] = []
        elif isinstance(c, ElseOpen):
            if not stack or not isinstance(items[stack[-1]][0], IfOpen):
                raise WhileSyntaxError("'else' without 'if'", src, 1)
            partners[stack[-1]].append(k)
        elif isinstance(c, Close):
            if not stack:
                raise WhileSyntaxError("unmatched '}'", src, 1)
            opener = stack.pop()
            partners[opener].append(k)
    if stack:
        raise WhileSyntaxError("unclosed block", items[stack[-1]][2], 1)
    for opener, rest in partners.items():
        group = [opener] + rest
        for k in group:
            lines[k] = replace(lines[k], partner=tuple(group))
    if var_order is None:
        seen: list[Var] = []
        for ln in lines:
            for v in ordered_vars(*_content_terms(ln.content)) if _content_terms(ln.content) else []:
                if v not in seen:
                    seen.append(v)
        var_order = seen
    return WhileProgram(tuple(lines), tuple(var_order))


def parse_program(src: str) -> WhileProgram:
    """Parse a (possibly annotated) while program.

    Without a ``vars`` declaration the variable order is the order of first
    occurrence, annotations included."""
    p = _Parser(src)
    try:
        p.program()
    except WhileSyntaxError:
        raise
    except SyntaxErr as e:
        raise WhileSyntaxError(e.msg, e.line, e.col) from None
    if not p.items:
        raise WhileSyntaxError("empty program", 1, 1)
    order = None
    if p.declared:
        order = [Var(n, INT) for n in p.declared]
        used = set().union(*(var_set(*_content_terms(c)) for c, _, _ in p.items
                             if _content_terms(c)))
        extra = [v for v in sorted(used, key=lambda v: v.name) if v not in order]
        if extra:
            v = extra[0]
            where = next(line for c, _, line in p.items if v in var_set(*_content_terms(c)))
            raise WhileSyntaxError(f"undeclared variable {v.name}", where, 1)
    prog = build_program(p.items, order)
    for v in prog.vars:
        if v.sort != INT:
            raise WhileSyntaxError(f"variable {v.name} is used as a boolean", 1, 1)
    return prog


def strip_annotations(prog: WhileProgram) -> WhileProgram:
    """Drop assertions and loop invariants/ranks; every remaining line keeps
    its number, so annotation lines leave gaps in the ``number`` scheme."""
    out = []
    for ln in prog.lines:
        if ln.is_assert:
            continue
        c = ln.content
        if isinstance(c, WhileOpen):
            c = WhileOpen(c.guard)
        out.append(replace(ln, content=c))
    index = {ln.number: k for k, ln in enumerate(out)}
    old = {k: ln for k, ln in enumerate(prog.lines)}
    fixed = []
    for ln in out:
        partner = tuple(index[old[k].number] for k in ln.partner)
        fixed.append(replace(ln, partner=partner))
    return WhileProgram(tuple(fixed), prog.vars)


# --- printing ------------------------------------------------------------------

def format_program(prog: WhileProgram, numbers: Optional[str] = None, indent: str = "    ") -> str:
    """Source text; ``numbers`` in (None, "commands", "source") prefixes line labels."""
    out = []
    if prog.vars:
        out.append("vars " + ", ".join(v.name for v in prog.vars) + ";")
    lines = list(prog.lines)
    for k, ln in enumerate(lines):
        c = ln.content
        pad = indent * ln.depth
        if isinstance(c, Assign):
            text = f"{c.var.name} := {show(c.expr)};"
        elif isinstance(c, Skip):
            text = "skip;"
        elif isinstance(c, Assert):
            text = f"@ {show(c.cond)};"
        elif isinstance(c, IfOpen):
            text = f"if ({show(c.cond)}) {{"
        elif isinstance(c, ElseOpen):
            text = "} else {"
        elif isinstance(c, Close):
            text = "}"
        elif isinstance(c, WhileOpen):
            head = "while"
            if c.invariant is not None:
                head += f" @ {show(c.invariant)}"
                if c.rank is not None:
                    head += f" @rank {show(c.rank)}"
            text = f"{head} ({show(c.guard)}) {{"
        else:
            text = ""
        if numbers is not None:
            tag = ln.label if numbers == COMMANDS else str(ln.number)
            text = f"{tag:>4}  {pad}{text}".rstrip()
        else:
            if isinstance(c, Blank):
                continue
            text = pad + text
        out.append(text)
    return "\n".join(out) + "\n"


# --- interpreter ---------------------------------------------------------------

@dataclass(frozen=True)
class Halted:
    valuation: dict
    steps: int


@dataclass(frozen=True)
class OutOfFuel:
    valuation: dict
    steps: int


def _eval(t: Term, env: Mapping[Var, int]):
    return th.eval_py(t, env)


def interpret(prog: WhileProgram, valuation: Mapping[Union[str, Var], int],
              fuel: int = 100_000, start: Optional[int] = None) -> Union[Halted, OutOfFuel]:
    """Run the program from ``valuation`` (annotations are ignored).  Each
    executed line costs one unit of fuel.  ``start`` is a command number to
    begin at instead of the first line."""
    env: dict[Var, int] = {}
    for k, v in valuation.items():
        env[Var(k, INT) if isinstance(k, str) else k] = int(v)
    missing = [v.name for v in prog.vars if v not in env]
    if missing:
        raise ValueError(f"valuation misses {', '.join(missing)}")
    lines = prog.lines
    pc, steps = 0, 0
    if start is not None:
        pc = next(k for k, ln in enumerate(lines) if ln.cmd_number == start)

    def out() -> dict:
        return {v.name: env[v] for v in prog.vars}

    while True:
        ln = lines[pc]
        c = ln.content
        if isinstance(c, Blank):
            return Halted(out(), steps)
        if steps >= fuel:
            return OutOfFuel(out(), steps)
        if isinstance(c, Assert):
            pc += 1
            continue
        steps += 1
        if isinstance(c, Assign):
            env[c.var] = _eval(c.expr, env)
            pc += 1
        elif isinstance(c, (Skip,)):
            pc += 1
        elif isinstance(c, IfOpen):
            pc = pc + 1 if _eval(c.cond, env) else ln.partner[1] + 1
        elif isinstance(c, ElseOpen):
            pc = ln.partner[2] + 1
        elif isinstance(c, WhileOpen):
            pc = pc + 1 if _eval(c.guard, env) else ln.partner[1] + 1
        elif isinstance(c, Close):
            opener = lines[ln.partner[0]]
            pc = ln.partner[0] if isinstance(opener.content, WhileOpen) else pc + 1
        else:  # pragma: no cover
            raise TypeError(c)
