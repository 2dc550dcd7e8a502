"""Concrete syntax shared by every front end: a tokenizer, a Pratt parser for
integer/boolean expressions and first-order terms, elaboration of parse trees
into sorted terms, denominator clearing for assertions, and the printer.

ASCII and Unicode spellings are both accepted::

    &&  ∧  and      ||  ∨  or      ==>  ⟹  =>      !  ¬  not
    =  ==   !=  ≠   >=  ≥   <=  ≤   >   <   +   -  −   *  ×   /   %

``a <= b`` and ``a < b`` are read as ``b >= a`` and ``b > a``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

from hoare2ri import theory as th
from hoare2ri.terms import (
    App, BOOL, FunSym, INT, Sort, Term, TermError, Var, sort_of,
)


class SyntaxErr(TermError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + msg)
        self.line, self.col = line, col
        self.msg = msg


# --- tokens -----------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # NUM, ID, OP, EOF
    text: str
    line: int
    col: int


_ALIASES = {
    "∧": "&&", "and": "&&", "∨": "||", "or": "||", "⟹": "==>", "=>": "==>",
    "→": "->", "¬": "!", "not": "!", "≠": "!=", "≥": ">=", "≤": "<=",
    "×": "*", "−": "-", "==": "=", "div": "/", "mod": "%", "≈": "~",
}
_WORD_OPS = {"and", "or", "not", "div", "mod"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) |
    (?P<nl>\n) |
    (?P<comment>(?://|\#)[^\n]*) |
    (?P<num>\d+) |
    (?P<half>½) |
    (?P<id>[A-Za-z_][A-Za-z_0-9']*) |
    (?P<op>==>|=>|->|:=|&&|\|\||!=|>=|<=|==|[-+*/%<>=!(){}\[\],;:@~]|[∧∨⟹¬≠≥≤×−→≈])
""", re.VERBOSE)


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise SyntaxErr(f"unexpected character {src[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "num":
            toks.append(Token("NUM", text, line, col))
        elif kind == "half":
            toks += [Token("NUM", "1", line, col), Token("OP", "/", line, col),
                     Token("NUM", "2", line, col)]
        elif kind == "id":
            if text in _WORD_OPS:
                toks.append(Token("OP", _ALIASES[text], line, col))
            else:
                toks.append(Token("ID", text, line, col))
        elif kind == "op":
            toks.append(Token("OP", _ALIASES.get(text, text), line, col))
        pos = m.end()
    toks.append(Token("EOF", "", line, pos - line_start + 1))
    return toks


class TokenStream:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("OP", "ID") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            found = t.text or "end of input"
            raise SyntaxErr(f"expected {text!r} but found {found!r}", t.line, t.col)
        return self.next()

    def error(self, msg: str) -> SyntaxErr:
        t = self.peek()
        return SyntaxErr(msg, t.line, t.col)


# --- parse trees ------------------------------------------------------------

@dataclass(frozen=True)
class Raw:
    kind: str  # num | id | call | op
    text: str
    args: tuple["Raw", ...] = ()
    line: int = 0
    col: int = 0


_BINARY = {
    "==>": (10, "right"), "||": (20, "left"), "&&": (30, "left"),
    "=": (40, "none"), "!=": (40, "none"), ">=": (40, "none"), ">": (40, "none"),
    "<=": (40, "none"), "<": (40, "none"),
    "+": (50, "left"), "-": (50, "left"),
    "*": (60, "left"), "/": (60, "left"), "%": (60, "left"),
}
_NOT_BP = 35
_NEG_BP = 70


def parse_expr(ts: TokenStream, callable_name: Callable[[str], bool] = lambda n: True,
               min_bp: int = 0) -> Raw:
    """Pratt parser.  ``callable_name`` decides whether ``f (`` is a call;
    while headers need ``inv (guard)`` not to be read as an application."""
    tok = ts.next()
    if tok.kind == "NUM":
        left = Raw("num", tok.text, (), tok.line, tok.col)
    elif tok.kind == "ID":
        if ts.at("(") and callable_name(tok.text):
            ts.next()
            args = []
            if not ts.at(")"):
                args.append(parse_expr(ts, callable_name))
                while ts.accept(","):
                    args.append(parse_expr(ts, callable_name))
            ts.expect(")")
            left = Raw("call", tok.text, tuple(args), tok.line, tok.col)
        else:
            left = Raw("id", tok.text, (), tok.line, tok.col)
    elif tok.kind == "OP" and tok.text == "(":
        left = parse_expr(ts, callable_name)
        ts.expect(")")
    elif tok.kind == "OP" and tok.text == "!":
        arg = parse_expr(ts, callable_name, _NOT_BP)
        left = Raw("op", "!", (arg,), tok.line, tok.col)
    elif tok.kind == "OP" and tok.text == "-":
        arg = parse_expr(ts, callable_name, _NEG_BP)
        left = Raw("op", "neg", (arg,), tok.line, tok.col)
    else:
        found = tok.text or "end of input"
        raise SyntaxErr(f"expected an expression but found {found!r}", tok.line, tok.col)

    while True:
        op = ts.peek()
        if op.kind != "OP" or op.text not in _BINARY:
            break
        bp, assoc = _BINARY[op.text]
        if bp < min_bp or (bp == min_bp and assoc != "right"):
            break
        ts.next()
        rhs_bp = bp if assoc == "right" else bp + 1
        right = parse_expr(ts, callable_name, rhs_bp)
        left = Raw("op", op.text, (left, right), op.line, op.col)
        if assoc == "none" and ts.peek().kind == "OP" and \
                _BINARY.get(ts.peek().text, (0,))[0] == bp:
            raise ts.error("comparison operators do not chain")
    return left


# --- elaboration ------------------------------------------------------------

RATIONAL = "rational"


def rational(q: Fraction) -> Term:
    if q.denominator == 1:
        return th.int_value(q.numerator)
    return App(FunSym(f"{q.numerator}/{q.denominator}", (), INT, RATIONAL))


def _rat_of(t: Term) -> Optional[Fraction]:
    if isinstance(t, App) and t.fun.kind == RATIONAL:
        return Fraction(t.fun.name)
    return None


_OPS = {"&&": th.AND, "||": th.OR, "==>": th.IMPLIES, ">=": th.GE, ">": th.GT,
        "+": th.ADD, "-": th.SUB, "*": th.MUL, "/": th.DIV, "%": th.MOD}
_CALLS = {"exp": th.EXP, "div": th.DIV, "mod": th.MOD}


@dataclass
class Scope:
    """Symbol table used while elaborating parse trees."""
    symbols: Mapping[str, FunSym] = field(default_factory=dict)
    var_sorts: dict[str, Sort] = field(default_factory=dict)
    rationals: bool = False          # allow p/q literal quotients (assertions)
    fixed_vars: Optional[set[str]] = None  # if set, only these names are variables

    def var(self, name: str, sort: Optional[Sort], raw: Raw) -> Var:
        if self.fixed_vars is not None and name not in self.fixed_vars:
            raise SyntaxErr(f"unknown variable {name!r}", raw.line, raw.col)
        known = self.var_sorts.get(name)
        if known is None:
            known = sort or INT
            self.var_sorts[name] = known
        if sort is not None and known != sort:
            raise SyntaxErr(f"variable {name} used at sorts {known} and {sort}", raw.line, raw.col)
        return Var(name, known)


def _guess_sort(raw: Raw, scope: Scope) -> Optional[Sort]:
    if raw.kind == "num":
        return INT
    if raw.kind == "id":
        if raw.text in ("true", "false"):
            return BOOL
        f = scope.symbols.get(raw.text)
        if f is not None and f.arity == 0:
            return f.res_sort
        return scope.var_sorts.get(raw.text)
    if raw.kind == "call":
        f = scope.symbols.get(raw.text) or _CALLS.get(raw.text)
        return f.res_sort if f else None
    if raw.text in ("&&", "||", "==>", "!", "=", "!=", ">=", ">", "<=", "<"):
        return BOOL
    return INT


def elaborate(raw: Raw, scope: Scope, expected: Optional[Sort] = None) -> Term:
    t = _elab(raw, scope, expected)
    if expected is not None and sort_of(t) != expected:
        raise SyntaxErr(f"expected a {expected} expression, got {sort_of(t)}", raw.line, raw.col)
    return t


def _elab(raw: Raw, scope: Scope, expected: Optional[Sort]) -> Term:
    k = raw.kind
    if k == "num":
        return th.int_value(int(raw.text))
    if k == "id":
        if raw.text == "true":
            return th.TRUE
        if raw.text == "false":
            return th.FALSE
        f = scope.symbols.get(raw.text)
        if f is not None and f.arity == 0:
            return App(f)
        return scope.var(raw.text, expected, raw)
    if k == "call":
        f = scope.symbols.get(raw.text) or _CALLS.get(raw.text)
        if f is None:
            raise SyntaxErr(f"unknown function symbol {raw.text!r}", raw.line, raw.col)
        if len(raw.args) != f.arity:
            raise SyntaxErr(f"{raw.text} expects {f.arity} arguments", raw.line, raw.col)
        return App(f, tuple(elaborate(a, scope, s) for a, s in zip(raw.args, f.arg_sorts)))
    op = raw.text
    if op == "neg":
        arg = elaborate(raw.args[0], scope, INT)
        if th.is_value(arg):
            return th.int_value(-th.decode(arg))
        q = _rat_of(arg)
        if q is not None:
            return rational(-q)
        return th.sub(th.int_value(0), arg)
    if op == "!":
        return th.neg(elaborate(raw.args[0], scope, BOOL))
    a, b = raw.args
    if op in ("=", "!="):
        sa, sb = _guess_sort(a, scope), _guess_sort(b, scope)
        s = BOOL if BOOL in (sa, sb) else INT
        ta, tb = elaborate(a, scope, s), elaborate(b, scope, s)
        if s == BOOL:
            e = App(th.BEQ, (ta, tb))
            return th.neg(e) if op == "!=" else e
        return App(th.EQ if op == "=" else th.NEQ, (ta, tb))
    if op in ("<=", "<"):
        ta, tb = elaborate(a, scope, INT), elaborate(b, scope, INT)
        return App(th.GE if op == "<=" else th.GT, (tb, ta))
    f = _OPS[op]
    ta = elaborate(a, scope, f.arg_sorts[0])
    tb = elaborate(b, scope, f.arg_sorts[1])
    if op == "/" and scope.rationals:
        qa = _rat_of(ta) if not th.is_value(ta) else Fraction(th.decode(ta))
        qb = _rat_of(tb) if not th.is_value(tb) else Fraction(th.decode(tb))
        if qa is not None and qb is not None:
            if qb == 0:
                raise SyntaxErr("rational constant with zero denominator", raw.line, raw.col)
            return rational(qa / qb)
    return App(f, (ta, tb))


# --- denominator clearing ---------------------------------------------------

def _den(t: Term) -> int:
    if isinstance(t, Var) or th.is_value(t):
        return 1
    q = _rat_of(t)
    if q is not None:
        return q.denominator
    f = t.fun
    if f in (th.ADD, th.SUB):
        return math.lcm(_den(t.args[0]), _den(t.args[1]))
    if f == th.MUL:
        return _den(t.args[0]) * _den(t.args[1])
    if any(_den(a) != 1 for a in t.args):
        raise SyntaxErr(f"rational constant under {f.name} cannot be cleared")
    return 1


def _scale(t: Term, k: int) -> Term:
    if _den(t) == 1:
        return t if k == 1 else th.mul(th.int_value(k), t)
    q = _rat_of(t)
    if q is not None:
        return rational(q * k)
    f = t.fun
    if f in (th.ADD, th.SUB):
        return App(f, (_scale(t.args[0], k), _scale(t.args[1], k)))
    a, b = t.args
    da = _den(a)
    left, right = _scale(a, da), _scale(b, k // da)
    one = th.int_value(1)
    if left == one:
        return right
    if right == one:
        return left
    return th.mul(left, right)


def clear_denominators(phi: Term) -> Term:
    """Multiply each comparison atom through by the lcm of its denominators,
    so that ``z = 1/2*i*(i+1)`` becomes ``2 * z = i * (i + 1)``."""
    if isinstance(phi, Var) or th.is_value(phi):
        return phi
    if phi.fun in th.COMPARISONS:
        a, b = phi.args
        k = math.lcm(_den(a), _den(b))
        if k == 1:
            return phi
        return App(phi.fun, (_scale(a, k), _scale(b, k)))
    if _rat_of(phi) is not None:
        raise SyntaxErr(f"rational constant {phi.fun.name} outside a comparison")
    return App(phi.fun, tuple(clear_denominators(a) for a in phi.args))


def has_rationals(t: Term) -> bool:
    from hoare2ri.terms import subterms
    return any(isinstance(u, App) and u.fun.kind == RATIONAL for _, u in subterms(t))


# --- convenience entry points -----------------------------------------------

def parse_term(src: str, symbols: Optional[Mapping[str, FunSym]] = None,
               sort: Optional[Sort] = None, var_sorts: Optional[dict[str, Sort]] = None,
               assertion: bool = False) -> Term:
    """Parse a standalone expression or term.

    With ``assertion=True`` quotients of literals are rational constants and
    are cleared atom by atom."""
    ts = TokenStream(tokenize(src))
    raw = parse_expr(ts)
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected {ts.peek().text!r}")
    scope = Scope(dict(symbols or {}), var_sorts if var_sorts is not None else {},
                  rationals=assertion)
    t = elaborate(raw, scope, sort)
    if assertion:
        t = clear_denominators(t)
    return t


def parse_constraint(src: str, var_sorts: Optional[dict[str, Sort]] = None) -> Term:
    return parse_term(src, sort=BOOL, var_sorts=var_sorts, assertion=True)


# --- printing ---------------------------------------------------------------

_PREC = {"==>": 10, "||": 20, "&&": 30, "=": 40, "!=": 40, ">=": 40, ">": 40,
         "+": 50, "-": 50, "*": 60, "/": 60, "%": 60}


def _is_neg_literal(t: Term) -> bool:
    if th.is_value(t) and t.fun.name.startswith("-"):
        return True
    q = _rat_of(t)
    return q is not None and q < 0


def show(t: Term) -> str:
    """Canonical ASCII rendering; ``parse_term(show(t)) == t``."""
    return _show(t, 0)


def _show(t: Term, ctx: int) -> str:
    if isinstance(t, Var):
        return t.name
    f = t.fun
    if not t.args:
        return f.name
    if f.kind == th.THEORY_CALC and f.name in _PREC:
        p = _PREC[f.name]
        a, b = t.args
        if f.name == "==>":
            lp, rp = p + 1, p
        elif p == 40:
            lp = rp = p + 1
        else:
            lp, rp = p, p + 1
        sa, sb = _operand(a, lp), _operand(b, rp)
        s = f"{sa} {f.name} {sb}"
        return f"({s})" if p < ctx else s
    if f == th.NOT:
        inner = t.args[0]
        if isinstance(inner, Var) or not inner.args or not (
                inner.fun.kind == th.THEORY_CALC and inner.fun.name in _PREC):
            s = "!" + _show(inner, 100)
        else:
            s = f"!({_show(inner, 0)})"
        return f"({s})" if _NOT_BP < ctx else s
    return f"{f.name}(" + ", ".join(_show(a, 0) for a in t.args) + ")"


def _operand(t: Term, prec: int) -> str:
    if _is_neg_literal(t):
        return f"({_show(t, 0)})"
    return _show(t, prec)


def show_subst(gamma: Mapping[Var, Term]) -> str:
    return "{" + ", ".join(f"{v.name}↦{show(t)}" for v, t in gamma.items()) + "}"
