"""SMT-LIB2 text: translating constraints to s-expressions and reading the
solver's replies (check-sat answers and models)."""

from __future__ import annotations

import re
from typing import Union

from hoare2ri import theory as th
from hoare2ri.terms import BOOL, INT, Term, TermError, Var, ordered_vars


class ProtocolError(Exception):
    pass


class Unsupported(TermError):
    pass


SExpr = Union[str, list]

_SIMPLE = re.compile(r"^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$")
_RESERVED = {"and", "or", "not", "ite", "let", "true", "false", "div", "mod",
             "distinct", "assert", "exists", "forall", "par", "as", "_", "!"}


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    return "|" + name.replace("|", "").replace("\\", "") + "|"


def sort_name(v: Var) -> str:
    if v.sort == INT:
        return "Int"
    if v.sort == BOOL:
        return "Bool"
    raise Unsupported(f"variable {v} of sort {v.sort} has no SMT encoding")


def _int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


_OPS = {"&&": "and", "||": "or", "==>": "=>", "=": "=", "+": "+", "-": "-",
        "*": "*", ">=": ">=", ">": ">"}


def to_smt(t: Term) -> str:
    if isinstance(t, Var):
        return symbol(t.name)
    f = t.fun
    if th.is_value(t):
        v = th.decode(t)
        if isinstance(v, bool):
            return "true" if v else "false"
        return _int(v)
    args = [to_smt(a) for a in t.args]
    if f == th.NOT:
        return f"(not {args[0]})"
    if f == th.NEQ:
        return f"(distinct {args[0]} {args[1]})"
    if f in (th.DIV, th.MOD):
        # the theory is totalised: x / 0 = x % 0 = 0
        op = "div" if f == th.DIV else "mod"
        return f"(ite (= {args[1]} 0) 0 ({op} {args[0]} {args[1]}))"
    if f == th.EXP:
        k = t.args[1]
        if not th.is_value(k):
            raise Unsupported("exp with a symbolic exponent")
        n = th.decode(k)
        if n < 0:
            return "0"
        if n == 0:
            return "1"
        return "(* " + " ".join([args[0]] * n) + ")" if n > 1 else args[0]
    op = _OPS.get(f.name) if f.kind == th.THEORY_CALC else None
    if op is None:
        raise Unsupported(f"symbol {f.name} is not part of the theory")
    return f"({op} {' '.join(args)})"


def script(phi: Term, negate: bool) -> list[str]:
    """Commands deciding satisfiability of ``phi`` (or of its negation)."""
    lines = [f"(declare-const {symbol(v.name)} {sort_name(v)})" for v in ordered_vars(phi)]
    body = to_smt(phi)
    lines.append(f"(assert (not {body}))" if negate else f"(assert {body})")
    return lines


# --- reading replies --------------------------------------------------------

_TOKEN = re.compile(r'\s*(?:(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()";|]+)|(;[^\n]*))')


def parse_sexprs(text: str) -> list[SExpr]:
    out: list[SExpr] = []
    stack: list[list] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ProtocolError(f"cannot read solver output near {text[pos:pos + 20]!r}")
        pos = m.end()
        lp, rp, string, quoted, atom, comment = m.groups()
        if comment:
            continue
        if lp:
            stack.append([])
            continue
        if rp:
            if not stack:
                raise ProtocolError("unbalanced ')' in solver output")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
            continue
        tok = string or (quoted[1:-1] if quoted else atom)
        (stack[-1] if stack else out).append(tok)
    if stack:
        raise ProtocolError("unbalanced '(' in solver output")
    return out


def balanced(text: str) -> bool:
    depth = 0
    seen = False
    in_bar = in_str = False
    for ch in text:
        if in_bar:
            in_bar = ch != "|"
        elif in_str:
            in_str = ch != '"'
        elif ch == "|":
            in_bar = True
        elif ch == '"':
            in_str = True
        elif ch == "(":
            depth += 1
            seen = True
        elif ch == ")":
            depth -= 1
    return seen and depth == 0


def _value(e: SExpr) -> Union[int, bool]:
    if isinstance(e, str):
        if e == "true":
            return True
        if e == "false":
            return False
        try:
            return int(e)
        except ValueError:
            raise ProtocolError(f"unexpected model value {e!r}") from None
    if len(e) == 2 and e[0] == "-":
        v = _value(e[1])
        return -v
    raise ProtocolError(f"unexpected model value {e!r}")


def parse_model(text: str) -> dict[str, Union[int, bool]]:
    exprs = parse_sexprs(text)
    if not exprs:
        raise ProtocolError("empty model")
    body = exprs[0]
    if isinstance(body, list) and body and body[0] == "model":
        body = body[1:]
    model: dict[str, Union[int, bool]] = {}
    for d in body:
        if isinstance(d, list) and len(d) == 5 and d[0] == "define-fun" and d[2] == []:
            model[d[1]] = _value(d[4])
    return model
