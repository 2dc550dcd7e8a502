"""The fixed integer/boolean theory: value symbols, calculation symbols, the
interpretation of each symbol, and ground evaluation."""

from __future__ import annotations

import functools
from typing import Callable, Iterable, Mapping, Optional, Union

from hoare2ri.terms import (
    App, BOOL, FunSym, INT, Sort, Term, TermError, THEORY_CALC, THEORY_VALUE,
    Var, subterms,
)


class EvalError(TermError):
    pass


Py = Union[int, bool]

TRUE_SYM = FunSym("true", (), BOOL, THEORY_VALUE)
FALSE_SYM = FunSym("false", (), BOOL, THEORY_VALUE)
TRUE = App(TRUE_SYM)
FALSE = App(FALSE_SYM)


def _calc(name: str, args: tuple[Sort, ...], res: Sort) -> FunSym:
    return FunSym(name, args, res, THEORY_CALC)


_II, _BB = (INT, INT), (BOOL, BOOL)

AND = _calc("&&", _BB, BOOL)
OR = _calc("||", _BB, BOOL)
IMPLIES = _calc("==>", _BB, BOOL)
NOT = _calc("!", (BOOL,), BOOL)
EQ = _calc("=", _II, BOOL)
BEQ = _calc("=", _BB, BOOL)
NEQ = _calc("!=", _II, BOOL)
ADD = _calc("+", _II, INT)
SUB = _calc("-", _II, INT)
MUL = _calc("*", _II, INT)
DIV = _calc("/", _II, INT)
MOD = _calc("%", _II, INT)
EXP = _calc("exp", _II, INT)
GE = _calc(">=", _II, BOOL)
GT = _calc(">", _II, BOOL)

CALC_SYMBOLS = (AND, OR, IMPLIES, NOT, EQ, BEQ, NEQ, ADD, SUB, MUL, DIV, MOD,
                EXP, GE, GT)
COMPARISONS = (EQ, NEQ, GE, GT)


def euclid_div(a: int, b: int) -> int:
    # SMT-LIB Int semantics: remainder is always non-negative
    if b == 0:
        return 0
    r = a % abs(b)
    return (a - r) // b


def euclid_mod(a: int, b: int) -> int:
    if b == 0:
        return 0
    return a % abs(b)


def int_exp(a: int, k: int) -> int:
    if k < 0:
        return 0
    return a ** k


INTERP: dict[FunSym, Callable[..., Py]] = {
    AND: lambda a, b: a and b,
    OR: lambda a, b: a or b,
    IMPLIES: lambda a, b: (not a) or b,
    NOT: lambda a: not a,
    EQ: lambda a, b: a == b,
    BEQ: lambda a, b: a == b,
    NEQ: lambda a, b: a != b,
    ADD: lambda a, b: a + b,
    SUB: lambda a, b: a - b,
    MUL: lambda a, b: a * b,
    DIV: euclid_div,
    MOD: euclid_mod,
    EXP: int_exp,
    GE: lambda a, b: a >= b,
    GT: lambda a, b: a > b,
}


@functools.lru_cache(maxsize=4096)
def _int_sym(n: int) -> FunSym:
    return FunSym(str(n), (), INT, THEORY_VALUE)


def int_value(n: int) -> App:
    return App(_int_sym(int(n)))


def bool_value(b: bool) -> App:
    return TRUE if b else FALSE


def value(x: Py) -> App:
    if isinstance(x, bool):
        return bool_value(x)
    return int_value(x)


def is_value(t: Term) -> bool:
    return isinstance(t, App) and t.fun.kind == THEORY_VALUE


def decode(t: Term) -> Py:
    """Map a value symbol to its carrier element."""
    if not is_value(t):
        raise EvalError(f"{t} is not a value")
    if t.fun == TRUE_SYM:
        return True
    if t.fun == FALSE_SYM:
        return False
    return int(t.fun.name)


def is_theory_symbol(f: FunSym) -> bool:
    return f.kind in (THEORY_VALUE, THEORY_CALC)


def is_logical(t: Term) -> bool:
    return all(isinstance(u, Var) or is_theory_symbol(u.fun) for _, u in subterms(t))


def eval_py(t: Term, env: Optional[Mapping[Var, Py]] = None) -> Py:
    """Evaluate a logical term to a Python int/bool; variables read ``env``."""
    if isinstance(t, Var):
        if env is None or t not in env:
            raise EvalError(f"unbound variable {t}")
        return env[t]
    f = t.fun
    if f.kind == THEORY_VALUE:
        return decode(t)
    fn = INTERP.get(f)
    if fn is None:
        raise EvalError(f"{f.name} is not a theory symbol")
    # short-circuit the connectives so partial environments work where possible
    if f == AND:
        return bool(eval_py(t.args[0], env)) and bool(eval_py(t.args[1], env))
    if f == OR:
        return bool(eval_py(t.args[0], env)) or bool(eval_py(t.args[1], env))
    if f == IMPLIES:
        return (not eval_py(t.args[0], env)) or bool(eval_py(t.args[1], env))
    return fn(*(eval_py(a, env) for a in t.args))


def eval_ground(t: Term) -> App:
    """Return the value ``c`` with the same interpretation as ground ``t``."""
    for _, u in subterms(t):
        if isinstance(u, Var):
            raise EvalError(f"{t} is not ground")
    return value(eval_py(t))


def holds(phi: Term, env: Mapping[Var, Py]) -> bool:
    return bool(eval_py(phi, env))


def respects(gamma: Mapping[Var, Term], phi: Term, lvars: Iterable[Var]) -> bool:
    """True iff ``gamma`` maps every logical variable to a value and
    ``phi·gamma`` evaluates to true."""
    env = {}
    for v in lvars:
        u = gamma.get(v)
        if u is None or not is_value(u):
            return False
        env[v] = decode(u)
    try:
        return bool(eval_py(phi, env))
    except EvalError:
        return False


# --- constraint helpers -----------------------------------------------------

def conj(*phis: Term) -> Term:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    items = [p for p in phis]
    if not items:
        return TRUE
    out = items[0]
    for p in items[1:]:
        out = App(AND, (out, p))
    return out


def conjuncts(phi: Term) -> list[Term]:
    if isinstance(phi, App) and phi.fun == AND:
        return conjuncts(phi.args[0]) + conjuncts(phi.args[1])
    return [phi]


def neg(phi: Term) -> Term:
    return App(NOT, (phi,))


def implies(a: Term, b: Term) -> Term:
    return App(IMPLIES, (a, b))


def eq(a: Term, b: Term) -> Term:
    from hoare2ri.terms import sort_of
    return App(BEQ if sort_of(a) == BOOL else EQ, (a, b))


def add(a: Term, b: Term) -> Term:
    return App(ADD, (a, b))


def sub(a: Term, b: Term) -> Term:
    return App(SUB, (a, b))


def mul(a: Term, b: Term) -> Term:
    return App(MUL, (a, b))


def ge(a: Term, b: Term) -> Term:
    return App(GE, (a, b))


def gt(a: Term, b: Term) -> Term:
    return App(GT, (a, b))


def iff(a: Term, b: Term) -> Term:
    return App(BEQ, (a, b))


def is_ground_true(phi: Term) -> bool:
    try:
        return eval_ground(phi) == TRUE
    except EvalError:
        return False


def calc_rule_for(f: FunSym):
    """The calculation rule ``f(x1..xn) -> y [y = f(x1..xn)]``."""
    from hoare2ri.lctrs import calc_rule
    return calc_rule(f)
