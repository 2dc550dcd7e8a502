"""Sorted first-order terms: symbols, positions, substitutions, matching and
syntactic unification.

Terms are immutable and hashable.  Positions are tuples of 1-based argument
indices, the root being ``()``.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union


class TermError(Exception):
    pass


class InvalidPosition(TermError):
    pass


class SortMismatch(TermError):
    pass


@dataclass(frozen=True, order=True)
class Sort:
    name: str

    def __str__(self) -> str:
        return self.name


INT = Sort("int")
BOOL = Sort("bool")
STATE = Sort("state")

# kinds of function symbols
THEORY_VALUE = "theory-value"
THEORY_CALC = "theory-calc"
CONSTRUCTOR = "term-constructor"
DEFINED = "term-defined"


@dataclass(frozen=True)
class FunSym:
    name: str
    arg_sorts: tuple[Sort, ...]
    res_sort: Sort
    # the defined/constructor split depends on the rule set, so it is not
    # part of a symbol's identity
    kind: str = field(default=DEFINED, compare=False)

    def __post_init__(self):
        if self.kind == THEORY_VALUE and self.arg_sorts:
            raise TermError(f"value symbol {self.name} must be a constant")

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    @property
    def is_theory(self) -> bool:
        return self.kind in (THEORY_VALUE, THEORY_CALC)

    @property
    def is_value(self) -> bool:
        return self.kind == THEORY_VALUE

    def __call__(self, *args: "Term") -> "App":
        return App(self, tuple(args))

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort = INT

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    fun: FunSym
    args: tuple["Term", ...] = ()
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.args) != self.fun.arity:
            raise SortMismatch(
                f"{self.fun.name} expects {self.fun.arity} arguments, got {len(self.args)}")
        for a, s in zip(self.args, self.fun.arg_sorts):
            if sort_of(a) != s:
                raise SortMismatch(
                    f"argument {a} of {self.fun.name} has sort {sort_of(a)}, expected {s}")
        object.__setattr__(self, "_hash", hash((self.fun, self.args)))

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        # full printing with infix operators lives in syntax.py
        from hoare2ri.syntax import show
        return show(self)


Term = Union[Var, App]
Position = tuple[int, ...]


def sort_of(t: Term) -> Sort:
    return t.sort if isinstance(t, Var) else t.fun.res_sort


def is_ground(t: Term) -> bool:
    return not any(True for _ in variables(t))


def variables(t: Term) -> Iterator[Var]:
    """Variables of ``t`` in left-to-right order, with repetitions."""
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            yield u
        else:
            stack.extend(reversed(u.args))


def var_set(*ts: Term) -> set[Var]:
    return {v for t in ts for v in variables(t)}


def ordered_vars(*ts: Term) -> list[Var]:
    seen: dict[Var, None] = {}
    for t in ts:
        for v in variables(t):
            seen.setdefault(v, None)
    return list(seen)


def symbols(t: Term) -> Iterator[FunSym]:
    for _, u in subterms(t):
        if isinstance(u, App):
            yield u.fun


def positions(t: Term) -> list[Position]:
    return [p for p, _ in subterms(t)]


def subterms(t: Term, prefix: Position = ()) -> Iterator[tuple[Position, Term]]:
    """Pre-order enumeration of ``(position, subterm)`` pairs."""
    yield prefix, t
    if isinstance(t, App):
        for i, a in enumerate(t.args, start=1):
            yield from subterms(a, prefix + (i,))


def subterm_at(t: Term, p: Position) -> Term:
    for i in p:
        if not isinstance(t, App) or not 1 <= i <= len(t.args):
            raise InvalidPosition(f"position {list(p)} is not valid")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, p: Position, u: Term) -> Term:
    if not p:
        if sort_of(u) != sort_of(t):
            raise SortMismatch(f"cannot replace {t} of sort {sort_of(t)} with {u}")
        return u
    i = p[0]
    if not isinstance(t, App) or not 1 <= i <= len(t.args):
        raise InvalidPosition(f"position {list(p)} is not valid")
    args = list(t.args)
    args[i - 1] = replace_at(args[i - 1], p[1:], u)
    return App(t.fun, tuple(args))


class Subst(dict):
    """A finite substitution ``{Var: Term}``; identity bindings are dropped."""

    def __init__(self, bindings: Optional[Mapping[Var, Term]] = None):
        super().__init__()
        for v, t in (bindings or {}).items():
            self[v] = t

    def __setitem__(self, v: Var, t: Term) -> None:
        if sort_of(t) != v.sort:
            raise SortMismatch(f"cannot bind {v}:{v.sort} to {t}:{sort_of(t)}")
        if t == v:
            self.pop(v, None)
            return
        super().__setitem__(v, t)

    def domain(self) -> set[Var]:
        return set(self)

    def compose(self, other: Mapping[Var, Term]) -> "Subst":
        """``self`` followed by ``other`` (apply ``self`` first)."""
        out = Subst({v: apply_subst(t, other) for v, t in self.items()})
        for v, t in other.items():
            if v not in self:
                out[v] = t
        return out

    def __repr__(self) -> str:
        inner = ", ".join(f"{v}↦{t}" for v, t in self.items())
        return "{" + inner + "}"


def apply_subst(t: Term, gamma: Mapping[Var, Term]) -> Term:
    if not gamma:
        return t
    if isinstance(t, Var):
        u = gamma.get(t, t)
        if sort_of(u) != t.sort:
            raise SortMismatch(f"binding for {t} changes its sort")
        return u
    if not t.args:
        return t
    new = tuple(apply_subst(a, gamma) for a in t.args)
    if new == t.args:
        return t
    return App(t.fun, new)


def match(pattern: Term, subject: Term,
          gamma: Optional[Mapping[Var, Term]] = None) -> Optional[Subst]:
    """Return ``γ`` with ``pattern·γ == subject``, extending ``gamma``."""
    out = dict(gamma or {})
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            if p.sort != sort_of(s):
                return None
            bound = out.get(p)
            if bound is None:
                out[p] = s
            elif bound != s:
                return None
        elif isinstance(s, Var) or p.fun != s.fun:
            return None
        else:
            stack.extend(zip(p.args, s.args))
    return Subst(out)


def occurs(v: Var, t: Term) -> bool:
    return any(u == v for u in variables(t))


def unify(s: Term, t: Term) -> Optional[Subst]:
    """Idempotent most general unifier of ``s`` and ``t``, or ``None``.

    When two variables meet, the one coming from ``t`` is bound, so
    ``unify(redex, rule_lhs)`` maps rule variables onto the redex's variables.
    """
    sigma: dict[Var, Term] = {}

    def walk(u: Term) -> Term:
        while isinstance(u, Var) and u in sigma:
            u = sigma[u]
        return u

    def resolve(u: Term) -> Term:
        u = walk(u)
        if isinstance(u, Var) or not u.args:
            return u
        return App(u.fun, tuple(resolve(a) for a in u.args))

    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(b, Var):
            if b.sort != sort_of(a) or occurs(b, resolve(a)):
                return None
            sigma[b] = a
        elif isinstance(a, Var):
            if a.sort != sort_of(b) or occurs(a, resolve(b)):
                return None
            sigma[a] = b
        elif a.fun != b.fun:
            return None
        else:
            stack.extend(zip(a.args, b.args))
    return Subst({v: resolve(u) for v, u in sigma.items()})


_fresh_counter = itertools.count()
_fresh_lock = threading.Lock()
FRESH_PREFIX = "_v"


def fresh_var(sort: Sort = INT) -> Var:
    with _fresh_lock:
        n = next(_fresh_counter)
    return Var(f"{FRESH_PREFIX}{n}", sort)


def rename_apart(*ts: Term) -> tuple[Subst, list[Term]]:
    """Rename every variable of ``ts`` to a fresh one."""
    ren = Subst({v: fresh_var(v.sort) for v in ordered_vars(*ts)})
    return ren, [apply_subst(t, ren) for t in ts]


def is_renaming(gamma: Mapping[Var, Term]) -> bool:
    imgs = list(gamma.values())
    return all(isinstance(u, Var) for u in imgs) and len(set(imgs)) == len(imgs)
