"""Logically constrained rewrite rules and systems: ground rewriting, the
rewrite relation on constrained terms, the restricted ~-normalization of
state-shaped constrained terms, structural checks and the text format."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence

from hoare2ri import theory as th
from hoare2ri.solver import Solver, SolverVerdict, check_sat, check_valid, default_solver
from hoare2ri.syntax import (
    Scope, SyntaxErr, Token, TokenStream, elaborate, parse_expr, show, tokenize,
)
from hoare2ri.terms import (
    App, BOOL, CONSTRUCTOR, DEFINED, FunSym, INT, Position, STATE, Sort, Subst,
    Term, TermError, Var, apply_subst, fresh_var, match, ordered_vars, rename_apart,
    replace_at, sort_of, subterm_at, subterms, unify, var_set, variables,
)

PROGRAM, CHECK, HYPOTHESIS, CALC, USER = "program", "check", "hypothesis", "calc", "user"


class RuleError(TermError):
    pass


@dataclass(frozen=True)
class ConstrainedRule:
    lhs: Term
    rhs: Term
    constraint: Term = th.TRUE
    origin: str = USER
    name: str = ""

    def __post_init__(self):
        if sort_of(self.lhs) != sort_of(self.rhs):
            raise RuleError(f"rule sides have different sorts: {show(self.lhs)} -> {show(self.rhs)}")
        if sort_of(self.constraint) != BOOL or not th.is_logical(self.constraint):
            raise RuleError(f"rule constraint {show(self.constraint)} is not a logical formula")
        if self.origin != CALC and (isinstance(self.lhs, Var) or th.is_logical(self.lhs)):
            raise RuleError(f"left-hand side {show(self.lhs)} is a logical term")

    @cached_property
    def lvars(self) -> frozenset[Var]:
        return frozenset(var_set(self.constraint) | (var_set(self.rhs) - var_set(self.lhs)))

    @property
    def root(self) -> FunSym:
        assert isinstance(self.lhs, App)
        return self.lhs.fun

    def renamed(self) -> "ConstrainedRule":
        ren, (l, r, c) = rename_apart(self.lhs, self.rhs, self.constraint)
        return ConstrainedRule(l, r, c, self.origin, self.name)

    def __str__(self) -> str:
        return show_rule(self)


def show_rule(rule: ConstrainedRule, with_name: bool = False) -> str:
    s = f"{show(rule.lhs)} -> {show(rule.rhs)}"
    if rule.constraint != th.TRUE:
        s += f" [{show(rule.constraint)}]"
    if with_name and rule.name:
        s = f"{rule.name}: {s}"
    return s


def calc_rule(f: FunSym) -> ConstrainedRule:
    if f.kind != th.THEORY_CALC:
        raise RuleError(f"{f.name} is not a calculation symbol")
    names = ["x", "y"] if f.arity == 2 else ["x"]
    xs = [Var(n, s) for n, s in zip(names, f.arg_sorts)]
    y = Var("z", f.res_sort)
    lhs = App(f, tuple(xs))
    return ConstrainedRule(lhs, y, th.eq(y, lhs), CALC, f"calc:{f.name}")


CALC_RULES = {f: calc_rule(f) for f in th.CALC_SYMBOLS}


@dataclass(frozen=True)
class ConstrainedTerm:
    term: Term
    constraint: Term = th.TRUE

    def __str__(self) -> str:
        return f"⟨{show(self.term)}, [{show(self.constraint)}]⟩"


@dataclass(frozen=True)
class ConstrainedEquation:
    lhs: Term
    rhs: Term
    constraint: Term = th.TRUE

    def __post_init__(self):
        if sort_of(self.lhs) != sort_of(self.rhs):
            raise RuleError(f"equation sides have different sorts: {show(self.lhs)} ~ {show(self.rhs)}")

    def swap(self) -> "ConstrainedEquation":
        return ConstrainedEquation(self.rhs, self.lhs, self.constraint)

    def side(self, k: int) -> Term:
        return self.lhs if k == 1 else self.rhs

    def with_side(self, k: int, t: Term) -> "ConstrainedEquation":
        return ConstrainedEquation(t, self.rhs, self.constraint) if k == 1 else \
            ConstrainedEquation(self.lhs, t, self.constraint)

    def __str__(self) -> str:
        return show_equation(self)


def show_equation(e: ConstrainedEquation) -> str:
    s = f"{show(e.lhs)} ≈ {show(e.rhs)}"
    if e.constraint != th.TRUE:
        s += f" [{show(e.constraint)}]"
    return s


def parse_equation(src: str, symbols: dict) -> ConstrainedEquation:
    ts = TokenStream(tokenize(src))
    scope = Scope(symbols, {})
    lraw = parse_expr(ts)
    ts.expect("~")
    rraw = parse_expr(ts)
    craw = None
    if ts.accept("["):
        craw = parse_expr(ts)
        ts.expect("]")
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected {ts.peek().text!r}")
    lhs = elaborate(lraw, scope)
    rhs = elaborate(rraw, scope, sort_of(lhs))
    phi = elaborate(craw, scope, BOOL) if craw is not None else th.TRUE
    return ConstrainedEquation(lhs, rhs, phi)


@dataclass(frozen=True)
class Lctrs:
    rules: tuple[ConstrainedRule, ...]
    signature: dict = field(default_factory=dict, compare=False, hash=False)
    state_vars: tuple[Var, ...] = ()  # canonical argument names of state symbols

    def __post_init__(self):
        sig = dict(self.signature)
        for r in self.rules:
            for t in (r.lhs, r.rhs):
                for _, u in subterms(t):
                    if isinstance(u, App) and not th.is_theory_symbol(u.fun):
                        sig.setdefault(u.fun.name, u.fun)
        object.__setattr__(self, "signature", sig)

    def __iter__(self) -> Iterator[ConstrainedRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def union(self, other: Iterable[ConstrainedRule]) -> "Lctrs":
        extra = tuple(other)
        sig = dict(self.signature)
        if isinstance(other, Lctrs):
            sig.update(other.signature)
        return Lctrs(self.rules + extra, sig, self.state_vars)

    def rule(self, name: str) -> ConstrainedRule:
        for r in self.rules:
            if r.name == name:
                return r
        if name.startswith("calc:"):
            for f, r in CALC_RULES.items():
                if r.name == name:
                    return r
        raise KeyError(name)

    @cached_property
    def defined(self) -> frozenset[str]:
        return frozenset(r.root.name for r in self.rules if r.origin != CALC)

    def is_defined(self, f: FunSym) -> bool:
        return f.name in self.defined and not th.is_theory_symbol(f)

    def is_constructor_term(self, t: Term) -> bool:
        for _, u in subterms(t):
            if isinstance(u, App) and (u.fun.kind == th.THEORY_CALC or self.is_defined(u.fun)):
                return False
        return True

    def constructors(self, sort: Sort) -> list[FunSym]:
        return [f for f in self.signature.values()
                if f.res_sort == sort and f.name not in self.defined]


# --- ground rewriting ---------------------------------------------------------

def _instantiate_lvars(rule: ConstrainedRule, gamma: Subst) -> Optional[Subst]:
    """Bind logical variables of ``rule`` that the lhs match left open
    (the result variable of a calculation rule) using defining equations."""
    open_vars = [v for v in rule.lvars if v not in gamma and v not in var_set(rule.lhs)]
    if not open_vars:
        return gamma
    out = Subst(gamma)
    for c in th.conjuncts(rule.constraint):
        if isinstance(c, App) and c.fun in (th.EQ, th.BEQ) and isinstance(c.args[0], Var) \
                and c.args[0] in open_vars and c.args[0] not in out:
            rhs = apply_subst(c.args[1], out)
            try:
                out[c.args[0]] = th.eval_ground(rhs)
            except th.EvalError:
                return None
    if any(v not in out for v in open_vars):
        return None
    return out


def redexes(R: Lctrs, t: Term, with_calc: bool = True) -> Iterator[tuple[Position, ConstrainedRule, Subst]]:
    """All ``(position, rule, γ)`` such that ``t|p = ℓγ`` and γ respects the
    rule; positions in post-order (innermost first, left to right)."""
    nodes = list(subterms(t))
    order = sorted(range(len(nodes)), key=lambda i: _postorder_key(nodes[i][0]))
    for i in order:
        p, u = nodes[i]
        if not isinstance(u, App) or th.is_value(u):
            continue
        cands: list[ConstrainedRule] = []
        if u.fun.kind == th.THEORY_CALC:
            if with_calc and u.fun in CALC_RULES:
                cands = [CALC_RULES[u.fun]]
        else:
            cands = [r for r in R.rules if isinstance(r.lhs, App) and r.lhs.fun == u.fun]
        for rule in cands:
            gamma = match(rule.lhs, u)
            if gamma is None:
                continue
            gamma = _instantiate_lvars(rule, gamma)
            if gamma is None:
                continue
            if th.respects(gamma, rule.constraint, rule.lvars):
                yield p, rule, gamma


def _postorder_key(p: Position) -> tuple:
    # children before parents, siblings left to right
    return tuple(list(p) + [float("inf")])


def rewrite_step(R: Lctrs, t: Term, with_calc: bool = True) -> list[tuple[Term, ConstrainedRule, Position]]:
    out = []
    for p, rule, gamma in redexes(R, t, with_calc):
        out.append((replace_at(t, p, apply_subst(rule.rhs, gamma)), rule, p))
    return out


@dataclass
class RewriteRun:
    normal_form: Term
    steps: list[tuple[Position, str, Term]]
    exhausted: bool = False  # True when the step budget ran out

    @property
    def length(self) -> int:
        return len(self.steps)


def rewrite_innermost(R: Lctrs, t: Term, fuel: int = 100_000, with_calc: bool = True) -> RewriteRun:
    """Leftmost-innermost rewriting to normal form (or until ``fuel`` runs out)."""
    steps: list[tuple[Position, str, Term]] = []
    while True:
        if len(steps) >= fuel:
            return RewriteRun(t, steps, True)
        nxt = next(redexes(R, t, with_calc), None)
        if nxt is None:
            return RewriteRun(t, steps)
        p, rule, gamma = nxt
        t = replace_at(t, p, apply_subst(rule.rhs, gamma))
        steps.append((p, rule.name or show_rule(rule), t))


# --- constrained rewriting -------------------------------------------------------

@dataclass(frozen=True)
class StepFailure:
    reason: str
    verdict: Optional[SolverVerdict] = None

    @property
    def unknown(self) -> bool:
        return self.verdict is not None and self.verdict.unknown


@dataclass(frozen=True)
class NormalizeResult:
    ct: ConstrainedTerm
    leftover: tuple[Var, ...] = ()  # existential variables the constraint still mentions
    witness: Optional[Subst] = None  # state(x⃗)·witness = the input state term


def _is_theory_var(t: Term) -> bool:
    return isinstance(t, Var) and t.sort in (INT, BOOL)


def rewrite_constrained(R: Lctrs, ct: ConstrainedTerm, rule: ConstrainedRule, q: Position,
                        solver: Optional[Solver] = None, normalize: bool = True):
    """One ``~ · →base · ~`` step at position ``q``.

    Returns a :class:`NormalizeResult` or a :class:`StepFailure`."""
    solver = solver or default_solver()
    try:
        redex = subterm_at(ct.term, q)
    except TermError as e:
        return StepFailure(str(e))
    rr = rule.renamed()
    gamma = match(rr.lhs, redex)
    if gamma is None:
        return StepFailure(f"{show(rr.lhs)} does not match {show(redex)}")
    extra = []
    open_vars = [v for v in rr.lvars if v not in gamma]
    # open logical variables (calculation results) become fresh variables
    # pinned down by the rule's constraint
    for v in open_vars:
        gamma[v] = fresh_var(v.sort)
    for v in rr.lvars:
        img = gamma[v]
        if not (th.is_value(img) or _is_theory_var(img)):
            return StepFailure(f"logical variable {v} would be bound to {show(img)}")
    guard = apply_subst(rr.constraint, gamma)
    if open_vars:
        defining, rest = [], []
        fresh = {gamma[v] for v in open_vars}
        for c in th.conjuncts(guard):
            if isinstance(c, App) and c.fun in (th.EQ, th.BEQ) and c.args[0] in fresh \
                    and not (var_set(c.args[1]) & fresh):
                defining.append(c)
            else:
                rest.append(c)
        if len(defining) != len(open_vars):
            return StepFailure("rule introduces variables without defining equations")
        to_check = th.conj(*rest)
        new_phi = th.conj(ct.constraint, *defining)
    else:
        to_check = guard
        new_phi = ct.constraint
    if to_check != th.TRUE:
        verdict = solver.check_implies(ct.constraint, to_check)
        if not verdict.valid:
            why = "guard not implied" if verdict.invalid else "solver could not decide the guard"
            return StepFailure(f"{why}: {show(ct.constraint)} ==> {show(to_check)}", verdict)
    new_term = replace_at(ct.term, q, apply_subst(rr.rhs, gamma))
    out = ConstrainedTerm(new_term, new_phi)
    if normalize:
        return normalize_ct(out, R.state_vars)
    return NormalizeResult(out)


def _state_position(t: Term) -> Optional[Position]:
    found = [p for p, u in subterms(t) if sort_of(u) == STATE]
    if not found:
        return None
    top = [p for p in found if not any(p[:len(o)] == o and p != o for o in found)]
    return top[0] if len(top) == 1 else None


def _invert(e: Term, w: Var, x: Term) -> Optional[Term]:
    """Solve ``x = e`` for ``w`` when ``w`` occurs once in ``e`` along a
    chain of ``+``/``-``; returns the expression for ``w``."""
    if sum(1 for v in variables(e) if v == w) != 1:
        return None
    while e != w:
        if not isinstance(e, App) or e.fun not in (th.ADD, th.SUB):
            return None
        a, b = e.args
        in_a = w in var_set(a)
        if e.fun == th.ADD:
            x, e = (th.sub(x, b), a) if in_a else (th.sub(x, a), b)
        else:
            x, e = (th.add(x, b), a) if in_a else (th.sub(a, x), b)
    return x


def _replace_all(t: Term, old: Term, new: Term) -> Term:
    if t == old:
        return new
    if isinstance(t, Var) or not t.args:
        return t
    return App(t.fun, tuple(_replace_all(a, old, new) for a in t.args))


def _drop_true(phi: Term) -> Term:
    keep = [c for c in th.conjuncts(phi) if not th.is_ground_true(c)]
    if len(keep) == len(th.conjuncts(phi)):
        return phi
    return th.conj(*keep) if keep else th.TRUE


def normalize_ct(ct: ConstrainedTerm, canonical: Sequence[Var]) -> NormalizeResult:
    """Restricted ~-normalization: bring the outermost state term to the
    form ``state(x1, ..., xn)`` over the canonical variables, moving its
    argument expressions into the constraint."""
    if not canonical:
        return NormalizeResult(ConstrainedTerm(ct.term, _drop_true(ct.constraint)))
    pos = _state_position(ct.term)
    if pos is None:
        return NormalizeResult(ConstrainedTerm(ct.term, _drop_true(ct.constraint)))
    st = subterm_at(ct.term, pos)
    xs = list(canonical)
    if not isinstance(st, App) or len(st.args) != len(xs) or \
            any(a.sort != sort_of(e) for a, e in zip(xs, st.args)):
        return NormalizeResult(ct)
    args = list(st.args)
    target = App(st.fun, tuple(xs))
    hole = Var("_hole", STATE)
    if var_set(replace_at(ct.term, pos, hole)) & set(xs):
        return NormalizeResult(ct)
    phi = ct.constraint
    new_term = replace_at(ct.term, pos, target)
    witness = Subst({x: e for x, e in zip(xs, args)})
    bad = [k for k, (x, e) in enumerate(zip(xs, args)) if e != x]
    if not bad:
        return NormalizeResult(ConstrainedTerm(new_term, _drop_true(phi)), (), witness)

    if len(bad) == 1:
        k = bad[0]
        x, e = xs[k], args[k]
        others = set(xs) - {x}
        if x not in var_set(phi) and x not in var_set(e):
            out = th.conj(phi, th.eq(x, e))
            return NormalizeResult(ConstrainedTerm(new_term, _drop_true(out)), (), witness)
        if x in var_set(e) and not (var_set(e) - {x} - others):
            inv = _invert(e, x, x)
            if inv is not None:
                chi = _replace_all(phi, e, x)
                if apply_subst(chi, {x: e}) == phi:
                    return NormalizeResult(ConstrainedTerm(new_term, _drop_true(chi)), (), witness)
                out = apply_subst(phi, {x: inv})
                return NormalizeResult(ConstrainedTerm(new_term, _drop_true(out)), (), witness)

    # general case: ∃w. φ[w] ∧ x⃗ = e⃗[w], then eliminate what we can
    clash = [v for v in ordered_vars(phi, *args) if v in set(xs)]
    ren = Subst({v: fresh_var(v.sort) for v in clash})
    phi_w = apply_subst(phi, ren)
    eqs = [(x, apply_subst(e, ren)) for x, e in zip(xs, args)]
    elim = Subst()
    changed = True
    while changed:
        changed = False
        for idx, (x, e) in enumerate(eqs):
            if e is None:
                continue
            e = apply_subst(e, elim)
            eqs[idx] = (x, e)
            if e == x:
                eqs[idx] = (x, None)
                changed = True
                continue
            cands = [w for w in var_set(e) if w in set(ren.values()) and w not in elim]
            for w in cands:
                inv = _invert(e, w, x)
                if inv is not None:
                    elim[w] = inv
                    elim = Subst({v: apply_subst(t, {w: inv}) for v, t in elim.items()})
                    elim[w] = inv
                    eqs[idx] = (x, None)
                    changed = True
                    break
    body = apply_subst(phi_w, elim)
    rest = [th.eq(x, apply_subst(e, elim)) for x, e in eqs if e is not None]
    out = _drop_true(th.conj(body, *rest))
    leftover = tuple(v for v in ordered_vars(out) if v not in set(xs) and v in set(ren.values()))
    return NormalizeResult(ConstrainedTerm(new_term, out), leftover, witness)


# --- structural checks ------------------------------------------------------------

@dataclass
class CheckReport:
    ok: bool
    diagnostics: list[str] = field(default_factory=list)
    unknown: bool = False

    def __bool__(self) -> bool:
        return self.ok


def _nonvar_positions(t: Term) -> list[Position]:
    return [p for p, u in subterms(t) if isinstance(u, App)]


def is_left_linear(rule: ConstrainedRule) -> bool:
    vs = list(variables(rule.lhs))
    return len(vs) == len(set(vs))


def check_orthogonal(R: Lctrs | Iterable[ConstrainedRule], solver: Optional[Solver] = None) -> CheckReport:
    """Left-linear and non-overlapping; two rules overlap only when their
    left-hand sides unify at a non-variable position and the conjunction of
    their instantiated guards is satisfiable."""
    rules = [r for r in (R.rules if isinstance(R, Lctrs) else R) if r.origin != CALC]
    solver = solver or default_solver()
    rep = CheckReport(True)
    for r in rules:
        if not is_left_linear(r):
            rep.ok = False
            rep.diagnostics.append(f"not left-linear: {show_rule(r)}")
    left = [r.renamed() for r in rules]
    right = [r.renamed() for r in rules]  # a second copy so a rule can overlap itself
    for i, r1 in enumerate(rules):
        a = left[i]
        heads = {u.fun for _, u in subterms(a.lhs) if isinstance(u, App)}
        for j, r2 in enumerate(rules):
            b = right[j]
            if b.root not in heads:
                continue
            for p in _nonvar_positions(a.lhs):
                if i == j and p == ():
                    continue
                if i > j and p == ():
                    continue  # root overlaps are symmetric
                sub = subterm_at(a.lhs, p)
                if isinstance(sub, App) and th.is_theory_symbol(sub.fun) and sub.fun.kind != th.THEORY_CALC:
                    continue
                gamma = unify(sub, b.lhs)
                if gamma is None:
                    continue
                if any(not (th.is_value(apply_subst(v, gamma)) or _is_theory_var(apply_subst(v, gamma)))
                       for v in a.lvars | b.lvars):
                    continue
                both = th.conj(apply_subst(a.constraint, gamma), apply_subst(b.constraint, gamma))
                v = solver.check_sat(both)
                if v.invalid:
                    continue
                rep.ok = False
                if v.unknown:
                    rep.unknown = True
                where = "root" if not p else ".".join(map(str, p))
                rep.diagnostics.append(
                    f"overlap at {where}: {show_rule(r1)}  /  {show_rule(r2)}"
                    + (" (guard satisfiability unknown)" if v.unknown else ""))
    return rep


def basic_positions(R: Lctrs, s: Term) -> list[Position]:
    out = []
    for p, u in subterms(s):
        if isinstance(u, App) and R.is_defined(u.fun) and all(R.is_constructor_term(a) for a in u.args):
            out.append(p)
    return out


def check_quasi_reductive(R: Lctrs, solver: Optional[Solver] = None) -> CheckReport:
    """Coverage check for state-machine shaped systems: per defined symbol,
    the guards of its rules must cover every argument tuple."""
    solver = solver or default_solver()
    rep = CheckReport(True)
    by_root: dict[str, list[ConstrainedRule]] = {}
    for r in R.rules:
        if r.origin != CALC:
            by_root.setdefault(r.root.name, []).append(r)
    for name, rules in sorted(by_root.items()):
        f = rules[0].root
        guards = []
        shape = None
        ok_shape = True
        for r in rules:
            args = r.lhs.args
            if all(isinstance(a, Var) for a in args) and len(set(args)) == len(args):
                this = ("vars", None)
                pattern_vars = list(args)
            elif len(args) == 1 and isinstance(args[0], App) and \
                    all(isinstance(a, Var) for a in args[0].args) and \
                    len(set(args[0].args)) == len(args[0].args):
                this = ("cons", args[0].fun.name)
                pattern_vars = list(args[0].args)
            else:
                ok_shape = False
                break
            if shape is None:
                shape = this
            elif shape != this:
                ok_shape = False
                break
            if var_set(r.constraint) - set(pattern_vars):
                ok_shape = False
                break
            canon = [Var(f"_q{k}", v.sort) for k, v in enumerate(pattern_vars)]
            guards.append(apply_subst(r.constraint, dict(zip(pattern_vars, canon))))
        if not ok_shape:
            rep.ok = False
            rep.diagnostics.append(f"{name}: rule shape not supported by the coverage check")
            continue
        if shape[0] == "cons":
            sort = f.arg_sorts[0]
            cons = R.constructors(sort)
            if [c.name for c in cons] != [shape[1]]:
                rep.ok = False
                rep.diagnostics.append(f"{name}: {shape[1]} is not the only constructor of {sort}")
                continue
        disj = guards[0]
        for g in guards[1:]:
            disj = App(th.OR, (disj, g))
        v = solver.check_valid(disj)
        if not v.valid:
            rep.ok = False
            rep.unknown = rep.unknown or v.unknown
            rep.diagnostics.append(f"{name}: guards do not cover all cases ({show(disj)})"
                                   + (f", e.g. {v.model_text()}" if v.invalid else ""))
        else:
            rep.diagnostics.append(f"{name}: covered")
    return rep


# --- text format ------------------------------------------------------------------

def format_lctrs(R: Lctrs, with_names: bool = False) -> str:
    used: dict[str, FunSym] = {}
    for r in R.rules:
        for t in (r.lhs, r.rhs):
            for _, u in subterms(t):
                if isinstance(u, App) and not th.is_theory_symbol(u.fun):
                    used.setdefault(u.fun.name, u.fun)
    for name, f in R.signature.items():
        used.setdefault(name, f)
    sorts = ["int", "bool"] + sorted({s.name for f in used.values()
                                      for s in (*f.arg_sorts, f.res_sort)} - {"int", "bool"})
    lines = ["sorts " + " ".join(sorts), "signature"]
    for name in sorted(used, key=_natural):
        f = used[name]
        args = " ".join(s.name for s in f.arg_sorts)
        arrow = f"{args} -> {f.res_sort.name}" if args else f.res_sort.name
        lines.append(f"  {name} : {arrow}")
    if R.state_vars:
        lines.append("vars " + " ".join(v.name for v in R.state_vars))
    lines.append("rules")
    for r in R.rules:
        lines.append("  " + show_rule(r, with_name=with_names))
    return "\n".join(lines) + "\n"


def _natural(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


def parse_lctrs(text: str, origin: str = USER) -> Lctrs:
    sorts: dict[str, Sort] = {"int": INT, "bool": BOOL}
    sig: dict[str, FunSym] = {}
    rules: list[ConstrainedRule] = []
    state_vars: list[str] = []
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0].rstrip(":")
        if head == "sorts":
            for name in line.split()[1:]:
                sorts.setdefault(name, Sort(name))
            continue
        if head in ("signature", "rules"):
            section = head
            continue
        if head == "vars":
            state_vars = line.split()[1:]
            continue
        if section == "signature":
            name, _, decl = line.partition(":")
            parts = decl.replace("->", " -> ").split()
            if "->" in parts:
                k = parts.index("->")
                arg_names, res = parts[:k], parts[k + 1:]
            else:
                arg_names, res = [], parts
            if len(res) != 1:
                raise SyntaxErr(f"bad signature declaration {line!r}", lineno, 1)
            for s in arg_names + res:
                sorts.setdefault(s, Sort(s))
            sig[name.strip()] = FunSym(name.strip(), tuple(sorts[s] for s in arg_names),
                                       sorts[res[0]], DEFINED)
        elif section == "rules":
            rules.append(_parse_rule_line(line, lineno, sig, origin))
        else:
            raise SyntaxErr(f"line outside a section: {line!r}", lineno, 1)
    defined = {r.root.name for r in rules}
    sig = {n: FunSym(f.name, f.arg_sorts, f.res_sort, DEFINED if n in defined else CONSTRUCTOR)
           for n, f in sig.items()}
    sv: tuple[Var, ...] = tuple(Var(n, INT) for n in state_vars)
    return Lctrs(tuple(rules), sig, sv)


_RULE_LABEL = re.compile(r"^([A-Za-z0-9_.'-]+)\s*:(?!=)\s*(.*)$")


def _parse_rule_line(line: str, lineno: int, sig: dict, origin: str) -> ConstrainedRule:
    name = ""
    m = _RULE_LABEL.match(line)
    if m and "->" in m.group(2):
        name, line = m.group(1), m.group(2)
    toks = [Token(t.kind, t.text, lineno, t.col) for t in tokenize(line)]
    ts = TokenStream(toks)
    scope = Scope(sig, {})
    lraw = parse_expr(ts)
    ts.expect("->")
    rraw = parse_expr(ts)
    craw = None
    if ts.accept("["):
        craw = parse_expr(ts)
        ts.expect("]")
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected {ts.peek().text!r}")
    lhs = elaborate(lraw, scope)
    rhs = elaborate(rraw, scope, sort_of(lhs))
    phi = elaborate(craw, scope, BOOL) if craw is not None else th.TRUE
    return ConstrainedRule(lhs, rhs, phi, origin, name)


def rules_equal_modulo_renaming(a: ConstrainedRule, b: ConstrainedRule) -> bool:
    """Syntactic identity up to a bijective renaming of variables."""
    from hoare2ri.terms import is_renaming
    pair_a = App(FunSym("_rule", (sort_of(a.lhs), sort_of(a.rhs), BOOL), BOOL),
                 (a.lhs, a.rhs, a.constraint))
    pair_b = App(FunSym("_rule", (sort_of(b.lhs), sort_of(b.rhs), BOOL), BOOL),
                 (b.lhs, b.rhs, b.constraint))
    g = match(pair_a, pair_b)
    return g is not None and is_renaming(g) and len(set(g.values())) == len(g)
