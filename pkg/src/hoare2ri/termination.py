"""Termination of converter-generated state machines by per-cycle ranking
functions, and its lifting to the check rules plus RI hypotheses.

Every infinite rewrite sequence of such a system must pass some loop
header infinitely often, so it suffices to show that for every simple
cycle through a header a ranking expression is bounded under the cycle's
guard and strictly decreases along the cycle's composed update.  Inner
loops are certified first; an outer cycle crossing an inner header havocs
the variables the inner loop may write and assumes its exit condition."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from hoare2ri import theory as th
from hoare2ri.convert import CHK, ConversionMap
from hoare2ri.lctrs import ConstrainedRule, Lctrs
from hoare2ri.solver import Solver, SolverVerdict, default_solver
from hoare2ri.syntax import show
from hoare2ri.terms import App, INT, Term, Var, apply_subst, fresh_var, var_set

TERMINATING = "Terminating"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Edge:
    rule: str
    source: int
    target: int
    guard: Term
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Cycle:
    path: tuple[str, ...]
    guard: Term
    update: tuple[tuple[Var, Term], ...]   # composed, over the values at the header

    @property
    def substitution(self) -> dict:
        return dict(self.update)


@dataclass(frozen=True)
class LoopSummary:
    header: int
    symbol: str
    vars: tuple[Var, ...]
    cycles: tuple[Cycle, ...]
    inner: tuple[int, ...] = ()


@dataclass
class Check:
    claim: str
    verdict: SolverVerdict

    def to_json(self) -> dict:
        d = {"claim": self.claim, "status": self.verdict.status.value}
        if self.verdict.invalid and self.verdict.model:
            d["counterexample"] = self.verdict.model_text()
        return d


@dataclass
class RankCertificate:
    header: int
    rank: tuple[Term, ...]            # one expression, or two for a lexicographic rank
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.verdict.valid for c in self.checks)

    def to_json(self) -> dict:
        return {"header": self.header, "rank": [show(e) for e in self.rank],
                "checks": [c.to_json() for c in self.checks]}


@dataclass
class RankFailure:
    header: int
    rank: tuple[Term, ...]
    checks: list[Check]

    @property
    def unknown(self) -> bool:
        return not any(c.verdict.invalid for c in self.checks)

    def to_json(self) -> dict:
        return {"header": self.header, "rank": [show(e) for e in self.rank],
                "checks": [c.to_json() for c in self.checks], "failed": True}


class ShapeError(Exception):
    """The rule set is not shaped like converter output."""


# --- loop structure --------------------------------------------------------------

def _edges(R: Lctrs, cmap: ConversionMap) -> list[Edge]:
    index_of = {f: k for k, f in cmap.state_of.items()}
    out = []
    for r in R.rules:
        if not (isinstance(r.lhs, App) and r.lhs.fun in index_of and isinstance(r.rhs, App)
                and r.rhs.fun in index_of):
            raise ShapeError(f"rule {r.name} is not a state transition")
        if tuple(r.lhs.args) != tuple(cmap.vars):
            raise ShapeError(f"rule {r.name} does not have the left-hand side state(x⃗)")
        out.append(Edge(r.name, index_of[r.lhs.fun], index_of[r.rhs.fun], r.constraint,
                        tuple(r.rhs.args)))
    return out


def _loops(edges: Sequence[Edge]) -> dict[int, int]:
    """Loop header -> last index inside its body (source of its back edge)."""
    loops: dict[int, int] = {}
    for e in edges:
        if e.target <= e.source:
            loops[e.target] = max(loops.get(e.target, e.target), e.source)
    return loops


def _written(edges: Sequence[Edge], lo: int, hi: int, xs: Sequence[Var]) -> set[Var]:
    out = set()
    for e in edges:
        if lo <= e.source <= hi:
            out |= {x for x, a in zip(xs, e.args) if a != x}
    return out


def summarize_loops(R: Lctrs, cmap: ConversionMap) -> list[LoopSummary]:
    """One summary per while header, innermost first."""
    edges = _edges(R, cmap)
    xs = tuple(cmap.vars)
    loops = _loops(edges)
    out_edges: dict[int, list[Edge]] = {}
    for e in edges:
        out_edges.setdefault(e.source, []).append(e)
    summaries = []
    for h in sorted(loops, key=lambda k: (loops[k] - k, k)):
        hi = loops[h]
        inner = tuple(sorted(k for k in loops if h < k <= hi))
        direct = [k for k in inner if not any(o < k <= loops[o] for o in inner if o != k)]
        cycles: list[Cycle] = []

        def walk(node: int, path: list[str], guards: list[Term], sigma: dict) -> None:
            for e in out_edges.get(node, []):
                if node in direct and node <= e.target <= loops[node]:
                    continue  # at an inner header only its exit edge is followed
                if not (h <= e.target <= hi):
                    continue  # leaves the loop
                g = apply_subst(e.guard, sigma)
                new = {x: apply_subst(a, sigma) for x, a in zip(xs, e.args)}
                step_guards = guards + ([g] if g != th.TRUE else [])
                if e.target == h:
                    cycles.append(Cycle(tuple(path + [e.rule]), th.conj(*step_guards),
                                        tuple((x, new[x]) for x in xs if new[x] != x)))
                elif e.target in direct:
                    # the inner loop runs to completion: havoc what it writes, then it exits
                    havoc = {v: fresh_var(INT) for v in _written(edges, e.target, loops[e.target], xs)}
                    after = {x: havoc.get(x, t) for x, t in new.items()}
                    walk(e.target, path + [e.rule, f"<loop {e.target}>"], step_guards, after)
                elif e.target > node:
                    walk(e.target, path + [e.rule], step_guards, new)

        walk(h, [], [], {x: x for x in xs})
        summaries.append(LoopSummary(h, cmap.state_of[h].name, xs, tuple(cycles), inner))
    return summaries


# --- ranking functions -----------------------------------------------------------

def _checks(ls: LoopSummary, rank: Sequence[Term], solver: Solver, stop_early: bool) -> list[Check]:
    checks = []
    for c in ls.cycles:
        sigma = c.substitution
        if len(rank) == 1:
            e = rank[0]
            obligations = [(th.implies(c.guard, th.ge(e, th.int_value(0))), f"{show(e)} >= 0"),
                           (th.implies(c.guard, th.gt(e, apply_subst(e, sigma))), f"{show(e)} decreases")]
        else:
            e1, e2 = rank
            d1, d2 = apply_subst(e1, sigma), apply_subst(e2, sigma)
            strict = th.conj(th.ge(e1, th.int_value(0)), th.gt(e1, d1))
            weak = th.conj(th.ge(e1, d1), th.ge(e2, th.int_value(0)), th.gt(e2, d2))
            obligations = [(th.implies(c.guard, _or(strict, weak)),
                            f"({show(e1)}, {show(e2)}) decreases lexicographically")]
        for phi, text in obligations:
            v = solver.check_valid(phi)
            checks.append(Check(f"[{' ; '.join(c.path)}] {show(c.guard)} ==> {text}", v))
            if stop_early and not v.valid:
                return checks
    return checks


def _or(a: Term, b: Term) -> Term:
    return App(th.OR, (a, b))


def verify_rank(ls: LoopSummary, rank, solver: Optional[Solver] = None):
    """Return a :class:`RankCertificate` or a :class:`RankFailure`."""
    rank = tuple(rank) if isinstance(rank, (tuple, list)) else (rank,)
    solver = solver or default_solver()
    checks = _checks(ls, rank, solver, stop_early=False)
    cert = RankCertificate(ls.header, rank, checks)
    return cert if cert.ok else RankFailure(ls.header, rank, checks)


def _templates(xs: Sequence[Var], bound: int) -> Iterable[Term]:
    coeffs = [0] + [c for k in range(1, bound + 1) for c in (k, -k)]
    vectors = [v for v in itertools.product(coeffs, repeat=len(xs)) if any(v)]
    vectors.sort(key=lambda v: (sum(abs(c) for c in v), [coeffs.index(c) for c in v]))
    for v in vectors:
        for c0 in coeffs:
            yield _linear(xs, v, c0)


def _linear(xs: Sequence[Var], coeffs: Sequence[int], c0: int) -> Term:
    terms = []
    for x, c in zip(xs, coeffs):
        if c == 0:
            continue
        terms.append((c, x))
    out: Optional[Term] = None
    for c, x in terms:
        mono = x if abs(c) == 1 else th.mul(th.int_value(abs(c)), x)
        if out is None:
            out = mono if c > 0 else th.sub(th.int_value(0), mono)
        else:
            out = th.add(out, mono) if c > 0 else th.sub(out, mono)
    assert out is not None
    if c0 > 0:
        out = th.add(out, th.int_value(c0))
    elif c0 < 0:
        out = th.sub(out, th.int_value(-c0))
    return out


class _Sampler:
    """Cheap numeric falsification before any solver call."""

    def __init__(self, ls: LoopSummary, seed: int, n: int = 200, box: int = 6):
        rng = random.Random(seed)
        self.points = []
        for c in ls.cycles:
            free = sorted(var_set(c.guard, *(t for _, t in c.update)) | set(ls.vars), key=lambda v: v.name)
            pts = []
            for _ in range(n):
                env = {v: rng.randint(-box, box) for v in free}
                try:
                    if th.holds(c.guard, env):
                        pts.append(env)
                except th.EvalError:
                    pass
            self.points.append((c, pts))

    def refutes(self, rank: Sequence[Term]) -> bool:
        try:
            for c, pts in self.points:
                sigma = c.substitution
                for env in pts:
                    vals = [th.eval_py(e, env) for e in rank]
                    nxt = [th.eval_py(apply_subst(e, sigma), env) for e in rank]
                    if len(rank) == 1:
                        if not (vals[0] >= 0 and vals[0] > nxt[0]):
                            return True
                    else:
                        ok1 = vals[0] >= 0 and vals[0] > nxt[0]
                        ok2 = vals[0] >= nxt[0] and vals[1] >= 0 and vals[1] > nxt[1]
                        if not (ok1 or ok2):
                            return True
        except th.EvalError:
            return False
        return False


def search_rank(ls: LoopSummary, solver: Optional[Solver] = None, bound: int = 2,
                hint: Optional[Term] = None, seed: int = 0, lexicographic: bool = True):
    """First linear template ``c0 + Σ ci·xi`` (|ci| ≤ bound) that verifies, the
    hint first; then pairs of templates as a lexicographic rank.  Returns a
    certificate or ``None``."""
    solver = solver or default_solver()
    if hint is not None:
        got = verify_rank(ls, hint, solver)
        if isinstance(got, RankCertificate):
            return got
    if not ls.cycles:
        return verify_rank(ls, th.int_value(0), solver)
    sampler = _Sampler(ls, seed)
    candidates = list(_templates(ls.vars, bound))
    for e in candidates:
        if sampler.refutes((e,)):
            continue
        got = verify_rank(ls, e, solver)
        if isinstance(got, RankCertificate):
            return got
    if not lexicographic or len(ls.cycles) < 2:
        return None
    # lexicographic pairs: only cheap candidates (coefficient bound 1)
    small = list(_templates(ls.vars, 1))
    for e1 in small:
        for e2 in small:
            if e1 == e2 or sampler.refutes((e1, e2)):
                continue
            got = verify_rank(ls, (e1, e2), solver)
            if isinstance(got, RankCertificate):
                return got
    return None


# --- the whole system ----------------------------------------------------------

@dataclass
class TerminationReport:
    status: str
    certificates: list[RankCertificate]
    failures: list
    justification: list[str]

    @property
    def terminating(self) -> bool:
        return self.status == TERMINATING

    def to_json(self) -> dict:
        return {"status": self.status,
                "certificates": [c.to_json() for c in self.certificates],
                "failures": [f.to_json() if hasattr(f, "to_json") else f for f in self.failures],
                "justification": self.justification}


def certify_program(R: Lctrs, cmap: ConversionMap, ranks: Optional[Mapping[int, Term]] = None,
                    solver: Optional[Solver] = None, bound: int = 2, seed: int = 0) -> TerminationReport:
    """Certify every loop of a converter-generated system.  ``ranks`` maps
    header state indices to user-supplied ranking expressions; a supplied
    rank that fails is reported and the search is not attempted for it."""
    solver = solver or default_solver()
    ranks = dict(ranks or {})
    try:
        loops = summarize_loops(R, cmap)
    except ShapeError as e:
        return TerminationReport(UNKNOWN, [], [str(e)], ["not a converter-shaped system"])
    certs, fails = [], []
    for ls in loops:
        if ls.header in ranks:
            got = verify_rank(ls, ranks[ls.header], solver)
        else:
            got = search_rank(ls, solver, bound=bound, seed=seed)
            if got is None:
                got = f"no ranking function found for the loop at state index {ls.header}"
        (certs if isinstance(got, RankCertificate) else fails).append(got)
    why = ["every infinite rewrite sequence passes some loop header infinitely often",
           "each simple header cycle is bounded and strictly decreasing under its certificate"]
    if not loops:
        why = ["the state graph has no cycles, so every rewrite sequence is finite"]
    return TerminationReport(TERMINATING if not fails else UNKNOWN, certs, fails,
                             why if not fails else ["some loop has no certificate"])


def _value_rooted_rule(r: ConstrainedRule) -> bool:
    return isinstance(r.lhs, App) and r.lhs.fun == CHK and th.is_value(r.rhs)


def lift_termination(program: Optional[TerminationReport], check_rules: Sequence[ConstrainedRule],
                     hypotheses: Sequence[ConstrainedRule]) -> TerminationReport:
    """Extend a termination certificate for R_P to R_P plus check rules plus
    hypotheses.  Sound because every added rule is rooted at ``chk`` (which
    occurs in no other right-hand side) and rewrites to a value, so each
    such step strictly removes a ``chk`` occurrence."""
    if program is None or not program.terminating:
        return TerminationReport(UNKNOWN, program.certificates if program else [],
                                 program.failures if program else ["no certificate for the program rules"],
                                 ["the program rules are not certified terminating"])
    bad = [r.name for r in (*check_rules, *hypotheses) if not _value_rooted_rule(r)]
    if bad:
        return TerminationReport(UNKNOWN, program.certificates, [f"rule {n} is not chk(...) -> value" for n in bad],
                                 ["structural precondition violated"])
    why = list(program.justification) + [
        f"{len(check_rules)} check rule(s) and {len(hypotheses)} hypothesis rule(s) are chk-rooted "
        "with a value right-hand side; chk never occurs below the root, so each such step removes "
        "one chk occurrence and they can be used only finitely often"]
    return TerminationReport(TERMINATING, program.certificates, [], why)


def total_correctness(prog, solver: Optional[Solver] = None, **kw):
    """Full pipeline verdict for an annotated program; see :func:`hoare2ri.pipeline.prove`."""
    from hoare2ri.pipeline import prove
    return prove(prog, solver=solver, **kw)
