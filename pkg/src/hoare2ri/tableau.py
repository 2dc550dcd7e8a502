"""Proof-tableau validation for partial-correctness Hoare triples.

Every condition of a tableau becomes an :class:`Obligation` made of one or
more :class:`Claim` objects; each claim can be re-checked on its own."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

from hoare2ri import theory as th
from hoare2ri.solver import Solver, default_solver
from hoare2ri.syntax import show
from hoare2ri.terms import Term, apply_subst
from hoare2ri.whilelang import (
    Assert, Assign, Blank, IfOpen, Line, Skip, WhileOpen, WhileProgram, strip_annotations,
)

IMPLICATION = "implication"
ASSIGNMENT = "assignment"
SKIP = "skip"
IF_SHAPE = "if-shape"
WHILE_SHAPE = "while-shape"
BLOCK_SHAPE = "block-shape"

# claim relations
IMPLIES, SAME, EQUIV, STRUCT = "implies", "same", "equiv", "structure"


@dataclass
class Claim:
    relation: str
    left: Optional[Term] = None
    right: Optional[Term] = None
    text: str = ""
    status: str = "pending"  # syntactic | valid | invalid | unknown | ok | failed
    counterexample: Optional[dict] = None
    warning: str = ""

    @property
    def ok(self) -> bool:
        return self.status in ("syntactic", "valid", "ok")

    def describe(self) -> str:
        if self.relation == STRUCT:
            return self.text
        op = {IMPLIES: "==>", SAME: "is", EQUIV: "<=>"}[self.relation]
        return f"{show(self.left)} {op} {show(self.right)}"

    def to_json(self) -> dict:
        d = {"relation": self.relation, "claim": self.describe(), "status": self.status}
        if self.counterexample:
            d["counterexample"] = {k: v for k, v in self.counterexample.items()}
        if self.warning:
            d["warning"] = self.warning
        return d


def discharge(claim: Claim, solver: Solver) -> Claim:
    """Decide ``claim`` in place and return it."""
    if claim.relation == STRUCT:
        return claim
    if claim.relation in (SAME, EQUIV) and claim.left == claim.right:
        claim.status = "syntactic"
        return claim
    if claim.relation == IMPLIES:
        v = solver.check_implies(claim.left, claim.right)
    else:
        v = solver.check_equiv(claim.left, claim.right)
    claim.status = v.status.value
    if v.invalid and v.model:
        claim.counterexample = {getattr(k, "name", str(k)): val for k, val in v.model.items()}
    if v.valid and claim.relation == SAME:
        claim.warning = "accepted up to logical equivalence, not syntactic identity"
    return claim


@dataclass
class Obligation:
    kind: str
    lines: tuple[str, ...]
    claims: list[Claim] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.claims)

    @property
    def unknown(self) -> bool:
        return any(c.status == "unknown" for c in self.claims) and \
            not any(c.status in ("invalid", "failed") for c in self.claims)

    @property
    def warnings(self) -> list[str]:
        return [f"{self.kind} at {'/'.join(self.lines)}: {c.warning}" for c in self.claims if c.warning]

    def verdict(self) -> str:
        if self.ok:
            return "discharged"
        return "unknown" if self.unknown else "violated"

    def recheck(self, solver: Optional[Solver] = None) -> bool:
        """Re-decide every claim from scratch (no cached status)."""
        solver = solver or Solver()
        fresh = [Claim(c.relation, c.left, c.right, c.text,
                       c.status if c.relation == STRUCT else "pending") for c in self.claims]
        return all(discharge(c, solver).ok for c in fresh)

    def describe(self) -> str:
        failed = [c for c in self.claims if not c.ok]
        shown = failed or self.claims
        return f"{self.kind} [{', '.join(self.lines)}]: " + "; ".join(c.describe() for c in shown)

    def to_json(self) -> dict:
        return {"kind": self.kind, "lines": list(self.lines), "verdict": self.verdict(),
                "claims": [c.to_json() for c in self.claims]}


@dataclass
class Tableau:
    ast: WhileProgram
    pre: Term
    post: Term
    obligations: list[Obligation]

    @property
    def warnings(self) -> list[str]:
        return [w for o in self.obligations for w in o.warnings]


@dataclass
class TableauCheck:
    ast: WhileProgram
    obligations: list[Obligation]

    @property
    def ok(self) -> bool:
        return bool(self.obligations) and all(o.ok for o in self.obligations)

    @property
    def unknown(self) -> bool:
        return not self.ok and all(o.ok or o.unknown for o in self.obligations) and \
            any(o.unknown for o in self.obligations)

    @property
    def violations(self) -> list[Obligation]:
        return [o for o in self.obligations if not o.ok]

    @property
    def tableau(self) -> Optional[Tableau]:
        if not self.ok:
            return None
        ann = self.ast.assertions
        return Tableau(self.ast, ann[0].content.cond, ann[-1].content.cond, self.obligations)

    def to_json(self) -> dict:
        return {"valid": self.ok, "unknown": self.unknown,
                "obligations": [o.to_json() for o in self.obligations]}

    def report(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)


# --- structure -----------------------------------------------------------------

@dataclass
class Block:
    """A structured command: an if (two bodies) or a while (one body)."""
    opener: Line
    bodies: list[list]
    lines: list[Line]  # opener, [else,] close


Item = Union[Line, Block]


def sequences(prog: WhileProgram) -> list[Item]:
    """The top-level command sequence; blocks carry their bodies."""
    lines = [ln for ln in prog.lines if not isinstance(ln.content, Blank)]

    def seq(k: int, stop: int) -> list[Item]:
        out: list[Item] = []
        while k < stop:
            ln = lines[k]
            if isinstance(ln.content, (IfOpen, WhileOpen)):
                group = [prog.lines[p] for p in ln.partner]
                ks = [lines.index(g) for g in group]
                bodies = [seq(a + 1, b) for a, b in zip(ks, ks[1:])]
                out.append(Block(ln, bodies, group))
                k = ks[-1] + 1
            else:
                out.append(ln)
                k += 1
        return out

    return seq(0, len(lines))


def _label(it: Item) -> str:
    return it.label if isinstance(it, Line) else it.opener.label


def _cond(it: Item) -> Optional[Term]:
    if isinstance(it, Line) and isinstance(it.content, Assert):
        return it.content.cond
    return None


def _all_sequences(items: list[Item]) -> list[list[Item]]:
    out = [items]
    for it in items:
        if isinstance(it, Block):
            for b in it.bodies:
                out += _all_sequences(b)
    return out


def collect_obligations(prog: WhileProgram) -> list[Obligation]:
    top = sequences(prog)
    obs: list[Obligation] = []
    for s in _all_sequences(top):
        labels = tuple(_label(it) for it in s) if s else ()
        o = Obligation(BLOCK_SHAPE, (labels[0], labels[-1]) if labels else ())
        o.claims.append(_struct(len(s) > 2, f"sequence of length {len(s)} (must exceed two)"))
        if s:
            o.claims.append(_struct(_cond(s[0]) is not None, f"sequence starts with an annotation ({labels[0]})"))
            o.claims.append(_struct(_cond(s[-1]) is not None, f"sequence ends with an annotation ({labels[-1]})"))
        obs.append(o)
        for k, it in enumerate(s):
            before = s[k - 1] if k > 0 else None
            after = s[k + 1] if k + 1 < len(s) else None
            if _cond(it) is not None:
                if after is not None and _cond(after) is not None:
                    obs.append(Obligation(IMPLICATION, (_label(it), _label(after)),
                                          [Claim(IMPLIES, _cond(it), _cond(after))]))
                continue
            obs.append(_command_obligation(it, before, after))
    return obs


def _struct(ok: bool, text: str) -> Claim:
    return Claim(STRUCT, text=text, status="ok" if ok else "failed")


def _command_obligation(it: Item, before: Optional[Item], after: Optional[Item]) -> Obligation:
    c1 = _cond(before) if before is not None else None
    c3 = _cond(after) if after is not None else None
    lines = tuple(x for x in (_label(before) if before else None, _label(it),
                              _label(after) if after else None) if x)
    if isinstance(it, Line):
        kind = ASSIGNMENT if isinstance(it.content, Assign) else SKIP
    else:
        kind = IF_SHAPE if isinstance(it.opener.content, IfOpen) else WHILE_SHAPE
    o = Obligation(kind, lines)
    if c1 is None or c3 is None:
        o.claims.append(_struct(False, f"command {_label(it)} must sit between two annotations"))
        return o
    if kind == ASSIGNMENT:
        a = it.content
        o.claims.append(Claim(SAME, c1, apply_subst(c3, {a.var: a.expr})))
    elif kind == SKIP:
        o.claims.append(Claim(EQUIV, c1, c3))
    elif kind == IF_SHAPE:
        phi, psi = c1, it.opener.content.cond
        for body, expect in zip(it.bodies, (th.conj(phi, psi), th.conj(phi, th.neg(psi)))):
            head = _cond(body[0]) if body else None
            last = _cond(body[-1]) if body else None
            if head is None or last is None:
                o.claims.append(_struct(False, "branch must start and end with annotations"))
                continue
            o.claims.append(Claim(SAME, head, expect))
            o.claims.append(Claim(EQUIV, c3, last))
    else:
        w = it.opener.content
        if w.invariant is None:
            o.claims.append(_struct(False, f"while at {_label(it)} has no invariant"))
            return o
        zeta, phi = w.invariant, w.guard
        body = it.bodies[0]
        head = _cond(body[0]) if body else None
        last = _cond(body[-1]) if body else None
        o.claims.append(Claim(SAME, c1, zeta))
        if head is None or last is None:
            o.claims.append(_struct(False, "loop body must start and end with annotations"))
        else:
            o.claims.append(Claim(SAME, head, th.conj(zeta, phi)))
            o.claims.append(Claim(SAME, last, zeta))
        o.claims.append(Claim(SAME, c3, th.conj(zeta, th.neg(phi))))
    return o


def check_tableau(prog: WhileProgram, solver: Optional[Solver] = None, jobs: int = 1) -> TableauCheck:
    """Collect and discharge all obligations.  With ``jobs > 1`` obligations
    are decided concurrently, one solver session per worker."""
    obs = collect_obligations(prog)
    if jobs <= 1:
        solver = solver or default_solver()
        for o in obs:
            for c in o.claims:
                discharge(c, solver)
    else:
        def work(o: Obligation) -> None:
            s = Solver()
            try:
                for c in o.claims:
                    discharge(c, s)
            finally:
                s.close()
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, obs))
    return TableauCheck(prog, obs)


def hoare_triple(t: Tableau) -> tuple[Term, WhileProgram, Term]:
    return t.pre, strip_annotations(t.ast), t.post
