"""Rewriting induction: processes ``(E, H)``, the five inference rules as
step constructors that certify their own side conditions, and replay.

Equations are rewritten as terms ``s ≈ t`` so that positions read ``1.p``
(left side) or ``2.p`` (right side).  Every equation in ``E`` carries a
label; Simplification and Generalization keep it, Expansion and
CaseSplitting derive ``L.1``, ``L.2``, ... from it.  ``E`` has set
semantics: a step producing an equation already present merges into it."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from hoare2ri import theory as th
from hoare2ri.lctrs import (
    CALC_RULES, HYPOTHESIS, ConstrainedEquation, ConstrainedRule, ConstrainedTerm, Lctrs,
    RuleError, StepFailure, basic_positions,
    format_lctrs, parse_equation, parse_lctrs, rewrite_constrained, show_equation, show_rule,
)
from hoare2ri.solver import Solver, SolverVerdict, default_solver
from hoare2ri.syntax import SyntaxErr, parse_constraint, show
from hoare2ri.terms import (
    App, FRESH_PREFIX, FunSym, Position, Sort, Term, TermError, Var, apply_subst,
    ordered_vars, rename_apart, sort_of, subterm_at, unify,
)

EXPANSION = "Expansion"
SIMPLIFICATION = "Simplification"
DELETION = "Deletion"
CASE_SPLITTING = "CaseSplitting"
GENERALIZATION = "Generalization"
RULE_NAMES = (EXPANSION, SIMPLIFICATION, DELETION, CASE_SPLITTING, GENERALIZATION)

EQN_SORT = Sort("equation")


class StepError(Exception):
    """A side condition failed or could not be certified."""

    def __init__(self, msg: str, unknown: bool = False, verdict: Optional[SolverVerdict] = None):
        super().__init__(msg)
        self.unknown = unknown
        self.verdict = verdict


class ReplayMismatch(Exception):
    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason


def _eqn_symbol(sort: Sort) -> FunSym:
    return FunSym("≈", (sort, sort), EQN_SORT, "equation")


def equation_term(e: ConstrainedEquation) -> App:
    return App(_eqn_symbol(sort_of(e.lhs)), (e.lhs, e.rhs))


def from_term(t: Term, phi: Term) -> ConstrainedEquation:
    assert isinstance(t, App) and t.fun.name == "≈"
    return ConstrainedEquation(t.args[0], t.args[1], phi)


@dataclass(frozen=True)
class Labeled:
    label: str
    eq: ConstrainedEquation

    def __str__(self) -> str:
        return f"({self.label}) {show_equation(self.eq)}"


@dataclass(frozen=True)
class Process:
    E: tuple[Labeled, ...] = ()
    H: tuple[ConstrainedRule, ...] = ()

    @staticmethod
    def start(equations: Iterable[ConstrainedEquation], labels: Optional[Sequence[str]] = None) -> "Process":
        eqs = list(equations)
        labels = list(labels) if labels else ([f"e{k + 1}" for k in range(len(eqs))] if len(eqs) > 1 else ["e"])
        return Process(tuple(Labeled(lab, e) for lab, e in zip(labels, eqs)))

    def get(self, label: str) -> Labeled:
        for le in self.E:
            if le.label == label:
                return le
        raise StepError(f"no equation labelled {label!r} in E")

    def without(self, label: str) -> tuple[Labeled, ...]:
        return tuple(le for le in self.E if le.label != label)

    @property
    def labels(self) -> set[str]:
        return {le.label for le in self.E} | {hyp_label(r) for r in self.H}

    @property
    def finished(self) -> bool:
        return not self.E

    def canonical(self) -> str:
        e = sorted(f"{le.label}: {show_equation(le.eq)}" for le in self.E)
        h = sorted(show_rule(r, with_name=True) for r in self.H)
        return json.dumps({"E": e, "H": h}, ensure_ascii=False)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def __str__(self) -> str:
        es = ", ".join(str(le) for le in self.E)
        hs = ", ".join(show_rule(r, with_name=True) for r in self.H)
        return f"({'{' + es + '}' if es else '∅'}, {'{' + hs + '}' if hs else '∅'})"


def hyp_label(rule: ConstrainedRule) -> str:
    return rule.name[2:] if rule.name.startswith("H:") else rule.name


def tidy(eq: ConstrainedEquation) -> ConstrainedEquation:
    """Rename solver-introduced fresh variables to ``_w1, _w2, ...`` in order
    of occurrence, so replays produce identical equations."""
    fresh = [v for v in ordered_vars(eq.lhs, eq.rhs, eq.constraint) if v.name.startswith(FRESH_PREFIX)]
    if not fresh:
        return eq
    ren = {v: Var(f"_w{k + 1}", v.sort) for k, v in enumerate(fresh)}
    return ConstrainedEquation(apply_subst(eq.lhs, ren), apply_subst(eq.rhs, ren),
                               apply_subst(eq.constraint, ren))


def _add(E: tuple[Labeled, ...], new: Sequence[Labeled]) -> tuple[tuple[Labeled, ...], list[str]]:
    """Set union on equations; returns the new E and the labels that were merged away."""
    out = list(E)
    merged = []
    for le in new:
        le = Labeled(le.label, tidy(le.eq))
        if any(o.eq == le.eq for o in out):
            merged.append(le.label)
        else:
            out.append(le)
    return tuple(out), merged


@dataclass(frozen=True)
class InferenceStep:
    rule: str
    target: str
    before: Process
    after: Process
    side: int = 1
    position: Position = ()
    rule_id: str = ""
    constraint: Optional[Term] = None   # Generalization's new constraint / Simplification target
    produced: tuple[str, ...] = ()
    merged: tuple[str, ...] = ()
    note: str = ""

    def params(self) -> dict:
        return {"side": self.side, "position": self.position, "rule_id": self.rule_id,
                "constraint": self.constraint}

    def position_text(self) -> str:
        return ".".join(str(k) for k in (self.side, *self.position))

    def to_json(self) -> dict:
        d = {"rule": self.rule, "target": self.target,
             "before": self.before.digest(), "after": self.after.digest()}
        if self.rule in (EXPANSION, SIMPLIFICATION, CASE_SPLITTING):
            d["position"] = self.position_text()
        if self.rule_id:
            d["rule_id"] = self.rule_id
        if self.constraint is not None:
            d["constraint"] = show(self.constraint)
        if self.produced:
            d["produced"] = list(self.produced)
        if self.merged:
            d["merged"] = list(self.merged)
        d["result"] = [show_equation(le.eq) for le in self.after.E if le.label in self.produced]
        return d


@dataclass
class RIEngine:
    """Inference-rule constructors over a fixed LCTRS ``R``.  Construction
    and replay go through the same methods."""
    R: Lctrs
    solver: Solver = field(default_factory=default_solver)

    # --- helpers -------------------------------------------------------------

    def lookup_rule(self, rule_id: str, proc: Process) -> ConstrainedRule:
        for r in proc.H:
            if r.name == rule_id:
                return r
        try:
            return self.R.rule(rule_id)
        except KeyError:
            pass
        for r in CALC_RULES.values():
            if r.name == rule_id:
                return r
        raise StepError(f"unknown rule {rule_id!r}")

    def _side(self, eq: ConstrainedEquation, side: int) -> Term:
        if side not in (1, 2):
            raise StepError(f"side must be 1 or 2, got {side}")
        return eq.side(side)

    def expd(self, eq: ConstrainedEquation, p: Position, side: int = 1) -> list[ConstrainedEquation]:
        s = self._side(eq, side)
        try:
            sub = subterm_at(s, p)
        except TermError as e:
            raise StepError(str(e)) from None
        if p not in basic_positions(self.R, s):
            raise StepError(f"position {'.'.join(map(str, p)) or 'ε'} is not basic in {show(s)}")
        out = []
        for rule in self.R.rules:
            if rule.origin == "calc":
                continue
            _, (l, r, psi) = rename_apart(rule.lhs, rule.rhs, rule.constraint)
            variant = ConstrainedRule(l, r, psi, rule.origin, rule.name)
            gamma = unify(sub, l)
            if gamma is None:
                continue
            t = apply_subst(equation_term(eq), gamma)
            phi = th.conj(apply_subst(eq.constraint, gamma), apply_subst(psi, gamma))
            if eq.constraint == th.TRUE:
                phi = apply_subst(psi, gamma)
            res = rewrite_constrained(self.R, ConstrainedTerm(t, phi), variant, (side,) + tuple(p),
                                      self.solver)
            if isinstance(res, StepFailure):
                raise StepError(f"expansion with {rule.name} failed: {res.reason}", res.unknown, res.verdict)
            out.append(from_term(res.ct.term, res.ct.constraint))
        return out

    # --- inference rules -------------------------------------------------------

    def expansion(self, proc: Process, label: str, p: Position, side: int = 1) -> InferenceStep:
        le = proc.get(label)
        eq = le.eq
        s, t = (eq.lhs, eq.rhs) if side == 1 else (eq.rhs, eq.lhs)
        try:
            hyp = ConstrainedRule(s, t, eq.constraint, HYPOTHESIS, f"H:{label}")
        except RuleError as e:
            raise StepError(f"equation {label} cannot be oriented: {e}") from None
        new = self.expd(eq, p, side)
        kids = [Labeled(f"{label}.{k + 1}", e) for k, e in enumerate(new)]
        E, merged = _add(proc.without(label), kids)
        after = Process(E, proc.H + (hyp,))
        return InferenceStep(EXPANSION, label, proc, after, side, tuple(p),
                             produced=tuple(k.label for k in kids if k.label not in merged),
                             merged=tuple(merged))

    def case_splitting(self, proc: Process, label: str, p: Position, side: int = 1) -> InferenceStep:
        le = proc.get(label)
        new = self.expd(le.eq, p, side)
        kids = [Labeled(f"{label}.{k + 1}", e) for k, e in enumerate(new)]
        E, merged = _add(proc.without(label), kids)
        after = Process(E, proc.H)
        return InferenceStep(CASE_SPLITTING, label, proc, after, side, tuple(p),
                             produced=tuple(k.label for k in kids if k.label not in merged),
                             merged=tuple(merged))

    def simplification(self, proc: Process, label: str, rule_id: str, q: Position = (),
                       side: int = 1, target: Optional[Term] = None) -> InferenceStep:
        """One constrained rewrite step on one side.  With ``target`` the
        result constraint is replaced by an equivalent formula; the
        equivalence is certified here."""
        le = proc.get(label)
        eq = le.eq
        self._side(eq, side)
        rule = self.lookup_rule(rule_id, proc)
        res = rewrite_constrained(self.R, ConstrainedTerm(equation_term(eq), eq.constraint),
                                  rule, (side,) + tuple(q), self.solver)
        if isinstance(res, StepFailure):
            raise StepError(f"cannot rewrite {label} with {rule_id}: {res.reason}",
                            res.unknown, res.verdict)
        new = from_term(res.ct.term, res.ct.constraint)
        note = ""
        if target is not None and target != new.constraint:
            if res.leftover:
                raise StepError("rewritten constraint keeps existential variables; "
                                "generalize in a separate step")
            v = self.solver.check_equiv(new.constraint, target)
            if not v.valid:
                raise StepError(f"target constraint {show(target)} is not equivalent to "
                                f"{show(new.constraint)}", v.unknown, v)
            note = f"constraint {show(new.constraint)} restated as {show(target)}"
            new = ConstrainedEquation(new.lhs, new.rhs, target)
        E, merged = _add(proc.without(label), [Labeled(label, new)])
        after = Process(E, proc.H)
        return InferenceStep(SIMPLIFICATION, label, proc, after, side, tuple(q), rule_id,
                             target, produced=() if merged else (label,), merged=tuple(merged),
                             note=note)

    def deletion(self, proc: Process, label: str) -> InferenceStep:
        eq = proc.get(label).eq
        if eq.lhs == eq.rhs:
            why = "both sides are identical"
        else:
            v = self.solver.check_sat(eq.constraint)
            if v.invalid:
                why = "constraint is unsatisfiable"
            elif v.unknown:
                raise StepError(f"cannot decide satisfiability of {show(eq.constraint)}", True, v)
            else:
                raise StepError(f"{label}: sides differ and the constraint is satisfiable")
        after = Process(proc.without(label), proc.H)
        return InferenceStep(DELETION, label, proc, after, note=why)

    def generalization(self, proc: Process, label: str, psi: Term) -> InferenceStep:
        eq = proc.get(label).eq
        if sort_of(psi) != th.BOOL:
            raise StepError("generalized constraint must be boolean")
        v = self.solver.check_implies(eq.constraint, psi)
        if not v.valid:
            what = "could not be decided" if v.unknown else "is not valid"
            ce = f" (counterexample {v.model_text()})" if v.invalid else ""
            raise StepError(f"{show(eq.constraint)} ==> {show(psi)} {what}{ce}", v.unknown, v)
        new = ConstrainedEquation(eq.lhs, eq.rhs, psi)
        E, merged = _add(proc.without(label), [Labeled(label, new)])
        after = Process(E, proc.H)
        return InferenceStep(GENERALIZATION, label, proc, after, constraint=psi,
                             produced=() if merged else (label,), merged=tuple(merged))

    # --- replay ------------------------------------------------------------------

    def apply(self, proc: Process, rule: str, target: str, side: int = 1, position: Position = (),
              rule_id: str = "", constraint: Optional[Term] = None) -> InferenceStep:
        if rule == EXPANSION:
            return self.expansion(proc, target, position, side)
        if rule == CASE_SPLITTING:
            return self.case_splitting(proc, target, position, side)
        if rule == SIMPLIFICATION:
            return self.simplification(proc, target, rule_id, position, side, constraint)
        if rule == DELETION:
            return self.deletion(proc, target)
        if rule == GENERALIZATION:
            if constraint is None:
                raise StepError("Generalization needs a constraint")
            return self.generalization(proc, target, constraint)
        raise StepError(f"unknown inference rule {rule!r}")

    def replay(self, start: Process, steps: Sequence[InferenceStep]) -> Process:
        """Re-derive every step from its parameters; the first step whose
        side condition fails or whose result differs raises."""
        proc = start
        for k, st in enumerate(steps):
            if st.before != proc:
                raise ReplayMismatch(k, "recorded starting process differs from the replayed one")
            try:
                again = self.apply(proc, st.rule, st.target, st.side, st.position, st.rule_id,
                                   st.constraint)
            except StepError as e:
                raise ReplayMismatch(k, str(e)) from None
            if again.after != st.after:
                raise ReplayMismatch(k, "replayed result differs from the recorded one")
            proc = again.after
        return proc


def replay_sequence(R: Lctrs, start: Process, steps: Sequence[InferenceStep],
                    solver: Optional[Solver] = None) -> Process:
    return RIEngine(R, solver or Solver()).replay(start, steps)


# --- serialized traces -----------------------------------------------------------

TRACE_FORMAT = "hoare2ri-trace/1"


def trace_document(R: Lctrs, start: Process, steps: Sequence[InferenceStep]) -> dict:
    """A self-contained, replayable record: the rule set, the start process
    and every step's parameters together with the digest it must produce."""
    return {
        "format": TRACE_FORMAT,
        "lctrs": format_lctrs(R, with_names=True),
        "start": [{"label": le.label, "equation": show_equation(le.eq)} for le in start.E],
        "steps": [s.to_json() for s in steps],
    }


def _parse_position(text: str) -> tuple[int, Position]:
    parts = [int(k) for k in text.split(".")]
    return parts[0], tuple(parts[1:])


def load_trace(doc: dict) -> tuple[Lctrs, Process]:
    if doc.get("format") != TRACE_FORMAT:
        raise ValueError(f"not a proof trace (format {doc.get('format')!r})")
    R = parse_lctrs(doc["lctrs"])
    symbols = dict(R.signature)
    start = Process(tuple(Labeled(e["label"], parse_equation(e["equation"], symbols))
                          for e in doc["start"]))
    return R, start


def replay_trace(doc: dict, solver: Optional[Solver] = None) -> Process:
    """Replay a serialized trace; raises :class:`ReplayMismatch` at the first
    step that cannot be re-derived or whose result digest differs."""
    R, proc = load_trace(doc)
    engine = RIEngine(R, solver or default_solver())
    var_sorts = {v.name: v.sort for v in R.state_vars}
    for k, st in enumerate(doc["steps"]):
        if st.get("before") != proc.digest():
            raise ReplayMismatch(k, "recorded starting process differs from the replayed one")
        try:
            side, pos = _parse_position(st.get("position", "1"))
            phi = st.get("constraint")
            again = engine.apply(proc, st["rule"], st["target"], side, pos, st.get("rule_id", ""),
                                 parse_constraint(phi, dict(var_sorts)) if phi is not None else None)
        except (StepError, SyntaxErr, ValueError, KeyError) as e:
            raise ReplayMismatch(k, f"step cannot be re-derived: {e}") from None
        if again.after.digest() != st.get("after"):
            raise ReplayMismatch(k, "replayed result differs from the recorded one")
        if "result" in st and st["result"] != again.to_json()["result"]:
            raise ReplayMismatch(k, "recorded equations differ from the replayed ones")
        proc = again.after
    return proc
