"""Top-down translation of a validated proof tableau into an RI inference
sequence, one tableau case at a time."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from hoare2ri import theory as th
from hoare2ri.convert import CHK, ConversionMap, convert, make_goal, with_check
from hoare2ri.lctrs import ConstrainedRule, Lctrs, show_equation, show_rule
from hoare2ri.ri import (
    DELETION, EXPANSION, GENERALIZATION, SIMPLIFICATION, InferenceStep, Labeled, Process,
    RIEngine, StepError, hyp_label,
)
from hoare2ri.solver import Solver, default_solver
from hoare2ri.syntax import show
from hoare2ri.tableau import Tableau
from hoare2ri.terms import App, Term
from hoare2ri.whilelang import (
    COMMANDS, Assert, Assign, Blank, Close, ElseOpen, IfOpen, Line, Skip, WhileOpen, WhileProgram,
    strip_annotations,
)

# case names
CONTINUOUS = "two continuous assertions"
ASSIGNMENT = "assignment"
SKIP = "skip"
WHILE_BEGIN = "beginning of while"
WHILE_END = "end of while"
IF_BEGIN = "beginning of if"
ELSE_BEGIN = "beginning of else"
IF_END = "end of if"
TABLEAU_END = "end of tableau"
ALIGN = "alignment"


class TransformError(Exception):
    def __init__(self, msg: str, line: str = "", unknown: bool = False):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line
        self.unknown = unknown


@dataclass
class CaseRecord:
    case: str
    lines: tuple[str, ...]
    steps: list[InferenceStep] = field(default_factory=list)


@dataclass
class Naming:
    """Display names for equation versions, assigned in creation order."""
    aliases: Sequence[str] = ()
    current: dict = field(default_factory=dict)   # label -> display name
    hyp: dict = field(default_factory=dict)       # hypothesis rule name -> display name
    created: int = 0

    def fresh(self, label: str) -> str:
        name = self.aliases[self.created] if self.created < len(self.aliases) else label
        self.created += 1
        self.current[label] = name
        return name

    def of(self, label: str) -> str:
        return self.current.get(label, label)

    def observe(self, step: InferenceStep) -> None:
        if step.rule == EXPANSION:
            rule = step.after.H[-1]
            self.hyp[rule.name] = self.of(step.target)
        for lab in step.produced:
            self.fresh(lab)


@dataclass
class TransResult:
    tableau: Tableau
    program: WhileProgram
    R: Lctrs                      # R_P together with the check rules
    R_program: Lctrs
    cmap: ConversionMap
    goal: Labeled
    start: Process
    processes: list[Process]      # one per tableau case boundary
    steps: list[InferenceStep]
    cases: list[CaseRecord]
    naming: Naming

    @property
    def final(self) -> Process:
        return self.processes[-1]

    @property
    def hypotheses(self) -> tuple[ConstrainedRule, ...]:
        return self.final.H

    def trace_json(self) -> dict:
        return {
            "goal": show_equation(self.goal.eq),
            "start": self.start.digest(),
            "final": self.final.digest(),
            "hypotheses": [show_rule(r, with_name=True) for r in self.final.H],
            "steps": [dict(s.to_json(), names=self._names(s)) for s in self.steps],
        }

    def _names(self, step: InferenceStep) -> dict:
        return {"target": self._display[id(step)][0], "produced": self._display[id(step)][1]}

    @property
    def _display(self) -> dict:
        # recomputed from scratch so the mapping is independent of Naming's final state
        nm = Naming(self.naming.aliases)
        nm.fresh(self.goal.label)
        out = {}
        for s in self.steps:
            tgt = nm.of(s.target)
            nm.observe(s)
            out[id(s)] = (tgt, [nm.of(lab) for lab in s.produced])
        return out

    def transcript(self) -> str:
        nm = Naming(self.naming.aliases)
        first = nm.fresh(self.goal.label)
        out = [f"Start: ({{({first}) {show_equation(self.goal.eq)}}}, ∅)"]
        for rec in self.cases:
            out.append(f"-- {rec.case} [{', '.join(rec.lines)}]")
            for s in rec.steps:
                tgt = nm.of(s.target)
                nm.observe(s)
                out.append("   " + _narrate(s, tgt, nm))
        final = self.final
        hs = ", ".join(nm.hyp.get(r.name, hyp_label(r)) for r in final.H)
        es = ", ".join(nm.of(le.label) for le in final.E)
        out.append(f"End: ({'{' + es + '}' if es else '∅'}, {'{' + hs + '}' if hs else '∅'})")
        return "\n".join(out) + "\n"


def _narrate(s: InferenceStep, tgt: str, nm: Naming) -> str:
    res = [le for le in s.after.E if le.label in s.produced]
    shown = "; ".join(f"({nm.of(le.label)}) {show_equation(le.eq)}" for le in res)
    if s.rule == GENERALIZATION:
        return f"Generalization of ({tgt}) gives {shown or 'an equation already in E'}"
    if s.rule == SIMPLIFICATION:
        via = nm.hyp.get(s.rule_id)
        rule = f"hypothesis ({via})" if via else f"rule {s.rule_id}"
        if not shown:
            return (f"Simplification of ({tgt}) with {rule} at {s.position_text()} gives an "
                    "equation already in E, so the two merge")
        return f"Simplification of ({tgt}) with {rule} at {s.position_text()} gives {shown}"
    if s.rule == DELETION:
        return f"Deletion of ({tgt}): {s.note}"
    verb = "Expansion" if s.rule == EXPANSION else "CaseSplitting"
    tail = f"; ({tgt}) is oriented into H" if s.rule == EXPANSION else ""
    return f"{verb} of ({tgt}) at {s.position_text()} gives {shown}{tail}"


# --- the translation -----------------------------------------------------------

class _Run:
    def __init__(self, tab: Tableau, scheme: str, solver: Solver, aliases: Sequence[str]):
        self.tab = tab
        self.scheme = scheme
        prog = tab.ast
        self.prog = prog
        self.R_program, self.cmap = convert(strip_annotations(prog), scheme)
        self.R = with_check(self.R_program, tab.post, self.cmap)
        self.engine = RIEngine(self.R, solver)
        goal = make_goal(tab.pre, self.cmap)
        self.goal = Labeled("e", goal)
        self.proc = Process((self.goal,))
        self.start = self.proc
        self.steps: list[InferenceStep] = []
        self.cases: list[CaseRecord] = []
        self.processes = [self.proc]
        self.naming = Naming(list(aliases))
        self.naming.fresh("e")
        self.items = [ln for ln in prog.lines if not isinstance(ln.content, Blank)]
        self.all_lines = list(prog.lines)

    # which state index an equation sits at
    def point(self, k: int) -> int:
        """State index of the first command line at or after item ``k``."""
        ln = self.items[k] if k < len(self.items) else self.all_lines[-1]
        start = self.all_lines.index(ln)
        for cand in self.all_lines[start:]:
            if cand.is_command:
                return cand.index(self.scheme)
        raise TransformError("no command after this point")  # pragma: no cover

    def state_index(self, le: Labeled) -> Optional[int]:
        lhs = le.eq.lhs
        if isinstance(lhs, App) and lhs.fun == CHK and isinstance(lhs.args[0], App):
            sym = lhs.args[0].fun
            for idx, f in self.cmap.state_of.items():
                if f == sym:
                    return idx
        return None

    def at_point(self, p: int) -> list[Labeled]:
        return [le for le in self.proc.E if self.state_index(le) == p]

    def the_equation(self, p: int, where: str) -> Labeled:
        found = self.at_point(p)
        if len(found) != 1:
            raise TransformError(f"expected one equation at state index {p}, found {len(found)}", where)
        return found[0]

    def do(self, rec: CaseRecord, fn, *args, **kw) -> InferenceStep:
        try:
            step = fn(self.proc, *args, **kw)
        except StepError as e:
            raise TransformError(f"{rec.case}: {e}", rec.lines[0], e.unknown) from None
        self.steps.append(step)
        rec.steps.append(step)
        self.naming.observe(step)
        self.proc = step.after
        return step

    def align(self, rec: CaseRecord, p: int, target: Term) -> None:
        """Generalize every equation waiting at ``p`` to the annotation found
        there (only needed where the tableau matched up to equivalence)."""
        for le in self.at_point(p):
            if le.eq.constraint != target:
                self.do(rec, self.engine.generalization, le.label, target)

    def simplify_to(self, rec: CaseRecord, label: str, rule_id: str, target: Term) -> None:
        try:
            self.do(rec, self.engine.simplification, label, rule_id, (1,), 1, target)
        except TransformError as exact_target_failed:
            if exact_target_failed.unknown and "equivalent" not in str(exact_target_failed):
                raise
            self.do(rec, self.engine.simplification, label, rule_id, (1,), 1, None)
            self.do(rec, self.engine.generalization, label, target)

    def hypothesis_for(self, header: int) -> ConstrainedRule:
        sym = self.cmap.state_of[header]
        for r in self.proc.H:
            if isinstance(r.lhs, App) and r.lhs.fun == CHK and r.lhs.args[0].fun == sym:
                return r
        raise TransformError(f"no hypothesis for the loop at state index {header}")

    def rule_name(self, ln: Line, suffix: str = "") -> str:
        return f"L{ln.index(self.scheme)}{suffix}"

    def run(self) -> None:
        items = self.items
        k = 0
        if not items or not isinstance(items[0].content, Assert):
            raise TransformError("tableau must start with an assertion")
        while k < len(items):
            a = items[k]
            if not isinstance(a.content, Assert):
                raise TransformError("no tableau case applies (expected an assertion)", a.label)
            b = items[k + 1] if k + 1 < len(items) else None
            c = items[k + 2] if k + 2 < len(items) else None
            phi = a.content.cond
            p = self.point(k)
            lines = tuple(x.label for x in (a, b, c) if x is not None)
            if b is None:
                rec = CaseRecord(TABLEAU_END, (a.label,))
                self.cases.append(rec)
                self.align(rec, p, phi)
                le = self.the_equation(p, a.label)
                self.do(rec, self.engine.simplification, le.label, "chk.true", (), 1, None)
                self.do(rec, self.engine.deletion, le.label)
                k += 1
            elif isinstance(b.content, Assert):
                rec = CaseRecord(CONTINUOUS, (a.label, b.label))
                self.cases.append(rec)
                self.align(rec, p, phi)
                le = self.the_equation(p, a.label)
                self.do(rec, self.engine.generalization, le.label, b.content.cond)
                k += 1
            else:
                k = self.command_case(k, a, b, c, phi, p, lines)
            self.processes.append(self.proc)

    def command_case(self, k, a, b, c, phi, p, lines) -> int:
        cb = b.content
        if not isinstance(c.content if c is not None else None, Assert) and \
                not isinstance(cb, (WhileOpen, IfOpen)):
            raise TransformError("command not followed by an assertion", b.label)
        if isinstance(cb, (Assign, Skip)):
            rec = CaseRecord(ASSIGNMENT if isinstance(cb, Assign) else SKIP, lines)
            self.cases.append(rec)
            self.align(rec, p, phi)
            le = self.the_equation(p, a.label)
            self.simplify_to(rec, le.label, self.rule_name(b), c.content.cond)
            return k + 2
        if isinstance(cb, WhileOpen):
            rec = CaseRecord(WHILE_BEGIN, lines)
            self.cases.append(rec)
            self.align(rec, p, phi)
            le = self.the_equation(p, a.label)
            self.do(rec, self.engine.expansion, le.label, (1,), 1)
            return k + 2
        if isinstance(cb, IfOpen):
            rec = CaseRecord(IF_BEGIN, lines)
            self.cases.append(rec)
            self.align(rec, p, phi)
            le = self.the_equation(p, a.label)
            self.do(rec, self.engine.case_splitting, le.label, (1,), 1)
            return k + 2
        if isinstance(cb, ElseOpen):
            rec = CaseRecord(ELSE_BEGIN, lines)
            self.cases.append(rec)
            self.align(rec, p, phi)
            le = self.the_equation(p, a.label)
            self.do(rec, self.engine.simplification, le.label, self.rule_name(b), (1,), 1, None)
            return k + 2
        if isinstance(cb, Close):
            opener = self.all_lines[b.partner[0]]
            if isinstance(opener.content, WhileOpen):
                rec = CaseRecord(WHILE_END, lines)
                self.cases.append(rec)
                self.align(rec, p, phi)
                le = self.the_equation(p, a.label)
                header = opener.index(self.scheme)
                self.do(rec, self.engine.simplification, le.label, self.rule_name(b), (1,), 1, None)
                hyp = self.hypothesis_for(header)
                self.do(rec, self.engine.simplification, le.label, hyp.name, (), 1, None)
                self.do(rec, self.engine.deletion, le.label)
            else:
                rec = CaseRecord(IF_END, lines)
                self.cases.append(rec)
                self.align(rec, p, phi)
                le = self.the_equation(p, a.label)
                self.do(rec, self.engine.simplification, le.label, self.rule_name(b), (1,), 1, None)
                self.align(rec, self.point(k + 2), c.content.cond)
            return k + 2
        raise TransformError("no tableau case applies", b.label)


def transform(tab: Tableau, scheme: str = COMMANDS, solver: Optional[Solver] = None,
              aliases: Sequence[str] = ()) -> TransResult:
    """Translate a validated tableau.  ``aliases`` gives display names to
    equations in creation order (the goal first)."""
    run = _Run(tab, scheme, solver or default_solver(), aliases)
    run.run()
    return TransResult(tab, strip_annotations(tab.ast), run.R, run.R_program, run.cmap, run.goal,
                       run.start, run.processes, run.steps, run.cases, run.naming)


def trace_to_json(result: TransResult) -> str:
    return json.dumps(result.trace_json(), indent=2, ensure_ascii=False)
