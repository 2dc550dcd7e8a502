"""End-to-end total-correctness check of an annotated program: tableau,
transformation into an RI sequence, replay, and termination."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from hoare2ri import theory as th
from hoare2ri.convert import convert
from hoare2ri.lctrs import check_orthogonal, check_quasi_reductive, show_rule
from hoare2ri.ri import ReplayMismatch, replay_sequence
from hoare2ri.solver import Solver, default_solver
from hoare2ri.tableau import check_tableau
from hoare2ri.termination import certify_program, lift_termination
from hoare2ri.terms import Term
from hoare2ri.transform import TransformError, TransResult, transform
from hoare2ri.whilelang import COMMANDS, Halted, WhileOpen, WhileProgram, interpret, strip_annotations

PROVED = "PROVED"
REFUTED = "REFUTED"
UNKNOWN = "UNKNOWN"
TABLEAU_INVALID = "TABLEAU_INVALID"

EXIT_CODES = {PROVED: 0, REFUTED: 1, TABLEAU_INVALID: 1, UNKNOWN: 2}


@dataclass
class Stage:
    name: str
    status: str                   # ok | failed | unknown | skipped
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"status": self.status, "seconds": round(self.seconds, 4), **self.detail}


@dataclass
class PipelineReport:
    verdict: str
    stages: dict[str, Stage]
    source: str = ""
    artifacts: dict = field(default_factory=dict)
    trans: Optional[TransResult] = None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def to_json(self) -> dict:
        return {"source": self.source, "verdict": self.verdict,
                "stages": {k: s.to_json() for k, s in self.stages.items()},
                "artifacts": self.artifacts}


def loop_ranks(prog: WhileProgram, scheme: str = COMMANDS,
               overrides: Optional[Mapping[Union[int, str], Term]] = None) -> dict[int, Term]:
    """Ranking expressions per loop header state index: ``@rank`` annotations,
    then overrides keyed by while command number (``"*"`` means every loop)."""
    out: dict[int, Term] = {}
    overrides = dict(overrides or {})
    for ln in prog.lines:
        if isinstance(ln.content, WhileOpen):
            idx = ln.index(scheme)
            rank = overrides.get(ln.cmd_number, overrides.get("*", ln.content.rank))
            if rank is not None:
                out[idx] = rank
    return out


def find_refutation(prog: WhileProgram, pre: Term, post: Term, box: int = 4,
                    fuel: int = 10_000) -> Optional[dict]:
    """Search small initial valuations for a halting run from ``pre`` that
    ends outside ``post``; returns the witness or ``None``."""
    plain = strip_annotations(prog)
    xs = list(plain.vars)
    for vals in itertools.product(range(-box, box + 1), repeat=len(xs)):
        env = dict(zip(xs, vals))
        try:
            if not th.holds(pre, env):
                continue
            run = interpret(plain, {v.name: k for v, k in env.items()}, fuel=fuel)
            if isinstance(run, Halted):
                final = {v: run.valuation[v.name] for v in xs}
                if not th.holds(post, final):
                    return {"input": {v.name: k for v, k in env.items()}, "output": run.valuation}
        except th.EvalError:
            continue
    return None


def prove(prog: WhileProgram, solver: Optional[Solver] = None, scheme: str = COMMANDS,
          ranks: Optional[Mapping] = None, aliases: Sequence[str] = (), source: str = "",
          refute: bool = False, refute_box: int = 3, seed: int = 0) -> PipelineReport:
    """Run every stage and return the report.  An invalid tableau is
    reported as such; with ``refute`` a concrete counterexample run found by
    small-range search turns the verdict into a refutation of the triple."""
    solver = solver or default_solver()
    stages: dict[str, Stage] = {}

    def timed(name: str, fn):
        t0 = time.perf_counter()
        st = fn()
        st.seconds = time.perf_counter() - t0
        stages[name] = st
        return st

    def finish(verdict: str, trans: Optional[TransResult] = None) -> PipelineReport:
        for name in ("convert", "tableau", "transform", "termination"):
            stages.setdefault(name, Stage(name, "skipped"))
        return PipelineReport(verdict, stages, source, {}, trans)

    stages["parse"] = Stage("parse", "ok", 0.0, {"lines": len(prog.lines), "vars": [v.name for v in prog.vars]})

    def do_convert() -> Stage:
        R, cmap = convert(strip_annotations(prog), scheme)
        orth = check_orthogonal(R, solver)
        qr = check_quasi_reductive(R, solver)
        return Stage("convert", "ok", detail={"rules": len(R.rules), "orthogonal": orth.ok,
                                              "quasi_reductive": qr.ok})
    timed("convert", do_convert)

    check = None

    def do_tableau() -> Stage:
        nonlocal check
        check = check_tableau(prog, solver)
        detail = {"obligations": len(check.obligations),
                  "violations": [o.describe() for o in check.violations],
                  "warnings": [w for o in check.obligations for w in o.warnings]}
        status = "ok" if check.ok else ("unknown" if check.unknown else "failed")
        return Stage("tableau", status, detail=detail)
    tab_stage = timed("tableau", do_tableau)
    if tab_stage.status != "ok":
        if tab_stage.status == "unknown":
            return finish(UNKNOWN)
        anns = prog.assertions
        if anns:
            witness = find_refutation(prog, anns[0].content.cond, anns[-1].content.cond, refute_box)
            if witness is not None:
                tab_stage.detail["refutation"] = witness
                if refute:
                    return finish(REFUTED)
        return finish(TABLEAU_INVALID)

    trans: Optional[TransResult] = None

    def do_transform() -> Stage:
        nonlocal trans
        try:
            trans = transform(check.tableau, scheme, solver, aliases)
        except TransformError as e:
            return Stage("transform", "unknown" if e.unknown else "failed", detail={"error": str(e)})
        detail = {"steps": len(trans.steps), "final": str(trans.final),
                  "hypotheses": [show_rule(r) for r in trans.hypotheses],
                  "end_empty": trans.final.finished}
        try:
            replay_sequence(trans.R, trans.start, trans.steps, solver)
            detail["replay"] = "ok"
        except ReplayMismatch as e:
            detail["replay"] = str(e)
            return Stage("transform", "failed", detail=detail)
        return Stage("transform", "ok" if trans.final.finished else "failed", detail=detail)
    tr_stage = timed("transform", do_transform)
    if tr_stage.status != "ok":
        return finish(UNKNOWN if tr_stage.status == "unknown" else TABLEAU_INVALID, trans)

    def do_termination() -> Stage:
        rk = loop_ranks(prog, scheme, ranks)
        base = certify_program(trans.R_program, trans.cmap, rk, solver, seed=seed)
        checks = [r for r in trans.R.rules if r.name.startswith("chk.")]
        lifted = lift_termination(base, checks, trans.hypotheses)
        detail = lifted.to_json()
        detail["result"] = detail.pop("status")
        return Stage("termination", "ok" if lifted.terminating else "unknown", detail=detail)
    te_stage = timed("termination", do_termination)
    return finish(PROVED if te_stage.status == "ok" else UNKNOWN, trans)
