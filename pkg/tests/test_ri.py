import json
import random

import pytest

from hoare2ri import theory as th
from hoare2ri.convert import convert, make_goal, with_check
from hoare2ri.lctrs import ConstrainedEquation, show_equation, show_rule
from hoare2ri.ri import (
    CASE_SPLITTING, DELETION, EXPANSION, GENERALIZATION, SIMPLIFICATION, Labeled, Process,
    ReplayMismatch, RIEngine, StepError, replay_sequence, replay_trace, trace_document,
)
from hoare2ri.syntax import parse_constraint

C = parse_constraint


@pytest.fixture
def setup(p_sum, solver):
    R, cmap = convert(p_sum)
    R = with_check(R, C("z = 1/2*x*(x+1)"), cmap)
    eng = RIEngine(R, solver)
    return R, cmap, eng


def at(cmap, k, phi):
    from hoare2ri.convert import CHK
    from hoare2ri.terms import App
    return ConstrainedEquation(App(CHK, (cmap.state(k),)), th.TRUE, C(phi))


def test_expansion_orients_into_hypotheses(setup):
    R, cmap, eng = setup
    proc = Process((Labeled("e", at(cmap, 3, "z = 1/2*i*(i+1) && x >= i")),))
    step = eng.expansion(proc, "e", (1,))
    out = {le.label: show_equation(le.eq) for le in step.after.E}
    assert out == {
        "e.1": "chk(state4(x, i, z)) ≈ true [2 * z = i * (i + 1) && x >= i && x > i]",
        "e.2": "chk(end(x, i, z)) ≈ true [2 * z = i * (i + 1) && x >= i && !(x > i)]"}
    (h,) = step.after.H
    assert show_rule(h) == "chk(state3(x, i, z)) -> true [2 * z = i * (i + 1) && x >= i]"


def test_expansion_needs_a_basic_position(setup):
    R, cmap, eng = setup
    proc = Process((Labeled("e", at(cmap, 3, "x >= i")),))
    with pytest.raises(StepError, match="basic"):
        eng.expansion(proc, "e", ())


def test_case_splitting_leaves_hypotheses_alone(setup):
    R, cmap, eng = setup
    proc = Process((Labeled("e", at(cmap, 3, "x >= i")),))
    step = eng.case_splitting(proc, "e", (1,))
    assert len(step.after.E) == 2 and step.after.H == ()


def test_simplification_checks_the_guard(setup):
    R, cmap, eng = setup
    proc = Process((Labeled("e", at(cmap, 3, "x >= i")),))
    with pytest.raises(StepError):
        eng.simplification(proc, "e", "L3.t", (1,))
    ok = eng.simplification(Process((Labeled("e", at(cmap, 3, "x > i")),)), "e", "L3.t", (1,))
    assert show_equation(ok.after.E[0].eq) == "chk(state4(x, i, z)) ≈ true [x > i]"


def test_simplification_with_target_needs_equivalence(setup):
    R, cmap, eng = setup
    proc = Process((Labeled("e", at(cmap, 5, "z = 1/2*(i+1)*(i+2) && x >= i + 1")),))
    step = eng.simplification(proc, "e", "L5", (1,), 1, C("z = 1/2*i*(i+1) && x >= i"))
    assert show_equation(step.after.E[0].eq) == "chk(state6(x, i, z)) ≈ true [2 * z = i * (i + 1) && x >= i]"
    with pytest.raises(StepError):
        eng.simplification(proc, "e", "L5", (1,), 1, C("z = 1/2*i*(i+1) && x > i"))


def test_deletion(setup):
    R, cmap, eng = setup
    trivial = Process((Labeled("e", ConstrainedEquation(th.TRUE, th.TRUE, C("x > 0"))),))
    assert eng.deletion(trivial, "e").after.E == ()
    unsat = Process((Labeled("e", at(cmap, 3, "x > 0 && 0 > x")),))
    assert eng.deletion(unsat, "e").after.E == ()
    with pytest.raises(StepError):
        eng.deletion(Process((Labeled("e", at(cmap, 3, "x > 0")),)), "e")


def test_generalization_needs_implication(setup):
    R, cmap, eng = setup
    proc = Process((Labeled("e", at(cmap, 1, "x >= 0")),))
    assert eng.generalization(proc, "e", C("x >= 0 && 0 = 0")).after.E[0].eq.constraint == C("x >= 0 && 0 = 0")
    with pytest.raises(StepError):
        eng.generalization(proc, "e", C("x > 0"))


def test_equal_results_merge(setup):
    R, cmap, eng = setup
    a = at(cmap, 6, "x >= i")
    proc = Process((Labeled("a", a), Labeled("b", at(cmap, 3, "x >= i"))))
    step = eng.simplification(proc, "a", "L6", (1,))
    assert [le.label for le in step.after.E] == ["b"] and step.merged


def test_replay_and_tamper_detection(setup, solver):
    R, cmap, eng = setup
    p0 = Process((Labeled("e", at(cmap, 1, "x >= 0")),))
    s1 = eng.generalization(p0, "e", C("x >= 0 && 0 = 0"))
    s2 = eng.simplification(s1.after, "e", "L1", (1,))
    assert replay_sequence(R, p0, [s1, s2], solver) == s2.after
    from dataclasses import replace
    with pytest.raises(ReplayMismatch) as e:
        replay_sequence(R, p0, [s1, replace(s2, rule_id="L2")], solver)
    assert e.value.index == 1
    doc = json.loads(json.dumps(trace_document(R, p0, [s1, s2])))
    assert replay_trace(doc, solver).digest() == s2.after.digest()
    doc["steps"][0]["constraint"] = "x >= 1"
    with pytest.raises(ReplayMismatch):
        replay_trace(doc, solver)
