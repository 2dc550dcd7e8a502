from hoare2ri import theory as th
from hoare2ri.tableau import (
    ASSIGNMENT, BLOCK_SHAPE, IF_SHAPE, IMPLICATION, WHILE_SHAPE, check_tableau, hoare_triple,
)
from hoare2ri.syntax import show
from hoare2ri.terms import Var
from hoare2ri.whilelang import parse_program

from tests.conftest import FIXTURES, load


def test_sum_tableau_is_valid(t_sum, solver):
    res = check_tableau(t_sum, solver)
    assert res.ok and not res.violations
    kinds = [o.kind for o in res.obligations]
    assert kinds.count(IMPLICATION) == 5
    assert kinds.count(ASSIGNMENT) == 4
    assert kinds.count(WHILE_SHAPE) == 1
    warned = [o for o in res.obligations if o.warnings]
    # A9 is (i+1)(i+2) while substituting i+1 into A10 gives (i+1)(i+1+1)
    assert [o.lines for o in warned] == [("A9", "5", "A10")]
    pre, prog, post = hoare_triple(res.tableau)
    assert show(pre) == "x >= 0" and show(post) == "2 * z = x * (x + 1)"
    assert all(o.recheck(solver) for o in res.obligations)


def test_parallel_check_agrees(t_sum, solver):
    seq = check_tableau(t_sum, solver)
    par = check_tableau(t_sum, jobs=4)
    assert [o.to_json() for o in seq.obligations] == [o.to_json() for o in par.obligations]


def test_violation_reports_counterexample(solver):
    src = (FIXTURES / "sum.whl").read_text().replace("@ z = 1/2*x*(x+1);", "@ false;")
    res = check_tableau(parse_program(src), solver)
    assert not res.ok and not res.unknown
    (bad,) = res.violations
    assert bad.kind == IMPLICATION and bad.lines == ("A11", "A12")
    cex = bad.claims[0].counterexample
    assert th.holds(bad.claims[0].left, {Var(k): v for k, v in cex.items()})


def test_structural_violations(solver):
    res = check_tableau(parse_program("x := 1;\n@ x = 1;\n"), solver)
    assert not res.ok
    assert any(o.kind == BLOCK_SHAPE and not o.ok for o in res.violations)
    res = check_tableau(parse_program("@ true;\nwhile (x > 0) { @ x > 0; x := x - 1; @ true; }\n@ !(x > 0);\n"), solver)
    assert any(o.kind == WHILE_SHAPE and not o.ok for o in res.violations)


def test_if_tableau(solver):
    res = check_tableau(load("abs.whl"), solver)
    assert res.ok
    assert [o.kind for o in res.obligations].count(IF_SHAPE) == 1


def test_json_report_shape(t_sum, solver):
    doc = check_tableau(t_sum, solver).to_json()
    assert doc["valid"] is True and len(doc["obligations"]) == 12
    assert {"kind", "lines", "verdict", "claims"} <= set(doc["obligations"][0])
