import pytest

from hoare2ri import theory as th
from hoare2ri.convert import convert, with_check
from hoare2ri.lctrs import (
    CALC_RULES, ConstrainedRule, ConstrainedTerm, Lctrs, RuleError, StepFailure, check_orthogonal,
    check_quasi_reductive, format_lctrs, parse_lctrs, rewrite_constrained, rewrite_innermost,
    rules_equal_modulo_renaming, show_rule,
)
from hoare2ri.syntax import parse_constraint, parse_term, show
from hoare2ri.terms import App, Var

from tests.conftest import FIXTURES

FACT = parse_lctrs((FIXTURES / "fact.lctrs").read_text())


def test_factorial_of_three():
    run = rewrite_innermost(FACT, parse_term("fact(3)", FACT.signature))
    assert run.normal_form == th.int_value(6)
    assert run.length == 10
    names = [name for _, name, _ in run.steps]
    assert names.count("fact.step") == 3 and names.count("fact.base") == 1
    assert names.count("calc:-") == 3 and names.count("calc:*") == 3


def test_calculation_steps():
    run = rewrite_innermost(FACT, parse_term("3 - 1", FACT.signature))
    assert run.length == 1 and run.normal_form == th.int_value(2)
    run = rewrite_innermost(FACT, parse_term("3 * (2 * (1 * 1))", FACT.signature))
    assert run.length == 3 and run.normal_form == th.int_value(6)
    # innermost first
    assert [p for p, _, _ in run.steps] == [(2, 2), (2,), ()]


def test_calc_rule_shape():
    r = CALC_RULES[th.ADD]
    assert show_rule(r) == "x + y -> z [z = x + y]"
    assert r.lvars == frozenset({Var("x"), Var("y"), Var("z")})


def test_rule_validation():
    f = FACT.signature["fact"]
    with pytest.raises(RuleError):
        ConstrainedRule(App(f, (Var("x"),)), th.TRUE)  # int vs bool
    with pytest.raises(RuleError):
        ConstrainedRule(parse_term("1 + 1", {}), th.int_value(2))


def test_text_format_round_trip():
    text = format_lctrs(FACT, with_names=True)
    again = parse_lctrs(text)
    assert [show_rule(r, True) for r in again.rules] == [show_rule(r, True) for r in FACT.rules]


def test_text_format_errors_carry_line_numbers():
    with pytest.raises(Exception) as e:
        parse_lctrs("signature\n  f : int -> int\nrules\n  f(x) -> g(x)\n")
    assert "4" in str(e.value)


def test_orthogonality_detects_overlap(solver):
    R = parse_lctrs("signature\n f : int -> int\nrules\n f(x) -> 1 [x >= 0]\n f(x) -> 2 [x <= 0]\n")
    rep = check_orthogonal(R, solver)
    assert not rep.ok and "overlap" in rep.diagnostics[0]
    R2 = parse_lctrs("signature\n f : int -> int\nrules\n f(x) -> 1 [x > 0]\n f(x) -> 2 [x <= 0]\n")
    assert check_orthogonal(R2, solver).ok


def test_left_linearity_is_required(solver):
    R = parse_lctrs("signature\n g : int int -> int\nrules\n g(x, x) -> x\n")
    assert not check_orthogonal(R, solver).ok


def test_quasi_reductive(solver):
    assert check_quasi_reductive(FACT, solver).ok
    R = parse_lctrs("signature\n f : int -> int\nrules\n f(x) -> 1 [x > 0]\n")
    rep = check_quasi_reductive(R, solver)
    assert not rep.ok and "cover" in rep.diagnostics[0]


def test_sum_system_is_orthogonal_with_check_rules(p_sum, solver):
    R, cmap = convert(p_sum)
    post = parse_constraint("z = 1/2*x*(x+1)")
    assert check_orthogonal(R, solver).ok
    assert check_orthogonal(with_check(R, post, cmap), solver).ok
    assert check_quasi_reductive(with_check(R, post, cmap), solver).ok


# constrained rewriting with the assignment rules of the summation program

def _ct(R, term, phi):
    return ConstrainedTerm(parse_term(term, R.signature, var_sorts={"x": th.INT, "i": th.INT, "z": th.INT}),
                           parse_constraint(phi))


def test_assignment_step_moves_update_into_constraint(p_sum, solver):
    R, _ = convert(p_sum)
    ct = _ct(R, "state4(x, i, z)", "z + i + 1 = 1/2*(i+1)*(i+2) && x >= i + 1")
    res = rewrite_constrained(R, ct, R.rule("L4"), (), solver)
    assert show(res.ct.term) == "state5(x, i, z)"
    assert show(res.ct.constraint) == "2 * z = (i + 1) * (i + 2) && x >= i + 1"
    assert not res.leftover


def test_fresh_variable_update_appends_equation(p_sum, solver):
    R, _ = convert(p_sum)
    res = rewrite_constrained(R, _ct(R, "state1(x, i, z)", "x >= 0"), R.rule("L1"), (), solver)
    assert show(res.ct.term) == "state2(x, i, z)"
    assert show(res.ct.constraint) == "x >= 0 && i = 0"


def test_guard_must_be_implied(p_sum, solver):
    R, _ = convert(p_sum)
    res = rewrite_constrained(R, _ct(R, "state3(x, i, z)", "x >= i"), R.rule("L3.t"), (), solver)
    assert isinstance(res, StepFailure) and res.verdict.invalid
    ok = rewrite_constrained(R, _ct(R, "state3(x, i, z)", "x > i"), R.rule("L3.t"), (), solver)
    assert show(ok.ct.term) == "state4(x, i, z)"


def test_renaming_equality():
    a = parse_lctrs("signature\n f : int -> int\nrules\n f(x) -> x + 1 [x > 0]\n").rules[0]
    b = parse_lctrs("signature\n f : int -> int\nrules\n f(y) -> y + 1 [y > 0]\n").rules[0]
    c = parse_lctrs("signature\n f : int -> int\nrules\n f(y) -> y + 2 [y > 0]\n").rules[0]
    assert rules_equal_modulo_renaming(a, b) and not rules_equal_modulo_renaming(a, c)
