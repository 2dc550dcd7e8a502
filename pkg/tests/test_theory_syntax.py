import pytest
from hypothesis import given, strategies as st

from hoare2ri import theory as th
from hoare2ri.syntax import SyntaxErr, parse_constraint, parse_term, show
from hoare2ri.terms import BOOL, INT, Var

x, y = Var("x"), Var("y")


@given(st.integers(-50, 50), st.integers(-9, 9).filter(bool))
def test_euclidean_division(a, b):
    q, r = th.euclid_div(a, b), th.euclid_mod(a, b)
    assert a == b * q + r and 0 <= r < abs(b)


def test_ground_evaluation():
    t = parse_term("3 * (2 * (1 * 1)) - 4 div 3", var_sorts={})
    assert th.eval_ground(t) == th.int_value(5)
    assert th.eval_ground(parse_constraint("!(1 > 2) && 2 >= 2")) == th.TRUE


def test_values():
    assert th.is_value(th.int_value(-3)) and th.decode(th.int_value(-3)) == -3
    assert th.decode(th.TRUE) is True
    assert not th.is_value(th.add(th.int_value(1), th.int_value(1)))


def test_holds_needs_bound_variables():
    phi = parse_constraint("x > y")
    assert th.holds(phi, {x: 2, y: 1})
    with pytest.raises(th.EvalError):
        th.holds(phi, {x: 2})


def test_rationals_are_cleared_in_assertions():
    phi = parse_constraint("z = 1/2*i*(i+1)")
    assert show(phi) == "2 * z = i * (i + 1)"
    psi = parse_constraint("z + i + 1 = 1/2*(i+1)*(i+2) && x >= i + 1")
    assert show(psi) == "2 * (z + i + 1) = (i + 1) * (i + 2) && x >= i + 1"


def test_comparisons_have_one_direction():
    assert show(parse_constraint("x <= 0")) == "0 >= x"
    assert show(parse_constraint("x < y")) == "y > x"


@pytest.mark.parametrize("src", [
    "x + y * 3 > 2 - x", "!(x > y) || x = y", "x - (y - 1) >= 0", "(x ==> y > 1) && true",
    "0 - x * (y + 2) != 4", "x mod 3 = 1",
])
def test_show_parse_round_trip(src):
    sorts = {"x": BOOL if "==>" in src else INT, "y": INT}
    t = parse_term(src, sort=BOOL, var_sorts=dict(sorts))
    again = parse_term(show(t), sort=BOOL, var_sorts=dict(sorts))
    assert again == t


def test_syntax_error_position():
    with pytest.raises(SyntaxErr) as e:
        parse_constraint("x > ")
    assert e.value.line == 1 and e.value.col == 5
