import itertools
import re

import pytest
from hypothesis import given, settings, strategies as st

from hoare2ri import theory as th
from hoare2ri.convert import convert, make_check_rules, make_goal, run_from, with_check
from hoare2ri.lctrs import check_orthogonal, check_quasi_reductive, show_equation, show_rule
from hoare2ri.syntax import parse_constraint
from hoare2ri.whilelang import COMMANDS, SOURCE, Halted, interpret, parse_program, strip_annotations

from tests.gen import count_loops, program_text, random_program

# rules of the summation program, printed canonically
R_SUM = [
    "state1(x, i, z) -> state2(x, 0, z)",
    "state2(x, i, z) -> state3(x, i, 0)",
    "state3(x, i, z) -> state4(x, i, z) [x > i]",
    "state3(x, i, z) -> end(x, i, z) [!(x > i)]",
    "state4(x, i, z) -> state5(x, i, z + i + 1)",
    "state5(x, i, z) -> state6(x, i + 1, z)",
    "state6(x, i, z) -> state3(x, i, z)",
]


def test_sum_conversion_is_exact(p_sum):
    R, cmap = convert(p_sum)
    assert [show_rule(r) for r in R.rules] == R_SUM
    assert [r.name for r in R.rules] == ["L1", "L2", "L3.t", "L3.f", "L4", "L5", "L6"]
    assert [v.name for v in cmap.vars] == ["x", "i", "z"]


def test_annotations_do_not_change_rules(t_sum, p_sum):
    a, _ = convert(strip_annotations(t_sum))
    b, _ = convert(p_sum)
    assert [show_rule(r) for r in a.rules] == [show_rule(r) for r in b.rules]


def test_source_scheme_renames_states_only(t_sum):
    R, cmap = convert(strip_annotations(t_sum), SOURCE)
    assert sorted(cmap.state_of) == [3, 6, 9, 12, 14, 16, 19]
    rename = {f"state{k}": f"state{j}" for j, k in enumerate([3, 6, 9, 12, 14, 16], start=1)}
    shown = [show_rule(r) for r in R.rules]
    shown = [re.sub(r"state\d+(?=\()", lambda m: rename[m.group(0)], s) for s in shown]
    assert shown == R_SUM


def test_check_rules_and_goal(p_sum):
    R, cmap = convert(p_sum)
    post = parse_constraint("z = 1/2*x*(x+1)")
    chk = make_check_rules(post, cmap.vars, cmap.end)
    assert [show_rule(r) for r in chk] == [
        "chk(end(x, i, z)) -> true [2 * z = x * (x + 1)]",
        "chk(end(x, i, z)) -> false [!(2 * z = x * (x + 1))]"]
    goal = make_goal(parse_constraint("x >= 0"), cmap)
    assert show_equation(goal) == "chk(state1(x, i, z)) ≈ true [x >= 0]"


def test_sum_cosimulation_exhaustive(p_sum):
    R, cmap = convert(p_sum)
    bad = 0
    for x, i, z in itertools.product(range(0, 9), range(-3, 4), range(-3, 4)):
        val = {"x": x, "i": i, "z": z}
        run = interpret(p_sum, val)
        rew = run_from(R, cmap, val)
        bad += not (isinstance(run, Halted) and rew == run.valuation)
    assert bad == 0


@settings(max_examples=100)
@given(seed=st.integers(0, 100_000))
def test_random_programs_are_orthogonal_and_quasi_reductive(seed, solver):
    prog = random_program(seed)
    assert count_loops(prog) <= 2
    P = parse_program(program_text(prog))
    R, cmap = convert(P)
    assert check_orthogonal(R, solver).ok
    assert check_quasi_reductive(R, solver).ok
    Rc = with_check(R, parse_constraint("x >= y"), cmap)
    assert check_orthogonal(Rc, solver).ok
    assert check_quasi_reductive(Rc, solver).ok


@settings(max_examples=60)
@given(st.integers(0, 100_000), st.tuples(*[st.integers(-3, 3)] * 3))
def test_random_programs_cosimulate(seed, vals):
    P = parse_program(program_text(random_program(seed)))
    R, cmap = convert(P)
    val = dict(zip(["x", "y", "z"], vals))
    run = interpret(P, val, fuel=300)
    if isinstance(run, Halted):
        assert run_from(R, cmap, val, fuel=20_000) == run.valuation
    else:
        # every executed line is at least one rule step, so the rewrite run cannot end sooner
        assert run_from(R, cmap, val, fuel=300) is None
