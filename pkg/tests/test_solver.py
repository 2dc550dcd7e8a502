import itertools

import pytest
from hypothesis import given, settings, strategies as st

from hoare2ri import theory as th
from hoare2ri.solver import STATS, Solver, Status
from hoare2ri.syntax import parse_constraint
from hoare2ri.terms import Var

x, y = Var("x"), Var("y")


def brute_counterexample(phi, box=4):
    for a, b in itertools.product(range(-box, box + 1), repeat=2):
        if not th.holds(phi, {x: a, y: b}):
            return {x: a, y: b}
    return None


atoms = st.builds(
    lambda a, b, c, op: parse_constraint(f"{a} * x + {b} * y {op} {c}", {"x": th.INT, "y": th.INT}),
    st.integers(-2, 2), st.integers(-2, 2), st.integers(-3, 3), st.sampled_from([">", ">=", "=", "!="]))
formulas = st.recursive(atoms, lambda sub: st.one_of(
    st.builds(th.conj, sub, sub), st.builds(th.neg, sub), st.builds(th.implies, sub, sub)), max_leaves=5)


@pytest.mark.parametrize("which", ["external", "builtin"])
@settings(max_examples=60)
@given(phi=formulas)
def test_validity_agrees_with_brute_force(which, phi, solver, builtin_solver):
    s = solver if which == "external" else builtin_solver
    v = s.check_valid(phi)
    cex = brute_counterexample(phi)
    if v.valid:
        assert cex is None
    if v.invalid and v.model:
        env = {var: v.model.get(var, 0) for var in (x, y)}
        assert not th.holds(phi, env)
    if cex is not None:
        assert not v.valid


def test_nonlinear_implications_from_the_summation_proof(solver):
    a8 = parse_constraint("z + i + 1 = 1/2*(i+1)*(i+2) && x >= i + 1")
    a7 = parse_constraint("z = 1/2*i*(i+1) && x >= i && x > i")
    assert solver.check_implies(a7, a8).valid
    # the two are in fact equivalent, which needs nonlinear reasoning
    assert solver.check_equiv(a7, a8).valid
    assert solver.check_implies(a8, parse_constraint("x > i + 1")).invalid


def test_invalid_has_confirmed_model(solver):
    v = solver.check_valid(parse_constraint("x * x > x"))
    assert v.invalid
    env = {k: val for k, val in v.model.items()}
    assert not th.holds(parse_constraint("x * x > x"), {x: env.get(x, 0)})


def test_sat_and_unsat(solver):
    assert solver.check_sat(parse_constraint("x > 3 && x < 5")).valid
    assert solver.check_sat(parse_constraint("x > 3 && x < 4")).invalid


def test_builtin_fallback_when_binary_missing():
    s = Solver(cmd="definitely-not-a-solver-binary")
    assert not s.external_available
    assert s.check_valid(parse_constraint("x + 1 > x")).valid
    v = s.check_valid(parse_constraint("x > 0"))
    assert v.invalid and not th.holds(parse_constraint("x > 0"), {x: v.model[x]})


def test_nonlinear_without_external_solver_may_be_unknown():
    s = Solver(external=False, search_bound=1)
    v = s.check_valid(parse_constraint("x * x * x - x != 7"))
    assert v.status in (Status.UNKNOWN, Status.VALID)


def test_every_reported_model_was_confirmed():
    assert STATS["models_unconfirmed"] == 0
