import itertools

import pytest
from hypothesis import given, settings, strategies as st

from hoare2ri import theory as th
from hoare2ri.convert import CHK, convert
from hoare2ri.lctrs import parse_lctrs
from hoare2ri.syntax import parse_constraint, parse_term, show
from hoare2ri.tableau import check_tableau
from hoare2ri.termination import (
    TERMINATING, UNKNOWN, RankCertificate, RankFailure, certify_program, lift_termination,
    search_rank, summarize_loops, verify_rank,
)
from hoare2ri.transform import transform
from hoare2ri.whilelang import Halted, interpret, parse_program

from tests.conftest import load
from tests.gen import VARS, program_text, random_program


def summary(name):
    R, cmap = convert(load(name))
    (ls,) = summarize_loops(R, cmap)
    return ls, cmap


def expr(text, cmap):
    return parse_term(text, {}, var_sorts={v.name: th.INT for v in cmap.vars})


def test_cycle_summary_of_the_summation_loop():
    ls, _ = summary("psum.whl")
    assert ls.header == 3
    (c,) = ls.cycles
    assert c.path == ("L3.t", "L4", "L5", "L6")
    assert show(c.guard) == "x > i"
    assert {v.name: show(t) for v, t in c.update} == {"i": "i + 1", "z": "z + i + 1"}


def test_given_rank_is_verified(solver):
    ls, cmap = summary("psum.whl")
    cert = verify_rank(ls, expr("x - i", cmap), solver)
    assert isinstance(cert, RankCertificate) and len(cert.checks) == 2
    bad = verify_rank(ls, expr("i", cmap), solver)
    assert isinstance(bad, RankFailure) and not bad.unknown


def test_search_finds_a_rank(solver):
    ls, _ = summary("psum.whl")
    cert = search_rank(ls, solver)
    assert cert is not None and show(cert.rank[0]) == "x - i"


def test_disequality_guard_has_no_rank(solver):
    ls, cmap = summary("psum_neq.whl")
    assert search_rank(ls, solver) is None
    assert isinstance(verify_rank(ls, expr("x - i", cmap), solver), RankFailure)
    R, cmap = convert(load("psum_neq.whl"))
    assert certify_program(R, cmap, solver=solver).status == UNKNOWN


def test_nested_loops_are_certified(solver):
    R, cmap = convert(load("nested.whl"))
    loops = summarize_loops(R, cmap)
    assert len(loops) == 2 and loops[0].header > loops[1].header  # innermost first
    rep = certify_program(R, cmap, solver=solver)
    assert rep.terminating and len(rep.certificates) == 2


def test_loop_free_programs_terminate(solver):
    R, cmap = convert(load("abs.whl"))
    rep = certify_program(R, cmap, solver=solver)
    assert rep.terminating and rep.certificates == []


def test_lexicographic_rank_for_two_cycles(solver):
    prog = parse_program("vars x, y;\nwhile (x > 0) {\n  if (y > 0) {\n    y := y - 1;\n  } else {\n"
                         "    x := x - 1;\n    y := x;\n  }\n}\n")
    R, cmap = convert(prog)
    (ls,) = summarize_loops(R, cmap)
    assert len(ls.cycles) == 2
    cert = search_rank(ls, solver)
    assert cert is not None


def _hyps_and_checks(name, solver):
    r = transform(check_tableau(load(name), solver).tableau, solver=solver)
    checks = [x for x in r.R.rules if x.lhs.fun == CHK]
    return r, checks


def test_lifting_to_check_rules_and_hypotheses(solver):
    r, checks = _hyps_and_checks("sum.whl", solver)
    program = certify_program(r.R_program, r.cmap, solver=solver)
    lifted = lift_termination(program, checks, r.hypotheses)
    assert lifted.status == TERMINATING


def test_lifting_needs_a_certificate(solver):
    r, checks = _hyps_and_checks("sum.whl", solver)
    assert lift_termination(None, checks, r.hypotheses).status == UNKNOWN


def test_lifting_refuses_non_value_hypotheses(solver):
    r, checks = _hyps_and_checks("sum.whl", solver)
    program = certify_program(r.R_program, r.cmap, solver=solver)
    odd = parse_lctrs("signature\n  chk : int -> bool\n  g : int -> int\nrules\n"
                      "  chk(g(x)) -> chk(g(x + 1))\n").rules[0]
    assert lift_termination(program, checks, (*r.hypotheses, odd)).status == UNKNOWN


@settings(max_examples=25)
@given(seed=st.integers(0, 10**6))
def test_certified_programs_halt_on_sampled_inputs(seed, solver):
    prog = parse_program(program_text(random_program(seed, max_loops=1)))
    R, cmap = convert(prog)
    if not certify_program(R, cmap, solver=solver, bound=1).terminating:
        return
    for vals in itertools.islice(itertools.product(range(-10, 11, 3), repeat=len(VARS)), 200):
        res = interpret(prog, dict(zip(VARS, vals)), fuel=20_000)
        assert isinstance(res, Halted), vals


def test_every_certificate_check_is_valid(solver):
    R, cmap = convert(load("psum.whl"))
    rep = certify_program(R, cmap, solver=solver)
    assert all(c.verdict.valid for cert in rep.certificates for c in cert.checks)
    assert solver.check_valid(parse_constraint("x > i ==> x - i >= 0")).valid


def test_certified_loop_halts_within_the_rank_bound(solver):
    # entering at the header: iterations are bounded by the rank's initial value
    prog = load("psum.whl")
    R, cmap = convert(prog)
    (cert,) = certify_program(R, cmap, solver=solver).certificates
    (ls,) = summarize_loops(R, cmap)
    cycle_len = len(ls.cycles[0].path)
    rng = __import__("random").Random(3)
    for _ in range(200):
        env = {v.name: rng.randint(-10, 10) for v in cmap.vars}
        rank0 = th.eval_py(cert.rank[0], {v: env[v.name] for v in cmap.vars})
        fuel = max(rank0, 0) * cycle_len + len(prog.lines)
        assert isinstance(interpret(prog, env, fuel=fuel, start=3), Halted), env
