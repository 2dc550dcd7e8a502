import pytest
from hypothesis import given, settings, strategies as st

from hoare2ri.whilelang import (
    COMMANDS, SOURCE, Halted, OutOfFuel, WhileSyntaxError, format_program, interpret, parse_program,
    strip_annotations,
)

from tests.conftest import load
from tests.gen import program_text, random_program, tableau_text


def test_sum_runs(p_sum):
    assert interpret(p_sum, {"x": 3, "i": 7, "z": 9}) == Halted({"x": 3, "i": 3, "z": 6}, 15)


def test_annotations_do_not_change_runs(t_sum, p_sum):
    for x in range(0, 6):
        a = interpret(t_sum, {"x": x, "i": 0, "z": 0})
        b = interpret(p_sum, {"x": x, "i": 0, "z": 0})
        assert a == b and a.valuation["z"] == x * (x + 1) // 2


def test_neq_variant_diverges_from_loop_head():
    prog = load("psum_neq.whl")
    assert isinstance(interpret(prog, {"x": 0, "i": 1, "z": 0}, fuel=5000, start=3), OutOfFuel)
    assert isinstance(interpret(prog, {"x": -1, "i": 0, "z": 0}, fuel=5000), OutOfFuel)
    assert isinstance(interpret(prog, {"x": 4, "i": 0, "z": 0}, fuel=5000), Halted)


def test_numbering_schemes(t_sum):
    labels = [ln.label for ln in t_sum.lines]
    assert labels[:5] == ["A1", "A2", "1", "A3", "A4"]
    assert [ln.cmd_number for ln in t_sum.commands] == [1, 2, 3, 4, 5, 6, 7]
    assert [ln.number for ln in t_sum.commands] == [3, 6, 9, 12, 14, 16, 19]
    assert len(t_sum.assertions) == 12


def test_format_parse_round_trip(t_sum):
    assert parse_program(format_program(t_sum)) == t_sum
    numbered = format_program(t_sum, COMMANDS)
    assert "A12:" in numbered or "A12" in numbered


def test_strip_keeps_numbers(t_sum, p_sum):
    bare = strip_annotations(t_sum)
    assert [ln.cmd_number for ln in bare.lines] == [ln.cmd_number for ln in p_sum.lines]
    assert not bare.has_annotations()


@pytest.mark.parametrize("src,line,col", [
    ("x := ;", 1, 6),
    ("x := 1;\nif (x > 0) { skip; }\n", 3, 1),  # where the else was expected
    ("while (x > 0 {\n}\n", 1, 14),
    ("vars x;\ny := 1;\n", 2, 1),
])
def test_syntax_errors_have_positions(src, line, col):
    with pytest.raises(WhileSyntaxError) as e:
        parse_program(src)
    assert (e.value.line, e.value.col) == (line, col)


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_random_programs_round_trip(seed):
    for text in (program_text(random_program(seed)), tableau_text(random_program(seed))):
        prog = parse_program(text)
        assert parse_program(format_program(prog)) == prog
