import json
import subprocess
import sys

import pytest

from hoare2ri.cli import main

from tests.conftest import FIXTURES


def fx(name):
    return str(FIXTURES / name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_interpret(capsys):
    code, out, _ = run(capsys, "interpret", fx("psum.whl"), "--input", "x=3,i=0,z=0")
    assert code == 0 and out.strip() == "x=3,i=3,z=6"


def test_interpret_out_of_fuel(capsys):
    code, _, _ = run(capsys, "interpret", fx("psum_neq.whl"), "--input", "x=0,i=1,z=0", "--start", "3", "--fuel", "50")
    assert code == 2


def test_convert_lists_named_rules(capsys):
    code, out, _ = run(capsys, "convert", fx("psum.whl"))
    assert code == 0
    assert "L3.t: state3(x, i, z) -> state4(x, i, z) [x > i]" in out.splitlines()
    assert len(out.strip().splitlines()) == 7


def test_rewrite_factorial(capsys):
    code, out, _ = run(capsys, "rewrite", fx("fact.lctrs"), "fact(3)", "--quiet")
    assert code == 0 and out.strip() == "6"


@pytest.mark.parametrize("name, code, verdict", [
    ("sum.whl", 0, "PROVED"), ("sum_neq.whl", 2, "UNKNOWN"), ("abs.whl", 0, "PROVED"),
    ("nested.whl", 0, "PROVED"), ("skip.whl", 0, "PROVED")])
def test_prove_exit_codes(capsys, name, code, verdict):
    got, out, _ = run(capsys, "prove", fx(name), "--json")
    rep = json.loads(out)
    assert got == code and rep["verdict"] == verdict
    assert list(rep["stages"]) == ["parse", "convert", "tableau", "transform", "termination"]


def test_invalid_tableau(capsys, tmp_path):
    bad = tmp_path / "bad.whl"
    bad.write_text((FIXTURES / "sum.whl").read_text().replace("@ z = 1/2*x*(x+1);", "@ z = x;"))
    assert run(capsys, "check-tableau", str(bad))[0] == 1
    code, out, _ = run(capsys, "prove", str(bad), "--json")
    assert code == 1 and json.loads(out)["verdict"] == "TABLEAU_INVALID"


def test_proof_round_trip(capsys, tmp_path):
    proof = tmp_path / "proof.json"
    assert run(capsys, "transform", fx("sum.whl"), "--emit-proof", str(proof))[0] == 0
    code, out, _ = run(capsys, "replay", str(proof))
    assert code == 0 and "replayed 15 step(s)" in out
    doc = json.loads(proof.read_text())
    doc["steps"][4]["constraint"] = "x >= 1"
    proof.write_text(json.dumps(doc))
    assert run(capsys, "replay", str(proof))[0] == 1


def test_rank_override(capsys):
    code, out, _ = run(capsys, "prove", fx("sum.whl"), "--rank", "3=x - i", "--json")
    cert = json.loads(out)["stages"]["termination"]
    assert code == 0 and "x - i" in json.dumps(cert)
    assert run(capsys, "prove", fx("sum.whl"), "--rank", "i")[0] == 2


@pytest.mark.parametrize("argv", [
    ["prove", "no/such/file.whl"], ["frobnicate"], ["interpret", fx("psum.whl"), "--input", "x=="],
    ["prove"]])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 3


def test_syntax_error_location(capsys, tmp_path):
    f = tmp_path / "e.whl"
    f.write_text("vars x;\nwhile (x > 0 {\n  x := x - 1;\n}\n")
    code, _, err = run(capsys, "parse", str(f))
    assert code == 3 and "2:" in err


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "hoare2ri", "prove", fx("sum.whl")],
                       capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.strip().endswith("PROVED")


def _stable(d):
    if isinstance(d, dict):
        return {k: _stable(v) for k, v in d.items() if k not in ("seconds", "source")}
    if isinstance(d, list):
        return [_stable(v) for v in d]
    return d


@pytest.mark.parametrize("name", ["sum", "sum_neq"])
def test_report_matches_golden_file(capsys, name):
    _, out, _ = run(capsys, "prove", fx(f"{name}.whl"), "--json")
    golden = json.loads((FIXTURES.parent / "tests" / "golden" / f"prove_{name}.json").read_text())
    assert _stable(json.loads(out)) == golden


def test_missing_solver_falls_back_with_warning(caplog, capsys):
    code, _, _ = run(capsys, "prove", fx("sum.whl"), "--solver-cmd", "no-such-solver-here")
    assert code == 0 and "built-in fallback" in caplog.text


def test_rank_for_every_loop(capsys):
    assert run(capsys, "prove", fx("sum.whl"), "--rank", "*=x - i")[0] == 0
