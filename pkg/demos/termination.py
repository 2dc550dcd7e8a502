"""Why the summation loop halts, and why the variant with guard x != i is
left undecided even though its tableau is fine."""

from pathlib import Path

from hoare2ri.convert import convert
from hoare2ri.pipeline import prove
from hoare2ri.syntax import show
from hoare2ri.termination import search_rank, summarize_loops
from hoare2ri.whilelang import interpret, parse_program

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def loop_of(name):
    R, cmap = convert(parse_program((FIXTURES / name).read_text()))
    (loop,) = summarize_loops(R, cmap)
    return loop


for name in ("psum.whl", "psum_neq.whl"):
    loop = loop_of(name)
    (cycle,) = loop.cycles
    update = ", ".join(f"{v.name} := {show(t)}" for v, t in cycle.update)
    print(f"{name}: one trip round the loop is guarded by {show(cycle.guard)} and does {update}")
    cert = search_rank(loop)
    if cert:
        print(f"   ranking function {show(cert.rank[0])}:")
        for c in cert.checks:
            print(f"     {c.claim}")
    else:
        print("   no linear ranking function exists within the search bound")

# with x != i the loop really can run forever when entered with i above x
run = interpret(parse_program((FIXTURES / "psum_neq.whl").read_text()),
                {"x": 0, "i": 1, "z": 0}, start=3, fuel=1000)
print(f"\nentering the x != i loop at (x, i, z) = (0, 1, 0): {type(run).__name__} after {run.steps} steps")

for name in ("sum.whl", "sum_neq.whl"):
    rep = prove(parse_program((FIXTURES / name).read_text()))
    print(f"{name}: {rep.verdict}")
