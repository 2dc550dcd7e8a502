"""An if statement needs no hypotheses: case splitting on the condition,
then each branch is closed on its own and they merge at the join."""

from pathlib import Path

from hoare2ri.tableau import check_tableau
from hoare2ri.transform import transform
from hoare2ri.whilelang import parse_program

source = (Path(__file__).resolve().parent.parent / "fixtures" / "abs.whl").read_text()
print(source)
result = transform(check_tableau(parse_program(source)).tableau)
print(result.transcript())
