"""Walk through the summation proof: tableau, state-machine rules, and the
rewriting-induction derivation built from the tableau."""

from pathlib import Path

from hoare2ri.convert import convert
from hoare2ri.lctrs import show_rule
from hoare2ri.tableau import check_tableau
from hoare2ri.transform import transform
from hoare2ri.whilelang import parse_program, strip_annotations

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
NAMES = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A11", "A8", "A9", "A10", "B1", "B2", "B3", "B4"]

tableau = parse_program((FIXTURES / "sum.whl").read_text())

print("The program, numbered by command:")
R, _ = convert(strip_annotations(tableau))
for rule in R.rules:
    print("   ", show_rule(rule, with_name=True))

check = check_tableau(tableau)
print(f"\nThe tableau has {len(check.obligations)} obligations; all discharged: {check.ok}")

result = transform(check.tableau, aliases=NAMES)
print("\nDerivation, one tableau case at a time:\n")
print(result.transcript())
print("The remaining hypothesis is the loop invariant as a rewrite rule:")
for h in result.hypotheses:
    print("   ", show_rule(h))
