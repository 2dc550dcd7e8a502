"""Random while programs for property tests.

Programs are generated as nested lists and rendered as ``.whl`` text, either
bare or annotated as a (trivially true) proof tableau whose shape still
exercises every translation case."""

from __future__ import annotations

import random
from dataclasses import dataclass

VARS = ("x", "y", "z")


@dataclass
class Gen:
    rng: random.Random
    max_depth: int = 3
    max_loops: int = 2
    loops: int = 0

    def expr(self) -> str:
        r = self.rng.random()
        v = self.rng.choice(VARS)
        if r < 0.3:
            return str(self.rng.randint(-3, 3))
        if r < 0.5:
            return v
        op = self.rng.choice(["+", "-", "*"])
        return f"{v} {op} {self.rng.randint(1, 3) if op != '*' else self.rng.choice(VARS)}"

    def cond(self) -> str:
        a, b = self.rng.sample(VARS, 2)
        op = self.rng.choice([">", ">=", "=", "!=", "<", "<="])
        rhs = b if self.rng.random() < 0.6 else str(self.rng.randint(-2, 2))
        return f"{a} {op} {rhs}"

    def block(self, depth: int) -> list:
        return [self.stmt(depth) for _ in range(self.rng.randint(1, 3))]

    def stmt(self, depth: int):
        r = self.rng.random()
        if depth < self.max_depth and r < 0.25:
            return ("if", self.cond(), self.block(depth + 1), self.block(depth + 1))
        if depth < self.max_depth and r < 0.45 and self.loops < self.max_loops:
            self.loops += 1
            # loops count a variable towards a bound so that most runs halt
            v = self.rng.choice(VARS)
            bound = self.rng.choice([w for w in VARS if w != v])
            body = self.block(depth + 1)
            body = [s for s in body if not _writes(s, v)] + [("assign", v, f"{v} + 1")]
            return ("while", f"{v} < {bound}", body)
        if r < 0.52:
            return ("skip",)
        return ("assign", self.rng.choice(VARS), self.expr())


def _writes(s, v: str) -> bool:
    if s[0] == "assign":
        return s[1] == v
    if s[0] == "if":
        return any(_writes(t, v) for t in s[2] + s[3])
    if s[0] == "while":
        return any(_writes(t, v) for t in s[2])
    return False


def random_program(seed: int, max_depth: int = 3, max_loops: int = 2) -> list:
    g = Gen(random.Random(seed), max_depth, max_loops)
    return g.block(0)


def count_loops(prog: list) -> int:
    n = 0
    for s in prog:
        if s[0] == "while":
            n += 1 + count_loops(s[2])
        elif s[0] == "if":
            n += count_loops(s[2]) + count_loops(s[3])
    return n


def render(prog: list, indent: int = 0) -> str:
    pad = "    " * indent
    out = []
    for s in prog:
        if s[0] == "assign":
            out.append(f"{pad}{s[1]} := {s[2]};")
        elif s[0] == "skip":
            out.append(f"{pad}skip;")
        elif s[0] == "if":
            out.append(f"{pad}if ({s[1]}) {{")
            out.append(render(s[2], indent + 1))
            out.append(f"{pad}}} else {{")
            out.append(render(s[3], indent + 1))
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}while ({s[1]}) {{")
            out.append(render(s[2], indent + 1))
            out.append(f"{pad}}}")
    return "\n".join(out)


def program_text(prog: list) -> str:
    return f"vars {', '.join(VARS)};\n" + render(prog) + "\n"


def _annotated(prog: list, indent: int, pre: str) -> list[str]:
    """Lines of a tableau for ``prog``: starts with ``@ pre``, ends with ``@ true``."""
    pad = "    " * indent
    out = [f"{pad}@ {pre};"]
    if pre != "true":
        out.append(f"{pad}@ true;")
    for s in prog:
        if s[0] == "assign":
            out += [f"{pad}{s[1]} := {s[2]};", f"{pad}@ true;"]
        elif s[0] == "skip":
            out += [f"{pad}skip;", f"{pad}@ true;"]
        elif s[0] == "if":
            out.append(f"{pad}if ({s[1]}) {{")
            out += _annotated(s[2], indent + 1, f"true && ({s[1]})")
            out.append(f"{pad}}} else {{")
            out += _annotated(s[3], indent + 1, f"true && !({s[1]})")
            out += [f"{pad}}}", f"{pad}@ true;"]
        else:
            out.append(f"{pad}while @ true ({s[1]}) {{")
            out += _annotated(s[2], indent + 1, f"true && ({s[1]})")
            out += [f"{pad}}}", f"{pad}@ true && !({s[1]});", f"{pad}@ true;"]
    return out


def tableau_text(prog: list) -> str:
    return f"vars {', '.join(VARS)};\n" + "\n".join(_annotated(prog, 0, "true")) + "\n"
