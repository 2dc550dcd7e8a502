"""Integer polynomials in sparse normal form, used by the solver's built-in
decision paths and by the ring-normalization test oracle."""

from __future__ import annotations

import math
from typing import Optional

from hoare2ri import theory as th
from hoare2ri.terms import INT, Term, Var

Monomial = tuple[tuple[Var, int], ...]  # sorted by variable name
Poly = dict[Monomial, int]

ONE: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps: dict[Var, int] = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items(), key=lambda ve: ve[0].name))


def const(c: int) -> Poly:
    return {ONE: c} if c else {}


def var(v: Var) -> Poly:
    return {((v, 1),): 1}


def padd(p: Poly, q: Poly, k: int = 1) -> Poly:
    out = dict(p)
    for m, c in q.items():
        n = out.get(m, 0) + k * c
        if n:
            out[m] = n
        else:
            out.pop(m, None)
    return out


def pmul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            n = out.get(m, 0) + c1 * c2
            if n:
                out[m] = n
            else:
                out.pop(m)
    return out


def pscale(p: Poly, k: int) -> Poly:
    return {m: c * k for m, c in p.items()} if k else {}


def to_poly(t: Term) -> Optional[Poly]:
    """Polynomial of an integer term, or ``None`` outside the ring fragment
    (division, modulo, symbolic exponents)."""
    if isinstance(t, Var):
        return var(t) if t.sort == INT else None
    if th.is_value(t):
        v = th.decode(t)
        return None if isinstance(v, bool) else const(v)
    f = t.fun
    if f in (th.ADD, th.SUB, th.MUL):
        a, b = to_poly(t.args[0]), to_poly(t.args[1])
        if a is None or b is None:
            return None
        if f == th.ADD:
            return padd(a, b)
        if f == th.SUB:
            return padd(a, b, -1)
        return pmul(a, b)
    if f == th.EXP:
        base, k = to_poly(t.args[0]), to_poly(t.args[1])
        if base is None or k is None or set(k) - {ONE}:
            return None
        n = k.get(ONE, 0)
        if n < 0:
            return const(0)
        out = const(1)
        for _ in range(n):
            out = pmul(out, base)
        return out
    if f in (th.DIV, th.MOD):
        a, b = to_poly(t.args[0]), to_poly(t.args[1])
        if a is not None and b is not None and not (set(a) - {ONE}) and not (set(b) - {ONE}):
            fn = th.euclid_div if f == th.DIV else th.euclid_mod
            return const(fn(a.get(ONE, 0), b.get(ONE, 0)))
    return None


def is_constant(p: Poly) -> bool:
    return not (set(p) - {ONE})


def constant_of(p: Poly) -> int:
    return p.get(ONE, 0)


def variables(p: Poly) -> set[Var]:
    return {v for m in p for v, _ in m}


def substitute(p: Poly, v: Var, q: Poly) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        term = const(c)
        for w, e in m:
            factor = q if w == v else var(w)
            for _ in range(e):
                term = pmul(term, factor)
        out = padd(out, term)
    return out


def content(p: Poly, skip_constant: bool = False) -> int:
    g = 0
    for m, c in p.items():
        if skip_constant and m == ONE:
            continue
        g = math.gcd(g, c)
    return g


def key(p: Poly) -> tuple:
    """Hashable canonical form."""
    return tuple(sorted(((tuple((v.name, e) for v, e in m), c) for m, c in p.items())))


def _sort_key(item):
    m, _ = item
    return (-sum(e for _, e in m), tuple((v.name, -e) for v, e in m))


def to_term(p: Poly) -> Term:
    """Canonical term for ``p``: monomials by descending degree, then by name."""
    items = sorted(p.items(), key=_sort_key)
    if not items:
        return th.int_value(0)
    out: Optional[Term] = None
    for m, c in items:
        factors: list[Term] = []
        for v, e in m:
            factors += [v] * e
        mag = abs(c)
        if not factors:
            mono: Term = th.int_value(mag)
        else:
            mono = factors[0]
            for f in factors[1:]:
                mono = th.mul(mono, f)
            if mag != 1:
                mono = th.mul(th.int_value(mag), mono)
        if out is None:
            out = mono if c > 0 else (th.int_value(c) if not factors else
                                      th.sub(th.int_value(0), mono))
        else:
            out = th.add(out, mono) if c > 0 else th.sub(out, mono)
    return out


def equal_terms(s: Term, t: Term) -> bool:
    """Ring equality of two integer terms (both must be polynomial)."""
    a, b = to_poly(s), to_poly(t)
    return a is not None and b is not None and key(padd(a, b, -1)) == ()


def evaluate(p: Poly, env: dict[Var, int]) -> int:
    total = 0
    for m, c in p.items():
        x = c
        for v, e in m:
            x *= env[v] ** e
        total += x
    return total


def linear_part(p: Poly) -> Optional[dict[Var, int]]:
    """Coefficients of a degree-one polynomial, or ``None`` if nonlinear."""
    out = {}
    for m, c in p.items():
        if m == ONE:
            continue
        if len(m) != 1 or m[0][1] != 1:
            return None
        out[m[0][0]] = c
    return out

