import pytest
from hypothesis import given, strategies as st

from hoare2ri import theory as th
from hoare2ri.terms import (
    App, BOOL, FunSym, INT, InvalidPosition, SortMismatch, Subst, Var, apply_subst, is_ground,
    is_renaming, match, positions, rename_apart, replace_at, subterm_at, unify, var_set,
)

F = FunSym("f", (INT, INT), INT)
G = FunSym("g", (INT,), INT)
A = FunSym("a", (), INT)
x, y, z = Var("x"), Var("y"), Var("z")


def terms(depth=3):
    leaves = st.sampled_from([x, y, z, App(A), th.int_value(0), th.int_value(2)])
    return st.recursive(leaves, lambda sub: st.one_of(
        st.builds(lambda a, b: F(a, b), sub, sub), st.builds(lambda a: G(a), sub)), max_leaves=8)


def test_sorts_are_checked():
    with pytest.raises(SortMismatch):
        F(x, th.TRUE)
    with pytest.raises(SortMismatch):
        G(x, y)
    with pytest.raises(SortMismatch):
        Subst({x: th.TRUE})


def test_positions_and_replacement():
    t = F(G(x), y)
    assert positions(t) == [(), (1,), (1, 1), (2,)]
    assert subterm_at(t, (1, 1)) == x
    assert replace_at(t, (1,), z) == F(z, y)
    with pytest.raises(InvalidPosition):
        subterm_at(t, (3,))


def test_identity_bindings_are_dropped():
    assert Subst({x: x, y: z}) == {y: z}


def test_match_is_one_sided():
    assert match(F(x, x), F(G(y), G(y))) == {x: G(y)}
    assert match(F(x, x), F(y, z)) is None
    assert match(G(x), F(x, y)) is None


@given(terms(), terms())
def test_unifier_unifies(s, t):
    _, (t2,) = rename_apart(t)
    mgu = unify(s, t2)
    if mgu is not None:
        assert apply_subst(s, mgu) == apply_subst(t2, mgu)
        # idempotent
        assert all(apply_subst(u, mgu) == u for u in mgu.values())


@given(terms())
def test_term_matches_its_instances(t):
    inst = apply_subst(t, {x: G(y), z: th.int_value(5)})
    gamma = match(t, inst)
    assert gamma is not None and apply_subst(t, gamma) == inst


def test_unify_occurs_check():
    assert unify(x, G(x)) is None
    assert unify(F(x, y), F(G(y), G(z))) == {x: G(G(z)), y: G(z)}


def test_rename_apart_is_a_renaming():
    ren, (t,) = rename_apart(F(x, G(y)))
    assert is_renaming(ren)
    assert not (var_set(t) & {x, y})
    assert is_ground(App(A)) and not is_ground(t)
