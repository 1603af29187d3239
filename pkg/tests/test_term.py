import pytest
from hypothesis import given

from conftest import terms
from mlc.corpus import enumerate_terms
from mlc.term import (Abs, App, FuelExhausted, RedexKind, Var, alpha_eq,
                      canonical, find_redex, free_vars, normalize_innermost,
                      normalize_oracle, normalize_stepwise, pretty, replace_at,
                      step_normal, subterm_at, substitute)

x, y, z = Var("x"), Var("y"), Var("z")
I = Abs("x", x)
OMEGA = App(Abs("x", App(x, x)), Abs("x", App(x, x)))


def test_free_vars():
    assert free_vars(x) == {"x"}
    assert free_vars(I) == frozenset()
    assert free_vars(Abs("x", App(x, y))) == {"y"}


def test_substitute_basic():
    P = App(z, z)
    assert substitute(x, "x", P) == P
    assert substitute(Abs("x", App(x, y)), "x", P) == Abs("x", App(x, y))


def test_substitute_avoids_capture():
    r = substitute(Abs("y", x), "x", y)
    assert isinstance(r, Abs) and r.var != "y"
    assert free_vars(r) == {"y"}


def test_alpha_eq():
    assert alpha_eq(I, Abs("y", y))
    assert not alpha_eq(Abs("x", Abs("y", x)), Abs("a", Abs("b", Var("b"))))
    assert not alpha_eq(x, y)


def test_find_redex():
    assert find_redex(App(I, y)) == ((), RedexKind.BETA)
    assert find_redex(Abs("x", App(y, x))) == ((), RedexKind.ETA)
    assert find_redex(I) is None
    # x occurs in the function part: not an eta redex
    assert find_redex(Abs("x", App(x, x))) is None


def test_step_normal():
    assert step_normal(x) == x
    assert step_normal(App(I, y)) == y
    assert step_normal(Abs("x", App(y, x))) == y


def test_normalize_oracle_examples():
    assert alpha_eq(normalize_oracle(App(I, Abs("y", y)), 10), Abs("y", y))
    with pytest.raises(FuelExhausted):
        normalize_oracle(OMEGA, 100)
    t = Abs("x", App(Abs("z", App(y, z)), x))
    assert normalize_oracle(t, 10) == y


def test_positions_round_trip():
    t = App(Abs("x", App(x, y)), z)
    assert subterm_at(t, (0, 0)) == App(x, y)
    assert replace_at(t, (0, 0, 1), z) == App(Abs("x", App(x, z)), z)
    with pytest.raises(IndexError):
        subterm_at(t, (1, 0))


def test_pretty():
    assert pretty(Abs("x", App(y, x))) == "\\x. y x"
    assert pretty(App(x, App(y, z))) == "x (y z)"


@given(terms())
def test_step_never_adds_free_vars(m):
    assert free_vars(step_normal(m)) <= free_vars(m)


@given(terms())
def test_canonical_renaming_is_alpha_equal(m):
    assert alpha_eq(m, canonical(m))
    assert alpha_eq(m, canonical(m, prefix="w"))


@given(terms())
def test_normal_terms_are_fixpoints(m):
    # one direction only: Omega steps to itself yet is not normal
    if find_redex(m) is None:
        assert step_normal(m) == m
    elif step_normal(m) == m:
        assert not isinstance(m, Var)


def test_omega_is_a_fixpoint_with_a_redex():
    assert step_normal(OMEGA) == OMEGA
    assert find_redex(OMEGA) is not None


@given(terms())
def test_oracle_result_is_normal(m):
    try:
        n = normalize_oracle(m, 500)
    except FuelExhausted:
        return
    assert find_redex(n) is None


@given(terms(max_leaves=8))
def test_oracle_agrees_with_literal_iteration(m):
    try:
        fast = normalize_oracle(m, 300)
        slow = normalize_stepwise(m, 300)
    except FuelExhausted:
        return
    assert alpha_eq(fast, slow)


def test_confluence_exhaustive_size_7():
    checked = 0
    for m in enumerate_terms(7, ("a",)):
        try:
            lo = normalize_oracle(m, 500)
            ri = normalize_innermost(m, 500)
        except FuelExhausted:
            continue
        assert alpha_eq(lo, ri), pretty(m)
        checked += 1
    assert checked > 500
