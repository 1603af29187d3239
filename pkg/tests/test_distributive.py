import pytest
from hypothesis import given

from conftest import terms
from mlc.corpus import random_corpus, random_terms
from mlc.distributive import (CertificationFailure, Closure, DRuleKind,
                              NotARedex, beta_redex_positions, certify_step,
                              classify, explify, full_development,
                              inner_spine_select, reduce_spine, step_d,
                              x_normalize, x_step)
from mlc.lang import load_source, parse_term as p
from mlc.term import (Abs, App, FuelExhausted, Var, alpha_eq, is_beta_redex,
                      normalize_oracle, size, subterms)


def test_classify():
    assert classify(p("(x: x) M")) is DRuleKind.I
    assert classify(p("(x: y) M")) is DRuleKind.C
    assert classify(p("(x, y: M) N")) is DRuleKind.L
    assert classify(p("(x: M1 M2) N")) is DRuleKind.A
    with pytest.raises(NotARedex):
        classify(p("x: x"))


@given(terms())
def test_classify_exactly_on_beta_redexes(m):
    for _, t in subterms(m):
        if is_beta_redex(t):
            classify(t)
        else:
            with pytest.raises(NotARedex):
                classify(t)


def test_step_d_rules():
    assert step_d(p("(x: x) M"), ()) == Var("M")
    assert step_d(p("(x: y) M"), ()) == Var("y")
    assert step_d(p("(x: x x) N"), ()) == p("(x: x) N ((x: x) N)")


def test_rule_l_renames_captured_binder():
    r = step_d(p("(x, y: x) y"), ())
    assert isinstance(r, Abs) and r.var != "y"
    assert alpha_eq(normalize_oracle(r, 10), p("z: y"))


def test_inner_spine_select():
    assert inner_spine_select(p("(x: (y: y) x) z")) == (0, 0)
    assert inner_spine_select(p("(x: x) z")) == ()
    assert inner_spine_select(p("x: x")) is None


def test_reduce_spine_examples():
    assert reduce_spine(p("(x: (y: y) x) z"), 50) == Var("z")
    assert reduce_spine(p("x: x"), 1) == p("x: x")
    with pytest.raises(FuelExhausted):
        reduce_spine(p("(x: x x) (x: x x)"), 100)


@pytest.mark.slow
def test_reduce_spine_factorial():
    fact = load_source("FACT N4")
    n24 = load_source("N4")
    for _ in range(20):
        n24 = App(load_source("SUCC"), n24)
    got = normalize_oracle(reduce_spine(fact, 10**6), 10**6)
    assert alpha_eq(got, normalize_oracle(n24, 10**5))


def test_full_development():
    assert full_development(Var("x")) == Var("x")
    assert full_development(p("(x: x) a ((y: y) b)")) == p("a b")
    assert full_development(p("(x: x x) ((y: y) a)")) == p("a a")


def test_explify():
    assert explify(p("(x: x) a")) == Closure(Var("x"), "x", Var("a"))
    assert explify(p("x: x")) == p("x: x")
    assert explify(p("y ((x: x) a)")) == App(Var("y"), Closure(Var("x"), "x", Var("a")))


def test_x_step():
    assert x_step(Closure(Var("x"), "x", Var("a"))) == Var("a")
    got = x_step(Closure(p("y z"), "x", Var("a")))
    assert got == App(Closure(Var("y"), "x", Var("a")),
                      Closure(Var("z"), "x", Var("a")))
    assert x_step(p("x: x")) is None


def test_x_step_renames_binder():
    got = x_normalize(Closure(p("y: x y"), "x", Var("y")))
    assert alpha_eq(got, p("w: y w"))


def test_certify_examples():
    assert certify_step(p("(x: x) a"), ()).kind in ("x", "beta")
    cert = certify_step(p("(x, y: x) a"), ())
    assert cert.kind == "x" and cert.x_steps >= 1
    with pytest.raises(CertificationFailure):
        certify_step(p("z: z"), ())


def test_soundness_small_exhaustive():
    from mlc.corpus import enumerate_terms
    for m in enumerate_terms(7, ("a",)):
        try:
            nf = normalize_oracle(m, 500)
        except FuelExhausted:
            continue
        for pos in beta_redex_positions(m):
            try:
                nf2 = normalize_oracle(step_d(m, pos), 500)
            except FuelExhausted:
                continue
            assert alpha_eq(nf, nf2)


def test_spine_within_twenty_times_oracle_fuel():
    fuel = 10**3
    for m, nf in random_corpus(200, seed=11, max_size=25, fuel=fuel):
        assert alpha_eq(reduce_spine(m, 20 * fuel, eta=True), nf)


def test_x_normalization_terminates_quadratically():
    for m in random_terms(300, seed=5, max_size=20):
        t = explify(m)
        for _ in range(size(m) ** 2 + 1):
            nxt = x_step(t)
            if nxt is None:
                break
            t = nxt
        else:
            pytest.fail("x-normalization exceeded |m|^2 steps")
        assert not any(isinstance(s, Closure) for s in _xs_nodes(t))
        assert alpha_eq(t, full_development(m))


def _xs_nodes(t):
    stack = [t]
    while stack:
        s = stack.pop()
        yield s
        if isinstance(s, Abs):
            stack.append(s.body)
        elif isinstance(s, App):
            stack += [s.fun, s.arg]
        elif isinstance(s, Closure):
            stack += [s.body, s.arg]
