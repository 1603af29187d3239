import hashlib

import pytest
from hypothesis import given

from conftest import terms
from mlc.lang import (ExpandError, ParseError, expand, load_source, parse,
                      parse_term, prelude, prelude_source, prelude_term,
                      program_to_mlc, to_mlc)
from mlc.term import Abs, App, Var, alpha_eq, free_vars, normalize_oracle

# frozen: any edit to prelude.mlc must update this on purpose
PRELUDE_SHA256 = \
    "3d97e311f62a34f67166642d5c00f79fcd8557ffe29f6fbe4ef2d42822b232ae"

PRELUDE_GOALS = ["I", "TRUE", "FALSE", "AND", "OR", "NOT", "LIST", "HEAD",
                 "TAIL", "NIL", "N4", "SUCC", "PRED", "ZERO", "Y", "PLUS",
                 "MULT", "FACT", "FACT N4", "T", "F", "PAIR", "SUCCN",
                 "PREDN", "ZEROTEST"]


def test_parse_program():
    prog = parse("I = x: x;\nI")
    assert prog.macros == [("I", Abs("x", Var("x")))]
    assert prog.goal == Var("I")


def test_multi_binder():
    t = parse_term("first, second: first")
    assert t == Abs("first", Abs("second", Var("first")))


def test_missing_body_position():
    with pytest.raises(ParseError) as exc:
        parse("x:")
    assert (exc.value.span.line, exc.value.span.column) == (1, 3)
    assert str(exc.value).startswith("1:3")


def test_precedence():
    # binders are comma separated; an application cannot start an abstraction
    assert parse_term("a, b: c d") == Abs("a", Abs("b", App(Var("c"), Var("d"))))
    for bad in ("a b: c d", "f x: y"):
        with pytest.raises(ParseError):
            parse_term(bad)


def test_brackets_interchangeable_and_matched():
    assert parse_term("a [b c] {d}") == parse_term("a (b c) (d)")
    with pytest.raises(ParseError):
        parse_term("(a]")


def test_comment_lines_ignored():
    prog = parse("--- a comment\n  --- another\nI = x: x;\nI")
    assert prog.macros[0][0] == "I"


def test_duplicate_macro_rejected():
    with pytest.raises(ParseError):
        parse("I = x: x;\nI = y: y;\nI")


def test_expand():
    assert expand(parse("I = x: x;\nI")) == Abs("x", Var("x"))
    with pytest.raises(ExpandError) as exc:
        load_source("UNDEFINED")
    assert exc.value.name == "UNDEFINED"


def test_binders_shadow_macros():
    assert load_source("I: I") == Abs("I", Var("I"))


def test_prelude_lookups():
    assert prelude_term("TRUE") == Abs("first", Abs("second", Var("first")))
    a = Abs("self", Abs("func", App(Var("func"),
            App(App(Var("self"), Var("self")), Var("func")))))
    assert prelude_term("Y") == App(a, a)


def test_successor_of_zero():
    nf = normalize_oracle(load_source("SUCCN NZERO"), 100)
    assert alpha_eq(nf, parse_term("z: z (x, y: y) (x: x)"))


@pytest.mark.parametrize("goal", PRELUDE_GOALS)
def test_prelude_goals_are_closed(goal):
    assert free_vars(load_source(goal)) == frozenset()


def test_prelude_stable():
    text = prelude_source()
    assert hashlib.sha256(text.encode()).hexdigest() == PRELUDE_SHA256
    assert len(prelude().macros) == 35


@given(terms())
def test_print_parse_round_trip(m):
    assert alpha_eq(parse_term(to_mlc(m)), m)


def test_program_round_trip():
    text = program_to_mlc(prelude())
    again = parse(text + "\nI", require_goal=True)
    assert [n for n, _ in again.macros] == [n for n, _ in prelude().macros]
    for (_, a), (_, b) in zip(again.macros, prelude().macros):
        assert alpha_eq(a, b)
