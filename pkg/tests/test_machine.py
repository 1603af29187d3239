import pytest

from mlc.corpus import random_corpus
from mlc.lang import load_source, parse_term as p
from mlc.machine import (ABS, USE, CycleDetected, HeapMachine, OutOfMemory,
                         load, run_machine)
from mlc.term import FuelExhausted, Var, alpha_eq, find_redex, pretty

OMEGA = "(x: x x) (x: x x)"


def payloads(m):
    return [pretty(m.extract(a)) for a in m.ring_payloads()]


def run_to_done(m, fuel=10**5):
    kinds = []
    for _ in range(fuel):
        out = m.step()
        kinds.append((out.kind, out.rule))
        if out.kind == "done":
            return kinds
    raise AssertionError("did not finish")


def test_load_ring():
    assert len(load(p("(x: x) y"), 64).ring_payloads()) == 1
    assert load(p("x: x"), 64).ring_payloads() == []
    assert audit_ok(load(p("x: x"), 64))


def test_load_out_of_memory():
    with pytest.raises(OutOfMemory):
        load(load_source("FACT N4"), 10)


def test_prepare_redex_list_order():
    m = load(p("((x: x) a) b"), 64)
    assert payloads(m) == ["(\\x. x) a", "(\\x. x) a b"]


def test_prepare_redex_list_eta():
    m = load(p("x: y x"), 64)
    assert m.ring_tasks()[0][1] == "norm"
    assert payloads(m) == ["\\x. y x"]
    out = m.step()
    assert (out.kind, out.rule) == ("applied", "eta")


def test_step_identity():
    m = load(p("(x: x) y"), 64)
    out = m.step()
    assert (out.kind, out.rule) == ("applied", "I")
    assert m.extract() == Var("y")


def test_step_application_rule():
    m = load(p("(x: a x x) N"), 64)
    out = m.step()
    assert (out.kind, out.rule) == ("applied", "A")
    assert alpha_eq(m.extract(), p("(x: a x) N ((x: x) N)"))
    assert m.ring_payloads()


def test_stale_entries_are_dropped():
    m = load(p("x: y ((z: z) x)"), 64)
    kinds = run_to_done(m)
    assert kinds == [("applied", "I"), ("stale", None), ("applied", "eta"),
                     ("done", None)]
    assert m.extract() == Var("y")


def test_constant_rule_frees_argument():
    m = load(p("(x: y) (a b c)"), 64)
    before = m.audit().free_blocks
    out = m.step()
    assert out.rule == "C"
    run_to_done(m)
    report = m.audit()
    assert report.free_blocks > before
    assert report.live_blocks == 2 and report.list_blocks == 0
    assert report.lossless


def test_gc_noop_when_nothing_pending():
    m = load(p("x: x"), 64)
    assert m.gc_collect() == 0


def test_run_examples():
    assert run_machine(p("(x: x) y"), 10, 64) == Var("y")
    with pytest.raises(FuelExhausted):
        run_machine(p(OMEGA), 1000, 1 << 12)


def test_extract_round_trip():
    m = load(p("x: x x"), 64)
    assert alpha_eq(m.extract(), p("x: x x"))


def test_extract_detects_cycle():
    m = load(p("x: x x"), 64)
    # point the body slot of the abstraction back at the abstraction
    lam = m.root
    assert m.role[lam] == ABS
    body_cell = m.c1[lam]
    assert m.role[body_cell] == USE
    m.c3[body_cell] = lam
    with pytest.raises(CycleDetected):
        m.extract()


def test_audit_every_step_on_corpus():
    for t, nf in random_corpus(60, seed=9, max_size=20):
        m = HeapMachine(1 << 12, audit_each_step=True)
        m.load(t)
        r = m.run(10**5)
        assert alpha_eq(r, nf), pretty(t)
        assert find_redex(r) is None


def test_snapshot_lists_live_blocks():
    m = load(p("x: x x"), 64)
    lines = m.snapshot().splitlines()
    assert len(lines) == m.audit().live_blocks + m.audit().list_blocks
    assert any(" AbsNode " in ln for ln in lines)


def test_heap_too_small():
    with pytest.raises(ValueError):
        HeapMachine(2)


def audit_ok(m):
    r = m.audit()
    return r.lossless and r.use_lists_consistent and r.free_chain_terminates


def test_each_step_preserves_the_normal_form():
    from mlc.term import normalize_oracle
    for t, nf in random_corpus(40, seed=21, max_size=16):
        m = load(t, 1 << 12)
        while m.step().kind != "done":
            assert alpha_eq(normalize_oracle(m.extract(), 10**4), nf)
