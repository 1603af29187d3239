import pytest
from hypothesis import given, strategies as st

from conftest import closed_terms
from mlc.corpus import enumerate_terms, random_corpus
from mlc.lang import load_source, parse_term as p
from mlc.serial import (CLApp, CodeStream, I, K, MalformedCode, NfDictionary,
                        OpenTerm, S, T_I, T_K, T_S, X, XApp, bits_to_hex,
                        cl_str, code_of_cl, decode, dict_get, dict_put, encode,
                        hex_to_bits, is_complete, n_equal, serialize_nf,
                        stream_code, to_cl, to_x, x_lambda, x_to_term)
from mlc.term import (App, FuelExhausted, Var, alpha_eq, canonical, free_vars,
                      normalize_oracle, step_normal)

Y_TF = "Y (f: [z: z T (z: z F f)])"
Y_TT = "Y (f: [z: z T (z: z T f)])"


def test_to_cl_examples():
    assert to_cl(p("x: x")) == I
    assert cl_str(to_cl(p("x: x x"))) == "S I I"
    t = to_cl(p("x, y: x"))
    applied = App(App(x_to_term(to_x(t)), Var("a")), Var("b"))
    assert normalize_oracle(applied, 1000) == Var("a")


def test_basis_constants():
    a, b, c = Var("a"), Var("b"), Var("c")
    assert normalize_oracle(App(x_to_term(T_I), a), 100) == a
    assert normalize_oracle(App(App(x_to_term(T_K), a), b), 100) == a
    got = normalize_oracle(App(App(App(x_to_term(T_S), a), b), c), 100)
    assert got == App(App(a, c), App(b, c))
    assert to_x(I) == T_I and to_x(K) == T_K and to_x(S) == T_S
    assert to_x(CLApp(S, I)) == XApp(T_S, T_I)


def test_encode_examples():
    assert encode(X) == "0"
    assert encode(XApp(X, XApp(X, X))) == "10100"
    assert encode(XApp(XApp(X, X), X)) == "11000"


def test_decode_errors():
    for bad in ("", "1", "10", "11", "0 ", "2", "00"):
        with pytest.raises(MalformedCode):
            decode(bad)
    assert not is_complete("10") and is_complete("100")


@given(st.recursive(st.just(X), lambda s: st.builds(XApp, s, s), max_leaves=40))
def test_codec_round_trip(x):
    code = encode(x)
    assert decode(code) == x
    assert code.count("0") == code.count("1") + 1


def test_serialize_examples():
    assert serialize_nf(p("x: x"), 10) == serialize_nf(p("y: y"), 10)
    assert serialize_nf(p("(x: x) (y: y)"), 10) == serialize_nf(p("z: z"), 10)
    with pytest.raises(OpenTerm):
        serialize_nf(p("x: y"), 10)
    with pytest.raises(FuelExhausted):
        serialize_nf(p("(x: x x) (x: x x)"), 100)


@pytest.mark.slow
def test_factorial_code_is_n24():
    n24 = load_source("N4")
    for _ in range(20):
        n24 = App(load_source("SUCC"), n24)
    assert serialize_nf(load_source("FACT N4"), 10**6) == serialize_nf(n24, 10**6)


@given(closed_terms())
def test_alpha_invariance(m):
    try:
        code = serialize_nf(m, 300)
    except FuelExhausted:
        return
    assert serialize_nf(canonical(m, prefix="q"), 300) == code


def test_conversion_invariance():
    for m, nf in random_corpus(300, seed=4, max_size=20):
        assert serialize_nf(step_normal(m), 10**4) == serialize_nf(m, 10**4)


def test_to_x_is_faithful_small_terms():
    a, b = Var("%a"), Var("%b")
    checked = 0
    for m in enumerate_terms(8):
        try:
            want = normalize_oracle(App(App(m, a), b), 200)
        except FuelExhausted:
            continue
        got = normalize_oracle(App(App(x_to_term(to_x(to_cl(m))), a), b), 10**4)
        assert alpha_eq(got, want)
        checked += 1
    assert checked > 500


def test_case_one_fixture():
    assert "11" + encode(T_S) == "11101010100"
    assert stream_code(p("x: x x"), 11, 100) == "11101010100"


def test_stream_is_prefix_of_full_code():
    for m in ["x: x x", "(x: x) (y: y)", "x, y: y x", "FACT N2"]:
        t = load_source(m)
        full = serialize_nf(t, 10**5)
        for n in (0, 1, 5, 17, len(full) + 3):
            assert full.startswith(stream_code(t, n, 10**5))
        assert stream_code(t, len(full) + 3, 10**5) == full


def test_stream_flags():
    s = CodeStream(p("x: x"), 100)
    assert s.take(50) == "100" and s.complete
    s = CodeStream(p("(x: x x) (x: x x)"), 50)
    assert s.take(10) == "" and s.exhausted
    s = CodeStream(p("x: y"), 50)
    s.take(10)
    assert s.open


def test_stream_infinite_list():
    t = load_source(Y_TF)
    assert len(stream_code(t, 64, 10**4)) == 64


def test_n_equal():
    assert n_equal(p("x: x x"), p("(x: x x) (x: x x)"), 0, 10) is True
    assert n_equal(p("x: x"), p("y: y"), 8, 100) is True
    a, b = load_source(Y_TF), load_source(Y_TT)
    bits_a, bits_b = stream_code(a, 200, 10**4), stream_code(b, 200, 10**4)
    first = next(i for i in range(200) if bits_a[i] != bits_b[i])
    assert n_equal(a, b, first, 10**4) is True
    assert n_equal(a, b, first + 1, 10**4) is False
    omega = p("(x: x x) (x: x x)")
    assert n_equal(omega, omega, 1, 100) is None


def test_dictionary_in_memory():
    d = NfDictionary()
    assert dict_get(d, "100") is None
    dict_put(d, p("x: x"))
    dict_put(d, p("(y: y) (z: z)"))
    assert len(d) == 1
    code = serialize_nf(p("x: x"), 10)
    assert dict_get(d, code).nf == "z: z"  # last record wins
    with pytest.raises(MalformedCode):
        dict_get(d, "11")
    with pytest.raises(FuelExhausted):
        dict_put(d, p("(x: x x) (x: x x)"), fuel=100)
    assert len(d) == 1


def test_dictionary_log(tmp_path):
    path = str(tmp_path / "nf.dict")
    d = NfDictionary(path)
    d.put(load_source("T"), meta="first")
    d.put(load_source("TRUE"), meta="second")
    again = NfDictionary(path)
    assert len(again) == 1
    entry = again.get(serialize_nf(load_source("T"), 10))
    assert entry.meta == "second" and entry.nf == "first, second: first"
    assert len(open(path).read().splitlines()) == 2


def test_hex_helpers():
    for bits in ("0", "100", "11101010100", "1" * 9 + "0" * 10):
        assert hex_to_bits(bits_to_hex(bits), len(bits)) == bits


def test_x_lambda_is_closed():
    assert free_vars(x_lambda()) == frozenset()
    assert code_of_cl(I) == encode(T_I)
