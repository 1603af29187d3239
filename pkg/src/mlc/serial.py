"""Prefix codes for closed terms.

A term is compiled to S/K/I combinators by plain bracket abstraction, the
combinators are rewritten over the one-point iota basis ``X = λf. f S K``,
and the resulting unlabeled binary tree is written with the grammar
``<t> ::= 1 <t> <t> | 0``.

:func:`serialize_nf` codes the beta-eta normal form in one go.
:class:`CodeStream` produces the same bits from the left while the term is
still being reduced: only head normal forms are computed, and a subterm is
looked at only when its bits are next.  The streamed bits agree with the
batch code whenever the normal form needs no eta step.
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional, Protocol, Union

from mlc.term import (Abs, App, FuelExhausted, Term, Var, free_vars,
                      normalize_oracle, substitute)


class MalformedCode(ValueError):
    """A bit string that is not exactly one ``<t>``."""


class OpenTerm(ValueError):
    """A free variable reached the combinator stage."""


# ---------------------------------------------------------------------------
# combinatory logic

@dataclass(frozen=True)
class Comb:
    name: str               # "S", "K" or "I"

    def __str__(self) -> str:
        return self.name


S, K, I = Comb("S"), Comb("K"), Comb("I")


@dataclass(frozen=True)
class CLVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CLApp:
    fun: "CLTerm"
    arg: "CLTerm"
    fv: frozenset = field(default=frozenset(), compare=False, repr=False)

    def __str__(self) -> str:
        return cl_str(self)


CLTerm = Union[Comb, CLVar, CLApp]


def cl_app(f: CLTerm, a: CLTerm) -> CLApp:
    return CLApp(f, a, cl_free_vars(f) | cl_free_vars(a))


def cl_free_vars(c: CLTerm) -> frozenset:
    if isinstance(c, CLVar):
        return frozenset((c.name,))
    if isinstance(c, CLApp):
        return c.fv
    return frozenset()


def cl_str(c: CLTerm) -> str:
    if isinstance(c, CLApp):
        a = cl_str(c.arg)
        if isinstance(c.arg, CLApp):
            a = f"({a})"
        return f"{cl_str(c.fun)} {a}"
    return str(c)


def bracket(x: str, c: CLTerm) -> CLTerm:
    """``[x] c``: I for x itself, K c when x is absent, S otherwise."""
    if isinstance(c, CLVar) and c.name == x:
        return I
    if x not in cl_free_vars(c):
        return cl_app(K, c)
    return cl_app(cl_app(S, bracket(x, c.fun)), bracket(x, c.arg))


def to_cl(m: Term) -> CLTerm:
    """Bracket abstraction of ``m``; applied back it beta-converts to ``m``."""
    if isinstance(m, Var):
        return CLVar(m.name)
    if isinstance(m, App):
        return cl_app(to_cl(m.fun), to_cl(m.arg))
    return bracket(m.var, to_cl(m.body))


# ---------------------------------------------------------------------------
# the one-point basis

@dataclass(frozen=True)
class XLeaf:
    def __str__(self) -> str:
        return "X"


X = XLeaf()


@dataclass(frozen=True)
class XApp:
    fun: "XTerm"
    arg: "XTerm"

    def __str__(self) -> str:
        a = str(self.arg)
        return f"{self.fun} ({a})" if isinstance(self.arg, XApp) else f"{self.fun} {a}"


XTerm = Union[XLeaf, XApp]

T_I = XApp(X, X)
T_K = XApp(X, XApp(X, T_I))
T_S = XApp(X, T_K)
_BASIS = {"S": T_S, "K": T_K, "I": T_I}


def to_x(c: CLTerm) -> XTerm:
    if isinstance(c, CLVar):
        raise OpenTerm(f"free variable {c.name}")
    if isinstance(c, Comb):
        return _BASIS[c.name]
    return XApp(to_x(c.fun), to_x(c.arg))


def x_lambda() -> Term:
    """The lambda term read for a leaf X: ``λf. f S K``."""
    s = Abs("a", Abs("b", Abs("c", App(App(Var("a"), Var("c")),
                                         App(Var("b"), Var("c"))))))
    k = Abs("a", Abs("b", Var("a")))
    return Abs("f", App(App(Var("f"), s), k))


def x_to_term(x: XTerm) -> Term:
    leaf = x_lambda()
    if isinstance(x, XLeaf):
        return leaf
    return App(x_to_term(x.fun), x_to_term(x.arg))


# ---------------------------------------------------------------------------
# prefix code

def encode(x: XTerm) -> str:
    out = []
    stack = [x]
    while stack:
        t = stack.pop()
        if isinstance(t, XApp):
            out.append("1")
            stack.append(t.arg)
            stack.append(t.fun)
        else:
            out.append("0")
    return "".join(out)


def decode(bits: str) -> XTerm:
    """Parse exactly one ``<t>``; anything else is :class:`MalformedCode`."""
    if not isinstance(bits, str) or any(b not in "01" for b in bits):
        raise MalformedCode("code must be a string of 0 and 1")
    # (node, children still missing) frames
    stack: list = []
    done: Optional[XTerm] = None
    for i, b in enumerate(bits):
        if done is not None:
            raise MalformedCode(f"trailing bits after position {i}")
        if b == "1":
            stack.append([])
            continue
        t: XTerm = X
        while stack:
            kids = stack[-1]
            kids.append(t)
            if len(kids) < 2:
                break
            stack.pop()
            t = XApp(kids[0], kids[1])
        else:
            done = t
    if done is None:
        raise MalformedCode(f"incomplete code of {len(bits)} bits")
    return done


def is_complete(bits: str) -> bool:
    try:
        decode(bits)
    except MalformedCode:
        return False
    return True


_COMB_BITS = {k: encode(v) for k, v in _BASIS.items()}


def code_of_cl(c: CLTerm) -> str:
    return encode(to_x(c))


def serialize_nf(m: Term, fuel: int) -> str:
    """Code of the beta-eta normal form; raises FuelExhausted or OpenTerm."""
    nf = normalize_oracle(m, fuel)
    if free_vars(nf):
        raise OpenTerm("normal form has free variables "
                       + ", ".join(sorted(free_vars(nf))))
    return code_of_cl(to_cl(nf))


# ---------------------------------------------------------------------------
# streaming from head normal forms

class Holes(Protocol):
    """Closed subterms that are filled in only on demand (lazy input)."""

    def is_hole(self, name: str) -> bool: ...

    def fill(self, name: str) -> Term: ...


class _OutOfFuel(Exception):
    pass


class _Open(Exception):
    pass


class _Thunk:
    """A combinator tree node computed on first use.

    ``fv`` over-approximates the free variables of the node, so a variable
    missing from it is certainly absent.
    """

    __slots__ = ("fv", "make", "node", "absent")

    def __init__(self, fv: frozenset, make=None, node=None):
        self.fv = fv
        self.make = make
        self.node = node            # ("S"|"K"|"I",) | ("var", x) | ("app", f, a)
        self.absent = set()

    def force(self):
        if self.node is None:
            self.node = self.make()
            self.make = None
        return self.node


def _leaf(name: str) -> _Thunk:
    return _Thunk(frozenset(), node=(name,))


_S, _K, _I = _leaf("S"), _leaf("K"), _leaf("I")


def _app(f: _Thunk, a: _Thunk) -> _Thunk:
    return _Thunk(f.fv | a.fv, node=("app", f, a))


class CodeStream:
    """Bits of the prefix code of ``m``, produced lazily from the left.

    Iterating yields "0"/"1" characters.  Iteration stops when the code is
    complete (``complete`` is set), when the step budget runs out
    (``exhausted``) or when a free variable is met (``open``).  ``steps``
    counts beta contractions so far.
    """

    def __init__(self, m: Term, fuel: int, holes: Optional[Holes] = None):
        self.fuel = fuel
        self.steps = 0
        self.holes = holes
        self.complete = False
        self.exhausted = False
        self.open = False
        self._root = self._term(m)

    # -- head normal forms -------------------------------------------------
    def _fv(self, m: Term) -> frozenset:
        fv = free_vars(m)
        if self.holes is not None and fv:
            fv = frozenset(x for x in fv if not self.holes.is_hole(x))
        return fv

    def _hnf(self, m: Term):
        """``m`` as binders, head variable and arguments."""
        binders, args = [], []
        while True:
            if isinstance(m, App):
                args.append(m.arg)
                m = m.fun
            elif isinstance(m, Abs):
                if args:
                    if self.steps >= self.fuel:
                        raise _OutOfFuel
                    self.steps += 1
                    m = substitute(m.body, m.var, args.pop())
                else:
                    binders.append(m.var)
                    m = m.body
            elif self.holes is not None and self.holes.is_hole(m.name):
                m = self.holes.fill(m.name)
            else:
                args.reverse()
                return binders, m.name, args

    def _term(self, m: Term) -> _Thunk:
        return _Thunk(self._fv(m), make=lambda: self._build(m))

    def _build(self, m: Term):
        binders, head, args = self._hnf(m)
        c = _Thunk(frozenset((head,)), node=("var", head))
        for a in args:
            c = _app(c, self._term(a))
        for x in reversed(binders):
            c = self._bracket(x, c)
        return c.force()

    # -- lazy bracket abstraction -----------------------------------------
    def _mentions(self, t: _Thunk, x: str) -> bool:
        if x not in t.fv or x in t.absent:
            return False
        node = t.force()
        if node[0] == "var":
            found = node[1] == x
        elif node[0] == "app":
            found = self._mentions(node[1], x) or self._mentions(node[2], x)
        else:
            found = False
        if not found:
            t.absent.add(x)
        return found

    def _bracket(self, x: str, c: _Thunk) -> _Thunk:
        def make():
            node = c.force()
            if node[0] == "var" and node[1] == x:
                return _I.node
            if not self._mentions(c, x):
                return ("app", _K, c)
            return ("app", _app(_S, self._bracket(x, node[1])),
                    self._bracket(x, node[2]))
        return _Thunk(c.fv - {x}, make=make)

    # -- emission ----------------------------------------------------------
    def __iter__(self) -> Iterator[str]:
        stack = [self._root]
        try:
            while stack:
                t = stack.pop()
                node = t.force()
                kind = node[0]
                if kind == "app":
                    stack.append(node[2])
                    stack.append(node[1])
                    yield "1"
                elif kind == "var":
                    raise _Open
                else:
                    yield from _COMB_BITS[kind]
            self.complete = True
        except _OutOfFuel:
            self.exhausted = True
        except RecursionError:
            self.exhausted = True
        except _Open:
            self.open = True

    def take(self, nbits: int) -> str:
        out = []
        if nbits <= 0:
            return ""
        for b in self:
            out.append(b)
            if len(out) >= nbits:
                break
        return "".join(out)


def stream_code(m: Term, nbits: int, fuel: int,
                holes: Optional[Holes] = None) -> str:
    """Up to ``nbits`` leading bits of the code of ``m`` within ``fuel``
    beta steps.  Shorter output means the code ended or the budget ran out."""
    return CodeStream(m, fuel, holes).take(nbits)


def n_equal(a: Term, b: Term, n: int, fuel: int) -> Optional[bool]:
    """Whether the first ``n`` code bits agree; None when undecided.

    A finished code counts as fully known, so two complete codes are
    compared even when shorter than ``n``.
    """
    if n <= 0:
        return True
    sa, sb = CodeStream(a, fuel), CodeStream(b, fuel)
    ba, bb = sa.take(n), sb.take(n)
    k = min(len(ba), len(bb))
    if ba[:k] != bb[:k]:
        return False
    known_a = len(ba) >= n or sa.complete
    known_b = len(bb) >= n or sb.complete
    if known_a and known_b:
        return ba == bb
    return None


# ---------------------------------------------------------------------------
# normal form dictionary

@dataclass(frozen=True)
class Entry:
    code: str
    source: str
    nf: str
    meta: str


def _b64(s: str) -> str:
    return base64.b64encode(s.encode("utf-8")).decode("ascii")


def _unb64(s: str) -> str:
    return base64.b64decode(s.encode("ascii")).decode("utf-8")


def bits_to_hex(bits: str) -> str:
    if not bits:
        return ""
    padded = bits + "0" * (-len(bits) % 4)
    return "".join(f"{int(padded[i:i + 4], 2):x}"
                   for i in range(0, len(padded), 4))


def hex_to_bits(h: str, n: int) -> str:
    bits = "".join(f"{int(c, 16):04b}" for c in h)
    if len(bits) < n:
        raise MalformedCode("hex field shorter than bit length")
    return bits[:n]


class NfDictionary:
    """Entries keyed by the code of their normal form.

    With a ``path`` the dictionary is an append-only log of lines
    ``<bits>:<hex>\\t<source>\\t<nf>\\t<meta>`` (text fields in base64);
    on load the last record for a code wins.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._entries: dict = {}
        if path is not None and os.path.exists(path):
            with open(path, encoding="ascii") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.rstrip("\n")
                    if line:
                        self._load_record(line, lineno)

    def _load_record(self, line: str, lineno: int) -> None:
        try:
            key, src, nf, meta = line.split("\t")
            n, h = key.split(":")
            code = hex_to_bits(h, int(n))
            entry = Entry(code, _unb64(src), _unb64(nf), _unb64(meta))
        except (ValueError, UnicodeDecodeError) as exc:
            raise ValueError(f"{self.path}:{lineno}: bad record") from exc
        self._entries[code] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())

    def put(self, m: Term, meta: str = "", fuel: int = 10**6,
            source: Optional[str] = None) -> Entry:
        from mlc.lang import to_mlc
        nf = normalize_oracle(m, fuel)
        if free_vars(nf):
            raise OpenTerm("normal form has free variables")
        code = code_of_cl(to_cl(nf))
        entry = Entry(code, to_mlc(m) if source is None else source,
                      to_mlc(nf), meta)
        if self.path is not None:
            with open(self.path, "a", encoding="ascii") as fh:
                fh.write(f"{len(code)}:{bits_to_hex(code)}\t{_b64(entry.source)}"
                         f"\t{_b64(entry.nf)}\t{_b64(entry.meta)}\n")
        self._entries[code] = entry
        return entry

    def get(self, code: str) -> Optional[Entry]:
        decode(code)
        return self._entries.get(code)


def dict_put(d: NfDictionary, m: Term, meta: str = "",
             fuel: int = 10**6) -> NfDictionary:
    d.put(m, meta, fuel)
    return d


def dict_get(d: NfDictionary, code: str) -> Optional[Entry]:
    return d.get(code)


__all__ = [
    "CLApp", "CLTerm", "CLVar", "CodeStream", "Comb", "Entry", "FuelExhausted",
    "Holes", "I", "K", "cl_app", "cl_free_vars", "cl_str", "MalformedCode", "NfDictionary", "OpenTerm", "S", "T_I",
    "T_K", "T_S", "X", "XApp", "XLeaf", "XTerm", "bracket", "code_of_cl",
    "decode", "dict_get", "dict_put", "encode", "is_complete", "n_equal",
    "serialize_nf", "stream_code", "to_cl", "to_x", "x_lambda", "x_to_term",
]
