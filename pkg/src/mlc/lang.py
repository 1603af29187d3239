"""Lexer, parser and macro expander for MLC source text.

Grammar::

    <text>   ::= <term> | <assign> <text>
    <assign> ::= <ID> '=' <term> ';'
    <term>   ::= <appl> | <abstr>
    <abstr>  ::= <ID> ':' <term> | <ID> ',' <abstr>
    <appl>   ::= <atom> | <appl> <atom>
    <atom>   ::= <ID> | '(' <term> ')'

``[ ]`` and ``{ }`` group exactly like ``( )``.  A line whose first
non-blank characters are ``---`` is a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from mlc.term import Abs, App, Term, Var, free_vars

_ID = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_PUNCT = set("=;:,()[]{}")
_CLOSE = {"(": ")", "[": "]", "{": "}"}


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span


class ExpandError(Exception):
    def __init__(self, name: str):
        super().__init__(f"undefined identifier: {name}")
        self.name = name


@dataclass(frozen=True)
class Token:
    kind: str          # "id", a punctuation character, or "eof"
    text: str
    span: SourceSpan


@dataclass
class Program:
    """Macro definitions in source order plus the goal term."""

    macros: list = field(default_factory=list)
    goal: Optional[Term] = None

    def lookup(self, name: str) -> Term:
        for n, body in self.macros:
            if n == name:
                return body
        raise KeyError(name)

    def names(self) -> list:
        return [n for n, _ in self.macros]


def tokenize(source: str) -> list:
    tokens = []
    lines = source.split("\n")
    for ln, line in enumerate(lines, 1):
        if line.lstrip().startswith("---"):
            continue
        col = 0
        while col < len(line):
            ch = line[col]
            if ch.isspace():
                col += 1
                continue
            span = SourceSpan(ln, col + 1)
            m = _ID.match(line, col)
            if m:
                tokens.append(Token("id", m.group(), span))
                col = m.end()
            elif ch in _PUNCT:
                tokens.append(Token(ch, ch, span))
                col += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", span)
    last = lines[-1] if lines else ""
    eof_line = len(lines)
    tokens.append(Token("eof", "", SourceSpan(eof_line, len(last) + 1)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self, k=0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {_describe(tok)}",
                             tok.span)
        return self.next()

    def text(self, require_goal: bool) -> Program:
        prog = Program()
        seen = {}
        while True:
            if self.peek().kind == "eof" and not require_goal:
                return prog
            if self.peek().kind == "id" and self.peek(1).kind == "=":
                name_tok = self.next()
                self.next()
                if name_tok.text in seen:
                    raise ParseError(f"macro {name_tok.text} already defined",
                                     name_tok.span)
                body = self.term()
                self.expect(";")
                seen[name_tok.text] = True
                prog.macros.append((name_tok.text, body))
                continue
            prog.goal = self.term()
            self.expect("eof")
            return prog

    def term(self) -> Term:
        if self.peek().kind == "id" and self.peek(1).kind in (":", ","):
            return self.abstr()
        return self.appl()

    def abstr(self) -> Term:
        names = [self.expect("id").text]
        while self.peek().kind == ",":
            self.next()
            names.append(self.expect("id").text)
        self.expect(":")
        body = self.term()
        for n in reversed(names):
            body = Abs(n, body)
        return body

    def appl(self) -> Term:
        t = self.atom()
        while self.peek().kind in ("id", "(", "[", "{"):
            if self.peek().kind == "id" and self.peek(1).kind in (":", ","):
                tok = self.peek(1)
                raise ParseError("abstraction must be parenthesized here",
                                 tok.span)
            t = App(t, self.atom())
        return t

    def atom(self) -> Term:
        tok = self.peek()
        if tok.kind == "id":
            self.next()
            return Var(tok.text)
        if tok.kind in _CLOSE:
            self.next()
            t = self.term()
            self.expect(_CLOSE[tok.kind])
            return t
        raise ParseError(f"expected a term, found {_describe(tok)}", tok.span)


def _describe(tok: Token) -> str:
    return "end of input" if tok.kind == "eof" else repr(tok.text)


def parse(source: str, require_goal: bool = True) -> Program:
    """Parse MLC source text into a :class:`Program`."""
    return _Parser(tokenize(source)).text(require_goal)


def parse_term(source: str) -> Term:
    """Parse a single MLC term (no definitions)."""
    p = _Parser(tokenize(source))
    t = p.term()
    p.expect("eof")
    return t


# ---------------------------------------------------------------------------
# Expansion

def expand(program: Program, base: Optional[Program] = None,
           allow_free: Iterable[str] = ()) -> Term:
    """Substitute macro bodies into the goal, yielding a plain term.

    Definitions in ``base`` (usually the prelude) are visible to the
    program and may be redefined by it.  Binders shadow macros.  Any
    identifier that is neither bound, a macro, nor listed in
    ``allow_free`` raises :class:`ExpandError`.
    """
    if program.goal is None:
        raise ValueError("program has no goal term")
    env = expand_macros(base, allow_free) if base is not None else {}
    env = expand_macros(program, allow_free, env)
    return _expand_term(program.goal, env, frozenset(allow_free))


def expand_macros(program: Program, allow_free: Iterable[str] = (),
                  env: Optional[dict] = None) -> dict:
    env = dict(env or {})
    allow = frozenset(allow_free)
    for name, body in program.macros:
        env[name] = _expand_term(body, env, allow)
    return env


def _expand_term(t: Term, env: dict, allow: frozenset) -> Term:
    # only free occurrences are macro references; bodies in env are closed
    fv = free_vars(t)
    for name in _occurrence_order(t):
        if name in fv and name not in env and name not in allow:
            raise ExpandError(name)
    if not (fv & env.keys()):
        return t
    return _replace(t, env, frozenset())


def _occurrence_order(t: Term) -> list:
    out = []
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            out.append(s.name)
        elif isinstance(s, Abs):
            stack.append(s.body)
        else:
            stack.append(s.arg)
            stack.append(s.fun)
    return out


def _replace(t: Term, env: dict, bound: frozenset) -> Term:
    if isinstance(t, Var):
        if t.name not in bound and t.name in env:
            return env[t.name]
        return t
    if not (free_vars(t) & env.keys()):
        return t
    if isinstance(t, Abs):
        return Abs(t.var, _replace(t.body, env, bound | {t.var}))
    return App(_replace(t.fun, env, bound), _replace(t.arg, env, bound))


# ---------------------------------------------------------------------------
# Prelude

def prelude_source() -> str:
    return resources.files("mlc").joinpath("prelude.mlc").read_text("utf-8")


_PRELUDE: Optional[Program] = None


def prelude() -> Program:
    global _PRELUDE
    if _PRELUDE is None:
        _PRELUDE = parse(prelude_source(), require_goal=False)
    return _PRELUDE


def prelude_term(name: str) -> Term:
    """Closed expansion of a single prelude macro."""
    return expand_macros(prelude())[name]


def load_source(source: str, use_prelude: bool = True,
                allow_free: Iterable[str] = ()) -> Term:
    """Parse and expand ``source``, with the prelude in scope by default."""
    return expand(parse(source), prelude() if use_prelude else None,
                  allow_free)


# ---------------------------------------------------------------------------
# Printing back to MLC syntax

def to_mlc(t: Term) -> str:
    out = []
    _emit(t, out, top=True)
    return "".join(out)


def _emit(t, out, top=False, arg=False):
    if isinstance(t, Var):
        out.append(t.name)
    elif isinstance(t, Abs):
        names = [t.var]
        body = t.body
        while isinstance(body, Abs):
            names.append(body.var)
            body = body.body
        if not top:
            out.append("(")
        out.append(", ".join(names) + ": ")
        _emit(body, out, top=True)
        if not top:
            out.append(")")
    else:
        if arg:
            out.append("(")
        _emit(t.fun, out)
        out.append(" ")
        _emit(t.arg, out, arg=True)
        if arg:
            out.append(")")


def program_to_mlc(p: Program) -> str:
    lines = [f"{name} = {to_mlc(body)};" for name, body in p.macros]
    if p.goal is not None:
        lines.append(to_mlc(p.goal))
    return "\n".join(lines) + "\n"
