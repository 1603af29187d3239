"""Binary-tree input and output: a program ``λi. P`` applied to its coded input.

The input is a prefix code read only as far as reduction needs it.  Until
then it stands in the term as a placeholder variable; when a placeholder
reaches head position, exactly one production of the code grammar is
read: bit 0 gives the lambda term of X, bit 1 an application of two new
placeholders.  Bits arrive in code order, so filling a placeholder first
reads every placeholder to its left.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Union

from mlc.serial import CodeStream, MalformedCode, decode, x_lambda, x_to_term
from mlc.term import Abs, App, Term, Var

_HOLE = "%in"       # cannot come out of the parser


class LazyInput:
    """Bits consumed strictly left to right; ``cursor`` counts them."""

    def __init__(self, bits: Union[str, Iterable]):
        self._it: Iterator = iter(bits)
        self.cursor = 0
        self._holes: dict = {}      # placeholder name -> term, once read
        self._pending: list = []    # unread placeholders, next on top
        self._count = 0

    def _bit(self) -> str:
        try:
            b = str(next(self._it))
        except StopIteration:
            raise MalformedCode(f"input ended after {self.cursor} bits") from None
        if b not in ("0", "1"):
            raise MalformedCode(f"input bit {self.cursor} is {b!r}")
        self.cursor += 1
        return b

    def root(self) -> Var:
        """The placeholder for the whole input."""
        if self._count:
            raise RuntimeError("input already attached")
        v = self._new()
        self._pending.append(v.name)
        return v

    def _new(self) -> Var:
        name = f"{_HOLE}{self._count}"
        self._count += 1
        return Var(name)

    # Holes protocol, used by the code streamer
    def is_hole(self, name: str) -> bool:
        return name.startswith(_HOLE)

    def fill(self, name: str) -> Term:
        """Read productions in code order until ``name`` is known."""
        while name not in self._holes:
            if not self._pending:
                raise KeyError(name)
            p = self._pending.pop()
            if self._bit() == "0":
                self._holes[p] = x_lambda()
            else:
                left, right = self._new(), self._new()
                self._holes[p] = App(left, right)
                self._pending.append(right.name)
                self._pending.append(left.name)
        return self._holes[name]


def deserialize_trivial(code: str) -> Term:
    """The term of a complete code: X at the leaves, application at nodes."""
    return x_to_term(decode(code))


def run_program(program: Term, input: LazyInput, nbits: int,
                fuel: int, var: str = "i") -> str:
    """Up to ``nbits`` output bits of ``(λi. program) input``.

    An abstraction is taken as ``λi. Program`` itself; otherwise ``var``
    names the input variable.  Malformed input raises
    :class:`MalformedCode`; running out of fuel just ends the output.
    """
    fun = program if isinstance(program, Abs) else Abs(var, program)
    return CodeStream(App(fun, input.root()), fuel, holes=input).take(nbits)


def output_stream(program: Term, input: LazyInput, fuel: int,
                  var: str = "i") -> CodeStream:
    fun = program if isinstance(program, Abs) else Abs(var, program)
    return CodeStream(App(fun, input.root()), fuel, holes=input)


__all__ = ["LazyInput", "MalformedCode", "deserialize_trivial",
           "output_stream", "run_program"]
