"""Pure untyped lambda terms and the normal-order reference reducer.

Terms are immutable trees built from :class:`Var`, :class:`Abs` and
:class:`App`.  Structural equality (``==``) is textual; use
:func:`alpha_eq` for equality up to renaming of bound variables.

Positions are tuples of child indices: ``0`` selects the body of an
abstraction or the function of an application, ``1`` selects the
argument of an application.
"""

from __future__ import annotations

import enum
import itertools
import re
import sys
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100000))

Position = tuple


class FuelExhausted(Exception):
    """A reducer ran out of its step budget before reaching a normal form."""

    def __init__(self, fuel: int, partial: Optional["Term"] = None):
        super().__init__(f"no normal form within {fuel} steps")
        self.fuel = fuel
        self.partial = partial


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    _fv: Optional[frozenset] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, slots=True)
class Abs:
    var: str
    body: "Term"
    _fv: Optional[frozenset] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, slots=True)
class App:
    fun: "Term"
    arg: "Term"
    _fv: Optional[frozenset] = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return pretty(self)


Term = Union[Var, Abs, App]


class RedexKind(enum.Enum):
    BETA = "beta"
    ETA = "eta"


def apps(head: Term, *args: Term) -> Term:
    """Left-associated application ``head a1 a2 ...``."""
    for a in args:
        head = App(head, a)
    return head


def lams(names: str, body: Term) -> Term:
    """Nested abstraction over whitespace-separated ``names``."""
    for n in reversed(names.split()):
        body = Abs(n, body)
    return body


# ---------------------------------------------------------------------------
# Free variables, size, renaming

def free_vars(m: Term) -> frozenset:
    fv = m._fv
    if fv is not None:
        return fv
    # post-order without recursion; deep spines are common
    stack = [m]
    while stack:
        t = stack[-1]
        if t._fv is not None:
            stack.pop()
            continue
        if isinstance(t, Var):
            object.__setattr__(t, "_fv", frozenset((t.name,)))
            stack.pop()
        elif isinstance(t, Abs):
            if t.body._fv is None:
                stack.append(t.body)
                continue
            object.__setattr__(t, "_fv", t.body._fv - {t.var})
            stack.pop()
        else:
            if t.fun._fv is None:
                stack.append(t.fun)
                continue
            if t.arg._fv is None:
                stack.append(t.arg)
                continue
            object.__setattr__(t, "_fv", t.fun._fv | t.arg._fv)
            stack.pop()
    return m._fv


def size(m: Term) -> int:
    """Number of constructors (variables, abstractions, applications)."""
    n = 0
    stack = [m]
    while stack:
        t = stack.pop()
        n += 1
        if isinstance(t, Abs):
            stack.append(t.body)
        elif isinstance(t, App):
            stack.append(t.fun)
            stack.append(t.arg)
    return n


def subterms(m: Term) -> Iterator[tuple[Position, Term]]:
    """All (position, subterm) pairs in pre-order, left to right."""
    stack = [((), m)]
    while stack:
        pos, t = stack.pop()
        yield pos, t
        if isinstance(t, Abs):
            stack.append((pos + (0,), t.body))
        elif isinstance(t, App):
            stack.append((pos + (1,), t.arg))
            stack.append((pos + (0,), t.fun))


def subterm_at(m: Term, pos: Position) -> Term:
    for i in pos:
        if isinstance(m, Abs) and i == 0:
            m = m.body
        elif isinstance(m, App):
            m = m.arg if i else m.fun
        else:
            raise IndexError(f"no subterm at {format_position(pos)}")
    return m


def replace_at(m: Term, pos: Position, new: Term) -> Term:
    """Return ``m`` with the subterm at ``pos`` replaced by ``new``."""
    path = []
    for i in pos:
        path.append(m)
        if isinstance(m, Abs) and i == 0:
            m = m.body
        elif isinstance(m, App):
            m = m.arg if i else m.fun
        else:
            raise IndexError(f"no subterm at {format_position(pos)}")
    for parent, i in zip(reversed(path), reversed(pos)):
        if isinstance(parent, Abs):
            new = Abs(parent.var, new)
        elif i:
            new = App(parent.fun, new)
        else:
            new = App(new, parent.arg)
    return new


def format_position(pos: Position) -> str:
    return "".join(map(str, pos)) if pos else "e"


_SUFFIX = re.compile(r"^(.*?)(\d*)$")


def fresh_name(base: str, avoid) -> str:
    """Smallest numeric-suffixed variant of ``base`` not in ``avoid``."""
    stem = _SUFFIX.match(base).group(1) or base
    for k in itertools.count(1):
        cand = f"{stem}{k}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def all_names(m: Term) -> set:
    names = set()
    for _, t in subterms(m):
        if isinstance(t, Var):
            names.add(t.name)
        elif isinstance(t, Abs):
            names.add(t.var)
    return names


# ---------------------------------------------------------------------------
# Substitution and alpha-equivalence

def substitute(m: Term, x: str, p: Term) -> Term:
    """Capture-avoiding ``m[x := p]``."""
    if x not in free_vars(m):
        return m
    return _subst(m, x, p, free_vars(p))


def _subst(m: Term, x: str, p: Term, fvp: frozenset) -> Term:
    if x not in free_vars(m):
        return m
    if isinstance(m, Var):
        return p
    if isinstance(m, App):
        return App(_subst(m.fun, x, p, fvp), _subst(m.arg, x, p, fvp))
    y, body = m.var, m.body
    if y in fvp:
        z = fresh_name(y, fvp | free_vars(body) | {x})
        body = _subst(body, y, Var(z), frozenset((z,)))
        y = z
    return Abs(y, _subst(body, x, p, fvp))


def alpha_eq(m: Term, n: Term) -> bool:
    """Equality up to consistent renaming of bound variables."""
    # compare with de Bruijn levels in two parallel environments
    stack = [(m, n, {}, {}, 0)]
    while stack:
        a, b, ea, eb, depth = stack.pop()
        if isinstance(a, Var):
            if not isinstance(b, Var):
                return False
            la, lb = ea.get(a.name), eb.get(b.name)
            if la is None and lb is None:
                if a.name != b.name:
                    return False
            elif la != lb:
                return False
        elif isinstance(a, Abs):
            if not isinstance(b, Abs):
                return False
            stack.append((a.body, b.body, {**ea, a.var: depth},
                          {**eb, b.var: depth}, depth + 1))
        else:
            if not isinstance(b, App):
                return False
            stack.append((a.arg, b.arg, ea, eb, depth))
            stack.append((a.fun, b.fun, ea, eb, depth))
    return True


def canonical(m: Term, prefix: str = "v") -> Term:
    """Rename every binder to ``prefix<k>`` (k = binding depth).

    Two terms are alpha-equivalent iff their canonical forms are equal,
    provided ``prefix`` does not clash with a free variable.
    """
    avoid = free_vars(m)
    while any(v.startswith(prefix) for v in avoid):
        prefix += "_"

    def go(t, env, depth):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, Abs):
            name = f"{prefix}{depth}"
            return Abs(name, go(t.body, {**env, t.var: name}, depth + 1))
        return App(go(t.fun, env, depth), go(t.arg, env, depth))

    return go(m, {}, 0)


# ---------------------------------------------------------------------------
# Redexes and the one-step normal-order function

def is_beta_redex(m: Term) -> bool:
    return isinstance(m, App) and isinstance(m.fun, Abs)


def is_eta_redex(m: Term) -> bool:
    return (isinstance(m, Abs) and isinstance(m.body, App)
            and isinstance(m.body.arg, Var) and m.body.arg.name == m.var
            and m.var not in free_vars(m.body.fun))


def redex_kind(m: Term) -> Optional[RedexKind]:
    # a node is never both: beta redexes are applications, eta redexes
    # abstractions; the eta test runs first all the same
    if is_eta_redex(m):
        return RedexKind.ETA
    if is_beta_redex(m):
        return RedexKind.BETA
    return None


def contract(m: Term) -> Term:
    """Contract ``m``, which must itself be a beta or eta redex."""
    if is_eta_redex(m):
        return m.body.fun
    if is_beta_redex(m):
        return substitute(m.fun.body, m.fun.var, m.arg)
    raise ValueError(f"not a redex: {pretty(m)}")


def find_redex(m: Term) -> Optional[tuple[Position, RedexKind]]:
    """Leftmost-outermost beta/eta redex, or None for a normal form."""
    for pos, t in subterms(m):
        kind = redex_kind(t)
        if kind is not None:
            return pos, kind
    return None


def has_redex(m: Term) -> bool:
    return find_redex(m) is not None


def step_normal(m: Term) -> Term:
    """One step of normal-order beta-eta reduction.

    Follows the five defining clauses directly: a variable is fixed, a
    redex is contracted in place, an abstraction reduces its body, and an
    application reduces its function part if that contains any redex and
    its argument otherwise.
    """
    if isinstance(m, Var):
        return m
    if redex_kind(m) is not None:
        return contract(m)
    if isinstance(m, Abs):
        return Abs(m.var, step_normal(m.body))
    if has_redex(m.fun):
        return App(step_normal(m.fun), m.arg)
    return App(m.fun, step_normal(m.arg))


def normalize_stepwise(m: Term, fuel: int) -> Term:
    """Iterate :func:`step_normal` to its fixpoint (slow, literal)."""
    for _ in range(fuel):
        if find_redex(m) is None:
            return m
        m = step_normal(m)
    if find_redex(m) is None:
        return m
    raise FuelExhausted(fuel, m)


def normalize_oracle(m: Term, fuel: int) -> Term:
    """Beta-eta normal form of ``m`` or :class:`FuelExhausted`.

    Beta-normalizes in leftmost-outermost order (head reduction, then the
    arguments left to right, then abstraction bodies) and eta-reduces the
    result.  Eta contraction never creates a beta redex, so the output is
    the beta-eta normal form.  Each contraction of either kind costs one
    unit of fuel.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    budget = [fuel]
    try:
        nf = _beta_nf(m, budget)
    except _OutOfFuel:
        raise FuelExhausted(fuel) from None
    except RecursionError:
        raise FuelExhausted(fuel) from None
    return eta_normalize(nf, budget, fuel)


def normalize_beta(m: Term, fuel: int) -> Term:
    """Beta normal form only (leftmost-outermost), no eta pass."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    try:
        return _beta_nf(m, [fuel])
    except (_OutOfFuel, RecursionError):
        raise FuelExhausted(fuel) from None


class _OutOfFuel(Exception):
    pass


def _beta_nf(m: Term, budget: list) -> Term:
    args = []
    while True:
        if isinstance(m, App):
            args.append(m.arg)
            m = m.fun
        elif isinstance(m, Abs) and args:
            if budget[0] <= 0:
                raise _OutOfFuel
            budget[0] -= 1
            m = substitute(m.body, m.var, args.pop())
        else:
            break
    if isinstance(m, Abs):
        m = Abs(m.var, _beta_nf(m.body, budget))
    for a in reversed(args):
        m = App(m, _beta_nf(a, budget))
    return m


def eta_normalize(m: Term, budget: Optional[list] = None,
                  fuel: int = 0) -> Term:
    """Contract every eta redex bottom-up (the input should be beta-normal)."""
    if isinstance(m, Var):
        return m
    if isinstance(m, App):
        f = eta_normalize(m.fun, budget, fuel)
        a = eta_normalize(m.arg, budget, fuel)
        return m if f is m.fun and a is m.arg else App(f, a)
    body = eta_normalize(m.body, budget, fuel)
    if (isinstance(body, App) and isinstance(body.arg, Var)
            and body.arg.name == m.var and m.var not in free_vars(body.fun)):
        if budget is not None:
            if budget[0] <= 0:
                raise FuelExhausted(fuel)
            budget[0] -= 1
        return body.fun
    return m if body is m.body else Abs(m.var, body)


def normalize_innermost(m: Term, fuel: int) -> Term:
    """Rightmost-innermost beta-eta normalization (confluence cross-check)."""
    budget = [fuel]

    def go(t):
        while True:
            if isinstance(t, Abs):
                t2 = Abs(t.var, go(t.body))
            elif isinstance(t, App):
                a = go(t.arg)
                t2 = App(go(t.fun), a)
            else:
                return t
            if redex_kind(t2) is None:
                return t2
            if budget[0] <= 0:
                raise FuelExhausted(fuel)
            budget[0] -= 1
            t = contract(t2)

    try:
        return go(m)
    except RecursionError:
        raise FuelExhausted(fuel) from None


# ---------------------------------------------------------------------------
# Canonical text rendering: ``x``, ``\x. M``, ``M N``

def pretty(m: Term) -> str:
    out = []
    _pp(m, out, False, False)
    return "".join(out)


def _pp(m, out, paren_abs, paren_app):
    # paren_abs: an abstraction here must be bracketed (something follows)
    # paren_app: an application here must be bracketed (argument slot)
    if isinstance(m, Var):
        out.append(m.name)
    elif isinstance(m, Abs):
        if paren_abs or paren_app:
            out.append("(")
        out.append("\\" + m.var + ". ")
        _pp(m.body, out, False, False)
        if paren_abs or paren_app:
            out.append(")")
    else:
        if paren_app:
            out.append("(")
        _pp(m.fun, out, True, False)
        out.append(" ")
        _pp(m.arg, out, paren_abs and not paren_app, True)
        if paren_app:
            out.append(")")
