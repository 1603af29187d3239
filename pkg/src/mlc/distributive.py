"""Distributive beta reduction, the inner-spine strategy and its projections.

Beta reduction is replaced by four local rules chosen by the shape of the
abstraction body in a redex ``(\\x. B) N``:

* I: ``(\\x. x) N -> N``
* C: ``(\\x. y) N -> y``
* L: ``(\\x. \\y. M) N -> \\y. (\\x. M) N``
* A: ``(\\x. M1 M2) N -> (\\x. M1) N ((\\x. M2) N)``

The inner-spine strategy always contracts the deepest redex on the head
spine.  :func:`certify_step` checks each such step against the full
development (``full_development``) and the explicit-substitution image
(``explify``).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Union

from mlc.term import (
    Abs, App, FuelExhausted, Position, Term, Var, alpha_eq, format_position,
    free_vars, fresh_name, is_beta_redex, replace_at, size, substitute,
    subterm_at, subterms, eta_normalize,
)


class DRuleKind(enum.Enum):
    I = "I"
    C = "C"
    L = "L"
    A = "A"


class NotARedex(ValueError):
    pass


class CertificationFailure(Exception):
    pass


def classify(redex: Term) -> DRuleKind:
    if not is_beta_redex(redex):
        raise NotARedex(f"not a beta redex: {redex}")
    lam = redex.fun
    body = lam.body
    if isinstance(body, Var):
        return DRuleKind.I if body.name == lam.var else DRuleKind.C
    if isinstance(body, Abs):
        return DRuleKind.L
    return DRuleKind.A


def contract_d(redex: Term) -> tuple[Term, DRuleKind]:
    """Apply the distributive rule matching ``redex``."""
    kind = classify(redex)
    lam, n = redex.fun, redex.arg
    x, body = lam.var, lam.body
    if kind is DRuleKind.I:
        return n, kind
    if kind is DRuleKind.C:
        return body, kind
    if kind is DRuleKind.A:
        return App(App(Abs(x, body.fun), n), App(Abs(x, body.arg), n)), kind
    y, m = body.var, body.body
    if y == x or y in free_vars(n):
        z = fresh_name(y, free_vars(n) | free_vars(m) | {x})
        m = substitute(m, y, Var(z))
        y = z
    return Abs(y, App(Abs(x, m), n)), kind


def step_d(m: Term, pos: Position) -> Term:
    return replace_at(m, pos, contract_d(subterm_at(m, pos))[0])


def beta_redex_positions(m: Term) -> list:
    return [p for p, t in subterms(m) if is_beta_redex(t)]


# ---------------------------------------------------------------------------
# Inner-spine strategy

def spine_redexes(m: Term) -> list:
    """Positions of beta redexes on the head spine, outermost first."""
    out = []
    pos = ()
    while True:
        if isinstance(m, Abs):
            m = m.body
        elif isinstance(m, App):
            if isinstance(m.fun, Abs):
                out.append(pos)
            m = m.fun
        else:
            return out
        pos = pos + (0,)


def hnf_arguments(m: Term) -> list:
    """(position, argument) pairs of a spine with a variable head."""
    pos = ()
    while isinstance(m, Abs):
        m = m.body
        pos += (0,)
    args = []
    while isinstance(m, App):
        args.append(m.arg)
        m = m.fun
    n = len(args)
    return [(pos + (0,) * (n - 1 - i) + (1,), a)
            for i, a in enumerate(reversed(args))]


def inner_spine_select(m: Term) -> Optional[Position]:
    """Deepest spine redex; once the spine is redex-free, the first
    argument (left to right) that still contains a redex, recursively."""
    spine = spine_redexes(m)
    if spine:
        return spine[-1]
    for pos, arg in hnf_arguments(m):
        sub = inner_spine_select(arg)
        if sub is not None:
            return pos + sub
    return None


def extended_spine_redexes(m: Term) -> list:
    """Spine redexes, or failing those the extended spines of the arguments."""
    spine = spine_redexes(m)
    if spine:
        return spine
    out = []
    for pos, arg in hnf_arguments(m):
        out.extend(pos + p for p in extended_spine_redexes(arg))
    return out


TraceFn = Callable[[int, DRuleKind, Position, Term], None]


def reduce_spine(m: Term, fuel: int, eta: bool = False,
                 trace: Optional[TraceFn] = None) -> Term:
    """Normalize ``m`` with distributive steps under the inner-spine strategy.

    Returns the beta-normal form; with ``eta=True`` the result is then
    eta-reduced (each eta contraction also costs fuel).  ``trace`` receives
    ``(step, rule, position, term)`` after each step and forces the slow
    whole-term stepper.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if trace is not None:
        nf, used = _reduce_traced(m, fuel, trace)
        budget = [fuel - used]
    else:
        budget = [fuel]
        try:
            nf = _nf(m, budget)
        except (_OutOfFuel, RecursionError):
            raise FuelExhausted(fuel) from None
    if eta:
        nf = eta_normalize(nf, budget, fuel)
    return nf


def _reduce_traced(m, fuel, trace):
    for k in range(fuel):
        pos = inner_spine_select(m)
        if pos is None:
            return m, k
        kind = classify(subterm_at(m, pos))
        m = step_d(m, pos)
        trace(k + 1, kind, pos, m)
    if inner_spine_select(m) is None:
        return m, fuel
    raise FuelExhausted(fuel, m)


class _OutOfFuel(Exception):
    pass


def _nf(t: Term, budget: list) -> Term:
    t = _hnf(t, budget)
    lams = []
    while isinstance(t, Abs):
        lams.append(t.var)
        t = t.body
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    for a in reversed(args):
        t = App(t, _nf(a, budget))
    for v in reversed(lams):
        t = Abs(v, t)
    return t


def _hnf(t: Term, budget: list) -> Term:
    # Zipper over the head spine.  frames[k] is ("abs", var) or
    # ("fun", arg); the node at depth k+1 is an abstraction exactly when
    # frames[k+1] is an "abs" frame, and redex_at lists the depths k whose
    # "fun" frame sits directly above an "abs" frame.
    frames = []
    redex_at = []
    focus = t
    while True:
        # descend to the end of the spine
        while True:
            if isinstance(focus, Abs):
                if frames and frames[-1][0] == "fun":
                    redex_at.append(len(frames) - 1)
                frames.append(("abs", focus.var))
                focus = focus.body
            elif isinstance(focus, App):
                frames.append(("fun", focus.arg))
                focus = focus.fun
            else:
                break
        if not redex_at:
            return _rebuild(frames, focus, 0)
        k = redex_at.pop()
        lam = _rebuild(frames, focus, k + 1)
        arg = frames[k][1]
        del frames[k:]
        if budget[0] <= 0:
            raise _OutOfFuel
        budget[0] -= 1
        focus, _ = contract_d(App(lam, arg))


def _rebuild(frames, focus, stop):
    for k in range(len(frames) - 1, stop - 1, -1):
        kind, data = frames[k]
        focus = Abs(data, focus) if kind == "abs" else App(focus, data)
    return focus


# ---------------------------------------------------------------------------
# Full development and explification

def full_development(m: Term) -> Term:
    """Contract all beta redexes of ``m`` simultaneously (complete development)."""
    if isinstance(m, Var):
        return m
    if isinstance(m, Abs):
        return Abs(m.var, full_development(m.body))
    if isinstance(m.fun, Abs):
        return substitute(full_development(m.fun.body), m.fun.var,
                          full_development(m.arg))
    return App(full_development(m.fun), full_development(m.arg))


@dataclass(frozen=True, slots=True)
class Closure:
    """Explicit substitution ``body<var := arg>``."""

    body: "XsTerm"
    var: str
    arg: "XsTerm"

    def __str__(self) -> str:
        return xs_pretty(self)


XsTerm = Union[Var, Abs, App, Closure]


def explify(m: Term) -> XsTerm:
    if isinstance(m, Var):
        return m
    if isinstance(m, Abs):
        return Abs(m.var, explify(m.body))
    if isinstance(m.fun, Abs):
        return Closure(explify(m.fun.body), m.fun.var, explify(m.arg))
    return App(explify(m.fun), explify(m.arg))


def xs_free_vars(m: XsTerm) -> frozenset:
    if isinstance(m, Var):
        return frozenset((m.name,))
    if isinstance(m, Abs):
        return xs_free_vars(m.body) - {m.var}
    if isinstance(m, App):
        return xs_free_vars(m.fun) | xs_free_vars(m.arg)
    return (xs_free_vars(m.body) - {m.var}) | xs_free_vars(m.arg)


def _xs_rename(m: XsTerm, old: str, new: str) -> XsTerm:
    """Rename free ``old`` to ``new`` (``new`` assumed fresh)."""
    if isinstance(m, Var):
        return Var(new) if m.name == old else m
    if isinstance(m, Abs):
        if m.var == old:
            return m
        return Abs(m.var, _xs_rename(m.body, old, new))
    if isinstance(m, App):
        return App(_xs_rename(m.fun, old, new), _xs_rename(m.arg, old, new))
    arg = _xs_rename(m.arg, old, new)
    if m.var == old:
        return Closure(m.body, m.var, arg)
    return Closure(_xs_rename(m.body, old, new), m.var, arg)


def _xs_names(m: XsTerm) -> set:
    out = set()
    stack = [m]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            out.add(t.name)
        elif isinstance(t, Abs):
            out.add(t.var)
            stack.append(t.body)
        elif isinstance(t, App):
            stack.extend((t.fun, t.arg))
        else:
            out.add(t.var)
            stack.extend((t.body, t.arg))
    return out


def _x_rule(c: Closure) -> Optional[XsTerm]:
    p, x, q = c.body, c.var, c.arg
    if isinstance(p, Var):
        return q if p.name == x else p
    if isinstance(p, App):
        return App(Closure(p.fun, x, q), Closure(p.arg, x, q))
    if isinstance(p, Abs):
        y, body = p.var, p.body
        # a binder equal to x or free in q is renamed first, as rule L does
        if y == x or y in xs_free_vars(q):
            # avoid every name in sight so the renaming cannot capture
            z = fresh_name(y, _xs_names(q) | _xs_names(body) | {x})
            body = _xs_rename(body, y, z)
            y = z
        return Abs(y, Closure(body, x, q))
    return None         # nested closure: its body must be resolved first


def x_successors(m: XsTerm) -> list:
    """Every term reachable from ``m`` by one x-rule, leftmost first."""
    out = []

    def go(t, rebuild):
        if isinstance(t, Var):
            return
        if isinstance(t, Abs):
            go(t.body, lambda s: rebuild(Abs(t.var, s)))
        elif isinstance(t, App):
            go(t.fun, lambda s: rebuild(App(s, t.arg)))
            go(t.arg, lambda s: rebuild(App(t.fun, s)))
        else:
            r = _x_rule(t)
            if r is not None:
                out.append(rebuild(r))
            go(t.body, lambda s: rebuild(Closure(s, t.var, t.arg)))
            go(t.arg, lambda s: rebuild(Closure(t.body, t.var, s)))

    go(m, lambda s: s)
    return out


def x_step(m: XsTerm) -> Optional[XsTerm]:
    """One leftmost x-rule step, or None when no closure remains."""
    succ = x_successors(m)
    return succ[0] if succ else None


def x_normalize(m: XsTerm, limit: int = 10**6) -> XsTerm:
    for _ in range(limit):
        nxt = x_step(m)
        if nxt is None:
            return m
        m = nxt
    raise FuelExhausted(limit, None)


def xs_alpha_eq(a: XsTerm, b: XsTerm) -> bool:
    return _xs_key(a, {}, 0) == _xs_key(b, {}, 0)


def _xs_key(m, env, depth):
    if isinstance(m, Var):
        return ("v", env.get(m.name, m.name))
    if isinstance(m, Abs):
        return ("l", _xs_key(m.body, {**env, m.var: depth}, depth + 1))
    if isinstance(m, App):
        return ("a", _xs_key(m.fun, env, depth), _xs_key(m.arg, env, depth))
    return ("c", _xs_key(m.body, {**env, m.var: depth}, depth + 1),
            _xs_key(m.arg, env, depth))


def xs_pretty(m: XsTerm) -> str:
    if isinstance(m, Var):
        return m.name
    if isinstance(m, Abs):
        return f"(\\{m.var}. {xs_pretty(m.body)})"
    if isinstance(m, App):
        return f"({xs_pretty(m.fun)} {xs_pretty(m.arg)})"
    return f"{xs_pretty(m.body)}<{m.var} := {xs_pretty(m.arg)}>"


# ---------------------------------------------------------------------------
# Step certificates

@dataclass(frozen=True)
class StepCertificate:
    """Which projection disjunct holds for one inner-spine step.

    ``kind`` is ``"beta"`` when the developments differ by one spine beta
    step (``position`` is its redex in the development of the source), or
    ``"x"`` when the developments coincide and ``x_steps`` explicit
    substitution steps link the explified terms.
    """

    kind: str
    position: Optional[Position] = None
    x_steps: int = 0


def certify_step(m: Term, pos: Position) -> StepCertificate:
    if inner_spine_select(m) != pos:
        raise CertificationFailure(
            f"{format_position(pos)} is not the inner-spine redex of {m}")
    n = step_d(m, pos)
    mb, nb = full_development(m), full_development(n)
    if alpha_eq(mb, nb):
        steps = _x_reachable(explify(m), explify(n), size(m) ** 2)
        if steps is not None:
            return StepCertificate("x", x_steps=steps)
    for p in extended_spine_redexes(mb):
        redex = subterm_at(mb, p)
        reduct = substitute(redex.fun.body, redex.fun.var, redex.arg)
        if alpha_eq(replace_at(mb, p, reduct), nb):
            return StepCertificate("beta", position=p)
    raise CertificationFailure(
        f"no certificate for step at {format_position(pos)} in {m}")


def _x_reachable(src: XsTerm, dst: XsTerm, max_depth: int,
                 max_states: int = 20000) -> Optional[int]:
    target = _xs_key(dst, {}, 0)
    if _xs_key(src, {}, 0) == target:
        return 0
    seen = {_xs_key(src, {}, 0)}
    frontier = deque([(src, 0)])
    while frontier:
        t, d = frontier.popleft()
        if d >= max_depth:
            continue
        for s in x_successors(t):
            key = _xs_key(s, {}, 0)
            if key == target:
                return d + 1
            if key not in seen and len(seen) < max_states:
                seen.add(key)
                frontier.append((s, d + 1))
    return None
