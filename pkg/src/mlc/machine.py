"""Graph reduction machine on homogeneous memory of four-cell blocks.

Every block has four address cells ``c0..c3`` plus a role tag kept beside
the cells.  Layouts (``NULL`` is -1):

========  ===================  ==============  =================  ==============
role      c0                   c1              c2                 c3
========  ===================  ==============  =================  ==============
ABS       use cell -> binder   use cell->body  users ring         entry or mark
APP       use cell -> fun      use cell->arg   users ring         entry or mark
VAR       binders ring         NULL            occurrences ring   NULL
USE       prev                 next            parent (user)      owner (child)
LIST      prev                 next            payload node       task mode
FREE      next free            pending cell    pending cell       NULL
========  ===================  ==============  =================  ==============

A parent never points at a child directly: its slot holds a use cell that
sits in the child's ring of users.  Replacing a node therefore touches only
its own users, and dropping a reference is an O(1) ring unlink.

The redex ring is worked from its head like a stack of tasks.  A task asks
for its payload in weak head normal form or in full normal form; the head
task either contracts a redex with one of the distributive rules or pushes
the subtask its payload is waiting on.  Only needed redexes are touched, so
unused or divergent parts of the graph cost nothing.  A node whose normal
form is complete stores its own address in ``c3`` and is never revisited.

Garbage is reclaimed lazily.  A node whose users ring empties is turned
into a FREE block that still holds its child use cells; those are unlinked
only when the block is torn down, either while being re-allocated or by
the per-step collector.  Removing a variable occurrence during teardown is
the moment new eta redexes are detected; they are appended at the tail.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional

from mlc.term import Abs, App, FuelExhausted, Term, Var

NULL = -1

FREE, ABS, APP, VAR, USE, LIST = range(6)
ROLE_NAMES = ("Free", "AbsNode", "AppNode", "VarNode", "UseCell", "ListCell")

# task modes, kept in c3 of a ring entry
(HEAD, HEAD_WAIT, ABS_WAIT, NORM, NORM_WAIT, BODY_WAIT, SPINE,
 DONE_WAIT) = range(8)
MODE_NAMES = ("head", "head-wait", "abs-wait", "norm", "norm-wait",
              "body-wait", "spine", "done-wait")
_FRESH = {HEAD_WAIT: HEAD, NORM_WAIT: NORM}

DEFAULT_HEAP = 1 << 20
DEFAULT_GC_BUDGET = 4


class OutOfMemory(Exception):
    pass


class CycleDetected(Exception):
    pass


@dataclass(frozen=True)
class StepOutcome:
    kind: str                   # "applied", "visit", "stale" or "done"
    rule: Optional[str] = None  # I, C, L, A or eta
    addr: int = NULL
    touches: int = 0


@dataclass(frozen=True)
class AuditReport:
    lossless: bool
    use_lists_consistent: bool
    free_chain_terminates: bool
    free_blocks: int
    live_blocks: int
    list_blocks: int
    total_blocks: int
    max_touches_per_step: int
    steps: int
    problems: tuple = ()


class HeapMachine:
    """A loaded term plus the machine state that reduces it."""

    def __init__(self, heap_size: int = DEFAULT_HEAP,
                 gc_budget: int = DEFAULT_GC_BUDGET,
                 audit_each_step: Optional[bool] = None):
        if heap_size < 4:
            raise ValueError("heap too small")
        n = heap_size
        self.size = n
        self.role = [FREE] * n
        self.c0 = list(range(1, n)) + [NULL]
        self.c1 = [NULL] * n
        self.c2 = [NULL] * n
        self.c3 = [NULL] * n
        self.clean = 0                  # clean free chain, through c0
        self.dirty = NULL               # pending teardown, FIFO through c0
        self.dirty_tail = NULL
        self.ring = NULL                # head entry of the redex ring
        self.root_use = NULL
        self.names = {}                 # VAR block -> name hint
        self.gc_budget = gc_budget
        self.touches = 0
        self.max_touches = 0
        self.step_counter = 0
        self.halted = False
        self._eta_pending = []
        if audit_each_step is None:
            audit_each_step = os.environ.get("MLC_AUDIT") == "1"
        self.audit_each_step = audit_each_step

    # ------------------------------------------------------------------
    # allocation and the free lists

    def _alloc(self, role: int) -> int:
        a = self.clean
        if a == NULL:
            a = self.dirty
            if a == NULL:
                raise OutOfMemory(f"all {self.size} blocks in use")
            self.dirty = self.c0[a]
            if self.dirty == NULL:
                self.dirty_tail = NULL
            self._teardown(a)
        else:
            self.clean = self.c0[a]
        self.touches += 1
        self.role[a] = role
        self.c0[a] = self.c1[a] = self.c2[a] = self.c3[a] = NULL
        return a

    def _alloc_many(self, k: int) -> list:
        got = []
        try:
            for _ in range(k):
                got.append(self._alloc(FREE))
        except OutOfMemory:
            for a in got:
                self._push_clean(a)
            raise
        return got

    def _push_clean(self, a: int) -> None:
        self.role[a] = FREE
        self.c0[a] = self.clean
        self.c1[a] = self.c2[a] = self.c3[a] = NULL
        self.clean = a
        self.touches += 1

    def _push_dirty(self, a: int, p1: int, p2: int) -> None:
        self.role[a] = FREE
        self.c0[a] = NULL
        self.c1[a] = p1
        self.c2[a] = p2
        self.c3[a] = NULL
        if self.dirty == NULL:
            self.dirty = a
        else:
            self.c0[self.dirty_tail] = a
            self.touches += 1
        self.dirty_tail = a
        self.touches += 1

    def _teardown(self, a: int) -> None:
        p1, p2 = self.c1[a], self.c2[a]
        self.c1[a] = self.c2[a] = NULL
        if p1 != NULL:
            self._unlink(p1, False)
        if p2 != NULL:
            self._unlink(p2, False)

    def gc_collect(self, budget: Optional[int] = None) -> int:
        """Tear down up to ``budget`` pending blocks; returns how many."""
        k = self.gc_budget if budget is None else budget
        done = 0
        while done < k and self.dirty != NULL:
            a = self.dirty
            self.dirty = self.c0[a]
            if self.dirty == NULL:
                self.dirty_tail = NULL
            self._teardown(a)
            self._push_clean(a)
            done += 1
        self._flush_eta()
        return done

    # ------------------------------------------------------------------
    # use rings

    def _link(self, u: int, parent: int, owner: int, binder: bool = False) -> int:
        """Make preallocated block ``u`` a use cell from parent to owner."""
        c0, c1 = self.c0, self.c1
        self.role[u] = USE
        self.c2[u] = parent
        self.c3[u] = owner
        field = c0 if binder else self.c2
        head = field[owner]
        if head == NULL:
            c0[u] = c1[u] = u
            field[owner] = u
        else:
            prev = c0[head]
            c0[u] = prev
            c1[u] = head
            c1[prev] = u
            c0[head] = u
            self.touches += 2
        self.touches += 2
        return u

    def _unlink(self, u: int, binder: bool) -> None:
        """Drop use cell ``u``; its owner is released if nothing uses it."""
        c0, c1 = self.c0, self.c1
        owner = self.c3[u]
        field = c0 if binder else self.c2
        nxt = c1[u]
        if nxt == u:
            field[owner] = NULL
        else:
            prev = c0[u]
            c1[prev] = nxt
            c0[nxt] = prev
            if field[owner] == u:
                field[owner] = nxt
            self.touches += 2
        self.touches += 2
        self._push_clean(u)
        if self.role[owner] == VAR:
            if self.c0[owner] == NULL and self.c2[owner] == NULL:
                self._release(owner)
            elif not binder:
                self._eta_check_var(owner)
        elif self.c2[owner] == NULL:
            self._release(owner)

    def _release(self, a: int) -> None:
        role = self.role[a]
        if role == VAR:
            self.names.pop(a, None)
            self._push_clean(a)
            return
        e = self.c3[a]
        if e != NULL and e != a:
            self._ring_remove(e)
        if role == ABS:
            binder_cell, body_cell = self.c0[a], self.c1[a]
            self.c0[a] = NULL
            self._unlink(binder_cell, True)
            self._push_dirty(a, body_cell, NULL)
        else:
            self._push_dirty(a, self.c0[a], self.c1[a])

    # ------------------------------------------------------------------
    # redex ring

    def _ring_insert_before(self, e: int, ref: int) -> None:
        c0, c1 = self.c0, self.c1
        prev = c0[ref]
        c0[e] = prev
        c1[e] = ref
        c1[prev] = e
        c0[ref] = e
        self.touches += 3

    def _ring_unlink(self, e: int) -> None:
        c0, c1 = self.c0, self.c1
        nxt = c1[e]
        if nxt == e:
            self.ring = NULL
        else:
            prev = c0[e]
            c1[prev] = nxt
            c0[nxt] = prev
            if self.ring == e:
                self.ring = nxt
            self.touches += 2
        self.touches += 1

    def _ring_remove(self, e: int) -> None:
        node = self.c2[e]
        if node != NULL and self.c3[node] == e:
            self.c3[node] = NULL
        self._ring_unlink(e)
        self._push_clean(e)

    def _ring_put(self, e: int, front: bool) -> None:
        if self.ring == NULL:
            self.c0[e] = self.c1[e] = e
            self.ring = e
            self.touches += 1
        else:
            self._ring_insert_before(e, self.ring)
            if front:
                self.ring = e

    def _attach(self, e: int, node: int, mode: int) -> None:
        self.role[e] = LIST
        self.c2[e] = node
        self.c3[e] = mode
        self.c3[node] = e
        self.touches += 2

    def _push(self, node: int, mode: int) -> None:
        """Ask for ``node`` in head normal form (HEAD), normal form (NORM)
        or, for a neutral application, with normal arguments (SPINE)."""
        role = self.role[node]
        self.touches += 1
        if role == VAR:
            return
        old = self.c3[node]
        if old == node:
            return
        if old != NULL:
            old_mode = self.c3[old]
            if old_mode not in (HEAD, NORM, SPINE):
                raise CycleDetected(f"node {node} requested by its own subgraph")
            self._ring_unlink(old)
            if old_mode == HEAD:
                self.c3[old] = mode
            self._ring_put(old, True)
            return
        e = self._alloc(LIST)
        self._attach(e, node, mode)
        self._ring_put(e, True)

    def ring_payloads(self) -> list:
        return [self.c2[e] for e in self._entries()]

    def ring_tasks(self) -> list:
        """(payload, mode name) for every ring entry, head first."""
        return [(self.c2[e], MODE_NAMES[self.c3[e]]) for e in self._entries()]

    def _entries(self):
        e = self.ring
        if e == NULL:
            return
        while True:
            yield e
            e = self.c1[e]
            if e == self.ring:
                return

    # ------------------------------------------------------------------
    # redex predicates

    def _is_beta(self, a: int) -> bool:
        return (self.role[a] == APP
                and self.role[self.c3[self.c0[a]]] == ABS)

    def _is_eta(self, a: int) -> bool:
        if self.role[a] != ABS:
            return False
        body = self.c3[self.c1[a]]
        if self.role[body] != APP:
            return False
        arg_cell = self.c1[body]
        x = self.c3[self.c0[a]]
        self.touches += 3
        # the argument is the bound variable and is its only occurrence
        return (self.c3[arg_cell] == x and self.c2[x] == arg_cell
                and self.c1[arg_cell] == arg_cell)

    def _eta_check_var(self, x: int) -> None:
        occ = self.c2[x]
        if occ == NULL or self.c1[occ] != occ:
            return
        parent = self.c2[occ]
        self.touches += 2
        if parent == NULL or self.role[parent] != APP or self.c1[parent] != occ:
            return
        b = self.c0[x]
        if b == NULL:
            return
        start = b
        while True:
            lam = self.c2[b]
            self.touches += 2
            if self.c3[self.c1[lam]] == parent:
                self._eta_pending.append(lam)
            b = self.c1[b]
            if b == start:
                break

    def _flush_eta(self) -> None:
        while self._eta_pending:
            lam = self._eta_pending.pop()
            if self.role[lam] != ABS:
                continue
            # only finished abstractions; others are checked when a
            # normalizing task reaches them
            if self.c3[lam] == lam and self._is_eta(lam):
                e = self._alloc(LIST)
                if self.role[lam] != ABS or self.c3[lam] != lam:
                    self._push_clean(e)
                    continue
                self._attach(e, lam, NORM)
                self._ring_put(e, False)

    # ------------------------------------------------------------------
    # loading and extraction

    def load(self, m: Term) -> "HeapMachine":
        if self.root_use != NULL:
            raise RuntimeError("machine already loaded")
        free_vars = {}
        self.root_use = self._alloc(USE)
        root = self._build(m, {}, free_vars)
        self._link(self.root_use, NULL, root)
        self.prepare_redex_list()
        self.touches = 0
        return self

    def _build(self, m: Term, env: dict, free_vars: dict) -> int:
        # iterative post-order: deep spines must not hit the recursion limit
        result = []
        stack = [(m, env, 0)]
        while stack:
            t, env, state = stack.pop()
            if isinstance(t, Var):
                v = env.get(t.name)
                if v is None:
                    v = free_vars.get(t.name)
                    if v is None:
                        v = self._alloc(VAR)
                        self.names[v] = t.name
                        free_vars[t.name] = v
                result.append(v)
            elif isinstance(t, Abs):
                if state == 0:
                    x = self._alloc(VAR)
                    self.names[x] = t.var
                    stack.append((t, env, x))
                    stack.append((t.body, {**env, t.var: x}, 0))
                else:
                    body = result.pop()
                    a = self._alloc(ABS)
                    u1, u2 = self._alloc_many(2)
                    self.c0[a] = self._link(u1, a, state, True)
                    self.c1[a] = self._link(u2, a, body)
                    result.append(a)
            else:
                if state == 0:
                    stack.append((t, env, 1))
                    stack.append((t.arg, env, 0))
                    stack.append((t.fun, env, 0))
                else:
                    arg = result.pop()
                    fun = result.pop()
                    a = self._alloc(APP)
                    u1, u2 = self._alloc_many(2)
                    self.c0[a] = self._link(u1, a, fun)
                    self.c1[a] = self._link(u2, a, arg)
                    result.append(a)
        return result[0]

    @property
    def root(self) -> int:
        return self.c3[self.root_use]

    def prepare_redex_list(self) -> None:
        """Seed the ring with a normalization task for the root, then walk
        down to the first redex in normal order: afterwards the head entry
        is that redex and the entries behind it are the applications
        waiting on it (``R M1``, ``R M1 M2``, ...)."""
        if self.ring != NULL:
            raise RuntimeError("redex list already prepared")
        self._push(self.root, NORM)
        while self.ring != NULL and not self._head_rewrites():
            self._task(self.ring)

    def _head_rewrites(self) -> bool:
        e = self.ring
        p = self.c2[e]
        mode = self.c3[e]
        if mode in _FRESH and self._is_beta(p):
            return True
        return mode in (NORM, BODY_WAIT) and self._is_eta(p)

    def extract(self, node: Optional[int] = None) -> Term:
        """Unfold the graph below ``node`` (default: root) into a term."""
        node = self.root if node is None else node
        free_names = {self.names.get(v, f"v{v}") for v in self._free_var_nodes(node)}
        counter = [0]
        on_path = set()

        def name_for(x, env_names):
            base = self.names.get(x, "x")
            if base not in env_names and base not in free_names:
                return base
            while True:
                counter[0] += 1
                cand = f"{base}{counter[0]}"
                if cand not in env_names and cand not in free_names:
                    return cand

        def go(a, env, env_names):
            if a in on_path:
                raise CycleDetected(f"cycle through block {a}")
            role = self.role[a]
            if role == VAR:
                name = env.get(a)
                return Var(name if name is not None
                           else self.names.get(a, f"v{a}"))
            on_path.add(a)
            try:
                if role == ABS:
                    x = self.c3[self.c0[a]]
                    nm = name_for(x, env_names)
                    body = go(self.c3[self.c1[a]], {**env, x: nm},
                              env_names | {nm})
                    return Abs(nm, body)
                if role == APP:
                    return App(go(self.c3[self.c0[a]], env, env_names),
                               go(self.c3[self.c1[a]], env, env_names))
                raise CycleDetected(f"block {a} has role {ROLE_NAMES[role]}")
            finally:
                on_path.discard(a)

        return go(node, {}, frozenset())

    def _free_var_nodes(self, node: int) -> set:
        out = set()
        seen = set()
        stack = [node]
        while stack:
            a = stack.pop()
            if a in seen:
                continue
            seen.add(a)
            role = self.role[a]
            if role == VAR:
                if self.c0[a] == NULL:
                    out.add(a)
            elif role in (ABS, APP):
                stack.append(self.c3[self.c0[a]])
                stack.append(self.c3[self.c1[a]])
        return out

    # ------------------------------------------------------------------
    # reduction

    def step(self) -> StepOutcome:
        """Work on the head ring entry, then collect a bounded amount of
        garbage.  Done once both the ring and the pending garbage are empty."""
        if self.halted:
            raise RuntimeError("machine halted")
        before = self.touches
        self.step_counter += 1
        if self.ring == NULL:
            # drain the collector at the usual pace; late eta redexes may
            # still refill the ring
            self.gc_collect()
            if self.ring == NULL and self.dirty == NULL:
                self.halted = True
                return self._finish_step(before, StepOutcome("done"))
            return self._finish_step(before, StepOutcome("visit"))
        outcome = self._task(self.ring)
        self.gc_collect()
        return self._finish_step(before, outcome)

    def _finish_step(self, before: int, outcome: StepOutcome) -> StepOutcome:
        delta = self.touches - before
        if delta > self.max_touches:
            self.max_touches = delta
        if self.audit_each_step:
            report = self.audit()
            if not (report.lossless and report.use_lists_consistent):
                raise AssertionError(f"audit failed after step "
                                     f"{self.step_counter}: {report.problems}")
        return StepOutcome(outcome.kind, outcome.rule, outcome.addr, delta)

    def _task(self, e: int) -> StepOutcome:
        c0, c1, c3 = self.c0, self.c1, self.c3
        p = self.c2[e]
        mode = c3[e]
        role = self.role[p]
        self.touches += 2
        if mode in _FRESH and role == APP and self._is_beta(p):
            # the function is in head normal form: contract
            return self._beta(e, p, _FRESH[mode])
        if mode == HEAD or (mode == NORM and role == APP):
            if role == ABS:
                c3[e] = ABS_WAIT
                self._push(c3[c1[p]], HEAD)
                return StepOutcome("visit", None, p)
            if role != APP:
                self._ring_remove(e)
                return StepOutcome("stale", None, p)
            c3[e] = HEAD_WAIT if mode == HEAD else NORM_WAIT
            self._push(c3[c0[p]], HEAD)
            return StepOutcome("visit", None, p)
        if mode == NORM:
            if role == ABS:
                if self._is_eta(p):
                    return self._eta(e, p)
                c3[e] = BODY_WAIT
                self._push(c3[c1[p]], NORM)
                return StepOutcome("visit", None, p)
            self._ring_remove(e)
            return StepOutcome("stale", None, p)
        if mode in (HEAD_WAIT, ABS_WAIT):
            self._ring_remove(e)
            return StepOutcome("stale", None, p)
        if mode in (NORM_WAIT, SPINE):
            if role != APP:
                self._ring_remove(e)
                return StepOutcome("stale", None, p)
            # neutral application: arguments left to right
            c3[e] = DONE_WAIT
            self._push(c3[c1[p]], NORM)
            self._push(c3[c0[p]], SPINE)
            return StepOutcome("visit", None, p)
        if mode == BODY_WAIT and self._is_eta(p):
            return self._eta(e, p)
        # BODY_WAIT or DONE_WAIT: the normal form below p is complete
        self._ring_remove(e)
        c3[p] = p
        return StepOutcome("stale", None, p)

    def _continue(self, e: int, target: int, mode: int) -> None:
        """The payload of ``e`` was replaced by ``target``."""
        old = self.c3[target]
        if self.role[target] == VAR or old == target:
            self._ring_remove(e)
        elif old != NULL:
            self._ring_remove(e)
            self._push(target, mode)
        else:
            self._attach(e, target, mode)

    def _beta(self, e: int, r: int, mode: int) -> StepOutcome:
        c0, c1, c3, role = self.c0, self.c1, self.c3, self.role
        lam = c3[c0[r]]
        x = c3[c0[lam]]
        body = c3[c1[lam]]
        brole = role[body]
        self.touches += 4
        if brole == VAR:
            target = c3[c1[r]] if body == x else body
            c3[r] = NULL
            self.c2[e] = NULL
            self._replace(target, r)
            self._continue(e, target, mode)
            return StepOutcome("applied", "I" if body == x else "C", r)
        if brole == ABS:
            return self._rule_l(e, r, x, body, mode)
        return self._rule_a(e, r, x, mode)

    def _eta(self, e: int, lam: int) -> StepOutcome:
        target = self.c3[self.c0[self.c3[self.c1[lam]]]]
        self.c3[lam] = NULL
        self.c2[e] = NULL
        self._replace(target, lam)
        self._continue(e, target, NORM)
        return StepOutcome("applied", "eta", lam)

    def _still_current(self, e, r):
        return self.c3[r] == e and self._is_beta(r)

    def _rule_l(self, e, r, x, inner, mode) -> StepOutcome:
        c0, c1, c3 = self.c0, self.c1, self.c3
        y = c3[c0[inner]]
        b = c0[y]
        reuse = c1[b] == b            # the inner abstraction is y's only binder
        blocks = self._alloc_many(8 if reuse else 12)
        if not self._still_current(e, r):
            for a in blocks:
                self._push_clean(a)
            return StepOutcome("stale", None, r)
        n = c3[c1[r]]
        m = c3[c1[inner]]
        old_fun, old_arg = c0[r], c1[r]
        it = iter(blocks)
        if reuse:
            l1 = self._node(next(it), ABS, (x, True), m, it)
            a1 = self._node(next(it), APP, l1, n, it)
            self._rewrite(r, ABS, (y, True), a1, it, old_fun, old_arg)
        else:
            # y is bound elsewhere too: rebind through a fresh variable,
            # \y2. (\x. (\y. M) y2) N
            y2 = next(it)
            self.role[y2] = VAR
            self.names[y2] = self.names.get(y, "y")
            a0 = self._node(next(it), APP, inner, y2, it)
            l1 = self._node(next(it), ABS, (x, True), a0, it)
            a1 = self._node(next(it), APP, l1, n, it)
            self._rewrite(r, ABS, (y2, True), a1, it, old_fun, old_arg)
        c3[e] = mode
        return StepOutcome("applied", "L", r)

    def _rule_a(self, e, r, x, mode) -> StepOutcome:
        c0, c1, c3 = self.c0, self.c1, self.c3
        blocks = self._alloc_many(14)
        if not self._still_current(e, r):
            for a in blocks:
                self._push_clean(a)
            return StepOutcome("stale", None, r)
        lam = c3[c0[r]]
        body = c3[c1[lam]]
        n = c3[c1[r]]
        m1 = c3[c0[body]]
        m2 = c3[c1[body]]
        old_fun, old_arg = c0[r], c1[r]
        it = iter(blocks)
        l1 = self._node(next(it), ABS, (x, True), m1, it)
        l2 = self._node(next(it), ABS, (x, True), m2, it)
        e1 = self._node(next(it), APP, l1, n, it)
        e2 = self._node(next(it), APP, l2, n, it)
        self._rewrite(r, APP, e1, e2, it, old_fun, old_arg)
        c3[e] = mode
        return StepOutcome("applied", "A", r)

    def _node(self, a, role, first, second, cells) -> int:
        self.role[a] = role
        self.c2[a] = self.c3[a] = NULL
        if isinstance(first, tuple):
            self.c0[a] = self._link(next(cells), a, first[0], True)
        else:
            self.c0[a] = self._link(next(cells), a, first)
        self.c1[a] = self._link(next(cells), a, second)
        return a

    def _rewrite(self, r, role, first, second, cells, old_fun, old_arg):
        """Overwrite ``r`` in place, keeping its users, then drop its old
        children (after the new links so shared children survive)."""
        self.role[r] = role
        if isinstance(first, tuple):
            self.c0[r] = self._link(next(cells), r, first[0], True)
        else:
            self.c0[r] = self._link(next(cells), r, first)
        self.c1[r] = self._link(next(cells), r, second)
        self._unlink(old_fun, False)
        self._unlink(old_arg, False)

    def _replace(self, target: int, r: int) -> None:
        """Reroute every user of ``r`` to ``target``; ``r`` becomes garbage."""
        c0, c1, c2, c3 = self.c0, self.c1, self.c2, self.c3
        head = c2[r]
        if head == NULL:
            return
        u = head
        while True:
            c3[u] = target
            self.touches += 1
            u = c1[u]
            if u == head:
                break
        # splice r's ring into target's users (occurrences for a variable)
        thead = c2[target]
        if thead == NULL:
            c2[target] = head
        else:
            tail_r = c0[head]
            tail_t = c0[thead]
            c1[tail_t] = head
            c0[head] = tail_t
            c1[tail_r] = thead
            c0[thead] = tail_r
            self.touches += 4
        c2[r] = NULL
        self._release(r)
        self._flush_eta()

    def run(self, fuel: int,
            trace: Optional[Callable[[int, StepOutcome], None]] = None) -> Term:
        """Step until done; the result is read back with :meth:`extract`."""
        if fuel <= 0:
            raise ValueError("fuel must be positive")
        for _ in range(fuel):
            out = self.step()
            if trace is not None:
                trace(self.step_counter, out)
            if out.kind == "done":
                return self.extract()
        raise FuelExhausted(fuel)

    # ------------------------------------------------------------------
    # inspection

    def audit(self) -> AuditReport:
        problems = []
        n = self.size
        role = self.role
        counted = [False] * n

        def mark(a, what):
            if a < 0 or a >= n:
                problems.append(f"{what}: address {a} out of range")
                return False
            if counted[a]:
                problems.append(f"{what}: block {a} reached twice")
                return False
            counted[a] = True
            return True

        free = 0
        chain_ok = True
        for head in (self.clean, self.dirty):
            a = head
            steps = 0
            while a != NULL:
                if not mark(a, "free chain") or role[a] != FREE:
                    chain_ok = False
                    break
                free += 1
                steps += 1
                a = self.c0[a]
                if steps > n:
                    chain_ok = False
                    break

        listed = 0
        for e in self._entries():
            if not mark(e, "ring") or role[e] != LIST:
                problems.append(f"ring entry {e} malformed")
                break
            listed += 1
            node = self.c2[e]
            if self.c3[node] != e:
                problems.append(f"node {node} does not point at entry {e}")
            if self.c0[self.c1[e]] != e:
                problems.append(f"ring links broken at {e}")
            if listed > n:
                break

        # live graph: from the root holder and from pending cells
        live = 0
        node_stack = []
        cells = []
        if self.root_use != NULL:
            cells.append(self.root_use)
        a = self.dirty
        steps = 0
        while a != NULL and steps <= n:
            for p in (self.c1[a], self.c2[a]):
                if p != NULL:
                    cells.append(p)
            a = self.c0[a]
            steps += 1
        seen_nodes = set()

        def visit_cell(u):
            nonlocal live
            if role[u] != USE:
                problems.append(f"slot cell {u} has role {ROLE_NAMES[role[u]]}")
                return
            if not mark(u, "use cell"):
                return
            live += 1
            node_stack.append(self.c3[u])

        for u in cells:
            visit_cell(u)
        while node_stack:
            a = node_stack.pop()
            if a in seen_nodes:
                continue
            seen_nodes.add(a)
            if not mark(a, "node"):
                continue
            live += 1
            r = role[a]
            if r in (ABS, APP):
                visit_cell(self.c0[a])
                visit_cell(self.c1[a])
                c = self.c3[a]
                if c != NULL and c != a and (role[c] != LIST or self.c2[c] != a):
                    problems.append(f"node {a} has a foreign c3 {c}")
            elif r != VAR:
                problems.append(f"node {a} has role {ROLE_NAMES[r]}")

        consistent = self._check_rings(seen_nodes, problems)
        total = free + live + listed
        lossless = chain_ok and total == n and all(counted)
        if total != n:
            problems.append(f"free {free} + live {live} + list {listed} != {n}")
        return AuditReport(lossless, consistent, chain_ok, free, live, listed,
                           n, self.max_touches, self.step_counter,
                           tuple(problems[:20]))

    def _check_rings(self, nodes, problems) -> bool:
        ok = True
        for a in nodes:
            r = self.role[a]
            fields = [(self.c2, False)]
            if r == VAR:
                fields.append((self.c0, True))
            for field, binder in fields:
                head = field[a]
                if head == NULL:
                    continue
                u = head
                k = 0
                while True:
                    if self.role[u] != USE or self.c3[u] != a:
                        problems.append(f"ring of {a} holds foreign cell {u}")
                        ok = False
                        break
                    p = self.c2[u]
                    if p == NULL:
                        if u != self.root_use:
                            problems.append(f"orphan cell {u}")
                            ok = False
                    elif self.role[p] == FREE:
                        if u not in (self.c1[p], self.c2[p]):
                            problems.append(f"pending cell {u} not held by {p}")
                            ok = False
                    else:
                        slots = (self.c0[p], self.c1[p])
                        if u not in slots:
                            problems.append(f"cell {u} not in a slot of {p}")
                            ok = False
                        elif binder != (self.role[p] == ABS and self.c0[p] == u):
                            problems.append(f"cell {u} in wrong ring of {a}")
                            ok = False
                    if self.c0[self.c1[u]] != u:
                        problems.append(f"ring links broken at {u}")
                        ok = False
                        break
                    u = self.c1[u]
                    k += 1
                    if u == head or k > self.size:
                        break
            if r != VAR and self.c2[a] == NULL:
                problems.append(f"node {a} is live without users")
                ok = False
        return ok

    def snapshot(self) -> str:
        """One line per non-free block: ``addr role c0 c1 c2 c3``."""
        lines = []
        for a in range(self.size):
            if self.role[a] != FREE:
                lines.append(f"{a} {ROLE_NAMES[self.role[a]]} {self.c0[a]} "
                             f"{self.c1[a]} {self.c2[a]} {self.c3[a]}")
        return "\n".join(lines)


def load(m: Term, heap_size: int = DEFAULT_HEAP, **kw) -> HeapMachine:
    return HeapMachine(heap_size, **kw).load(m)


def run_machine(m: Term, fuel: int, heap_size: int = DEFAULT_HEAP,
                **kw) -> Term:
    return load(m, heap_size, **kw).run(fuel)
