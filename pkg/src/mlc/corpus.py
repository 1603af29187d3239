"""Term generators: exhaustive enumeration and seeded random sampling."""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Iterator, Optional, Sequence

from mlc.term import Abs, App, FuelExhausted, Term, Var, normalize_oracle


def _binder(depth: int) -> str:
    return f"v{depth}"


@lru_cache(maxsize=None)
def count_terms(n: int, scope: int) -> int:
    """Number of terms of size exactly ``n`` with ``scope`` usable variables
    at the root (binders add one each)."""
    if n <= 0:
        return 0
    total = scope if n == 1 else 0
    total += count_terms(n - 1, scope + 1)
    for k in range(1, n - 1):
        total += count_terms(k, scope) * count_terms(n - 1 - k, scope)
    return total


def enumerate_terms(max_size: int, free: Sequence[str] = ()) -> Iterator[Term]:
    """Every term up to alpha-equivalence of size 1..max_size whose free
    variables are drawn from ``free``.  Binders are named ``v<depth>``."""
    for n in range(1, max_size + 1):
        yield from _exact(n, tuple(free), 0)


def _exact(n: int, free: tuple, depth: int) -> Iterator[Term]:
    if n == 1:
        for d in range(depth):
            yield Var(_binder(d))
        for f in free:
            yield Var(f)
        return
    for body in _exact(n - 1, free, depth + 1):
        yield Abs(_binder(depth), body)
    for k in range(1, n - 1):
        for fun in _exact(k, free, depth):
            for arg in _exact(n - 1 - k, free, depth):
                yield App(fun, arg)


def random_term(rng: random.Random, n: int, free: Sequence[str] = (),
                depth: int = 0) -> Term:
    """A random term of size exactly ``n`` (closed unless ``free`` is given)."""
    scope = depth + len(free)
    if n == 1:
        if scope == 0:
            raise ValueError("no variable in scope")
        k = rng.randrange(scope)
        return Var(_binder(k) if k < depth else free[k - depth])
    if n == 2 or scope == 0 or rng.random() < 0.35:
        return Abs(_binder(depth), random_term(rng, n - 1, free, depth + 1))
    k = rng.randint(1, n - 2)
    if scope == 0 and (k == 1 or n - 1 - k == 1):
        return Abs(_binder(depth), random_term(rng, n - 1, free, depth + 1))
    return App(random_term(rng, k, free, depth),
               random_term(rng, n - 1 - k, free, depth))


def random_corpus(count: int, seed: int = 0, max_size: int = 30,
                  fuel: int = 10**4, min_size: int = 2,
                  free: Sequence[str] = ()) -> list:
    """``count`` random terms, each paired with its oracle normal form.

    Terms whose normal form is not found within ``fuel`` are skipped.
    """
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        n = rng.randint(min_size, max_size)
        t = random_term(rng, n, free)
        try:
            nf = normalize_oracle(t, fuel)
        except FuelExhausted:
            continue
        out.append((t, nf))
    return out


def random_terms(count: int, seed: int = 0, max_size: int = 30,
                 min_size: int = 2, free: Sequence[str] = ()) -> list:
    rng = random.Random(seed)
    return [random_term(rng, rng.randint(min_size, max_size), free)
            for _ in range(count)]


def has_nf(t: Term, fuel: int) -> Optional[Term]:
    try:
        return normalize_oracle(t, fuel)
    except FuelExhausted:
        return None
