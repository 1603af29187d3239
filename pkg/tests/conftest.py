import pytest
from hypothesis import settings, strategies as st

from mlc.lang import load_source, parse_term
from mlc.term import Abs, App, Var

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

NAMES = ("x", "y", "z", "u")


def terms(names=NAMES, max_leaves=12):
    """Random named terms over a small alphabet (free variables allowed)."""
    var = st.sampled_from(names).map(Var)
    return st.recursive(
        var,
        lambda sub: st.one_of(
            st.builds(Abs, st.sampled_from(names), sub),
            st.builds(App, sub, sub)),
        max_leaves=max_leaves)


def closed_terms(max_leaves=12):
    """Closed terms: wrap every free name in a binder."""
    from mlc.term import free_vars

    def close(t):
        for x in sorted(free_vars(t)):
            t = Abs(x, t)
        return t
    return terms(max_leaves=max_leaves).map(close)


@pytest.fixture
def p():
    """Parse a term in MLC syntax without the prelude."""
    return parse_term


@pytest.fixture
def src():
    """Parse and expand MLC source with the prelude in scope."""
    return load_source
