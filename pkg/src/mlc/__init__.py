"""Macro Lambda Calculus: parser, reducers, heap machine and prefix codes."""

from mlc.term import (  # noqa: F401
    Abs, App, FuelExhausted, RedexKind, Term, Var, alpha_eq, find_redex,
    free_vars, normalize_oracle, pretty, step_normal, substitute,
)

__version__ = "0.1.0"
