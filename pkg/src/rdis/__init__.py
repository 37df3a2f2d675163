"""Nonconvex optimization by recursive decomposition into locally
independent subspaces.

The solver recursively picks a small cutset of variables via hypergraph
partitioning, assigns it with a pluggable subspace optimizer, replaces
terms whose interval bounds are narrow by constants, splits the remainder
into independent components, and recurses.  Baseline optimizers (grid
search, conjugate gradient descent, Levenberg-Marquardt, block coordinate
descent) and a benchmark harness are included.
"""

from .expr import (
    Budget,
    BudgetExhausted,
    EvalCounter,
    EvaluationError,
    Expr,
    ObjectiveFunction,
    PartialAssignment,
    SubFunction,
    Term,
    Variable,
    const,
    cos,
    evaluate,
    exp,
    gradient,
    log,
    restrict,
    sin,
    sqrt,
    term_bounds,
    var,
)
from .interval import Interval, IntervalDomainError
from .parser import ParseError, parse_problem, problem_to_str

__version__ = "0.1.0"
