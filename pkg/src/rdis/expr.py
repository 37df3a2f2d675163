"""Objective functions as sums of expression-tree terms.

Provides the expression node type (with operator overloading for the
generators), evaluation, analytic gradients via a per-term reverse sweep,
interval bound propagation, restriction to partial assignments, and the
evaluation-counting machinery used for budgets and instrumentation.

Terms compile lazily to generated Python functions (one value function and
one gradient function per term); evaluation cost is linear in tree size and
shared sub-DAGs inside a term are emitted once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .interval import (
    INF,
    Interval,
    IntervalDomainError,
    i_add,
    i_cos,
    i_div,
    i_exp,
    i_log,
    i_mul,
    i_neg,
    i_pow,
    i_sin,
    i_sqrt,
    i_sub,
)


class EvaluationError(ArithmeticError):
    """Evaluation left the function's domain or produced a non-finite value."""


class BudgetExhausted(Exception):
    """The evaluation or wall-clock budget of a run was used up."""


class EvalCounter:
    """Tally of term-level work: value, gradient and interval-bound
    evaluations, plus grid lattice points.  ``total`` is the budget axis."""

    __slots__ = ("values", "grads", "bounds", "grid_points")

    def __init__(self):
        self.values = 0
        self.grads = 0
        self.bounds = 0
        self.grid_points = 0

    @property
    def total(self) -> int:
        return self.values + self.grads + self.bounds

    def snapshot(self):
        return (self.values, self.grads, self.bounds, self.grid_points)

    def __repr__(self):
        return (f"EvalCounter(values={self.values}, grads={self.grads}, "
                f"bounds={self.bounds}, grid_points={self.grid_points})")


class Budget:
    """Enforceable limits on an evaluation counter and the wall clock."""

    __slots__ = ("counter", "max_evals", "deadline")

    def __init__(self, counter: EvalCounter, max_evals: Optional[int] = None,
                 time_limit: Optional[float] = None):
        self.counter = counter
        self.max_evals = max_evals
        self.deadline = None if time_limit is None else time.monotonic() + time_limit

    def check(self) -> None:
        if self.max_evals is not None and self.counter.total >= self.max_evals:
            raise BudgetExhausted(f"evaluation budget of {self.max_evals} used up")
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise BudgetExhausted("wall-clock budget used up")

    def exhausted(self) -> bool:
        try:
            self.check()
        except BudgetExhausted:
            return True
        return False


# ---------------------------------------------------------------------------
# expression nodes
# ---------------------------------------------------------------------------

_UNARY_OPS = ("neg", "sin", "cos", "exp", "log", "sqrt")
_BINARY_OPS = ("add", "sub", "mul", "div")


class Expr:
    """One node of an expression DAG.

    ``op`` is one of const/var, the unary ops neg/sin/cos/exp/log/sqrt, the
    binary ops add/sub/mul/div, or pow (integer exponent in ``val``).
    Nodes are immutable once built; builders may share subtrees within a
    term.
    """

    __slots__ = ("op", "args", "val")

    def __init__(self, op: str, args: tuple = (), val=None):
        self.op = op
        self.args = args
        self.val = val

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def _wrap(v) -> "Expr":
        if isinstance(v, Expr):
            return v
        if isinstance(v, (int, float)):
            return const(float(v))
        raise TypeError(f"cannot use {type(v).__name__} in an expression")

    def __add__(self, other):
        return Expr("add", (self, Expr._wrap(other)))

    def __radd__(self, other):
        return Expr("add", (Expr._wrap(other), self))

    def __sub__(self, other):
        return Expr("sub", (self, Expr._wrap(other)))

    def __rsub__(self, other):
        return Expr("sub", (Expr._wrap(other), self))

    def __mul__(self, other):
        return Expr("mul", (self, Expr._wrap(other)))

    def __rmul__(self, other):
        return Expr("mul", (Expr._wrap(other), self))

    def __truediv__(self, other):
        return Expr("div", (self, Expr._wrap(other)))

    def __rtruediv__(self, other):
        return Expr("div", (Expr._wrap(other), self))

    def __neg__(self):
        return Expr("neg", (self,))

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("exponents must be compile-time integers")
        return Expr("pow", (self,), n)

    def __repr__(self):
        from .parser import expr_to_str
        return f"Expr({expr_to_str(self)})"


def const(v: float) -> Expr:
    return Expr("const", (), float(v))


def var(index: int) -> Expr:
    return Expr("var", (), int(index))


def sin(e) -> Expr:
    return Expr("sin", (Expr._wrap(e),))


def cos(e) -> Expr:
    return Expr("cos", (Expr._wrap(e),))


def exp(e) -> Expr:
    return Expr("exp", (Expr._wrap(e),))


def log(e) -> Expr:
    return Expr("log", (Expr._wrap(e),))


def sqrt(e) -> Expr:
    return Expr("sqrt", (Expr._wrap(e),))


def expr_vars(e: Expr) -> frozenset:
    """Set of variable indices reachable in the DAG."""
    seen = set()
    out = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.op == "var":
            out.add(node.val)
        else:
            stack.extend(node.args)
    return frozenset(out)


def exprs_equal(a: Expr, b: Expr) -> bool:
    """Structural equality (sharing-insensitive)."""
    if a.op != b.op or a.val != b.val or len(a.args) != len(b.args):
        return False
    return all(exprs_equal(x, y) for x, y in zip(a.args, b.args))


def eval_expr(e: Expr, vals: Sequence[float]) -> float:
    """Interpreted evaluation; raises :class:`EvaluationError` on domain
    violations or non-finite results."""
    memo: dict[int, float] = {}

    def rec(node: Expr) -> float:
        r = memo.get(id(node))
        if r is not None:
            return r
        op = node.op
        try:
            if op == "const":
                r = node.val
            elif op == "var":
                r = vals[node.val]
            elif op == "add":
                r = rec(node.args[0]) + rec(node.args[1])
            elif op == "sub":
                r = rec(node.args[0]) - rec(node.args[1])
            elif op == "mul":
                r = rec(node.args[0]) * rec(node.args[1])
            elif op == "div":
                r = rec(node.args[0]) / rec(node.args[1])
            elif op == "pow":
                r = rec(node.args[0]) ** node.val
            elif op == "neg":
                r = -rec(node.args[0])
            elif op == "sin":
                r = math.sin(rec(node.args[0]))
            elif op == "cos":
                r = math.cos(rec(node.args[0]))
            elif op == "exp":
                r = math.exp(rec(node.args[0]))
            elif op == "log":
                r = math.log(rec(node.args[0]))
            elif op == "sqrt":
                r = math.sqrt(rec(node.args[0]))
            else:
                raise AssertionError(f"unknown op {op!r}")
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise EvaluationError(f"{op}: {err}") from None
        memo[id(node)] = r
        return r

    result = rec(e)
    if not math.isfinite(result):
        raise EvaluationError(f"expression evaluated to {result!r}")
    return result


def expr_bounds(e: Expr, box: Mapping[int, tuple]) -> tuple:
    """Interval bounds of the DAG over a box of per-variable ``(lo, hi)``
    tuples.  Raises :class:`IntervalDomainError` when an operand leaves an
    operation's domain (the caller treats the expression as
    non-simplifiable)."""
    memo: dict[int, tuple] = {}

    def rec(node: Expr) -> tuple:
        r = memo.get(id(node))
        if r is not None:
            return r
        op = node.op
        if op == "const":
            r = (node.val, node.val)
        elif op == "var":
            r = box[node.val]
        elif op == "add":
            r = i_add(rec(node.args[0]), rec(node.args[1]))
        elif op == "sub":
            r = i_sub(rec(node.args[0]), rec(node.args[1]))
        elif op == "mul":
            r = i_mul(rec(node.args[0]), rec(node.args[1]))
        elif op == "div":
            r = i_div(rec(node.args[0]), rec(node.args[1]))
        elif op == "pow":
            r = i_pow(rec(node.args[0]), node.val)
        elif op == "neg":
            r = i_neg(rec(node.args[0]))
        elif op == "sin":
            r = i_sin(rec(node.args[0]))
        elif op == "cos":
            r = i_cos(rec(node.args[0]))
        elif op == "exp":
            r = i_exp(rec(node.args[0]))
        elif op == "log":
            r = i_log(rec(node.args[0]))
        elif op == "sqrt":
            r = i_sqrt(rec(node.args[0]))
        else:
            raise AssertionError(f"unknown op {op!r}")
        memo[id(node)] = r
        return r

    return rec(e)


# ---------------------------------------------------------------------------
# code generation
# ---------------------------------------------------------------------------

_CODEGEN_GLOBALS = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "isfinite": math.isfinite,
    "EvaluationError": EvaluationError,
}

_SEQ = [0]


def _topo_order(root: Expr) -> list[Expr]:
    order: list[Expr] = []
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for a in node.args:
            stack.append((a, False))
    return order


def _emit_forward(order: list[Expr]) -> tuple[list[str], dict[int, str]]:
    lines: list[str] = []
    name: dict[int, str] = {}
    for i, node in enumerate(order):
        op = node.op
        if op == "const":
            name[id(node)] = repr(node.val)
            continue
        n = f"t{i}"
        if op == "var":
            lines.append(f"{n} = x[{node.val}]")
        elif op == "add":
            lines.append(f"{n} = {name[id(node.args[0])]} + {name[id(node.args[1])]}")
        elif op == "sub":
            lines.append(f"{n} = {name[id(node.args[0])]} - {name[id(node.args[1])]}")
        elif op == "mul":
            lines.append(f"{n} = {name[id(node.args[0])]} * {name[id(node.args[1])]}")
        elif op == "div":
            lines.append(f"{n} = {name[id(node.args[0])]} / {name[id(node.args[1])]}")
        elif op == "pow":
            lines.append(f"{n} = {name[id(node.args[0])]} ** {node.val}")
        elif op == "neg":
            lines.append(f"{n} = -{name[id(node.args[0])]}")
        else:  # sin/cos/exp/log/sqrt
            lines.append(f"{n} = {op}({name[id(node.args[0])]})")
        name[id(node)] = n
    return lines, name


def _compile(src: str, fname: str) -> Callable:
    _SEQ[0] += 1
    code = compile(src, f"<term-{_SEQ[0]}>", "exec")
    ns: dict = {}
    exec(code, dict(_CODEGEN_GLOBALS), ns)
    return ns[fname]


def compile_value(expr: Expr) -> Callable[[Sequence[float]], float]:
    """Compile a value function ``f(x) -> float`` over a flat value array
    indexed by variable index."""
    order = _topo_order(expr)
    lines, name = _emit_forward(order)
    body = "\n    ".join(lines) if lines else "pass"
    src = (
        f"def _tv(x):\n"
        f"    {body}\n"
        f"    _r = {name[id(expr)]}\n"
        f"    if not isfinite(_r):\n"
        f"        raise EvaluationError('term evaluated to %r' % (_r,))\n"
        f"    return _r\n"
    )
    return _compile(src, "_tv")


def compile_gradient(expr: Expr, scope_order: Sequence[int]) -> Callable:
    """Compile ``g(x) -> (value, partials)`` with partials aligned to
    ``scope_order``; a reverse sweep over the DAG."""
    order = _topo_order(expr)
    lines, name = _emit_forward(order)

    contrib: dict[int, list[str]] = {id(expr): ["1.0"]}
    back: list[str] = []
    var_adjoints: dict[int, list[str]] = {idx: [] for idx in scope_order}
    for i in range(len(order) - 1, -1, -1):
        node = order[i]
        parts = contrib.get(id(node))
        if not parts:
            continue
        op = node.op
        if op == "const":
            continue
        a = f"a{i}"
        back.append(f"{a} = " + " + ".join(parts))
        if op == "var":
            var_adjoints[node.val].append(a)
            continue
        n = name[id(node)]
        if op == "add":
            l, r = node.args
            contrib.setdefault(id(l), []).append(a)
            contrib.setdefault(id(r), []).append(a)
        elif op == "sub":
            l, r = node.args
            contrib.setdefault(id(l), []).append(a)
            contrib.setdefault(id(r), []).append(f"(-{a})")
        elif op == "mul":
            l, r = node.args
            contrib.setdefault(id(l), []).append(f"{a} * {name[id(r)]}")
            contrib.setdefault(id(r), []).append(f"{a} * {name[id(l)]}")
        elif op == "div":
            l, r = node.args
            rn = name[id(r)]
            contrib.setdefault(id(l), []).append(f"{a} / {rn}")
            contrib.setdefault(id(r), []).append(f"(-{a} * {n} / {rn})")
        elif op == "pow":
            (b,) = node.args
            k = node.val
            if k != 0:
                contrib.setdefault(id(b), []).append(
                    f"{a} * {float(k)!r} * {name[id(b)]} ** {k - 1}")
        elif op == "neg":
            contrib.setdefault(id(node.args[0]), []).append(f"(-{a})")
        elif op == "sin":
            contrib.setdefault(id(node.args[0]), []).append(
                f"{a} * cos({name[id(node.args[0])]})")
        elif op == "cos":
            contrib.setdefault(id(node.args[0]), []).append(
                f"(-{a} * sin({name[id(node.args[0])]}))")
        elif op == "exp":
            contrib.setdefault(id(node.args[0]), []).append(f"{a} * {n}")
        elif op == "log":
            contrib.setdefault(id(node.args[0]), []).append(
                f"{a} / {name[id(node.args[0])]}")
        elif op == "sqrt":
            contrib.setdefault(id(node.args[0]), []).append(f"{a} / (2.0 * {n})")
        else:
            raise AssertionError(f"unknown op {op!r}")

    parts_out = []
    for idx in scope_order:
        adjs = var_adjoints[idx]
        parts_out.append(" + ".join(adjs) if adjs else "0.0")
    tuple_src = ", ".join(parts_out)
    if len(parts_out) == 1:
        tuple_src += ","
    fwd = "\n    ".join(lines) if lines else "pass"
    bwd = "\n    ".join(back) if back else "pass"
    checks = " and ".join(["isfinite(_r)"] + [f"isfinite(_g[{i}])" for i in range(len(parts_out))])
    src = (
        f"def _tg(x):\n"
        f"    {fwd}\n"
        f"    _r = {name[id(expr)]}\n"
        f"    {bwd}\n"
        f"    _g = ({tuple_src})\n"
        f"    if not ({checks}):\n"
        f"        raise EvaluationError('non-finite term value or gradient')\n"
        f"    return _r, _g\n"
    )
    return _compile(src, "_tg")


# ---------------------------------------------------------------------------
# terms and objective functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    """An optimization variable with a box domain."""

    index: int
    name: str
    domain: Interval


class Term:
    """A summand of the objective: an expression over a subset of variables."""

    __slots__ = ("id", "expr", "scope", "scope_order", "_vfn", "_gfn")

    def __init__(self, term_id: int, expr: Expr, scope: Optional[frozenset] = None):
        self.id = term_id
        self.expr = expr
        self.scope = expr_vars(expr) if scope is None else frozenset(scope)
        self.scope_order = tuple(sorted(self.scope))
        self._vfn = None
        self._gfn = None

    @property
    def value_fn(self) -> Callable[[Sequence[float]], float]:
        fn = self._vfn
        if fn is None:
            fn = compile_value(self.expr)
            self._vfn = fn
        return fn

    @property
    def grad_fn(self) -> Callable:
        fn = self._gfn
        if fn is None:
            fn = compile_gradient(self.expr, self.scope_order)
            self._gfn = fn
        return fn

    def __repr__(self):
        return f"Term(id={self.id}, scope={sorted(self.scope)})"


class PartialAssignment(dict):
    """Mapping from variable index to value.  Disjoint compositions commute;
    overlapping compositions must agree."""

    def compose(self, other: Mapping[int, float]) -> "PartialAssignment":
        out = PartialAssignment(self)
        for k, v in other.items():
            if k in out and out[k] != v:
                raise ValueError(f"conflicting assignment for variable {k}: {out[k]} vs {v}")
            out[k] = v
        return out

    def validate(self, f: "ObjectiveFunction") -> None:
        for k, v in self.items():
            variable = f.var_by_index.get(k)
            if variable is None:
                raise KeyError(f"variable index {k} not in function")
            if not variable.domain.contains(v):
                raise ValueError(f"value {v} outside domain of {variable.name}")


class ObjectiveFunction:
    """Immutable sum-of-terms objective: variables with box domains, a term
    list, and a constant offset accumulated from folded terms.

    Freshly built functions have dense 0-based variable indices; restriction
    keeps the surviving variables' original indices so that partial
    assignments compose across the original index space.
    """

    def __init__(self, variables: Sequence[Variable], terms: Sequence[Term],
                 offset: float = 0.0, blocks: Optional[Sequence[Sequence[int]]] = None,
                 index_space: Optional[int] = None):
        self.variables = sorted(variables, key=lambda v: v.index)
        self.terms = list(terms)
        self.offset = float(offset)
        self.blocks = [list(b) for b in blocks] if blocks is not None else None
        self.var_by_index = {v.index: v for v in self.variables}
        if len(self.var_by_index) != len(self.variables):
            raise ValueError("duplicate variable indices")
        top = max((v.index for v in self.variables), default=-1)
        self.index_space = index_space if index_space is not None else top + 1
        if top >= self.index_space:
            raise ValueError("variable index outside index space")
        for t in self.terms:
            missing = t.scope - self.var_by_index.keys()
            if missing:
                raise ValueError(f"term {t.id} references unknown variables {sorted(missing)}")
        self.term_by_id = {t.id: t for t in self.terms}
        if len(self.term_by_id) != len(self.terms):
            raise ValueError("duplicate term ids")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def indices(self) -> list[int]:
        return [v.index for v in self.variables]

    def values_array(self, x: Mapping[int, float]) -> list[float]:
        """Dense value array from a full assignment; checks completeness."""
        vals = [math.nan] * self.index_space
        for v in self.variables:
            if v.index not in x:
                raise KeyError(f"assignment missing variable {v.name} (index {v.index})")
            vals[v.index] = float(x[v.index])
        return vals

    def domain_box(self) -> dict[int, tuple]:
        return {v.index: v.domain.as_tuple() for v in self.variables}

    def __repr__(self):
        return (f"ObjectiveFunction(n_vars={self.n_vars}, n_terms={len(self.terms)}, "
                f"offset={self.offset})")


def evaluate(f: ObjectiveFunction, x: Mapping[int, float],
             counter: Optional[EvalCounter] = None) -> float:
    """Value of ``f`` at a full assignment: offset plus the sum of terms.

    Domain violations and non-finite values raise :class:`EvaluationError`;
    NaN is never returned.
    """
    vals = f.values_array(x)
    if counter is not None:
        counter.values += len(f.terms)
    total = f.offset
    try:
        for t in f.terms:
            total += t.value_fn(vals)
    except (ValueError, ZeroDivisionError, OverflowError) as err:
        raise EvaluationError(str(err)) from None
    if not math.isfinite(total):
        raise EvaluationError(f"objective evaluated to {total!r}")
    return total


def gradient(f: ObjectiveFunction, x: Mapping[int, float], subset: Iterable[int],
             counter: Optional[EvalCounter] = None) -> np.ndarray:
    """Analytic partial derivatives over ``subset`` (sorted order).

    Only terms whose scope intersects the subset are evaluated.
    """
    order = sorted(subset)
    for idx in order:
        if idx not in f.var_by_index:
            raise KeyError(f"variable index {idx} not in function")
    pos = {idx: i for i, idx in enumerate(order)}
    sub = set(order)
    vals = f.values_array(x)
    out = np.zeros(len(order))
    n = 0
    try:
        for t in f.terms:
            if not (t.scope & sub):
                continue
            n += 1
            _, parts = t.grad_fn(vals)
            for idx, g in zip(t.scope_order, parts):
                p = pos.get(idx)
                if p is not None:
                    out[p] += g
    except (ValueError, ZeroDivisionError, OverflowError) as err:
        raise EvaluationError(str(err)) from None
    if counter is not None:
        counter.grads += n
    return out


def _subst(e: Expr, rho: Mapping[int, float], memo: dict) -> Expr:
    r = memo.get(id(e))
    if r is not None:
        return r
    if e.op == "var":
        r = const(rho[e.val]) if e.val in rho else e
    elif e.op in ("const",):
        r = e
    else:
        new_args = tuple(_subst(a, rho, memo) for a in e.args)
        if all(na is a for na, a in zip(new_args, e.args)):
            r = e
        else:
            r = Expr(e.op, new_args, e.val)
    memo[id(e)] = r
    return r


def restrict(f: ObjectiveFunction, rho: Mapping[int, float]) -> ObjectiveFunction:
    """Restriction of ``f`` by a partial assignment: assigned variables are
    substituted away, terms whose scope empties fold into the offset.

    Surviving variables keep their original indices, so for any completion
    ``y``: ``evaluate(restrict(f, rho), y) == evaluate(f, {**rho, **y})``.
    """
    for idx in rho:
        if idx not in f.var_by_index:
            raise KeyError(f"restriction assigns unknown variable index {idx}")
    keep = [v for v in f.variables if v.index not in rho]
    memo: dict = {}
    new_terms = []
    offset = f.offset
    for t in f.terms:
        if not (t.scope & rho.keys()):
            new_terms.append(t)
            continue
        new_expr = _subst(t.expr, rho, memo)
        new_scope = t.scope - rho.keys()
        if new_scope:
            new_terms.append(Term(t.id, new_expr, new_scope))
        else:
            offset += eval_expr(new_expr, ())
    blocks = None
    if f.blocks is not None:
        blocks = [[i for i in b if i not in rho] for b in f.blocks]
        blocks = [b for b in blocks if b]
    return ObjectiveFunction(keep, new_terms, offset, blocks, index_space=f.index_space)


def term_bounds(t: Term, box: Mapping[int, object],
                counter: Optional[EvalCounter] = None) -> Interval:
    """Sound interval enclosure of a term over a per-variable box.

    ``box`` maps variable index to an :class:`Interval` or ``(lo, hi)``
    tuple and must cover the term's scope.  Raises
    :class:`IntervalDomainError` when an operand leaves an operation's
    domain, which callers treat as "not simplifiable".
    """
    tbox: dict[int, tuple] = {}
    for idx in t.scope:
        b = box[idx]
        tbox[idx] = b.as_tuple() if isinstance(b, Interval) else (b[0], b[1])
    if counter is not None:
        counter.bounds += 1
    lo, hi = expr_bounds(t.expr, tbox)
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# fast evaluation view for optimizers
# ---------------------------------------------------------------------------

class SubFunction:
    """Evaluation view of an objective over a free-variable subset, with the
    remaining variables pinned.

    This is the hot path used by the optimizers: values and gradients are
    computed by the terms' compiled functions over one scratch array, and
    every term touched is charged to the counter (and checked against the
    budget, if any).
    """

    def __init__(self, f: ObjectiveFunction, free: Iterable[int],
                 fixed: Optional[Mapping[int, float]] = None,
                 term_ids: Optional[Iterable[int]] = None,
                 offset: float = 0.0,
                 counter: Optional[EvalCounter] = None,
                 budget: Optional[Budget] = None):
        self.objective = f
        self.free = tuple(sorted(set(free)))
        self.offset = float(offset)
        self.counter = counter if counter is not None else EvalCounter()
        self.budget = budget
        pos = {idx: i for i, idx in enumerate(self.free)}
        self._vals = [math.nan] * f.index_space
        fixed = fixed or {}
        for idx, v in fixed.items():
            self._vals[idx] = float(v)
        if term_ids is None:
            terms = [t for t in f.terms if t.scope & set(self.free)]
        else:
            terms = [f.term_by_id[i] for i in sorted(term_ids)]
        for t in terms:
            for idx in t.scope:
                if idx not in pos and idx not in fixed:
                    raise KeyError(f"term {t.id} needs variable {idx}, neither free nor fixed")
        self.terms = terms
        self._plan = [(t.value_fn, t) for t in terms]
        self._grad_plan = [
            (t.grad_fn, tuple(pos.get(idx, -1) for idx in t.scope_order), t)
            for t in terms
        ]

    @property
    def dim(self) -> int:
        return len(self.free)

    def _load(self, xfree) -> list[float]:
        vals = self._vals
        for i, idx in enumerate(self.free):
            vals[idx] = xfree[i]
        return vals

    def value(self, xfree) -> float:
        if self.budget is not None:
            self.budget.check()
        vals = self._load(xfree)
        self.counter.values += len(self._plan)
        total = self.offset
        try:
            for fn, _t in self._plan:
                total += fn(vals)
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise EvaluationError(str(err)) from None
        if not math.isfinite(total):
            raise EvaluationError(f"subfunction evaluated to {total!r}")
        return total

    def value_and_grad(self, xfree) -> tuple[float, np.ndarray]:
        if self.budget is not None:
            self.budget.check()
        vals = self._load(xfree)
        self.counter.grads += len(self._grad_plan)
        total = self.offset
        out = np.zeros(len(self.free))
        try:
            for fn, positions, _t in self._grad_plan:
                v, parts = fn(vals)
                total += v
                for p, g in zip(positions, parts):
                    if p >= 0:
                        out[p] += g
        except (ValueError, ZeroDivisionError, OverflowError) as err:
            raise EvaluationError(str(err)) from None
        if not math.isfinite(total):
            raise EvaluationError(f"subfunction evaluated to {total!r}")
        return total, out

    def gradient(self, xfree) -> np.ndarray:
        return self.value_and_grad(xfree)[1]
