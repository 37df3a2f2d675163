"""Line-oriented problem text format.

::

    # comment
    var x in [-1, 1]
    var y in [-inf, inf]
    term x^2 + sin(y) * 0.5

One ``term`` per line; expressions use infix ``+ - * / ^`` with parentheses
and the functions ``sin cos exp log sqrt``.  ``^`` takes a literal integer
exponent and binds tighter than unary minus.
"""

from __future__ import annotations

import math
import re
from typing import Optional

from .expr import Expr, ObjectiveFunction, Term, Variable, const, var
from .interval import Interval

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),\[\]]))"
)


class ParseError(ValueError):
    """Syntax or semantic error in problem text, with position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class _Tokens:
    def __init__(self, text: str, line_no: int, col_offset: int = 0):
        self.line_no = line_no
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                col = pos + 1
                while col <= len(text) and text[col - 1].isspace():
                    col += 1
                raise ParseError(f"unexpected character {text[pos:].strip()[0]!r}",
                                 line_no, col + col_offset)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind) + 1 + col_offset))
            pos = m.end()
        self.i = 0

    def peek(self) -> Optional[tuple[str, str, int]]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> Optional[tuple[str, str, int]]:
        t = self.peek()
        if t is not None:
            self.i += 1
        return t

    def expect_op(self, op: str, what: str):
        t = self.next()
        if t is None or t[0] != "op" or t[1] != op:
            col = t[2] if t is not None else self.end_column()
            raise ParseError(f"expected {what!r}", self.line_no, col)
        return t

    def end_column(self) -> int:
        if self.tokens:
            last = self.tokens[-1]
            return last[2] + len(last[1])
        return 1

    def error(self, message: str, tok=None):
        col = tok[2] if tok is not None else self.end_column()
        raise ParseError(message, self.line_no, col)


class _ExprParser:
    """Recursive descent over one term line.

    Precedence (loosest to tightest): ``+ -``, ``* /``, unary ``-``, ``^``.
    """

    def __init__(self, toks: _Tokens, names: dict[str, int]):
        self.toks = toks
        self.names = names

    def parse(self) -> Expr:
        e = self.sum()
        t = self.toks.peek()
        if t is not None:
            self.toks.error(f"unexpected trailing {t[1]!r}", t)
        return e

    def sum(self) -> Expr:
        e = self.product()
        while True:
            t = self.toks.peek()
            if t is None or t[0] != "op" or t[1] not in "+-":
                return e
            self.toks.next()
            rhs = self.product()
            e = e + rhs if t[1] == "+" else e - rhs

    def product(self) -> Expr:
        e = self.unary()
        while True:
            t = self.toks.peek()
            if t is None or t[0] != "op" or t[1] not in "*/":
                return e
            self.toks.next()
            rhs = self.unary()
            e = e * rhs if t[1] == "*" else e / rhs

    def unary(self) -> Expr:
        t = self.toks.peek()
        if t is not None and t[0] == "op" and t[1] == "-":
            self.toks.next()
            inner = self.unary()
            if inner.op == "const":  # fold so printed negatives round-trip
                return const(-inner.val)
            return -inner
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while True:
            t = self.toks.peek()
            if t is None or t[0] != "op" or t[1] != "^":
                return e
            self.toks.next()
            e = e ** self._int_exponent()

    def _int_exponent(self) -> int:
        sign = 1
        t = self.toks.peek()
        if t is not None and t[0] == "op" and t[1] == "-":
            self.toks.next()
            sign = -1
        t = self.toks.next()
        if t is None or t[0] != "num":
            self.toks.error("expected integer exponent after '^'", t)
        if re.search(r"[.eE]", t[1]):
            self.toks.error(f"exponent must be an integer literal, got {t[1]!r}", t)
        return sign * int(t[1])

    def atom(self) -> Expr:
        t = self.toks.next()
        if t is None:
            self.toks.error("unexpected end of expression")
        kind, text, col = t
        if kind == "num":
            return const(float(text))
        if kind == "name":
            if text in _FUNCTIONS:
                self.toks.expect_op("(", f"( after {text}")
                inner = self.sum()
                self.toks.expect_op(")", ")")
                return Expr(text, (inner,))
            if text not in self.names:
                self.toks.error(f"undeclared variable {text!r}", t)
            return var(self.names[text])
        if kind == "op" and text == "(":
            inner = self.sum()
            self.toks.expect_op(")", ")")
            return inner
        self.toks.error(f"unexpected token {text!r}", t)


def _parse_bound(toks: _Tokens) -> float:
    sign = 1.0
    t = toks.peek()
    if t is not None and t[0] == "op" and t[1] == "-":
        toks.next()
        sign = -1.0
    t = toks.next()
    if t is None:
        toks.error("expected domain bound")
    if t[0] == "num":
        return sign * float(t[1])
    if t[0] == "name" and t[1] == "inf":
        return sign * math.inf
    toks.error(f"expected number or inf, got {t[1]!r}", t)


def parse_problem(text: str) -> ObjectiveFunction:
    """Parse problem text into an :class:`ObjectiveFunction`.

    Raises :class:`ParseError` with line and column on syntax errors,
    undeclared variables, and empty domains.
    """
    names: dict[str, int] = {}
    variables: list[Variable] = []
    terms: list[Term] = []
    offset = 0.0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        if stripped.startswith("var ") or stripped == "var":
            toks = _Tokens(line[indent + 3:], line_no, indent + 3)
            t = toks.next()
            if t is None or t[0] != "name":
                toks.error("expected variable name after 'var'", t)
            name = t[1]
            if name in _FUNCTIONS or name == "inf":
                toks.error(f"{name!r} is reserved", t)
            if name in names:
                toks.error(f"duplicate variable {name!r}", t)
            t = toks.next()
            if t is None or t[0] != "name" or t[1] != "in":
                toks.error("expected 'in' after variable name", t)
            toks.expect_op("[", "[")
            lo = _parse_bound(toks)
            toks.expect_op(",", ",")
            hi = _parse_bound(toks)
            toks.expect_op("]", "]")
            if lo > hi:
                raise ParseError(f"variable {name!r} has empty domain [{lo}, {hi}]",
                                 line_no, 1)
            idx = len(variables)
            names[name] = idx
            variables.append(Variable(idx, name, Interval(lo, hi)))
        elif stripped.startswith("term ") or stripped == "term":
            toks = _Tokens(line[indent + 4:], line_no, indent + 4)
            expr = _ExprParser(toks, names).parse()
            terms.append(Term(len(terms), expr))
        else:
            word = stripped.split()[0]
            raise ParseError(f"expected 'var' or 'term', got {word!r}", line_no,
                             indent + 1)
    return ObjectiveFunction(variables, terms, offset)


# ---------------------------------------------------------------------------
# pretty printing
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _num_to_str(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return repr(v)


def expr_to_str(e: Expr, context: int = 0) -> str:
    op = e.op
    if op == "const":
        s = _num_to_str(e.val)
        return f"({s})" if (e.val < 0 and context >= 3) else s
    if op == "var":
        return f"@{e.val}"  # replaced by the variable name by problem_to_str
    if op in ("sin", "cos", "exp", "log", "sqrt"):
        return f"{op}({expr_to_str(e.args[0], 0)})"
    if op == "neg":
        s = "-" + expr_to_str(e.args[0], 4)
        return f"({s})" if context > 3 else s
    if op == "pow":
        s = expr_to_str(e.args[0], 5) + "^" + str(e.val)
        return f"({s})" if context > 4 else s
    sym = {"add": " + ", "sub": " - ", "mul": " * ", "div": " / "}[op]
    p = _PREC[op]
    s = expr_to_str(e.args[0], p) + sym + expr_to_str(e.args[1], p + 1)
    return f"({s})" if context > p else s


def problem_to_str(f: ObjectiveFunction) -> str:
    """Render a function back to problem text (inverse of
    :func:`parse_problem` up to constant folding of unary minus)."""
    lines = []
    name_of = {v.index: v.name for v in f.variables}
    for v in f.variables:
        lines.append(f"var {v.name} in [{_num_to_str(v.domain.lo)},{_num_to_str(v.domain.hi)}]")
    for t in f.terms:
        s = expr_to_str(t.expr)
        s = re.sub(r"@(\d+)", lambda m: name_of[int(m.group(1))], s)
        lines.append(f"term {s}")
    if f.offset != 0.0:
        lines.append(f"term {_num_to_str(f.offset)}")
    return "\n".join(lines) + "\n"
