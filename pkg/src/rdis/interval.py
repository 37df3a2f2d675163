"""Sound interval arithmetic over the extended reals.

Intervals are closed sets of *finite* reals; an endpoint may be -inf/+inf
for half-infinite or unbounded intervals.  All operations are sound in the
inclusion sense: for every pointwise input in the operand intervals, the
true result lies in the returned interval (up to the rounding of the
underlying float operations -- no directed rounding is performed).

The low-level functions work on plain ``(lo, hi)`` tuples so that the
expression-tree bound propagator can avoid object overhead; the
:class:`Interval` class is the public wrapper.
"""

from __future__ import annotations

import math

INF = math.inf
_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


class IntervalDomainError(ValueError):
    """An interval operand leaves the domain of the operation.

    Raised for log over an interval containing values <= 0, sqrt over an
    interval containing negatives, and definite division by [0, 0].  In
    term-bound computation this signals "not simplifiable".
    """


def _validate(lo: float, hi: float) -> None:
    if math.isnan(lo) or math.isnan(hi):
        raise ValueError(f"interval endpoint is NaN: [{lo}, {hi}]")
    if lo > hi:
        raise ValueError(f"empty interval: lo={lo} > hi={hi}")
    if lo == INF or hi == -INF:
        raise ValueError(f"interval has no finite elements: [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# tuple-level arithmetic
# ---------------------------------------------------------------------------

def i_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def i_sub(a, b):
    return (a[0] - b[1], a[1] - b[0])


def i_neg(a):
    return (-a[1], -a[0])


def _xmul(x: float, y: float) -> float:
    # 0 * inf -> 0: interval elements are finite reals, so a zero factor
    # forces a zero product regardless of the other interval's endpoints.
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y


def i_mul(a, b):
    p1 = _xmul(a[0], b[0])
    p2 = _xmul(a[0], b[1])
    p3 = _xmul(a[1], b[0])
    p4 = _xmul(a[1], b[1])
    return (min(p1, p2, p3, p4), max(p1, p2, p3, p4))


def _xdiv(x: float, y: float) -> float:
    # y is never 0 here; inf/inf resolved by sign (sound for hull bounds).
    if math.isinf(x) and math.isinf(y):
        return INF if (x > 0) == (y > 0) else -INF
    return x / y


def i_div(a, b):
    c, d = b
    if c == 0.0 and d == 0.0:
        raise IntervalDomainError("division by the point interval [0, 0]")
    if c > 0.0 or d < 0.0:
        q1 = _xdiv(a[0], c)
        q2 = _xdiv(a[0], d)
        q3 = _xdiv(a[1], c)
        q4 = _xdiv(a[1], d)
        return (min(q1, q2, q3, q4), max(q1, q2, q3, q4))
    # denominator straddles or touches zero: result is unbounded on at
    # least one side; return the (possibly two-ray) hull.
    lo, hi = a
    if lo <= 0.0 <= hi:
        return (-INF, INF)
    if lo > 0.0:  # numerator strictly positive
        if c == 0.0:
            return (_xdiv(lo, d), INF)
        if d == 0.0:
            return (-INF, _xdiv(lo, c))
        return (-INF, INF)
    # numerator strictly negative
    if c == 0.0:
        return (-INF, _xdiv(hi, d))
    if d == 0.0:
        return (_xdiv(hi, c), INF)
    return (-INF, INF)


def _fpow(x: float, n: int) -> float:
    try:
        return x ** n
    except OverflowError:
        if x > 0 or n % 2 == 0:
            return INF
        return -INF
    except ZeroDivisionError:
        raise IntervalDomainError(f"0.0 raised to negative power {n}") from None


def i_pow(a, n: int):
    if n == 0:
        return (1.0, 1.0)
    if n < 0:
        return i_div((1.0, 1.0), i_pow(a, -n))
    lo, hi = a
    if n % 2 == 1:
        return (_fpow(lo, n), _fpow(hi, n))
    if lo >= 0.0:
        return (_fpow(lo, n), _fpow(hi, n))
    if hi <= 0.0:
        return (_fpow(hi, n), _fpow(lo, n))
    return (0.0, max(_fpow(lo, n), _fpow(hi, n)))


def _trig_bounds(a, fn, max_crits, min_crits):
    lo, hi = a
    if math.isinf(lo) or math.isinf(hi) or hi - lo >= _TWO_PI:
        return (-1.0, 1.0)
    flo, fhi = fn(lo), fn(hi)
    vmin, vmax = min(flo, fhi), max(flo, fhi)
    # shift lo into [0, 2*pi); the small slack keeps the containment test
    # sound when the reduction loses precision for large arguments.
    k = math.floor(lo / _TWO_PI)
    s = lo - k * _TWO_PI
    t = hi - k * _TWO_PI
    eps = 1e-9 * (1.0 + abs(lo))
    for c in max_crits:
        if s - eps <= c <= t + eps:
            vmax = 1.0
            break
    for c in min_crits:
        if s - eps <= c <= t + eps:
            vmin = -1.0
            break
    return (vmin, vmax)


_SIN_MAX = (_HALF_PI, _HALF_PI + _TWO_PI)
_SIN_MIN = (3.0 * _HALF_PI, 3.0 * _HALF_PI + _TWO_PI)
_COS_MAX = (0.0, _TWO_PI, 2.0 * _TWO_PI)
_COS_MIN = (math.pi, math.pi + _TWO_PI)


def i_sin(a):
    return _trig_bounds(a, math.sin, _SIN_MAX, _SIN_MIN)


def i_cos(a):
    return _trig_bounds(a, math.cos, _COS_MAX, _COS_MIN)


def _fexp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def i_exp(a):
    return (_fexp(a[0]), _fexp(a[1]))


def i_log(a):
    if a[0] <= 0.0:
        raise IntervalDomainError(f"log over interval [{a[0]}, {a[1]}] containing values <= 0")
    return (math.log(a[0]), math.log(a[1]) if not math.isinf(a[1]) else INF)


def i_sqrt(a):
    if a[0] < 0.0:
        raise IntervalDomainError(f"sqrt over interval [{a[0]}, {a[1]}] containing negatives")
    return (math.sqrt(a[0]), math.sqrt(a[1]) if not math.isinf(a[1]) else INF)


# ---------------------------------------------------------------------------
# public wrapper
# ---------------------------------------------------------------------------

class Interval:
    """Closed interval ``[lo, hi]``; ``lo <= hi``, endpoints may be infinite."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float):
        lo = float(lo)
        hi = float(hi)
        _validate(lo, hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, *args):
        raise AttributeError("Interval is immutable")

    @classmethod
    def point(cls, v: float) -> "Interval":
        return cls(v, v)

    @classmethod
    def from_tuple(cls, t) -> "Interval":
        return cls(t[0], t[1])

    def as_tuple(self):
        return (self.lo, self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            raise ValueError("midpoint of an unbounded interval")
        return 0.5 * (self.hi + self.lo)

    def is_finite(self) -> bool:
        return not (math.isinf(self.lo) or math.isinf(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    # arithmetic ------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Interval):
            return other.as_tuple()
        return (float(other), float(other))

    def __add__(self, other):
        return Interval.from_tuple(i_add(self.as_tuple(), self._coerce(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Interval.from_tuple(i_sub(self.as_tuple(), self._coerce(other)))

    def __rsub__(self, other):
        return Interval.from_tuple(i_sub(self._coerce(other), self.as_tuple()))

    def __mul__(self, other):
        return Interval.from_tuple(i_mul(self.as_tuple(), self._coerce(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Interval.from_tuple(i_div(self.as_tuple(), self._coerce(other)))

    def __rtruediv__(self, other):
        return Interval.from_tuple(i_div(self._coerce(other), self.as_tuple()))

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("interval power requires an integer exponent")
        return Interval.from_tuple(i_pow(self.as_tuple(), n))

    def sin(self) -> "Interval":
        return Interval.from_tuple(i_sin(self.as_tuple()))

    def cos(self) -> "Interval":
        return Interval.from_tuple(i_cos(self.as_tuple()))

    def exp(self) -> "Interval":
        return Interval.from_tuple(i_exp(self.as_tuple()))

    def log(self) -> "Interval":
        return Interval.from_tuple(i_log(self.as_tuple()))

    def sqrt(self) -> "Interval":
        return Interval.from_tuple(i_sqrt(self.as_tuple()))

    # misc ------------------------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"
