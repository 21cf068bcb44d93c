"""Liouville numbers alpha = sum 10^(-a_k) and certified rational witnesses.

All certification is exact.  Truncation denominators are 10^(a_k) with a_k
possibly in the millions, so comparisons between powers of ten are made on
the integer exponents instead of on materialised integers.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from mpmath import mpf

from .errors import InvalidSchedule, ScheduleExhausted
from .values import log10_int

DEFAULT_PREFIX = 12
EXTEND_BY = 4


def _factorial_next(history):
    return math.factorial(len(history) + 1)


def _tower_next(history):
    if not history:
        return 2
    last = history[-1]
    if last > 1 << 20:
        raise InvalidSchedule("tower schedule cannot be extended further")
    return 2 ** last


def _minimal_next(history):
    k = len(history) + 1
    return k * history[-1] if history else 1


class LiouvilleNumber:
    """alpha = sum_{k>=1} 10^(-a_k), with a_{k+1} >= (k+1) a_k."""

    def __init__(self, schedule, kind="custom", rule=None):
        a = [int(v) for v in schedule]
        _check_growth(a)
        self.a = tuple(a)
        self.kind = kind
        self._rule = rule or _minimal_next

    @property
    def prefix_length(self):
        return len(self.a)

    def extend(self, by=EXTEND_BY):
        a = list(self.a)
        for _ in range(by):
            a.append(self._rule(a))
        return LiouvilleNumber(a, self.kind, self._rule)

    def truncation(self, k):
        """p/q = sum_{j<=k} 10^(-a_j); needs a_{k+1} for the tail bound."""
        if k < 1:
            raise ValueError("truncation index starts at 1")
        if k + 1 > len(self.a):
            raise ScheduleExhausted(f"need a_{k + 1} but prefix has length {len(self.a)}")
        return Truncation(self.a[:k + 1], k)

    def to_mpf(self):
        return sum((mpf(10) ** (-e) for e in self.a), mpf(0))

    def descriptor(self):
        if self.kind in ("factorial", "tower"):
            return {"kind": self.kind}
        return {"kind": "custom", "a": list(self.a)}

    def __repr__(self):
        return f"LiouvilleNumber({self.kind}, a={self.a[:6]}{'...' if len(self.a) > 6 else ''})"


def _check_growth(a):
    if not a or a[0] < 1:
        raise InvalidSchedule("schedule must start with a positive integer")
    for k in range(1, len(a)):
        if a[k] < (k + 1) * a[k - 1]:
            raise InvalidSchedule(f"growth violated: a_{k + 1}={a[k]} < {k + 1}*a_{k}={a[k - 1]}")


def make_liouville(kind="factorial", a=None, prefix=DEFAULT_PREFIX):
    if kind == "factorial":
        return LiouvilleNumber([math.factorial(k) for k in range(1, prefix + 1)], "factorial", _factorial_next)
    if kind == "tower":
        a = [2]
        while len(a) < 5:
            a.append(_tower_next(a))
        return LiouvilleNumber(a, "tower", _tower_next)
    if kind == "custom":
        if a is None:
            raise InvalidSchedule("custom schedule needs a list a")
        return LiouvilleNumber(a, "custom")
    raise InvalidSchedule(f"unknown schedule kind {kind!r}")


def from_descriptor(d):
    return make_liouville(d.get("kind", "factorial"), d.get("a"))


@dataclass(frozen=True)
class Truncation:
    """The k-th truncation, its exponent data and lazily built exact value."""

    exps: tuple  # a_1..a_{k+1}
    k: int

    @property
    def a_k(self):
        return self.exps[self.k - 1]

    @property
    def a_next(self):
        return self.exps[self.k]

    @cached_property
    def q(self):
        return 10 ** self.a_k

    @cached_property
    def p(self):
        ak = self.a_k
        return sum(10 ** (ak - e) for e in self.exps[: self.k])

    @cached_property
    def fraction(self):
        # p ends in the digit 1, so p/q is already in lowest terms
        return Fraction(self.p, self.q, _normalize=False)

    def to_mpf(self):
        return sum((mpf(10) ** (-e) for e in self.exps[: self.k]), mpf(0))

    def negated(self):
        return _Negated(self)

    def log10_q(self):
        return self.a_k

    def log10_tail_bound(self):
        """log10 of the certified tail bound 2*10^(-a_{k+1})."""
        return math.log10(2) - self.a_next

    def render(self, max_digits=2000):
        if self.a_k <= max_digits:
            return f"{self.p}/{self.q}"
        return None

    def to_json(self):
        d = {"k": self.k, "a_k": self.a_k}
        r = self.render()
        if r is not None:
            d["value"] = r
        return d

    def __str__(self):
        return self.render() or f"trunc(k={self.k}, q=10^{self.a_k})"


class _Negated:
    def __init__(self, t):
        self.t = t

    def to_mpf(self):
        return -self.t.to_mpf()

    def negated(self):
        return self.t

    def __str__(self):
        return f"-{self.t}"


@dataclass(frozen=True)
class RationalWitness:
    truncation: Truncation
    epsilon: Fraction
    N: int
    certified: bool = field(default=False)

    @property
    def p(self):
        return self.truncation.p

    @property
    def q(self):
        return self.truncation.q

    @property
    def k(self):
        return self.truncation.k

    def with_N(self, N):
        return RationalWitness(self.truncation, self.epsilon, N, False)

    def with_epsilon(self, eps):
        return RationalWitness(self.truncation, Fraction(eps), self.N, False)


def _pow10_less(c1, e1, c2, e2):
    """Exact test c1*10^e1 < c2*10^e2 for positive integers c and integer e."""
    d = e2 - e1
    if d >= 0:
        # c1 < c2 * 10^d
        if d > len(str(c1)) + 1:
            return True
        return c1 < c2 * 10 ** d
    d = -d
    if d > len(str(c2)) + 1:
        return False
    return c1 * 10 ** d < c2


def certify(trunc, epsilon, N):
    """Exact check of |alpha - p/q| < eps q^(-N) via the tail 2*10^(-a_{k+1}).

    2 * 10^(-a_{k+1}) < (num/den) 10^(-N a_k)  <=>  2 den 10^(N a_k) < num 10^(a_{k+1})
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        return False
    return _pow10_less(2 * eps.denominator, N * trunc.a_k, eps.numerator, trunc.a_next)


def find_rational(alpha, epsilon, N, q_min=1, previous=None):
    """First truncation with q >= q_min satisfying the certified inequality.

    ``previous`` (a witness or truncation) enforces strict approach: the
    index must exceed the previous one, which for truncations is equivalent
    to |alpha - alpha_{n+1}| < |alpha - alpha_n|.
    """
    eps = Fraction(epsilon)
    if eps <= 0 or N < 0:
        raise ValueError("need epsilon > 0 and N >= 0")
    kmin = 1
    if previous is not None:
        prev = previous.truncation if isinstance(previous, RationalWitness) else previous
        kmin = prev.k + 1
    lq = _log10_floor(q_min)
    for k in range(kmin, len(alpha.a)):
        t = alpha.truncation(k)
        # q = 10^(a_k) >= q_min
        if t.a_k < lq[0] or (t.a_k == lq[0] and lq[1] and 10 ** t.a_k < q_min):
            continue
        if certify(t, eps, N):
            return RationalWitness(t, eps, int(N), True)
    raise ScheduleExhausted("schedule prefix exhausted before certification")


def _log10_floor(q):
    """(e, inexact) with 10^e <= q, used to skip truncations quickly."""
    q = int(q)
    if q <= 1:
        return (0, False)
    e = int(log10_int(q))
    while 10 ** e > q:
        e -= 1
    return (e, 10 ** e != q)


def find_rational_extending(alpha, epsilon, N, q_min=1, previous=None, max_extensions=3):
    """find_rational that extends the schedule on demand; returns (witness, alpha)."""
    for _ in range(max_extensions + 1):
        try:
            return find_rational(alpha, epsilon, N, q_min, previous), alpha
        except ScheduleExhausted:
            try:
                alpha = alpha.extend()
            except InvalidSchedule as exc:
                raise ScheduleExhausted(str(exc)) from exc
    raise ScheduleExhausted(f"no certified truncation within {max_extensions} extensions")


def verify_witness(alpha, witness):
    t = witness.truncation
    if t.exps != alpha.a[: t.k + 1]:
        return False
    return certify(t, witness.epsilon, witness.N)


def distance_order(t1, t2):
    """True when |alpha - t2| < |alpha - t1| (deeper truncation is closer)."""
    return t2.k > t1.k


def delta_log10_upper(t):
    """log10 of a bound on |alpha_n - alpha_{n+1}| for any deeper truncation."""
    return t.log10_tail_bound()
