"""Truncated Taylor series (jets) with the arithmetic needed for composition.

A ``Series`` stores normalised Taylor coefficients c_k = f^(k)(x0)/k!.
Coefficients are mpf numbers, or themselves ``Series`` when a jet in a
second variable is transported (the flow family does this).
"""
import math

import mpmath
from mpmath import mpf


def _exp(a):
    return a.exp() if isinstance(a, Series) else mpmath.exp(a)


def _inv(a):
    return a.recip() if isinstance(a, Series) else 1 / a


def _zero_like(a):
    if isinstance(a, Series):
        return Series.constant(0, a.order)
    return mpf(0)


class Series:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = list(coeffs)

    @classmethod
    def constant(cls, value, order):
        return cls([value if not isinstance(value, int) else mpf(value)] + [mpf(0)] * order)

    @classmethod
    def variable(cls, x0, order):
        """The jet of the identity map at x0."""
        c = [x0]
        if order >= 1:
            c.append(mpf(1))
        c.extend(mpf(0) for _ in range(order - 1))
        return cls(c)

    @property
    def order(self):
        return len(self.c) - 1

    def __len__(self):
        return len(self.c)

    def truncate(self, order):
        return Series(self.c[: order + 1])

    # ring operations ---------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Series):
            n = min(len(self.c), len(other.c))
            return Series([self.c[i] + other.c[i] for i in range(n)])
        c = list(self.c)
        c[0] = c[0] + other
        return Series(c)

    __radd__ = __add__

    def __neg__(self):
        return Series([-a for a in self.c])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Series):
            a, b = self.c, other.c
            n = min(len(a), len(b))
            out = []
            for k in range(n):
                s = a[0] * b[k]
                for i in range(1, k + 1):
                    s = s + a[i] * b[k - i]
                out.append(s)
            return Series(out)
        return Series([a * other for a in self.c])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * other.recip()
        return Series([a / other for a in self.c])

    def __rtruediv__(self, other):
        return self.recip() * other

    def recip(self):
        a = self.c
        inv0 = _inv(a[0])
        b = [inv0]
        for k in range(1, len(a)):
            s = a[1] * b[k - 1]
            for j in range(2, k + 1):
                s = s + a[j] * b[k - j]
            b.append(-(s * inv0))
        return Series(b)

    def exp(self):
        a = self.c
        e = [_exp(a[0])]
        for k in range(1, len(a)):
            s = a[1] * e[k - 1]
            for j in range(2, k + 1):
                s = s + (a[j] * j) * e[k - j]
            e.append(s / k)
        return Series(e)

    def shift(self):
        """Series without its constant term (f - f(x0))."""
        return Series([_zero_like(self.c[0])] + self.c[1:])

    def derivative(self):
        """Jet of f' at x0 (order drops by one)."""
        return Series([self.c[k] * k for k in range(1, len(self.c))])

    # composition ------------------------------------------------------
    def compose(self, inner):
        """self(inner) where self is expanded at inner.c[0]."""
        n = min(len(self.c), len(inner.c))
        d = inner.shift().truncate(n - 1)
        out = Series.constant(self.c[n - 1], n - 1)
        for k in range(n - 2, -1, -1):
            out = out * d
            out.c[0] = out.c[0] + self.c[k]
        return out

    def revert(self):
        """Jet of the inverse map at self.c[0], expanded at y0 = f(x0).

        Solves g(f(x0+e)) = x0+e coefficient by coefficient.
        """
        n = len(self.c)
        f1 = self.c[1]
        if f1 == 0:
            raise ZeroDivisionError("series reversion needs nonzero slope")
        # h(e) = f(x0+e) - y0 ; find G with G(h(e)) = e, G(0)=0
        h = self.shift()
        g = [mpf(0), 1 / f1] + [mpf(0)] * (n - 2)
        # powers of h
        powers = [None, h]
        for k in range(2, n):
            powers.append(powers[-1] * h)
        for k in range(2, n):
            s = mpf(0)
            for j in range(1, k):
                s += g[j] * powers[j].c[k]
            # contribution of g_k * h^k at order k is g_k * f1^k
            g[k] = -s / f1 ** k
        g[0] = None
        return g

    def inverse_at(self, x0):
        """Jet of f^{-1} at y0 = self.c[0] given x0 = f^{-1}(y0)."""
        g = self.revert()
        g[0] = x0
        return Series(g)

    # views ------------------------------------------------------------
    def derivatives(self):
        """Derivative values f^(k)(x0) for k = 0..order."""
        return [self.c[k] * math.factorial(k) for k in range(len(self.c))]

    def __repr__(self):
        return "Series(" + ", ".join(mpmath.nstr(a, 8) if not isinstance(a, Series) else repr(a) for a in self.c) + ")"
