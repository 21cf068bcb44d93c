"""Scalar plumbing: precision control and exact-or-symbolic parameter values.

Parameters of the families are kept exact when possible (``Fraction``) or as
``Pow10`` (an exact power of ten with rational exponent) so that giant
denominators never need to be materialised as decimal strings.
"""
import os
from contextlib import contextmanager
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

DEFAULT_PRECISION = int(os.environ.get("CONJLAB_PRECISION", "256"))
mp.prec = DEFAULT_PRECISION


@contextmanager
def precision(bits):
    """Temporarily set the working precision in bits (at least 64)."""
    bits = max(64, int(bits))
    old = mp.prec
    mp.prec = bits
    try:
        yield
    finally:
        mp.prec = old


class Pow10:
    """The exact value 10**exponent with a rational exponent."""

    __slots__ = ("exponent",)

    def __init__(self, exponent):
        self.exponent = Fraction(exponent)

    def to_mpf(self):
        e = self.exponent
        if e.denominator == 1:
            return mpf(10) ** int(e)
        return mpmath.power(10, mpf(e.numerator) / e.denominator)

    def log10(self):
        return mpf(self.exponent.numerator) / self.exponent.denominator

    def __mul__(self, other):
        if isinstance(other, Pow10):
            return Pow10(self.exponent + other.exponent)
        return NotImplemented

    def __pow__(self, k):
        return Pow10(self.exponent * k)

    def __eq__(self, other):
        return isinstance(other, Pow10) and other.exponent == self.exponent

    def __hash__(self):
        return hash(("Pow10", self.exponent))

    def __repr__(self):
        return f"Pow10({self.exponent})"


def as_mpf(v):
    """Convert Fraction, int, Pow10, mpf or objects exposing ``to_mpf``."""
    if isinstance(v, mpmath.mpf):
        return v
    if isinstance(v, Fraction):
        return mpf(v.numerator) / v.denominator
    if isinstance(v, int):
        return mpf(v)
    if hasattr(v, "to_mpf"):
        return v.to_mpf()
    return mpf(v)


def log10_of(v):
    if isinstance(v, Pow10):
        return v.log10()
    if isinstance(v, Fraction):
        return log10_int(v.numerator) - log10_int(v.denominator)
    if isinstance(v, int):
        return log10_int(v)
    return mpmath.log10(as_mpf(v))


def log10_int(n):
    """log10 of a positive (possibly enormous) integer without a decimal str."""
    if n <= 0:
        raise ValueError("log10 of nonpositive integer")
    b = n.bit_length()
    if b < 1000:
        return mpmath.log10(mpf(n))
    shift = b - 200
    return mpmath.log10(mpf(n >> shift)) + shift * mpmath.log10(2)


HEX_BITS = 12000


def value_to_json(v):
    """Exact JSON form: "p/q" strings for rationals, {"pow10": "e"} for Pow10."""
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v if v.bit_length() < HEX_BITS else {"hex": hex(v)}
    if isinstance(v, Fraction):
        if max(v.numerator.bit_length(), v.denominator.bit_length()) >= HEX_BITS:
            # decimal str() of huge ints is capped by the interpreter; hex is not
            return {"hex": f"{hex(v.numerator)}/{hex(v.denominator)}"}
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, Pow10):
        return {"pow10": f"{v.exponent.numerator}/{v.exponent.denominator}"}
    if isinstance(v, mpmath.mpf):
        return {"mpf": mpmath.nstr(v, int(mp.prec * 0.30103) + 5)}
    return v


def value_from_json(d):
    if isinstance(d, bool):
        return d
    if isinstance(d, int):
        return d
    if isinstance(d, str):
        return Fraction(d)
    if isinstance(d, dict) and "hex" in d:
        parts = d["hex"].split("/")
        if len(parts) == 1:
            return int(parts[0], 16)
        return Fraction(int(parts[0], 16), int(parts[1], 16))
    if isinstance(d, dict) and "pow10" in d:
        return Pow10(Fraction(d["pow10"]))
    if isinstance(d, dict) and "mpf" in d:
        return mpf(d["mpf"])
    if isinstance(d, float):
        return Fraction(d)
    raise ValueError(f"cannot decode value {d!r}")


def render(v, digits=30):
    """Decimal rendering at a fixed count of significant digits."""
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int):
        return str(v)
    return mpmath.nstr(as_mpf(v), digits, min_fixed=-5, max_fixed=6)
