"""Base diffeomorphisms h-hat of the circle, all fixing 0.

Every family except the flow family is a chain of affine pieces joined by
blends L + psi(u) (R - L) of two affine germs.  A blend is placed on the
side of the germs' crossing point where R - L >= 0, which makes it monotone
for every bump profile (a blend straddling the crossing is not).
"""
import math
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from . import flow as flowmod
from .errors import InvalidParam, NonConvergence
from .series import Series
from .values import Pow10, as_mpf, value_from_json, value_to_json

QUARTER = Fraction(1, 4)


# ---------------------------------------------------------------- bump ----
def bump_series(U):
    """psi along the jet U (psi = 0 left of -1/4, 1 right of 1/4)."""
    u0 = U.c[0]
    q = mpf(1) / 4
    if u0 <= -q:
        return Series.constant(mpf(0), U.order)
    if u0 >= q:
        return Series.constant(mpf(1), U.order)
    g = (U + q).recip() - (q - U).recip()
    return ((g.exp() + 1)).recip()


def bump(x, order=0):
    """psi(x), or its derivatives 0..order as a list when order > 0."""
    s = bump_series(Series.variable(mpf(x), order))
    if order == 0:
        return s.c[0]
    return s.derivatives()


# --------------------------------------------------------------- pieces ---
class Affine:
    kind = "affine"

    def __init__(self, lo, hi, slope, icpt, exact=None):
        self.lo, self.hi = lo, hi
        self.slope, self.icpt = slope, icpt
        self.exact = exact  # (Fraction slope, Fraction icpt) when available

    def series(self, Z):
        return Z * self.slope + self.icpt

    def inverse(self, y):
        return (y - self.icpt) / self.slope


class Blend:
    """L(x) + psi(u) (sR - sL)(x - xstar) on [lo, hi]."""

    kind = "blend"

    def __init__(self, lo, hi, left, right, xstar):
        self.lo, self.hi = lo, hi
        self.left, self.right = left, right
        self.xstar = xstar
        self.mid = (lo + hi) / 2
        self.uscale = 1 / (2 * (hi - lo))
        self.dslope = right[0] - left[0]

    def series(self, Z):
        U = (Z - self.mid) * self.uscale
        P = bump_series(U)
        L = Z * self.left[0] + self.left[1]
        return L + P * ((Z - self.xstar) * self.dslope)


class FlowPiece:
    """T * phi_a(x / T) on [lo, hi] with hi = T."""

    kind = "flow"

    def __init__(self, lo, hi, T, a):
        self.lo, self.hi, self.T, self.a = lo, hi, T, a

    def series(self, Z):
        Phi, _ = flowmod.flow_jet(Z.c[0] / self.T, self.a, Z.order)
        return Phi.compose(Z / self.T) * self.T

    def displacement(self, Z, sign=1):
        _, D = flowmod.flow_jet(Z.c[0] / self.T, sign * self.a, Z.order)
        return D.compose(Z / self.T) * self.T

    def inverse_series(self, Y):
        Phi, _ = flowmod.flow_jet(Y.c[0] / self.T, -self.a, Y.order)
        return Phi.compose(Y / self.T) * self.T


# --------------------------------------------------------------- family ---
class Family:
    """A base map h-hat on [0,1] with h-hat(0) = 0, h-hat(1) = 1."""

    kind = "Identity"

    def __init__(self, **params):
        self.params = params
        self._cache = {}

    # subclasses implement _build_pieces() and intervals()
    def _build_pieces(self):
        return [Affine(mpf(0), mpf(1), mpf(1), mpf(0), (Fraction(1), Fraction(0)))]

    def intervals(self):
        return {}

    def pieces(self):
        key = ("pieces", mp.prec)
        if key not in self._cache:
            self._cache[key] = self._build_pieces()
        return self._cache[key]

    def _bounds(self):
        key = ("bounds", mp.prec)
        if key not in self._cache:
            ps = self.pieces()
            los = [p.lo for p in ps]
            imgs = [self._piece_value(p, p.lo) for p in ps] + [mpf(1)]
            self._cache[key] = (los, imgs)
        return self._cache[key]

    @staticmethod
    def _piece_value(p, x):
        return p.series(Series([x])).c[0]

    def _locate(self, z, table):
        lo, hi = 0, len(table) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if table[mid] <= z:
                lo = mid
            else:
                hi = mid - 1
        return lo

    # forward ----------------------------------------------------------
    def series(self, Z):
        los, _ = self._bounds()
        p = self.pieces()[self._locate(Z.c[0], los)]
        return p.series(Z)

    def value(self, z):
        return self.series(Series([mpf(z)])).c[0]

    def displacement_series(self, Z):
        """Jet of h-hat - Id (accurate for near-identity flow maps)."""
        los, _ = self._bounds()
        p = self.pieces()[self._locate(Z.c[0], los)]
        if p.kind == "flow":
            return p.displacement(Z)
        return p.series(Z) - Z

    # inverse ----------------------------------------------------------
    def inverse_value(self, y):
        y = mpf(y)
        _, imgs = self._bounds()
        i = self._locate(y, imgs[:-1])
        p = self.pieces()[i]
        if p.kind == "affine":
            return p.inverse(y)
        if p.kind == "flow":
            return p.inverse_series(Series([y])).c[0]
        return _newton(p, y, imgs[i], imgs[i + 1])

    def inverse_series(self, Y):
        y0 = Y.c[0]
        _, imgs = self._bounds()
        i = self._locate(y0, imgs[:-1])
        p = self.pieces()[i]
        if p.kind == "flow":
            return p.inverse_series(Y)
        if p.kind == "affine":
            return (Y - p.icpt) / p.slope
        x0 = _newton(p, y0, imgs[i], imgs[i + 1])
        fwd = p.series(Series.variable(x0, Y.order))
        return fwd.inverse_at(x0).compose(Y)

    def inverse_displacement_series(self, Y):
        _, imgs = self._bounds()
        p = self.pieces()[self._locate(Y.c[0], imgs[:-1])]
        if p.kind == "flow":
            return p.displacement(Y, sign=-1)
        return self.inverse_series(Y) - Y

    # exact rational evaluation on affine pieces ---------------------------
    def exact_value(self, z):
        """h-hat(z) for a Fraction z inside an exactly known affine piece."""
        for p in self.pieces():
            if p.kind == "affine" and p.exact is not None:
                lo, hi = self._exact_span(p)
                if lo is not None and lo <= z <= hi:
                    s, b = p.exact
                    return s * z + b
        return None

    def _exact_span(self, p):
        return getattr(p, "exact_span", (None, None))

    # metadata ---------------------------------------------------------
    def min_feature(self):
        return min(p.hi - p.lo for p in self.pieces() if p.hi > p.lo)

    def feature_bits(self):
        return int(mpmath.ceil(-mpmath.log(self.min_feature(), 2))) + 1

    def is_identity(self):
        ps = self.pieces()
        return len(ps) == 1 and ps[0].kind == "affine" and ps[0].slope == 1 and ps[0].icpt == 0

    def descriptor(self):
        return {"kind": self.kind, **{k: value_to_json(v) for k, v in self.params.items()}}

    def key(self):
        import json

        return json.dumps(self.descriptor(), sort_keys=True)

    def __repr__(self):
        return f"{self.kind}({', '.join(f'{k}={v}' for k, v in self.params.items())})"


def _newton(p, y, ylo, yhi):
    """Solve p(x) = y on [p.lo, p.hi]; Newton steps safeguarded by bisection."""
    a, b = p.lo, p.hi
    width = b - a
    tol = width * mpf(2) ** (-mp.prec + 6)
    # secant start from the image bracket
    x = a + width * (y - ylo) / (yhi - ylo) if yhi > ylo else a
    prev = None
    for _ in range(400):
        s = p.series(Series.variable(x, 1))
        fx = s.c[0] - y
        if fx == 0:
            return x
        if fx > 0:
            b = x
        else:
            a = x
        d = s.c[1]
        if d > 0 and abs(fx) <= tol * d:
            return x - fx / d
        nx = x - fx / d if d > 0 else (a + b) / 2
        # fall back to bisection when Newton leaves the bracket or stalls
        if not (a < nx < b) or (prev is not None and abs(fx) > prev / 2):
            nx = (a + b) / 2
        prev = abs(fx)
        if abs(nx - x) <= tol or b - a <= tol:
            return nx
        x = nx
    raise NonConvergence(f"inverse refinement failed at y={mpmath.nstr(y, 10)}")


def _affine(lo, hi, slope, icpt, exact=None, span=None):
    p = Affine(as_mpf(lo), as_mpf(hi), as_mpf(slope), as_mpf(icpt), exact)
    p.exact_span = span if span is not None else (None, None)
    return p


def _germ(slope, icpt):
    return (as_mpf(slope), as_mpf(icpt))


class IdentityFamily(Family):
    kind = "Identity"

    def __init__(self):
        super().__init__()

    def _build_pieces(self):
        p = _affine(0, 1, 1, 0, (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))
        return [p]


# ------------------------------------------------------------ G_{1,sing} ---
class G1Sing(Family):
    kind = "G1Sing"

    def __init__(self, n, k):
        if k < 2:
            raise InvalidParam("G1Sing needs k >= 2")
        super().__init__(n=int(n), k=int(k))
        self.k = int(k)
        self.s0 = Fraction(1, self.k) / (1 - Fraction(1, self.k))

    def _build_pieces(self):
        k, s0 = self.k, self.s0
        j = 1 - Fraction(1, k)
        if s0 == 1:
            return IdentityFamily()._build_pieces()
        p1 = _affine(0, j, s0, 0, (s0, Fraction(0)), (Fraction(0), j))
        # crossing of a(x) = s0 x and b(x) = s0 (x-1) + 1 is at infinity: b - a = 1 - s0
        left = _germ(s0, 0)
        right = _germ(s0, 1 - s0)
        blend = _ConstBlend(as_mpf(j), mpf(1), left, right)
        return [p1, blend]

    def intervals(self):
        k = self.k
        return {"J": (Fraction(0), 1 - Fraction(1, k)), "I": (Fraction(0), Fraction(1, k))}


class _ConstBlend(Blend):
    """Blend of two parallel germs (R - L constant)."""

    def __init__(self, lo, hi, left, right):
        super().__init__(lo, hi, left, right, mpf(0))
        self.gap = right[1] - left[1]

    def series(self, Z):
        U = (Z - self.mid) * self.uscale
        P = bump_series(U)
        return Z * self.left[0] + self.left[1] + P * self.gap


# ------------------------------------------------------------- G_{1,ac} ---
class G1Ac(Family):
    kind = "G1Ac"

    def __init__(self, n):
        if n < 1:
            raise InvalidParam("G1Ac needs n >= 1")
        super().__init__(n=int(n))
        n = int(n)
        self.n = n
        self.L = Fraction(1, 2 ** (n + 1))
        self.sigma = Fraction(n + 1)
        self.rho = Fraction(1, 2)
        self.w = self.L / (8 * (2 * n + 1))
        self.Lp = self.L - self.w
        self.c = self.Lp * (1 - self.rho) / (self.sigma - self.rho)

    def _build_pieces(self):
        L, w, Lp, c, sg, rho = self.L, self.w, self.Lp, self.c, self.sigma, self.rho
        ell = (rho, Lp * (1 - rho))  # x -> Lp + rho (x - Lp)
        return [
            Blend(as_mpf(0), as_mpf(w), _germ(1, 0), _germ(sg, 0), mpf(0)),
            _affine(w, c - w, sg, 0, (sg, Fraction(0)), (w, c - w)),
            Blend(as_mpf(c - w), as_mpf(c), _germ(sg, 0), _germ(*ell), as_mpf(c)),
            _affine(c, Lp, ell[0], ell[1], ell, (c, Lp)),
            Blend(as_mpf(Lp), as_mpf(L), _germ(*ell), _germ(1, 0), as_mpf(Lp)),
            _affine(L, 1, 1, 0, (Fraction(1), Fraction(0)), (L, Fraction(1))),
        ]

    def intervals(self):
        return {"I": (self.w, self.c - self.w), "K": (self.L, Fraction(1))}


# -------------------------------------------------------------- G_beta ---
class GBeta(Family):
    kind = "GBeta"

    def __init__(self, t):
        super().__init__(t=t)
        tm = as_mpf(t)
        if not (0 < tm < 1):
            raise InvalidParam("GBeta needs 0 < t < 1")
        # the affine region [t/4, t/(1+t) - t/4] must contain [t/4, 7t/12]
        if isinstance(t, Fraction):
            ok = t / (1 + t) - t / 4 >= 7 * t / 12
        else:
            ok = tm <= mpf(1) / 5
        if not ok:
            raise InvalidParam("GBeta collars overlap the recorded interval (need t <= 1/5)")
        self.t = t

    def _build_pieces(self):
        t = as_mpf(self.t)
        c = t / (1 + t)
        q = t / 4
        ex = isinstance(self.t, Fraction)
        tq = self.t
        return [
            Blend(mpf(0), q, _germ(t, 0), _germ(1 / t, 0), mpf(0)),
            _affine(q, c - q, 1 / t, 0, (1 / tq, Fraction(0)) if ex else None,
                    (tq / 4, tq / (1 + tq) - tq / 4) if ex else None),
            Blend(c - q, c, _germ(1 / t, 0), (t, 1 - t), c),
            _affine(c, 1, t, 1 - t, (tq, 1 - tq) if ex else None, (tq / (1 + tq), Fraction(1)) if ex else None),
        ]

    def intervals(self):
        t = self.t
        if isinstance(t, Fraction):
            return {"I": (t / 4, 7 * t / 12)}
        tm = as_mpf(t)
        return {"I": (tm / 4, 7 * tm / 12)}


# ------------------------------------------------------------ G_{0,ac} ---
class G0Ac(Family):
    kind = "G0Ac"

    def __init__(self, s, t):
        super().__init__(s=s, t=t)
        sm, tm = as_mpf(s), as_mpf(t)
        if not (0 < sm <= tm < 1):
            raise InvalidParam("G0Ac needs 0 < s <= t < 1")
        self.s, self.t = s, t
        self.degenerate = sm == tm
        if not self.degenerate and not (5 * sm <= tm and 2 * tm <= 1):
            raise InvalidParam("G0Ac collars overlap (need 5s <= t <= 1/2)")

    def _build_pieces(self):
        if self.degenerate:
            return IdentityFamily()._build_pieces()
        s, t = as_mpf(self.s), as_mpf(self.t)
        S, T = self.s, self.t
        ex = isinstance(S, Fraction) and isinstance(T, Fraction)
        c = s * t / (s + t)
        up = (t / s, mpf(0))
        down = (s / t, t - s)  # x -> (s/t)(x - t) + t
        pieces = [
            Blend(mpf(0), s / 4, _germ(1, 0), up, mpf(0)),
            _affine(s / 4, c - s / 4, t / s, 0, (T / S, Fraction(0)) if ex else None,
                    (S / 4, S * T / (S + T) - S / 4) if ex else None),
            Blend(c - s / 4, c, up, down, c),
            _affine(c, t, s / t, t - s, (S / T, T - S) if ex else None, (S * T / (S + T), T) if ex else None),
            Blend(t, 5 * t / 4, down, _germ(1, 0), t),
            _affine(5 * t / 4, 1, 1, 0, (Fraction(1), Fraction(0)), (5 * T / 4, Fraction(1)) if ex else None),
        ]
        return pieces

    def intervals(self):
        s, t = self.s, self.t
        if isinstance(s, Fraction) and isinstance(t, Fraction):
            return {"I": (s / 4, 7 * s / 12), "K": (2 * t, Fraction(1))}
        sm, tm = as_mpf(s), as_mpf(t)
        return {"I": (sm / 4, 7 * sm / 12), "K": (2 * tm, mpf(1))}


# ---------------------------------------------------------------- G_k ----
class Gk(Family):
    kind = "Gk"

    def __init__(self, t, k, flow=None):
        if k < 1:
            raise InvalidParam("Gk needs k >= 1")
        tm = as_mpf(t)
        if not (0 < tm < 1):
            raise InvalidParam("Gk needs 0 < t < 1")
        super().__init__(t=t, k=int(k))
        self.t, self.k = t, int(k)
        self.flow = flow or flowmod.CANONICAL

    def scale(self):
        t = self.t
        if isinstance(t, (Fraction, Pow10)):
            return t ** self.k
        return as_mpf(t) ** self.k

    def time(self):
        t = self.t
        if isinstance(t, (Fraction, Pow10)):
            return t ** (self.k * self.k)
        return as_mpf(t) ** (self.k * self.k)

    def _build_pieces(self):
        T = as_mpf(self.scale())
        a = as_mpf(self.time())
        S = self.scale()
        span = (S, Fraction(1)) if isinstance(S, Fraction) else None
        return [FlowPiece(mpf(0), T, T, a), _affine(T, 1, 1, 0, (Fraction(1), Fraction(0)), span)]

    def min_feature(self):
        return as_mpf(self.scale()) / 64

    def intervals(self):
        T = as_mpf(self.scale())
        u = flowmod.argmax_field_derivative(self.k)
        d = mpf(1) / 256
        S = self.scale()
        K = (S, Fraction(1)) if isinstance(S, Fraction) else (T, mpf(1))
        # I-hat is where |(h^-1)^(k+1)| is of order one, recorded in image coordinates
        return {"I": (T * (u - d), T * (u + d)), "K": K}

    def descriptor(self):
        d = super().descriptor()
        d["flow"] = self.flow.descriptor()
        return d


# ---------------------------------------------------------- constructors ---
def make_identity():
    return IdentityFamily()


def make_g1sing(n, k_n):
    return G1Sing(n, k_n)


def make_g1ac(n):
    return G1Ac(n)


def make_gbeta(t):
    return GBeta(t)


def make_g0ac(s, t):
    return G0Ac(s, t)


def make_gk(t, k, flow=None):
    return Gk(t, k, flow)


def g0ac_params(n, q):
    """t = 3^(-n-2) and s = 3^(-n^2-3n+1) n^(-n) q^(-n+1) as exact rationals."""
    t = Fraction(1, 3 ** (n + 2))
    s = Fraction(1, 3 ** (n * n + 3 * n - 1) * n ** n * q ** (n - 1))
    return s, t


def family_from_descriptor(d):
    kind = d["kind"]
    if kind == "Identity":
        return IdentityFamily()
    if kind == "G1Sing":
        return G1Sing(d["n"], d["k"])
    if kind == "G1Ac":
        return G1Ac(d["n"])
    if kind == "GBeta":
        return GBeta(value_from_json(d["t"]))
    if kind == "G0Ac":
        return G0Ac(value_from_json(d["s"]), value_from_json(d["t"]))
    if kind == "Gk":
        return Gk(value_from_json(d["t"]), d["k"])
    raise InvalidParam(f"unknown family kind {kind!r}")


# -------------------------------------------------------------- sets ---
class IntervalSet:
    """Preimage under the q-fold cover of a hat interval [lo, hi].

    Components are (j + lo)/q .. (j + hi)/q for j = 0..q-1; they are
    generated lazily because q may be astronomically large.
    """

    def __init__(self, lo, hi, q, label):
        self.lo, self.hi, self.q, self.label = lo, hi, int(q), label

    @property
    def count(self):
        return self.q

    def measure(self):
        return self.hi - self.lo

    def component(self, j):
        return ((j + self.lo) / self.q, (j + self.hi) / self.q)

    def components(self, limit=None):
        n = self.q if limit is None else min(self.q, limit)
        return [self.component(j) for j in range(n)]

    def contains(self, x):
        """Exact membership for a Fraction x (mod 1)."""
        y = (x * self.q) % 1
        return self.lo <= y <= self.hi

    def component_containing(self, x):
        y = x * self.q
        j = math.floor(y)
        lo, hi = self.component(j)
        if lo <= x <= hi:
            return lo, hi
        return None


def special_sets(family, q, name):
    """The set pi_q^{-1}(hat interval) with exact endpoints when available."""
    iv = family.intervals()
    if name not in iv:
        raise InvalidParam(f"{family.kind} records no interval {name!r}")
    lo, hi = iv[name]
    return IntervalSet(lo, hi, q, f"{name}")


def nested_inside(inner, outer):
    """Witness that every component of ``inner`` meeting a component of ``outer``
    sits inside some component of ``outer`` when the period divides.

    Returns (outer component, inner component) for the component of ``outer``
    starting at its first lattice cell, or None if no inner component fits.
    """
    if inner.q % outer.q:
        return None
    olo, ohi = outer.component(0)
    j = math.ceil(olo * inner.q - inner.lo)
    ilo, ihi = inner.component(j)
    if olo <= ilo and ihi <= ohi:
        return (olo, ohi), (ilo, ihi)
    return None


