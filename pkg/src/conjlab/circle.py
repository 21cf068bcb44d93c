"""Circle diffeomorphisms as composition chains, with jets and C^r norms."""
from dataclasses import dataclass, field
import mpmath
from mpmath import mp, mpf

from .errors import PrecisionExhausted
from .families import Family
from .series import Series
from .values import as_mpf

# guard bits required beyond the scales a node resolves
GUARD_BITS = 24


def _mag_bits(x):
    ax = abs(x)
    return 0 if ax < 1 else int(mpmath.log(ax, 2)) + 1


# ----------------------------------------------------------------- nodes ---
class Rotation:
    __slots__ = ("angle", "_cache")

    def __init__(self, angle):
        self.angle = angle
        self._cache = {}

    def _a(self):
        p = mp.prec
        if p not in self._cache:
            self._cache[p] = as_mpf(self.angle)
        return self._cache[p]

    def lift(self, x):
        return x + self._a()

    def lift_series(self, X):
        return X + self._a()

    def inverse(self):
        a = self.angle
        return Rotation(-a if not hasattr(a, "negated") else a.negated())

    def __repr__(self):
        return f"Rotation({self.angle})"


class FamilyLift:
    """The lift of h-hat by the q-fold cover; its lift fixes 0."""

    __slots__ = ("family", "cover", "anchor", "_cbits")

    def __init__(self, family: Family, cover=1, anchor=0):
        if cover < 1:
            raise ValueError("cover must be positive")
        self.family = family
        self.cover = int(cover)
        self.anchor = anchor
        self._cbits = self.cover.bit_length()

    def resolvable(self, x=0):
        if self.family.is_identity():
            return True
        need = self._cbits + self.family.feature_bits() + GUARD_BITS + _mag_bits(x)
        return need <= mp.prec

    def negligible(self, x=0):
        """Below resolution: |h - Id| <= 1/q is under one ulp of x."""
        return self._cbits >= mp.prec + 8 + _mag_bits(x)

    def _check(self, x, jet):
        if self.resolvable(x):
            return True
        if not jet and self.negligible(x):
            return False
        raise PrecisionExhausted(
            f"cover 2^{self._cbits} with {self.family.kind} features needs more than {mp.prec} bits"
        )

    def lift(self, x):
        if not self._check(x, False):
            return x
        q = self.cover
        y = x * q
        m = mpmath.floor(y)
        return (m + self.family.value(y - m)) / q

    def lift_series(self, X):
        if self.family.is_identity():
            return X
        self._check(X.c[0], True)
        q = self.cover
        Y = X * q
        m = mpmath.floor(Y.c[0])
        return (self.family.series(Y - m) + m) / q

    def inverse(self):
        return Inverse(self)

    def __repr__(self):
        return f"FamilyLift({self.family!r}, q={self.cover})"


class Inverse:
    __slots__ = ("of", "_rot")

    def __init__(self, of):
        if not isinstance(of, (FamilyLift, Rotation)):
            raise TypeError(f"cannot invert {of!r}")
        self.of = of
        # a rotation's inverse is a rotation; keep it for evaluation
        self._rot = of.inverse() if isinstance(of, Rotation) else None

    def lift(self, y):
        if self._rot is not None:
            return self._rot.lift(y)
        node = self.of
        if not node._check(y, False):
            return y
        q = node.cover
        z = y * q
        m = mpmath.floor(z)
        return (m + node.family.inverse_value(z - m)) / q

    def lift_series(self, Y):
        if self._rot is not None:
            return self._rot.lift_series(Y)
        node = self.of
        if node.family.is_identity():
            return Y
        node._check(Y.c[0], True)
        q = node.cover
        Z = Y * q
        m = mpmath.floor(Z.c[0])
        return (node.family.inverse_series(Z - m) + m) / q

    def inverse(self):
        return self.of

    @property
    def family(self):
        return self.of.family

    @property
    def cover(self):
        return self.of.cover

    def __repr__(self):
        return f"Inverse({self.of!r})"


# ------------------------------------------------------------- CircleMap ---
class CircleMap:
    """Composition chain; ``nodes[0]`` is applied last (outermost)."""

    __slots__ = ("nodes",)

    def __init__(self, nodes=()):
        self.nodes = tuple(nodes)

    @classmethod
    def identity(cls):
        return cls(())

    @classmethod
    def rotation(cls, angle):
        return cls((Rotation(angle),))

    def compose(self, other):
        """self o other."""
        return CircleMap(self.nodes + other.nodes)

    __matmul__ = compose

    def inverse(self):
        return CircleMap(tuple(n.inverse() for n in reversed(self.nodes)))

    def eval_lift(self, x):
        x = mpf(x)
        for node in reversed(self.nodes):
            x = node.lift(x)
        return x

    def __call__(self, x):
        return self.eval_lift(x)

    def eval(self, x):
        return mpmath.frac(self.eval_lift(mpmath.frac(mpf(x))))

    def series(self, x, order):
        X = Series.variable(mpf(x), order)
        for node in reversed(self.nodes):
            X = node.lift_series(X)
        return X

    def jet(self, x, r):
        s = self.series(x, r)
        return Jet(mpf(x), r, tuple(s.derivatives()))

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return "CircleMap(" + " o ".join(map(repr, self.nodes)) + ")"


@dataclass(frozen=True)
class Jet:
    base_point: object
    order: int
    coefficients: tuple  # value, then derivatives 1..order


def eval(map, x):  # noqa: A001 - the operation is called eval
    return map.eval(x)


def eval_lift(map, x):
    return map.eval_lift(x)


def jet(map, x, r):
    return map.jet(x, r)


def lift_by_cover(base, q):
    return CircleMap((FamilyLift(base, q),))


def conjugate(H, angle):
    """H o R_angle o H^{-1}."""
    return H.compose(CircleMap.rotation(angle)).compose(H.inverse())


# ----------------------------------------------------------------- norms ---
@dataclass(frozen=True)
class NormReport:
    r: int
    lower_bound: object
    upper_bound: object
    grid_size: int
    per_order_lower: tuple = field(default=())
    per_order_upper: tuple = field(default=())
    argmax: object = None


def circle_diff(d):
    """Representative of d mod 1 in (-1/2, 1/2]."""
    d = d - mpmath.floor(d)
    return d - 1 if d > 0.5 else d


def _grid(grid, points):
    if points is not None:
        pts = sorted(mpf(p) for p in points)
        gaps = [b - a for a, b in zip(pts, pts[1:])] + [pts[0] + 1 - pts[-1]]
        return pts, max(gaps)
    return [mpf(i) / grid for i in range(grid)], mpf(1) / grid


def cr_norm(f, r, grid=1024, minus=None, points=None):
    """Sampled ||f - g||_r (g = ``minus`` or the identity) with padding."""
    pts, h = _grid(grid, points)
    lows = [mpf(0)] * (r + 2)
    arg, best = None, mpf(-1)
    offset = None
    for x in pts:
        d = _diff_derivs(f, minus, x, r + 1)
        # one integer shift for the whole grid: the difference of continuous
        # lifts is periodic, so this picks the lift pair closest at the start
        if offset is None:
            offset = mpmath.nint(d[0])
        d[0] -= offset
        for i in range(r + 2):
            lows[i] = max(lows[i], abs(d[i]))
        m = max(abs(v) for v in d[: r + 1])
        if m > best:
            best, arg = m, x
    low = tuple(lows[: r + 1])
    up = tuple(lows[i] + h * lows[i + 1] for i in range(r + 1))
    return NormReport(r, max(low), max(up), len(pts), low, up, arg)


def _diff_derivs(f, g, x, order):
    sf = f.series(x, order)
    if g is None:
        sg = Series.variable(mpf(x), order)
    else:
        sg = g.series(x, order)
    return (sf - sg).derivatives()


def abs_r(f, r, grid=1024, points=None):
    a = cr_norm(f, r, grid, points=points)
    b = cr_norm(f.inverse(), r, grid, points=points)
    one = mpf(1)
    return NormReport(
        r,
        max(a.lower_bound, b.lower_bound, one),
        max(a.upper_bound, b.upper_bound, one),
        a.grid_size,
    )


def dist_r(f, g, r, grid=1024, points=None):
    a = cr_norm(f, r, grid, minus=g, points=points)
    b = cr_norm(f.inverse(), r, grid, minus=g.inverse(), points=points)
    return NormReport(
        r,
        max(a.lower_bound, b.lower_bound),
        max(a.upper_bound, b.upper_bound),
        a.grid_size,
        tuple(max(x, y) for x, y in zip(a.per_order_lower, b.per_order_lower)),
        tuple(max(x, y) for x, y in zip(a.per_order_upper, b.per_order_upper)),
    )


def hat_norm(family, r, points):
    """||h-hat - Id||_r sampled at the given points of [0,1)."""
    lows = [mpf(0)] * (r + 1)
    for u in points:
        d = family.displacement_series(Series.variable(mpf(u), r)).derivatives()
        for i in range(r + 1):
            lows[i] = max(lows[i], abs(d[i]))
    return tuple(lows)


def matched_points(points, q):
    """The grid {(i + u)/q} over all cells i, matched to hat points u."""
    q = int(q)
    return [(i + mpf(u)) / q for i in range(q) for u in points]


__all__ = [
    "Rotation", "FamilyLift", "Inverse", "CircleMap", "Jet", "NormReport",
    "eval", "eval_lift", "jet", "lift_by_cover", "conjugate", "cr_norm",
    "abs_r", "dist_r", "hat_norm", "matched_points", "circle_diff",
]
