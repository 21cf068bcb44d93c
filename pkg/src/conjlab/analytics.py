"""Diagnostics on finished runs: rotation number, Holder fits, invariant
measures and the exact measure/derivative identities of the constructions."""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .errors import DegenerateFit, InvalidParam, UnknownDiagnostic
from .families import special_sets
from .series import Series
from .values import as_mpf

HOLDER_PAIRS = 2 ** 10


# ------------------------------------------------------------ rotation ---
@dataclass(frozen=True)
class Estimate:
    value: object
    bound: object

    def contains(self, x, slack=0):
        return abs(as_mpf(x) - self.value) <= self.bound + slack


def rotation_number(f, iterations):
    """(F^n(0) - 0)/n with the usual 1/n error bound."""
    if iterations < 1:
        raise InvalidParam("iterations must be >= 1")
    x = mpf(0)
    for _ in range(int(iterations)):
        x = f.eval_lift(x)
    return Estimate(x / iterations, mpf(1) / iterations)


# -------------------------------------------------------------- holder ---
class FunctionMap:
    """A circle homeomorphism given by a lift function (for tests and baselines)."""

    def __init__(self, lift, inverse_lift=None):
        self._lift = lift
        self._inv = inverse_lift

    def eval_lift(self, x):
        return self._lift(mpf(x))

    def inverse(self):
        if self._inv is None:
            raise InvalidParam("no inverse supplied")
        return FunctionMap(self._inv, self._lift)


def sqrt_modulus_map():
    """Lift floor(x) + sqrt(frac(x)): modulus of continuity sqrt(h) at 0."""
    def fwd(x):
        m = mpmath.floor(x)
        return m + mpmath.sqrt(x - m)

    def inv(y):
        m = mpmath.floor(y)
        return m + (y - m) ** 2

    return FunctionMap(fwd, inv)


@dataclass(frozen=True)
class HolderFit:
    exponent: object
    residual: object
    scales: tuple  # dyadic exponents j (scale 2^-j)
    sups: tuple
    pairs: int
    direction: str


def holder_exponent(map, direction="forward", scales=(6, 16), pairs=HOLDER_PAIRS):
    """Least-squares slope of log sup|F(x+h)-F(x)| against log h over h = 2^-j.

    The sup is over ``pairs`` base points (sampled, not exhaustive): half
    are dyadic, half shifted by the golden mean, since every dyadic point of
    a 10^a cover lattice is fixed by the conjugacy and would hide it.
    """
    j0, j1 = int(scales[0]), int(scales[1])
    if j1 - j0 + 1 < 3:
        raise DegenerateFit("need at least 3 scales")
    if j0 < 3 or j1 >= mp.prec // 4:
        raise InvalidParam(f"scales must lie in (2^-{mp.prec // 4}, 2^-3)")
    F = map.inverse() if direction == "inverse" else map
    half = pairs // 2
    theta = (mpmath.sqrt(5) - 1) / 2
    base = [mpf(i) / half for i in range(half)] + [(i + theta) / half for i in range(half)]
    vals = {}

    def val(x):
        if x not in vals:
            vals[x] = F.eval_lift(x)
        return vals[x]

    xs, ys, sups = [], [], []
    for j in range(j0, j1 + 1):
        h = mpf(2) ** (-j)
        s = max(abs(val(x + h) - val(x)) for x in base)
        if s <= 0:
            raise DegenerateFit(f"zero modulus at scale 2^-{j}")
        sups.append(s)
        xs.append(mpmath.log(h))
        ys.append(mpmath.log(s))
    slope, icpt = _lsq(xs, ys)
    res = mpmath.sqrt(mpmath.fsum((y - slope * x - icpt) ** 2 for x, y in zip(xs, ys)) / len(xs))
    return HolderFit(slope, res, tuple(range(j0, j1 + 1)), tuple(sups), pairs, direction)


def _lsq(xs, ys):
    n = len(xs)
    mx = mpmath.fsum(xs) / n
    my = mpmath.fsum(ys) / n
    sxx = mpmath.fsum((x - mx) ** 2 for x in xs)
    sxy = mpmath.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, my - slope * mx


# ------------------------------------------------------------- measure ---
@dataclass(frozen=True)
class EmpiricalMeasure:
    cdf_samples: tuple  # sorted (x, F(x))
    source: str

    def sup_distance(self, other):
        a = dict(self.cdf_samples)
        return max(abs(a[x] - F) for x, F in other.cdf_samples if x in a)


def _grid(points):
    return [mpf(i) / (points - 1) for i in range(points)]


def measure_cdf(state, source="pushforward", N=10 ** 4, points=2 ** 10 + 1):
    """CDF of the f_n-invariant measure: H_n^-1 pushforward or a Birkhoff orbit."""
    xs = _grid(points)
    if source == "pushforward":
        Hi = state.H().inverse()
        h0 = Hi.eval_lift(mpf(0))
        h1 = Hi.eval_lift(mpf(1))
        Fs = [(Hi.eval_lift(x) - h0) / (h1 - h0) for x in xs]
        Fs[0], Fs[-1] = mpf(0), mpf(1)
        return EmpiricalMeasure(tuple(zip(xs, Fs)), source)
    if source == "birkhoff":
        return birkhoff_cdf(state.f(), N, xs)
    raise InvalidParam(f"unknown measure source {source!r}")


def birkhoff_cdf(f, N, xs):
    x = mpf(0)
    orbit = []
    for _ in range(int(N)):
        orbit.append(float(mpmath.frac(x)))
        x = f.eval_lift(x)
    orbit.sort()
    import bisect

    Fs = [mpf(bisect.bisect_right(orbit, float(g))) / N for g in xs]
    Fs[0], Fs[-1] = mpf(0), mpf(1)
    return EmpiricalMeasure(tuple(zip(xs, Fs)), "birkhoff")


def lebesgue_cdf(points=2 ** 10 + 1):
    xs = _grid(points)
    return EmpiricalMeasure(tuple(zip(xs, xs)), "lebesgue")


# --------------------------------------------------- exact chain values ---
def exact_lift(link, x):
    """h_n(x) for a Fraction x lying on an exactly known affine piece."""
    Q = link.cover
    y = x * Q
    m = math.floor(y)
    v = link.family.exact_value(y - m)
    if v is None:
        raise ArithmeticError(f"{link.family.kind}: point not on an exact affine piece")
    return (m + v) / Q


def exact_chain(links, x):
    for l in reversed(links):
        x = exact_lift(l, x)
    return x


# --------------------------------------------------------- singularity ---
def _hat_J(link):
    k = link.family.k
    return Fraction(0), 1 - Fraction(1, k)


def c_components(links, per_level=3):
    """Sample components of C_n = J_1 n ... n J_n (exact endpoints).

    At every level, first/middle/last cells of the next lattice inside the
    current component are taken; by (3.1) each such cell holds one J-component.
    """
    comps = [(Fraction(0), Fraction(1))]
    for l in links:
        lo_h, hi_h = _hat_J(l)
        Q = l.cover
        nxt = []
        for a, b in comps:
            j0 = math.ceil(a * Q)
            j1 = math.floor(b * Q) - 1
            if j1 < j0:
                continue
            picks = sorted({j0, (j0 + j1) // 2, j1})[:per_level]
            for j in picks:
                nxt.append((Fraction(j) / Q + lo_h / Q, Fraction(j) / Q + hi_h / Q))
        comps = nxt
    return comps


def singularity_diagnostic(state, n=None):
    """Exact m(C_n) and m(H_n(C_n)) (default n: the whole run)."""
    if state.construction.kind != "G1Sing":
        raise UnknownDiagnostic("singularity diagnostic needs a G1Sing run")
    links = state.links[:n] if n is not None else state.links
    ks = [l.family.k for l in links]
    mC = math.prod((1 - Fraction(1, k) for k in ks), start=Fraction(1))
    target = math.prod((Fraction(1, k) for k in ks), start=Fraction(1))
    ratios = set()
    comps = c_components(links)
    for a, b in comps:
        ha, hb = exact_chain(links, a), exact_chain(links, b)
        ratios.add((hb - ha) / (b - a))
    if len(ratios) != 1:
        raise ArithmeticError("H_n is not uniformly affine on the sampled components")
    ratio = ratios.pop() if ratios else Fraction(1)
    mHC = ratio * mC
    return {
        "n": len(links), "k": ks, "m_C": mC, "m_HC": mHC, "target": target,
        "identity_holds": mHC == target, "components_sampled": len(comps), "slope": ratio,
    }


# ------------------------------------------------------------------ ac ---
def _k_hat(link):
    lo, hi = link.family.intervals()["K"]
    return Fraction(lo), Fraction(hi)


def fixed_set_mass(links):
    """Exact m(K_1 n ... n K_n) for nested lattices q_1 | q_2 | ...

    Pieces of the set inside one lattice cell are kept as shapes (a, b) in
    cell units with multiplicities, so the astronomically many components
    are never enumerated.
    """
    shapes = {(Fraction(0), Fraction(1)): 1}
    prev_q = 1
    for l in links:
        q = l.cover
        if q % prev_q:
            raise ArithmeticError("fixed-set mass needs each cover to divide the next")
        R = q // prev_q
        lo, hi = _k_hat(l)
        nxt = {}

        def add(shape, mult):
            if shape[1] > shape[0]:
                nxt[shape] = nxt.get(shape, 0) + mult

        for (a, b), mu in shapes.items():
            A, B = a * R, b * R  # in units of the new cells
            j0, j1 = math.ceil(A), math.floor(B)
            if j1 <= j0 - 1:  # inside a single cell
                j = math.floor(A)
                add((max(A - j, lo), min(B - j, hi)), mu)
                continue
            if A < j0:
                j = j0 - 1
                add((max(A - j, lo), min(Fraction(1), hi)), mu)
            if j1 > j0:
                add((lo, hi), mu * (j1 - j0))
            if B > j1:
                add((max(Fraction(0), lo), min(B - j1, hi)), mu)
        shapes = nxt
        prev_q = q
    return sum((mu * (b - a) for (a, b), mu in shapes.items()), Fraction(0)) / prev_q


def _identity_on_K(family):
    lo, _ = _k_hat_family(family)
    for p in family.pieces():
        span = getattr(p, "exact_span", (None, None))
        if p.kind == "affine" and span[0] is not None and span[0] <= lo and span[1] == 1:
            return p.exact == (Fraction(1), Fraction(0))
    return False


def _k_hat_family(family):
    lo, hi = family.intervals()["K"]
    return Fraction(lo), Fraction(hi)


def ac_diagnostic(state, samples=64):
    kind = state.construction.kind
    if kind not in ("G1Ac", "G0Ac"):
        raise UnknownDiagnostic("ac diagnostic needs a G1Ac or G0Ac run")
    links = state.links
    mass = fixed_set_mass(links)
    structural = all(_identity_on_K(l.family) or l.family.is_identity() for l in links)
    # sampled check: points inside a nested component of X_n
    from .scheduler import nested_component

    box = nested_component(links)
    sup = mpf(0)
    if box is not None:
        H = state.H()
        a, b = box
        for i in range(samples + 1):
            x = a + (b - a) * Fraction(i, samples)
            sup = max(sup, abs(H.eval_lift(as_mpf(x)) - as_mpf(x)))
    lower = 1 - sum((Fraction(1, 2 ** (i + 1)) for i in range(1, len(links) + 1)), Fraction(0))
    out = {
        "n": len(links), "fixed_set_mass": mass, "mass_lower": lower,
        "mass_ok": mass >= lower if kind == "G1Ac" else None,
        "identity_verified": structural and box is not None,
        "sampled_sup": sup, "component": box,
    }
    if kind == "G0Ac":
        out["ratios"] = [g0ac_ratio(l) for l in links]
    return out


def g0ac_ratio(link):
    """(h_n(y) - h_n(x)) / (y - x)^(1/n) on the first component of I_n."""
    n = link.n
    I = special_sets(link.family, link.cover, "I")
    x, y = I.component(0)
    x, y = Fraction(x), Fraction(y)
    dh = exact_lift(link, y) - exact_lift(link, x)
    return as_mpf(dh) / mpmath.root(as_mpf(y - x), n)


# ------------------------------------------------------------------ ck ---
def ck_diagnostic(state):
    kind = state.construction.kind
    rows = []
    if kind == "G1Ac":
        from .scheduler import nested_component

        for n in range(1, state.n + 1):
            links = state.links[:n]
            box = nested_component(links[:-1]) if n > 1 else (Fraction(0), Fraction(1))
            l = links[-1]
            I = special_sets(l.family, l.cover, "I")
            j = math.ceil(box[0] * I.q - I.lo)
            x, y = I.component(j)
            if not (box[0] <= x and y <= box[1]):
                rows.append({"n": n, "max_derivative": None})
                continue
            slope = (exact_chain(links, y) - exact_chain(links, x)) / (y - x)
            rows.append({"n": n, "max_derivative": slope, "exceeds_n": slope > n})
        return {"kind": kind, "rows": rows}
    if kind == "Gk":
        k = state.construction.k
        for n in range(1, state.n + 1):
            l = state.links[n - 1]
            lo, hi = l.family.intervals()["I"]
            u = (as_mpf(lo) + as_mpf(hi)) / 2
            d = l.family.inverse_series(Series.variable(u, k + 1)).derivatives()[k + 1]
            # (h^-1)^(k+1)(x) = q^k (h-hat^-1)^(k+1)(q x)
            qk = mpf(10) ** (k * l.q_log10)
            row = {"n": n, "hat_value": abs(d), "value": abs(d) * qk, "q_pow_k": qk}
            if rows:
                # growth against n-1, and what q^k alone predicts
                row["growth"] = row["value"] / rows[-1]["value"]
                row["predicted"] = qk / rows[-1]["q_pow_k"]
            rows.append(row)
        return {"kind": kind, "rows": rows}
    if kind == "Identity":
        return {"kind": kind, "rows": []}
    raise UnknownDiagnostic("ck diagnostic needs a Gk or G1Ac run")


# -------------------------------------------------------------- report ---
@dataclass
class RegularityReport:
    rotation: object = None
    holder: dict = field(default_factory=dict)
    measure: dict = field(default_factory=dict)
    derivative: dict = field(default_factory=dict)


__all__ = [
    "Estimate", "rotation_number", "FunctionMap", "sqrt_modulus_map", "HolderFit", "holder_exponent",
    "EmpiricalMeasure", "measure_cdf", "birkhoff_cdf", "lebesgue_cdf", "singularity_diagnostic",
    "fixed_set_mass", "ac_diagnostic", "g0ac_ratio", "ck_diagnostic", "exact_chain", "RegularityReport",
]
