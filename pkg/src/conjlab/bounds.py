"""Majorant calculus for derivative sups of maps built from the families.

A sup vector ``v`` lists upper bounds v[j] >= sup |f^(j)| for j = 0..J.
For maps only the entries j >= 1 matter and v[0] is kept at 0.  Products
use Leibniz, compositions use Faa di Bruno with Bell polynomials; every
coefficient is nonnegative so sups of factors bound sups of results.

Hat tables are obtained piece by piece: affine pieces exactly, blends from
a tabulated sup of the bump derivatives, flow pieces from sampled jets with
a Lipschitz pad from the next order.  Nothing here ever evaluates a lifted
map, so covers far beyond the working precision are handled.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
from mpmath import mp, mpf

from . import flow as flowmod
from .families import Blend, _ConstBlend, bump_series
from .series import Series
from .values import as_mpf

PSI_SAMPLES = 4096
FLOW_SAMPLES = 160


# ------------------------------------------------------------- algebra ---
def bell_table(x, J):
    """B[n][k] = partial Bell polynomial B_{n,k}(x[1], x[2], ...)."""
    B = [[mpf(0)] * (J + 1) for _ in range(J + 1)]
    B[0][0] = mpf(1)
    for n in range(1, J + 1):
        for k in range(1, n + 1):
            s = mpf(0)
            for m in range(1, n - k + 2):
                s += math.comb(n - 1, m - 1) * x[m] * B[n - m][k - 1]
            B[n][k] = s
    return B


def mul(a, b):
    J = min(len(a), len(b)) - 1
    return [sum((math.comb(j, i) * a[i] * b[j - i] for i in range(j + 1)), mpf(0)) for j in range(J + 1)]


def compose(F, G, keep_value=True):
    """Bound for F o G; F is a function vector, G a map vector."""
    J = min(len(F), len(G)) - 1
    B = bell_table(G, J)
    out = [F[0] if keep_value else mpf(0)]
    for j in range(1, J + 1):
        out.append(sum((F[i] * B[j][i] for i in range(1, j + 1)), mpf(0)))
    return out


def compose_maps(F, G):
    return compose(F, G, keep_value=False)


def recip(a, m):
    """Bound for 1/f when |f| >= m > 0."""
    J = len(a) - 1
    B = bell_table(a, J)
    out = [1 / m]
    for j in range(1, J + 1):
        out.append(sum((math.factorial(i) / m ** (i + 1) * B[j][i] for i in range(1, j + 1)), mpf(0)))
    return out


def deriv(v):
    """Function vector of f' from the map vector of f."""
    return list(v[1:])


def scale_cover(v, q):
    """Lift by the q-fold cover: h^(j) = q^(j-1) h-hat^(j)(q x)."""
    q = as_mpf(q)
    return [mpf(0)] + [v[j] * q ** (j - 1) for j in range(1, len(v))]


def scale_fn(v, q):
    """x -> F(q x): j-th derivative picks up q^j."""
    q = as_mpf(q)
    return [v[j] * q ** j for j in range(len(v))]


def identity_map(J):
    return [mpf(0), mpf(1)] + [mpf(0)] * (J - 1)


def constant_fn(c, J):
    return [mpf(c)] + [mpf(0)] * J


def inverse_map(v, m):
    """Bound for g = f^-1 from the map vector of f and inf f' >= m.

    g' = (1/f') o g, so g^(j+1) is Faa di Bruno of 1/f' along g.
    """
    J = len(v) - 1
    R = recip(deriv(v), m)
    g = [mpf(0), R[0]] + [mpf(0)] * (J - 1)
    for j in range(1, J):
        B = bell_table(g, j)
        g[j + 1] = sum((R[i] * B[j][i] for i in range(1, j + 1)), mpf(0))
    return g


def vmax(*vs):
    J = min(len(v) for v in vs) - 1
    return [max(v[j] for v in vs) for j in range(J + 1)]


# ------------------------------------------------------------ bump sups ---
@lru_cache(maxsize=16)
def _psi_sups(J, prec):
    n = PSI_SAMPLES
    raw = [mpf(0)] * (J + 2)
    q = mpf(1) / 4
    for i in range(1, n):
        u = -q + mpf(i) / (2 * n)
        d = bump_series(Series.variable(u, J + 1)).derivatives()
        for j in range(J + 2):
            raw[j] = max(raw[j], abs(d[j]))
    gap = mpf(1) / (2 * n)
    out = [raw[j] + gap * raw[j + 1] for j in range(J + 1)]
    out[0] = mpf(1)
    return tuple(out)


def psi_sups(J):
    """Upper bounds for sup |psi^(j)| on [-1/4, 1/4], j = 0..J."""
    return list(_psi_sups(J, mp.prec))


# ---------------------------------------------------------- piece sups ---
@dataclass
class PieceBound:
    lo: object
    hi: object
    fwd: list  # map vector of h-hat on the piece
    slope_min: object


def _piece_bound(p, J):
    if p.kind == "affine":
        v = [mpf(0), abs(p.slope)] + [mpf(0)] * (J - 1)
        return PieceBound(p.lo, p.hi, v, p.slope)
    if p.kind == "blend":
        return _blend_bound(p, J)
    if p.kind == "flow":
        return _flow_bound(p, J)
    raise TypeError(f"no bound for piece kind {p.kind}")


def _blend_bound(p, J):
    S = psi_sups(J)
    c = p.uscale
    sL = p.left[0]
    if isinstance(p, _ConstBlend):
        gap = abs(p.gap)
        v = [mpf(0)] + [gap * c ** j * S[j] for j in range(1, J + 1)]
        v[1] += abs(sL)
        smin = sL if p.gap >= 0 else None
    else:
        ds = abs(p.dslope)
        G0 = ds * max(abs(p.lo - p.xstar), abs(p.hi - p.xstar))
        v = [mpf(0)]
        for j in range(1, J + 1):
            v.append(S[j] * c ** j * G0 + j * S[j - 1] * c ** (j - 1) * ds)
        v[1] += abs(sL)
        # psi' >= 0, so the extra term has the sign of dslope (x - xstar)
        same_side = all(p.dslope * (x - p.xstar) >= 0 for x in (p.lo, p.hi))
        smin = min(sL, p.right[0]) if same_side else None
    if smin is None or smin <= 0:
        smin = _sampled_slope_min(p, v)
    return PieceBound(p.lo, p.hi, v, smin)


# ------------------------------------------------- sampled blend tables ---
# A blend on [lo, lo + w] is h(lo + w s) = h(lo) + w F(s) with F a blend on
# [0, 1] of the same two slopes.  Sups of F, F^-1 and F' o F^-1 are sampled
# in s, densely in 1/v near the flat ends (v the distance to the end), where
# the transition sits near 1/v = ln(slope ratio)/2.
UNIFORM = 256
GEOM = mpf("1.05")
WINDOW = 60
DW = mpf(1) / 8


def _normalized(p):
    w = p.hi - p.lo
    if isinstance(p, _ConstBlend):
        F = _ConstBlend(mpf(0), mpf(1), (p.left[0], mpf(0)), (p.left[0], p.gap / w))
        return F, w
    sL, sR = p.left[0], p.right[0]
    if p.xstar == p.hi:
        # s -> 1 - s and psi(-u) = 1 - psi(u) turn this into the blend from
        # sR to sL anchored at 0, with the same derivative sups and no
        # cancellation in F' near the flat end
        sL, sR = sR, sL
    elif p.xstar != p.lo:
        return None, w
    if sR < sL:
        return None, w
    F = Blend(mpf(0), mpf(1), (sL, mpf(0)), (sR, mpf(0)), mpf(0))
    return F, w


def _end_offsets(F):
    """Distances v to an end at which to sample."""
    if isinstance(F, _ConstBlend):
        ratio = max(abs(F.gap) / F.left[0], mpf(2))
    else:
        lo_s = min(F.left[0], F.right[0])
        ratio = max(abs(F.dslope) / lo_s, mpf(2))
    wstar = mpmath.log(ratio) / 2
    ws = []
    w = mpf(4)
    while w < wstar + WINDOW:
        ws.append(w)
        w *= GEOM
    a = max(mpf(4), wstar - WINDOW)
    n = int((2 * WINDOW + 8) / DW)
    ws += [a + DW * i for i in range(n + 1)]
    ws.append(wstar + 4 * WINDOW)
    return sorted(set(1 / w for w in ws))


def _blend_samples(F):
    pts = {mpf(i) / UNIFORM for i in range(UNIFORM + 1)}
    for v in _end_offsets(F):
        pts.add(v)
        pts.add(1 - v)
    return sorted(pts)


_TABLE_CACHE = {}


def blend_table(F, J):
    """(fwd, inv, B) sup vectors of the normalized blend F on [0, 1]."""
    key = (type(F).__name__, str(F.left), str(F.right), str(F.xstar), J, mp.prec)
    if key in _TABLE_CACHE:
        return _TABLE_CACHE[key]
    pts = _blend_samples(F)
    rows = []
    for s in pts:
        ser = F.series(Series.variable(s, J + 2))
        fd = ser.derivatives()
        g = ser.truncate(J + 1).inverse_at(s)
        gd = g.derivatives()
        b = ser.derivative().compose(g).derivatives()
        rows.append((s, fd, gd, b))
    fwd = [mpf(0)] * (J + 1)
    inv = [mpf(0)] * (J + 1)
    B = [mpf(0)] * (J + 1)
    for (s0, f0, g0, b0), (s1, f1, g1, b1) in zip(rows, rows[1:]):
        ds = s1 - s0
        slope = max(f0[1], f1[1])
        for j in range(1, J + 1):
            pad = ds * max(abs(f0[j + 1]), abs(f1[j + 1]))
            fwd[j] = max(fwd[j], max(abs(f0[j]), abs(f1[j])) + pad)
            pad = ds * slope * max(abs(g0[j + 1]), abs(g1[j + 1]))
            inv[j] = max(inv[j], max(abs(g0[j]), abs(g1[j])) + pad)
        for j in range(0, J + 1):
            pad = ds * slope * max(abs(b0[j + 1]), abs(b1[j + 1]))
            B[j] = max(B[j], max(abs(b0[j]), abs(b1[j])) + pad)
    # one-sided collars: F' = sL + dslope (psi + psi' (s - s*)/2) stays above min(sL, sR)
    smin = min(F.left[0], F.right[0])
    out = (fwd, inv, B, smin)
    _TABLE_CACHE[key] = out
    return out


def _sampled_blend(p, J):
    """Sampled (fwd, inv, B) vectors of a blend piece, or None if not normalizable."""
    F, w = _normalized(p)
    if F is None:
        return None
    fwd, inv, B, smin = blend_table(F, J)
    f = [mpf(0)] + [fwd[j] * w ** (1 - j) for j in range(1, J + 1)]
    g = [mpf(0)] + [inv[j] * w ** (1 - j) for j in range(1, J + 1)]
    b = [B[j] * w ** (-j) for j in range(J + 1)]
    return f, g, b, smin


def _sampled_slope_min(p, v, n=2048):
    best = None
    for i in range(n + 1):
        x = p.lo + (p.hi - p.lo) * mpf(i) / n
        d = p.series(Series.variable(x, 1)).c[1]
        best = d if best is None else min(best, d)
    return best - (p.hi - p.lo) / n * v[2] if len(v) > 2 else best


def _flow_bound(p, J):
    T, a = p.T, p.a
    raw, smin = _flow_sups(a, J)
    # h(x) = T phi(x/T): h^(j) = T^(1-j) phi^(j)
    v = [mpf(0)] + [raw[j] * T ** (1 - j) for j in range(1, J + 1)]
    return PieceBound(p.lo, p.hi, v, smin)


def _flow_sups(a, J):
    key = (str(a), J, mp.prec)
    if key in _FLOW_CACHE:
        return _FLOW_CACHE[key]
    n = FLOW_SAMPLES
    lo, hi = flowmod.LO, flowmod.HI
    raw = [mpf(0)] * (J + 2)
    dmin = mpf(1)
    for i in range(n + 1):
        u = lo + (hi - lo) * mpf(i) / n
        Phi, _ = flowmod.flow_jet(u, a, J + 1)
        d = Phi.derivatives()
        for j in range(1, J + 2):
            raw[j] = max(raw[j], abs(d[j]))
        dmin = min(dmin, d[1])
    gap = (hi - lo) / n
    raw[1] = max(raw[1], mpf(1))
    out = [mpf(0)] + [raw[j] + gap * raw[j + 1] for j in range(1, J + 1)]
    smin = dmin - gap * raw[2]
    _FLOW_CACHE[key] = (out, smin)
    return out, smin


_FLOW_CACHE = {}


# ----------------------------------------------------------- hat tables ---
@dataclass
class HatSups:
    """Sup vectors over [0,1] of h-hat, its inverse and B = h-hat' o h-hat^-1."""

    order: int
    fwd: list
    inv: list
    B: list
    slope_min: object
    slope_max: object

    @property
    def lipschitz(self):
        return max(self.slope_max, 1 / self.slope_min)


_HAT_CACHE = {}


def hat_sups(family, J):
    key = (family.key(), J, mp.prec)
    if key in _HAT_CACHE:
        return _HAT_CACHE[key]
    fwd = inv = B = None
    smin = None
    for p in family.pieces():
        if p.hi <= p.lo:
            continue
        sampled = _sampled_blend(p, J) if p.kind == "blend" else None
        if sampled is not None:
            f, g, b, slope_min = sampled
        else:
            pb = _piece_bound(p, J + 1)
            slope_min = pb.slope_min
            f = pb.fwd[:J + 1]
            g = inverse_map(f, slope_min)
            b = compose(deriv(pb.fwd), g)
        if slope_min <= 0:
            raise ArithmeticError(f"{family.kind}: cannot certify a positive slope on a piece")
        fwd = f if fwd is None else vmax(fwd, f)
        inv = g if inv is None else vmax(inv, g)
        B = b if B is None else vmax(B, b)
        smin = slope_min if smin is None else min(smin, slope_min)
    out = HatSups(J, fwd, inv, B, smin, fwd[1])
    _HAT_CACHE[key] = out
    return out


def lift_sups(family, cover, J):
    """(map vector of h, of h^-1, function vector of B) for the cover lift."""
    hs = hat_sups(family, J)
    return scale_cover(hs.fwd, cover), scale_cover(hs.inv, cover), scale_fn(hs.B, cover)


# ----------------------------------------------------------- step bound ---
def chain_sups(links, J):
    """Map vectors of H = h_1 o ... o h_m and of H^-1 from (family, cover) links."""
    H = identity_map(J)
    Hi = identity_map(J)
    for fam, q in links:
        if fam.is_identity():
            continue
        f, fi, _ = lift_sups(fam, q, J)
        H = compose_maps(H, f)   # H o h
        Hi = compose_maps(fi, Hi)  # h^-1 o H^-1
    return H, Hi


def step_bound(prev_links, family, cover, m):
    """Coefficient pair (A, P) with d_m(f_{n-1}, f_n) <= delta (A + delta P).

    Writing f_n = H_{n-1} h R_{alpha_n + s} h^-1 H_{n-1}^-1 at s = delta, the
    s-derivative at 0 is (U B) o G with U = H_{n-1}' o R, B = h' o h^-1 and
    G = H_{n-1}^-1 (h' has period 1/q so the rotation drops out of B); the
    second s-derivative is H_n'' o R o H_n^-1.  Both bounds hold for f^-1 too.
    """
    J = m + 2
    H, Hi = chain_sups(prev_links, J)
    U = deriv(H)  # sup of (H' o R)^(i) = sup of H^(i+1)
    if family.is_identity():
        return mpf(0), mpf(0), [mpf(0)] * (m + 1)
    _, _, B = lift_sups(family, cover, J)
    A = compose(mul(U, B), Hi)
    Hn, Hni = chain_sups(list(prev_links) + [(family, cover)], J)
    P = compose(Hn[2:], Hni)
    A, P = A[:m + 1], P[:m + 1]
    return max(A), max(P), [A[i] for i in range(m + 1)]


def bound_from(delta, A, P):
    delta = as_mpf(delta)
    return delta * (A + delta * P)


__all__ = [
    "bell_table", "mul", "compose", "compose_maps", "recip", "inverse_map",
    "psi_sups", "hat_sups", "lift_sups", "chain_sups", "step_bound", "bound_from", "HatSups",
]
