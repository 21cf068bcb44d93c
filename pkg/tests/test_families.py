from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from oracles import fd_derivatives

from conjlab.errors import InvalidParam
from conjlab.families import (
    Affine, Blend, G0Ac, bump, family_from_descriptor, g0ac_params, make_g0ac, make_g1ac, make_g1sing,
    make_gbeta, make_gk, special_sets,
)
from conjlab.flow import flow_jet
from conjlab.series import Series
from conjlab.values import as_mpf

TOL = mpf(10) ** -60


def deriv(fam, x, order=1):
    return fam.series(Series.variable(as_mpf(x), order)).derivatives()


def test_bump_values():
    assert bump(mpf(-1) / 4) == 0 and bump(mpf(1) / 4) == 1
    assert abs(bump(0) - mpf(1) / 2) < TOL
    d = bump(0, 1)[1]
    fd = fd_derivatives(bump, mpf(0), 1, h=mpf(2) ** -30)[1]
    assert abs(d - fd) < mpf(10) ** -8


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.3, 0.3))
def test_bump_symmetry(x):
    x = mpf(x)
    assert abs(bump(-x) - (1 - bump(x))) < TOL


def test_g1sing_examples():
    assert make_g1sing(1, 2).is_identity()
    fam = make_g1sing(1, 4)
    assert fam.exact_value(Fraction(3, 4)) == Fraction(1, 4)
    assert abs(deriv(fam, "0.3")[1] - mpf(1) / 3) < TOL
    fam9 = make_g1sing(2, 9)
    lo = mpf(8) / 9
    assert min(deriv(fam9, lo + (1 - lo) * i / 10 ** 4)[1] for i in range(10 ** 4)) > 0
    with pytest.raises(InvalidParam):
        make_g1sing(1, 1)


def test_g1ac_examples():
    n = 3
    fam = make_g1ac(n)
    L = mpf(1) / 2 ** (n + 1)
    for x in ("0.2", "0.5", "0.9"):
        assert deriv(fam, x)[1] == 1
    assert max(deriv(fam, L * i / 400)[1] for i in range(1, 400)) > n
    # displacement is supported in [0, L], so its integral is bounded by L * sup
    disp = [abs(fam.value(L * i / 200) - L * i / 200) for i in range(201)]
    integral = mpmath.quad(lambda x: fam.value(x) - x, [0, L])
    assert abs(integral) <= L * max(disp)


def test_gbeta_examples():
    t = Fraction(1, 10)
    fam = make_gbeta(t)
    assert fam.exact_value(t / 2) == Fraction(1, 2)
    c = t / (1 + t)
    assert c / t == t * (c - 1) + 1
    with pytest.raises(InvalidParam):
        make_gbeta(Fraction(1, 2))


def test_gbeta_norm_growth():
    """log |h_t|_r against log(1/t) is close to linear."""
    for r in (1, 2, 3):
        logs = []
        for e in (1, 2, 3):
            t = Fraction(1, 10 ** e)
            fam = make_gbeta(t)
            tm = mpf(1) / 10 ** e
            pts = [tm * i / 512 for i in range(513)] + [tm + (1 - tm) * i / 64 for i in range(65)]
            logs.append(mpmath.log10(max(abs(d) for x in pts for d in fam.displacement_series(
                Series.variable(x, r)).derivatives()[1:])))
        s1, s2 = logs[1] - logs[0], logs[2] - logs[1]
        assert abs(s1 - s2) < 0.1 * max(abs(s1), 1)


def test_g0ac_examples():
    s, t = g0ac_params(2, 10)
    fam = G0Ac(s, t)
    assert abs(deriv(fam, 2 * t + (1 - 2 * t) / 3)[1] - 1) < TOL
    mid = (s / 4 + 7 * s / 12) / 2
    assert abs(deriv(fam, mid)[1] - as_mpf(t / s)) < TOL
    with pytest.raises(InvalidParam):
        make_g0ac(Fraction(1, 10), Fraction(1, 5))


def test_gk_identity_off_support():
    for t in (Fraction(3, 10), Fraction(1, 10)):
        fam = make_gk(t, 2)
        T = t ** 2
        for x in (T, (1 + T) / 2, Fraction(99, 100)):
            assert fam.value(as_mpf(x)) == as_mpf(x)
        lo, hi = fam.intervals()["K"]
        assert hi - lo >= 1 - T


def test_gk_norm_sweep():
    vals = []
    for t in (Fraction(3, 10), Fraction(2, 10), Fraction(1, 10)):
        fam = make_gk(t, 2)
        T = mpf(t.numerator) ** 2 / t.denominator ** 2
        pts = [T * i / 128 for i in range(129)]
        sup = max(abs(d) for x in pts for d in fam.displacement_series(Series.variable(x, 2)).derivatives())
        vals.append(sup / T)
    assert max(vals) / min(vals) < 3


def test_flow_linear_in_time():
    pts = [mpf(i) / 128 for i in range(128)]
    for r in range(4):
        ratios = []
        for a in ("1e-2", "1e-3", "1e-4"):
            a = mpf(a)
            ratios.append(max(abs(flow_jet(u, a, r)[1].derivatives()[r]) for u in pts) / a)
        assert max(ratios) / min(ratios) < 10


def test_special_sets():
    J = special_sets(make_g1sing(1, 4), 2, "J")
    assert J.count == 2 and J.measure() == Fraction(3, 4)
    assert J.components() == [(Fraction(0), Fraction(3, 8)), (Fraction(1, 2), Fraction(7, 8))]
    I = special_sets(make_g1sing(1, 4), 1, "I")
    assert I.components() == [(Fraction(0), Fraction(1, 4))]


FAMILIES = [
    lambda: make_g1sing(1, 4), lambda: make_g1sing(2, 9), lambda: make_g1ac(2), lambda: make_gbeta(Fraction(1, 10)),
    lambda: make_g0ac(*g0ac_params(2, 10)), lambda: make_gk(Fraction(1, 5), 1),
]


@pytest.mark.parametrize("make", FAMILIES[:5])
def test_strictly_increasing(make):
    fam = make()
    assert min(deriv(fam, mpf(i) / 10 ** 4)[1] for i in range(10 ** 4)) > 0


def test_flow_family_increasing():
    # ODE jets are slow; 10^3 points on the support, identity elsewhere
    fam = make_gk(Fraction(1, 5), 1)
    assert min(deriv(fam, mpf(i) / (5 * 10 ** 3))[1] for i in range(10 ** 3)) > 0


@pytest.mark.parametrize("make", FAMILIES[:5])
def test_germ_matching(make):
    """At each blend boundary the jet agrees with the adjacent affine germ."""
    fam = make()
    for p in fam.pieces():
        if not isinstance(p, Blend):
            continue
        for x, germ in ((p.lo, p.left), (p.hi, p.right)):
            got = p.series(Series.variable(x, 6)).derivatives()
            want = Affine(x, x, germ[0], germ[1]).series(Series.variable(x, 6)).derivatives()
            for a, b in zip(got, want):
                assert abs(a - b) <= mpf(10) ** -10 * max(1, abs(b))


@pytest.mark.parametrize("make", FAMILIES)
def test_descriptor_round_trip(make):
    fam = make()
    again = family_from_descriptor(fam.descriptor())
    assert again.key() == fam.key()
    x = mpf("0.0123")
    assert again.value(x) == fam.value(x)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(len(FAMILIES))), st.floats(0, 1, exclude_max=True))
def test_inverse_value(i, y):
    fam = FAMILIES[i]()
    y = mpf(y)
    assert abs(fam.value(fam.inverse_value(y)) - y) < mpf(10) ** -50
