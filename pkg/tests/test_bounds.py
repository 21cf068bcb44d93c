from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from conjlab import bounds
from conjlab.circle import CircleMap, FamilyLift, conjugate, dist_r
from conjlab.families import g0ac_params, make_g0ac, make_g1ac, make_g1sing, make_gbeta, make_gk
from conjlab.series import Series

coeffs = st.lists(st.floats(0, 3), min_size=5, max_size=5)


def derivs(c):
    return Series([mpf(x) for x in c]).derivatives()


@settings(max_examples=30, deadline=None)
@given(coeffs, coeffs)
def test_mul_is_leibniz(a, b):
    got = bounds.mul(derivs(a), derivs(b))
    want = (Series([mpf(x) for x in a]) * Series([mpf(x) for x in b])).derivatives()
    assert all(abs(g - w) <= mpf(10) ** -50 * (1 + abs(w)) for g, w in zip(got, want))


@settings(max_examples=30, deadline=None)
@given(coeffs, coeffs)
def test_compose_is_faa_di_bruno(f, g):
    """With nonnegative coefficients the majorant is the exact composition."""
    g = [0.0] + g[1:]
    F, G = Series([mpf(x) for x in f]), Series([mpf(x) for x in g])
    want = F.compose(G).derivatives()
    got = bounds.compose(derivs(f), derivs(g))
    assert all(abs(a - b) <= mpf(10) ** -50 * (1 + abs(b)) for a, b in zip(got, want))


FAMS = [make_gbeta(Fraction(1, 10)), make_g1sing(1, 4), make_g1ac(2), make_g0ac(*g0ac_params(2, 10)),
        make_gk(Fraction(3, 10), 2)]


@pytest.mark.parametrize("fam", FAMS, ids=lambda f: f.kind)
def test_hat_tables_dominate_samples(fam):
    J = 3
    hs = bounds.hat_sups(fam, J)
    for i in range(1, 600):
        x = mpf(i) / 600
        d = fam.series(Series.variable(x, J)).derivatives()
        g = fam.inverse_series(Series.variable(x, J)).derivatives()
        for j in range(1, J + 1):
            assert abs(d[j]) <= hs.fwd[j] * (1 + mpf(10) ** -20)
            assert abs(g[j]) <= hs.inv[j] * (1 + mpf(10) ** -20)


def test_step_bound_dominates_grid():
    cases = [([], make_gbeta(Fraction(1, 10)), 10, Fraction(1, 10), Fraction(1, 10 ** 4)),
             ([(make_g1sing(1, 4), 3)], make_gbeta(Fraction(1, 7)), 6, Fraction(1, 3), Fraction(1, 10 ** 5))]
    for prev, fam, q, a, d in cases:
        A, P, _ = bounds.step_bound(prev, fam, q, 2)
        ub = bounds.bound_from(mpf(d.numerator) / d.denominator, A, P)
        H = CircleMap(tuple(FamilyLift(f, c) for f, c in prev))
        Hn = CircleMap(tuple(FamilyLift(f, c) for f, c in prev + [(fam, q)]))
        low = dist_r(conjugate(H, a), conjugate(Hn, a + d), 2, grid=256).lower_bound
        assert low <= ub


def test_bound_monotone_in_delta():
    A, P, _ = bounds.step_bound([], make_g1sing(1, 4), 10, 2)
    assert bounds.bound_from(mpf("1e-8"), A, P) < bounds.bound_from(mpf("1e-6"), A, P)
