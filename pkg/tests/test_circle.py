from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mpf

from conjlab.circle import (
    CircleMap, FamilyLift, Inverse, Rotation, abs_r, conjugate, cr_norm, dist_r, eval, eval_lift, hat_norm,
    jet, lift_by_cover, matched_points,
)
from oracles import fd_derivatives

from conjlab.families import G0Ac, g0ac_params, make_g1sing, make_gbeta, make_gk, make_identity

THIRD = Fraction(1, 3)


def R(a):
    return CircleMap((Rotation(a),))


def test_rotation_eval():
    assert eval(R(THIRD), 0) == mpf(1) / 3
    assert abs(eval(CircleMap((Inverse(Rotation(THIRD)),)), mpf(1) / 3)) < mpf(2) ** -250


def test_lift_conventions():
    assert abs(eval_lift(R(THIRD), mpf("0.9")) - (mpf("0.9") + mpf(1) / 3)) < mpf(2) ** -250
    assert eval_lift(CircleMap.identity(), mpf("7.25")) == mpf("7.25")
    three = CircleMap((Rotation(THIRD),) * 3)
    assert abs(eval_lift(three, 0) - 1) < mpf(2) ** -250


def test_gbeta_affine_region():
    h = CircleMap((FamilyLift(make_gbeta(Fraction(1, 10)), 1),))
    assert abs(eval(h, mpf("0.05")) - mpf("0.5")) < mpf(10) ** -70
    j = jet(h, mpf("0.05"), 2).coefficients
    assert abs(j[1] - 10) < mpf(10) ** -60 and abs(j[2]) < mpf(10) ** -60


def test_rotation_jets():
    j = jet(R(Fraction(1, 5)).compose(R(Fraction(1, 7))), mpf("0.5"), 3).coefficients
    assert abs(j[0] - (mpf("0.5") + mpf(12) / 35)) < mpf(2) ** -250
    assert j[1] == 1 and j[2] == 0 and j[3] == 0


def test_identity_cover():
    h = lift_by_cover(make_identity(), 5)
    for x in (mpf("0.1"), mpf("0.77")):
        assert eval_lift(h, x) == x


def test_cover_commutes_with_rotation():
    h = lift_by_cover(make_g1sing(1, 4), 3)
    rot = R(THIRD)
    worst = max(abs(eval_lift(h.compose(rot), x) - eval_lift(rot.compose(h), x))
                for x in (mpf(i) / 1000 + mpf("1e-4") for i in range(1000)))
    assert worst < mpf(10) ** -30


def test_cover_sup_scaling():
    fam = make_gbeta(Fraction(1, 10))
    u = [mpf(i) / 64 for i in range(64)]
    hat = hat_norm(fam, 0, u)[0]
    low = cr_norm(lift_by_cover(fam, 4), 0, points=matched_points(u, 4)).lower_bound
    assert abs(low - hat / 4) < mpf(10) ** -60


def test_rotation_norms():
    b = Fraction(2, 7)
    rep = cr_norm(R(b), 3)
    assert abs(rep.per_order_lower[0] - mpf(2) / 7) < mpf(10) ** -60
    assert all(v == 0 for v in rep.per_order_lower[1:])
    assert abs_r(R(Fraction(1, 4)), 2).lower_bound == 1
    assert abs_r(CircleMap.identity(), 5).lower_bound == 1
    d = dist_r(R(Fraction(1, 10)), R(Fraction(9, 10)), 0).lower_bound
    assert abs(d - mpf(1) / 5) < mpf(10) ** -60


def test_dist_self_is_zero():
    f = CircleMap((FamilyLift(make_g1sing(1, 4), 2), Rotation(THIRD)))
    assert dist_r(f, f, 4, grid=64).upper_bound == 0


def test_gbeta_norm_lower_bound():
    t = Fraction(1, 20)
    rep = cr_norm(CircleMap((FamilyLift(make_gbeta(t), 1),)), 1, grid=512)
    assert rep.lower_bound >= t.denominator / mpf(t.numerator) - 1
    assert rep.lower_bound <= rep.upper_bound


def test_abs_r_cover_inequality():
    fam = make_g1sing(1, 4)
    hat = abs_r(CircleMap((FamilyLift(fam, 1),)), 2, grid=256).lower_bound
    h = abs_r(lift_by_cover(fam, 6), 2, points=matched_points([mpf(i) / 256 for i in range(256)], 6))
    assert h.lower_bound <= hat * 6 * (1 + mpf(10) ** -20)


def test_grid_refinement_g0ac():
    s, t = g0ac_params(2, 10)
    f = CircleMap((FamilyLift(G0Ac(s, t), 1),))
    a = cr_norm(f, 1, grid=2 ** 12)
    b = cr_norm(f, 1, grid=2 ** 14)
    assert b.lower_bound >= a.lower_bound - mpf(10) ** -40
    assert b.lower_bound <= a.upper_bound


def test_lipschitz_in_delta():
    """d_1(H R_a H^-1, H R_b H^-1) <= C |H|_2^2 |a - b| with a fitted C."""
    H = CircleMap((FamilyLift(make_gbeta(Fraction(1, 10)), 2),))
    size = abs_r(H, 2, grid=256).upper_bound
    fitted = []
    for e in (3, 4, 5):
        d = Fraction(1, 10 ** e)
        rep = dist_r(conjugate(H, Fraction(1, 3)), conjugate(H, Fraction(1, 3) + d), 1, grid=128)
        fitted.append(rep.lower_bound * d.denominator / size ** 2)
    assert max(fitted) < 1
    # linear regime reached: the last two fits agree
    assert fitted[1] / fitted[2] < 1.5


chains = st.lists(
    st.sampled_from([
        lambda: Rotation(Fraction(2, 7)),
        lambda: FamilyLift(make_g1sing(1, 4), 3),
        lambda: FamilyLift(make_gbeta(Fraction(1, 7)), 2),
        lambda: Inverse(FamilyLift(make_g1sing(2, 9), 2)),
    ]),
    min_size=1, max_size=3,
)


@settings(max_examples=25, deadline=None)
@given(chains, st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_monotone_lift(nodes, a, b):
    f = CircleMap(tuple(n() for n in nodes))
    x, y = sorted((mpf(a), mpf(b)))
    if x < y:
        assert eval_lift(f, x) < eval_lift(f, y)


@settings(max_examples=25, deadline=None)
@given(chains, st.floats(0, 1, exclude_max=True))
def test_inverse_round_trip(nodes, x):
    f = CircleMap(tuple(n() for n in nodes))
    y = eval_lift(f, mpf(x))
    assert abs(eval_lift(f.inverse(), y) - mpf(x)) < mpf(10) ** -60


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([2, 3, 5]), st.integers(0, 4), st.floats(0, 1, exclude_max=True))
def test_cover_commutation(q, p, x):
    h = lift_by_cover(make_gbeta(Fraction(1, 10)), q)
    rot = R(Fraction(p, q))
    x = mpf(x)
    assert abs(eval_lift(h.compose(rot), x) - eval_lift(rot.compose(h), x)) < mpf(10) ** -60


def test_composition_inequality_constant():
    """||f g - g||_r <= C ||f - Id||_r |g|_r^r holds with a moderate fitted C."""
    g = CircleMap((FamilyLift(make_g1sing(1, 4), 2),))
    gr = abs_r(g, 1, grid=128).upper_bound
    consts = []
    for t in (Fraction(1, 10), Fraction(1, 20)):
        f = CircleMap((FamilyLift(make_gk(t, 1), 1),))
        lhs = cr_norm(f.compose(g), 1, grid=128, minus=g).lower_bound
        rhs = cr_norm(f, 1, grid=128).upper_bound * gr
        consts.append(lhs / rhs)
    assert max(consts) < 10
    assert min(consts) > 0


@pytest.mark.parametrize("x", ["0.123", "0.77"])
def test_jet_matches_fd_chain(x):
    f = CircleMap((FamilyLift(make_gbeta(Fraction(1, 7)), 2), Rotation(THIRD),
                   Inverse(FamilyLift(make_g1sing(1, 4), 3))))
    j = jet(f, mpf(x), 5).coefficients
    fd = fd_derivatives(lambda u: eval_lift(f, u), mpf(x), 5)
    for k in range(1, 6):
        assert abs(j[k] - fd[k]) / max(1, abs(fd[k])) < mpf(10) ** -6
    assert mpmath.isfinite(j[5])
