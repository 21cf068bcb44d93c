"""Acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line in RESULTS; conftest prints the
block at the end of the session.  Run alone with

    pytest tests/test_acceptance.py -v
"""
import random
import sys
import time
from fractions import Fraction

import mpmath
import pytest
from mpmath import mp, mpf

from oracles import factorial_truncation, fd_derivatives

from conjlab import analytics, archive
from conjlab.circle import (
    CircleMap, FamilyLift, Inverse, Rotation, cr_norm, eval_lift, hat_norm, jet, lift_by_cover, matched_points,
)
from conjlab.cli import main
from conjlab.families import G0Ac, g0ac_params, make_g1ac, make_g1sing, make_gbeta, make_gk
from conjlab.flow import flow_jet
from conjlab.liouville import find_rational, make_liouville, verify_witness
from conjlab.scheduler import Link

RESULTS = {}

GBETA3 = {
    "construction": {"kind": "GBeta", "beta": "1/2"},
    "r": 1,
    "steps": 3,
    "alpha": {"kind": "factorial"},
    "precision_bits": 256,
    # a_5 = 9! digits; the default q budget of 10^12 would stop at step 1
    "budgets": {"max_q_log10": 10 ** 6},
}


def record(n, ok, detail, started):
    RESULTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  ({time.time() - started:.1f}s)  {detail}"
    print(RESULTS[n], file=sys.stderr)
    assert ok, RESULTS[n]


def fmt(x, d=3):
    return mpmath.nstr(x, d)


@pytest.fixture(scope="module")
def gbeta_runs(tmp_path_factory):
    """Criterion 3's manifest constructed twice through the CLI."""
    d = tmp_path_factory.mktemp("acc")
    m = d / "gbeta3.json"
    m.write_text(archive.dumps(GBETA3))
    t0 = time.time()
    codes = [main(["construct", str(m), "--out", str(d / name)]) for name in ("a.archive", "b.archive")]
    return d, codes, (time.time() - t0) / 2


# ------------------------------------------------------------------ 1 ---
def test_criterion_1_cover_scaling():
    t0 = time.time()
    s, t = g0ac_params(1, 10)
    fams = [make_g1sing(1, 4), make_gbeta(Fraction(1, 10)), G0Ac(s, t)]
    u = [mpf(i) / 64 for i in range(64)]
    worst, literal = mpf(0), mpf(0)
    for fam in fams:
        hat = hat_norm(fam, 3, u)
        for q in (2, 3, 10):
            low = cr_norm(lift_by_cover(fam, q), 3, points=matched_points(u, q)).per_order_lower
            for r in range(4):
                # order by order: sup |D^i (h - Id)| = q^(i-1) sup |D^i (hat - Id)|
                for i in range(r + 1):
                    want = hat[i] * mpf(q) ** (i - 1)
                    err = abs(low[i] - want) / want if want else abs(low[i])
                    worst = max(worst, err)
                whole = max(low[: r + 1])
                want = max(hat[: r + 1]) * mpf(q) ** (r - 1)
                if want:
                    literal = max(literal, abs(whole / want - 1))
    ok = worst < mpf(10) ** -8 and time.time() - t0 < 60
    record(1, ok, f"per-order rel err {fmt(worst)} < 1e-8 (max-over-orders literal reading off by {fmt(literal)}, info)", t0)


# ------------------------------------------------------------------ 2 ---
def _random_node(rng):
    kind = rng.randrange(3)
    if kind == 0:
        return Rotation(Fraction(rng.randint(0, 99), 100))
    c = rng.randrange(5)
    if c == 0:
        fam = make_gbeta(Fraction(1, rng.randint(5, 20)))
    elif c == 1:
        fam = make_g1sing(1, rng.choice([2, 3, 4, 9]))
    elif c == 2:
        fam = make_g1ac(rng.randint(1, 3))
    elif c == 3:
        fam = G0Ac(*g0ac_params(1, 10))
    else:
        fam = make_gk(Fraction(rng.choice([1, 2, 3]), 10), 2)
    node = FamilyLift(fam, rng.randint(1, 3))
    return node if kind == 1 else Inverse(node)


def _jet_error(f, x):
    j = jet(f, x, 5).coefficients
    fd = fd_derivatives(lambda v: eval_lift(f, v), x, 5)
    return max(abs(j[k] - fd[k]) / max(1, abs(fd[k])) for k in range(1, 6))


def test_criterion_2_jets():
    t0 = time.time()
    rng = random.Random(20240611)
    worst = mpf(0)
    for _ in range(50):
        f = CircleMap(tuple(_random_node(rng) for _ in range(rng.randint(1, 4))))
        worst = max(worst, _jet_error(f, mpf(rng.random())))
    # the flow family only moves points inside [0, t^2]; make sure it is exercised
    gk = CircleMap((Rotation(Fraction(1, 7)), FamilyLift(make_gk(Fraction(3, 10), 2), 1)))
    for x in ("0.01", "0.03", "0.06", "0.08"):
        worst = max(worst, _jet_error(gk, mpf(x) - mpf(1) / 7))
    ok = worst < mpf(10) ** -6 and mp.prec == 256 and time.time() - t0 < 120
    record(2, ok, f"50 random chains + Gk(k=2) chain, orders 1..5, worst rel err {fmt(worst)} < 1e-6", t0)


# ------------------------------------------------------------------ 3 ---
def test_criterion_3_scheduler(gbeta_runs):
    t0 = time.time()
    d, codes, build = gbeta_runs
    a = archive.load_archive(str(d / "a.archive"))
    steps = [lg for lg in a.logs if lg["step"] >= 1]
    bounds_ok = len(steps) == 3 and all(
        lg["passed"] and mpf(lg["bound"]) < mpf(2) ** (-lg["step"] - 2) for lg in steps)
    out = d / "rot.json"
    rc = main(["analyze", str(d / "a.archive"), "--rotation", "--iterations", str(10 ** 5), "--out", str(out)])
    import json

    rot = json.loads(out.read_text())["rotation"]
    err = mpf(rot["error"])
    ok = codes[0] == 0 and rc == 0 and bounds_ok and err < mpf(10) ** -5 + mpf(10) ** -5
    total = time.time() - t0 + build
    ok = ok and total < 600
    detail = ", ".join(f"n={lg['step']} bound {fmt(mpf(lg['bound']))}" for lg in steps)
    record(3, ok, f"{detail}; |rho(f_3) - alpha_4| = {fmt(err)}; build+rotation {total:.0f}s", time.time() - total)


# ------------------------------------------------------------------ 4 ---
def test_criterion_4_singular_measure(g1sing3):
    t0 = time.time()
    d = analytics.singularity_diagnostic(g1sing3)
    ks = [l.family.k for l in g1sing3.links]
    mC = Fraction(3, 4) * Fraction(8, 9) * Fraction(15, 16)
    mHC = Fraction(1, 4 * 9 * 16)
    ok = ks == [4, 9, 16] and d["m_C"] == mC and d["m_HC"] == mHC
    record(4, ok, f"k = {ks}, m(C_3) = {d['m_C']}, m(H_3 C_3) = {d['m_HC']} (exact)", t0)


# ------------------------------------------------------------------ 5 ---
def test_criterion_5_fixed_set(g1ac2):
    t0 = time.time()
    d = analytics.ac_diagnostic(g1ac2)
    ok = (d["identity_verified"] and d["sampled_sup"] < mpf(10) ** -30 and mp.prec == 256
          and d["fixed_set_mass"] >= Fraction(5, 8) >= Fraction(1, 2))
    record(5, ok, f"m(X_2) = {d['fixed_set_mass']} >= 5/8, sampled sup |H_2 - Id| on X_2 = {fmt(d['sampled_sup'])}", t0)


# ------------------------------------------------------------------ 6 ---
def test_criterion_6_ratio():
    t0 = time.time()
    out = []
    for n in (1, 2):
        s, t = g0ac_params(n, 10)
        r = analytics.g0ac_ratio(Link(n, G0Ac(s, t), 10, 0))
        out.append((n, r, abs(r - n) / n))
    ok = all(e < mpf(10) ** -6 for _, _, e in out)
    record(6, ok, "; ".join(f"n={n}: ratio {fmt(r, 12)}" for n, r, _ in out), t0)


# ------------------------------------------------------------------ 7 ---
def test_criterion_7_family_laws():
    t0 = time.time()
    support_ok, norms = True, []
    for t in (Fraction(3, 10), Fraction(2, 10), Fraction(1, 10)):
        fam = make_gk(t, 2)
        lo, hi = fam.intervals()["K"]
        support_ok &= hi - lo >= 1 - t ** 2
        T = mpf(t.numerator) ** 2 / t.denominator ** 2
        norms.append(max(hat_norm(fam, 2, [T * i / 256 for i in range(257)])) / T)
    spread = max(norms) / min(norms)
    pts = [mpf(i) / 256 for i in range(256)]
    flow_spread = []
    for r in range(4):
        ratios = []
        for a in ("1e-2", "1e-3", "1e-4"):
            a = mpf(a)
            ratios.append(max(abs(flow_jet(u, a, r)[1].derivatives()[r]) for u in pts) / a)
        flow_spread.append(max(ratios) / min(ratios))
    ok = support_ok and spread < 3 and max(flow_spread) < 10 and time.time() - t0 < 900
    record(7, ok, f"support exact; ||h_t - Id||_2/t^2 = {[fmt(v, 4) for v in norms]} (spread {fmt(spread)}); "
                  f"flow ratio spreads r=0..3 {[fmt(v) for v in flow_spread]}", t0)


# ------------------------------------------------------------------ 8 ---
def test_criterion_8_holder(gbeta_runs):
    t0 = time.time()
    d, _, _ = gbeta_runs
    ident = analytics.holder_exponent(CircleMap.identity()).exponent
    sq = analytics.holder_exponent(analytics.sqrt_modulus_map()).exponent
    state = archive.load_archive(str(d / "a.archive")).state()
    with mpmath.workprec(256):
        inv = analytics.holder_exponent(state.H(), "inverse").exponent
    # the band's upper end is 1; allow rounding noise at 256 bits
    ok = (abs(ident - 1) <= mpf(10) ** -12 and abs(sq - mpf("0.5")) <= 0.02
          and mpf("0.35") <= inv <= 1 + mpf(10) ** -9)
    record(8, ok, f"identity {fmt(ident, 15)}, sqrt map {fmt(sq, 5)}, GBeta 3-step inverse {fmt(inv, 10)} (1 - est = {fmt(1 - inv)})", t0)


# ------------------------------------------------------------------ 9 ---
def test_criterion_9_liouville():
    t0 = time.time()
    alpha = make_liouville("factorial")
    w = find_rational(alpha, Fraction(1, 1000), 5)
    exact = w.truncation.fraction == factorial_truncation(5)
    ok = w.q == 10 ** 120 and exact and verify_witness(alpha, w) and not verify_witness(alpha, w.with_N(6))
    record(9, ok, f"q = 10^{len(str(w.q)) - 1}, exact re-verification {exact}, rejected at N = 6", t0)


# ----------------------------------------------------------------- 10 ---
def test_criterion_10_determinism(gbeta_runs):
    t0 = time.time()
    d, codes, _ = gbeta_runs
    csv = [archive.export(archive.load_archive(str(d / n)), "step-bounds").encode() for n in ("a.archive", "b.archive")]
    ok = codes == [0, 0] and csv[0] == csv[1]
    record(10, ok, f"two constructions, step-bounds CSV {len(csv[0])} bytes each, identical {csv[0] == csv[1]}", t0)
