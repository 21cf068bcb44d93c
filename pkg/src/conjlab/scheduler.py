"""Induction engine: H_n = h_1...h_n and f_n = H_n R_{alpha_{n+1}} H_n^-1.

Each rational alpha_{n+1} is picked by guess and verify.  Candidates are
successive truncations of alpha.  Since every later truncation lies within
the tail bound 2*10^(-a_{k+1}) of a candidate, the step contract of the
*next* step can already be certified when the candidate is accepted; the
logged bound of each step then uses the actual gap alpha_{n+1} - alpha_n.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from mpmath import mpf

from . import bounds
from .circle import CircleMap, FamilyLift, conjugate
from .errors import CandidateLimit, InvalidParam, InvalidSchedule, PrecisionExhausted, ScheduleExhausted
from .families import G0Ac, G1Ac, G1Sing, GBeta, Gk, g0ac_params, special_sets
from .values import Pow10, as_mpf, log10_int, log10_of

KINDS = ("G1Sing", "G1Ac", "GBeta", "G0Ac", "Gk")
METHODS = {"G1Sing": "MethodIVariant", "G1Ac": "MethodI", "GBeta": "MethodII", "G0Ac": "MethodII", "Gk": "MethodII"}


# ------------------------------------------------------------- configs ---
@dataclass
class Construction:
    kind: str
    beta: Fraction = None
    beta_seq: tuple = None
    k_schedule: tuple = None
    k: int = None

    @property
    def method(self):
        return METHODS[self.kind]

    def beta_n(self, n):
        if self.beta_seq and n <= len(self.beta_seq):
            return Fraction(self.beta_seq[n - 1])
        b = self.beta
        # beta + 1/(n+4), kept below 1 by the decreasing cap beta + (1-beta)/(n+1)
        return b + min(Fraction(1, n + 4), (1 - b) / (n + 1))

    def k_n(self, n):
        if self.k_schedule and n <= len(self.k_schedule):
            return int(self.k_schedule[n - 1])
        return (n + 1) ** 2

    def to_json(self):
        d = {"kind": self.kind}
        if self.beta is not None:
            d["beta"] = f"{self.beta.numerator}/{self.beta.denominator}"
        if self.beta_seq is not None:
            d["beta_seq"] = [f"{b.numerator}/{b.denominator}" for b in map(Fraction, self.beta_seq)]
        if self.k_schedule is not None:
            d["k_schedule"] = list(self.k_schedule)
        if self.k is not None:
            d["k"] = self.k
        return d


def make_construction(kind, beta=None, beta_seq=None, k_schedule=None, k=None):
    if kind not in KINDS:
        raise InvalidParam(f"unknown construction {kind!r}")
    if kind == "GBeta":
        beta = Fraction(beta if beta is not None else Fraction(1, 2))
        if not (0 < beta < 1):
            raise InvalidParam("GBeta needs beta in (0, 1)")
        if beta_seq is not None:
            bs = [Fraction(b) for b in beta_seq]
            if any(not (beta < b < 1) for b in bs) or any(x <= y for x, y in zip(bs, bs[1:])):
                raise InvalidParam("beta_seq must decrease strictly inside (beta, 1)")
            beta_seq = tuple(bs)
    if kind == "G1Sing" and k_schedule is not None:
        if any(int(v) < 2 for v in k_schedule):
            raise InvalidParam("k_schedule entries must be >= 2")
        k_schedule = tuple(int(v) for v in k_schedule)
    if kind == "Gk":
        k = int(k if k is not None else 1)
        if k < 1:
            raise InvalidParam("Gk needs k >= 1")
    return Construction(kind, beta, beta_seq, k_schedule, k)


def construction_from_json(d):
    return make_construction(d["kind"], d.get("beta"), d.get("beta_seq"), d.get("k_schedule"), d.get("k"))


@dataclass
class Config:
    max_q_log10: int = 12
    max_precision: int = 4096
    candidate_cap: int = 8
    holder_d: Fraction = None  # None: d_n = 1 - 2^-n
    extensions: int = 3

    def to_json(self):
        d = {"max_q_log10": self.max_q_log10, "max_precision": self.max_precision,
             "candidate_cap": self.candidate_cap, "extensions": self.extensions}
        if self.holder_d is not None:
            d["holder_d"] = f"{self.holder_d.numerator}/{self.holder_d.denominator}"
        return d


def config_from_json(d):
    d = dict(d or {})
    hd = d.get("holder_d")
    return Config(
        int(d.get("max_q_log10", 12)), int(d.get("max_precision", 4096)),
        int(d.get("candidate_cap", 8)), Fraction(hd) if hd is not None else None,
        int(d.get("extensions", 3)),
    )


# --------------------------------------------------------------- state ---
@dataclass(frozen=True)
class StepBoundCheck:
    name: str
    lhs: object
    rhs: object
    passed: bool

    @classmethod
    def le(cls, name, lhs, rhs):
        return cls(name, lhs, rhs, bool(lhs <= rhs))

    @classmethod
    def lt(cls, name, lhs, rhs):
        return cls(name, lhs, rhs, bool(lhs < rhs))


@dataclass
class Link:
    """h_n: the family, its cover and the truncation data it came from."""

    n: int
    family: object
    cover: int
    q_log10: int


@dataclass
class ConstructionState:
    construction: Construction
    r: int
    alpha: object
    config: Config
    truncs: list = field(default_factory=list)  # alpha_1 .. alpha_{n+1}
    links: list = field(default_factory=list)   # h_1 .. h_n
    logs: list = field(default_factory=list)
    pending: tuple = None  # (link, A, P) for h_{n+1}; A is None if not yet certified

    @property
    def n(self):
        return len(self.links)

    @property
    def method(self):
        return self.construction.method

    @property
    def alpha_seq(self):
        return [t for t in self.truncs]

    def pairs(self, upto=None):
        ls = self.links if upto is None else self.links[:upto]
        return [(l.family, l.cover) for l in ls]

    def H(self, upto=None):
        ls = self.links if upto is None else self.links[:upto]
        return CircleMap(tuple(FamilyLift(l.family, l.cover) for l in ls))

    def f(self, n=None):
        """f_n = H_n R_{alpha_{n+1}} H_n^-1 (default: the current n)."""
        n = self.n if n is None else n
        return conjugate(self.H(n), self.truncs[n])

    @property
    def f_cur(self):
        return self.f()

    @property
    def f_prev(self):
        return self.f(self.n - 1) if self.n >= 1 else None

    @property
    def H_chain(self):
        return self.H()


# ------------------------------------------------------------- families ---
def _pow10_int(a):
    return 10 ** a


def build_link(cons, n, trunc, prev_links):
    """h_n from alpha_n = trunc; raises InvalidParam when the family is invalid."""
    a = trunc.a_k
    q = _pow10_int(a)
    if cons.kind == "G1Sing":
        fam = G1Sing(n, cons.k_n(n))
        cover = q
        for l in prev_links:
            cover *= l.family.k * _pow10_int(l.q_log10)
        return Link(n, fam, cover, a)
    if cons.kind == "G1Ac":
        return Link(n, G1Ac(n), q, a)
    if cons.kind == "GBeta":
        bn = cons.beta_n(n)
        t = Pow10(a * (1 - 1 / bn))
        return Link(n, GBeta(t), q, a)
    if cons.kind == "G0Ac":
        s, t = g0ac_params(n, q)
        return Link(n, G0Ac(s, t), q, a)
    if cons.kind == "Gk":
        return Link(n, Gk(Pow10(-a), cons.k), q, a)
    raise InvalidParam(cons.kind)


def _lipschitz(family):
    return bounds.hat_sups(family, 2).lipschitz


# ---------------------------------------------------------- candidates ---
def _threshold(n, r):
    return Fraction(1, 2 ** (n + r + 1))


def _delta(truncs_prev, t_next):
    """alpha_{n+1} - alpha_n for nested truncations (exact as a sum of powers)."""
    return mpmath.fsum(mpf(10) ** (-e) for e in t_next.exps[truncs_prev.k: t_next.k])


def _q_min_log10(state, n):
    """GBeta: sum_{i>n} q_i^-1 <= t_n/(3 q_n) via q_{n+1} >= 6 q_n / t_n."""
    if state.construction.kind != "GBeta" or n == 0:
        return None
    l = state.links[n - 1]
    return math.log10(6) + l.q_log10 - float(l.family.t.exponent)


def _construction_checks(state, n, link_next):
    """Checks on candidate alpha_{n+1}; ``link_next`` is the h_{n+1} it induces."""
    cons = state.construction
    out = []
    if cons.kind == "G1Sing":
        out += _g1sing_checks(state, n, link_next)
    elif cons.kind == "GBeta" and n >= 1:
        beta = cons.beta
        s = sum((-l.family.t.exponent for l in state.links), Fraction(0))
        e = s + (-1 + beta / cons.beta_n(n + 1)) * link_next.q_log10
        out.append(StepBoundCheck.le("beta exponent", e, Fraction(0)))
    elif cons.kind in ("G1Ac", "G0Ac") and n >= 1:
        out += _nesting_checks(state, n, link_next)
    return out


def _g1sing_checks(state, n, link_next):
    cons = state.construction
    d = state.config.holder_d if state.config.holder_d is not None else 1 - Fraction(1, 2 ** (n + 1))
    lips = [_lipschitz(G1Sing(i, cons.k_n(i))) for i in range(1, n + 3)]
    M = lambda j: math.prod(lips[:j]) if j > 0 else mpf(1)  # noqa: E731
    logQ1 = log10_int(link_next.cover)
    logQ0 = log10_int(state.links[-1].cover) if state.links else mpf(0)
    lhs2 = mpmath.log10(M(n + 2)) + (as_mpf(d) - 1) * logQ1
    out = [StepBoundCheck.le("holder margin", lhs2, mpf(0))]
    out.append(StepBoundCheck.le("cover vs Lipschitz", -logQ1, -(mpmath.log10(8 * M(n)) + logQ0)))
    out.append(StepBoundCheck.le("cover doubling", -logQ1, -(mpmath.log10(2) + logQ0)))
    return out


def nested_component(links):
    """A component of K_1 n ... n K_{m} found lattice cell by cell (exact)."""
    lo, hi = Fraction(0), Fraction(1)
    for l in links:
        K = special_sets(l.family, l.cover, "K")
        j = math.ceil(lo * K.q - K.lo)
        clo, chi = K.component(j)
        if not (lo <= clo and chi <= hi):
            return None
        lo, hi = clo, chi
    return lo, hi


def _nesting_checks(state, n, link_next):
    """Fast-growth conditions: a component of I_{n+1} sits inside K_1...K_n,
    and K_n components span at least two cells of the next lattice."""
    out = []
    last = state.links[-1]
    K = special_sets(last.family, last.cover, "K")
    comp = Fraction(K.hi - K.lo) / K.q
    out.append(StepBoundCheck.le("nesting: K_n cell span", Fraction(2, 1) / link_next.cover, comp))
    box = nested_component(state.links)
    ok = False
    if box is not None:
        I = special_sets(link_next.family, link_next.cover, "I")
        j = math.ceil(box[0] * I.q - I.lo)
        ilo, ihi = I.component(j)
        ok = box[0] <= ilo and ihi <= box[1]
    out.append(StepBoundCheck("nesting: I_{n+1} inside X_n", int(ok), 1, ok))
    return out


def alpha_1_ok(trunc, r):
    """|alpha - alpha_1| < 2*10^(-a_{k+1}) < 2^(-r-1), decided on integers."""
    return 2 ** (r + 2) < 10 ** min(trunc.a_next, r + 2)


def _choose_next(state, n, lookahead=True):
    """Pick alpha_{n+1} (n = 0 picks alpha_1); returns (trunc, link, A, P, checks, tries).

    With ``lookahead`` the candidate must also certify the contract of step
    n+1 for every later truncation; without it (the last step of a run) A
    and P are returned as None.
    """
    cfg, cons, r = state.config, state.construction, state.r
    kmin = state.truncs[-1].k + 1 if state.truncs else 1
    qmin = _q_min_log10(state, n)
    tries = 0
    rejected = []
    k = kmin
    ext = 0
    while True:
        try:
            t = state.alpha.truncation(k)
        except ScheduleExhausted:
            if ext >= cfg.extensions:
                raise
            try:
                state.alpha = state.alpha.extend()
            except InvalidSchedule as exc:
                raise ScheduleExhausted(str(exc)) from exc
            ext += 1
            continue
        k += 1
        if qmin is not None and t.a_k < qmin:
            continue
        if t.a_k > cfg.max_q_log10:
            raise PrecisionExhausted(f"candidate q = 10^{t.a_k} exceeds the budget 10^{cfg.max_q_log10}")
        tries += 1
        if tries > cfg.candidate_cap:
            raise CandidateLimit(f"no candidate passed within {cfg.candidate_cap} tries at step {n}")
        checks = []
        if n == 0:
            checks.append(StepBoundCheck("|alpha - alpha_1|", 2 * mpf(10) ** (-t.a_next),
                                         as_mpf(_threshold(0, r)), alpha_1_ok(t, r)))
        try:
            link = build_link(cons, n + 1, t, state.links)
        except InvalidParam as exc:
            rejected.append({"k": t.k, "failed": ["family valid"]})
            continue
        checks += _construction_checks(state, n, link)
        if not all(c.passed for c in checks):
            rejected.append({"k": t.k, "failed": [c.name for c in checks if not c.passed]})
            continue
        if not lookahead:
            return t, link, None, None, checks, (tries, rejected)
        m = n + 1 + r
        A, P, _ = bounds.step_bound(state.pairs(), link.family, link.cover, m)
        dmax = 2 * mpf(10) ** (-t.a_next)
        look = bounds.bound_from(dmax, A, P)
        checks.append(StepBoundCheck.lt("look-ahead d_{n+r}", look, as_mpf(_threshold(n + 1, r))))
        if checks[-1].passed:
            return t, link, A, P, checks, (tries, rejected)
        rejected.append({"k": t.k, "failed": [checks[-1].name]})


# ------------------------------------------------------------ operations ---
def init(construction, r, alpha, config=None):
    if r < 1:
        raise InvalidParam("r must be >= 1")
    cfg = config or Config()
    state = ConstructionState(construction, int(r), alpha, cfg)
    t, link, A, P, checks, tries = _choose_next(state, 0)
    state.truncs.append(t)
    state.pending = (link, A, P)
    state.logs.append(_log_init(state, t, checks, tries))
    return state


def step(state, lookahead=True):
    n = state.n + 1
    link, A, P = state.pending
    if A is None:
        A, P, _ = bounds.step_bound(state.pairs(), link.family, link.cover, n + state.r)
    state.links.append(link)
    t_next, link_next, A2, P2, checks, tries = _choose_next(state, n, lookahead)
    delta = _delta(state.truncs[-1], t_next)
    bound = bounds.bound_from(delta, A, P)
    thr = _threshold(n, state.r)
    contract = StepBoundCheck.lt("d_{n+r}(f_{n-1}, f_n)", bound, as_mpf(thr))
    state.truncs.append(t_next)
    state.pending = (link_next, A2, P2)
    state.logs.append(_log_step(state, n, link, t_next, delta, bound, thr, [contract] + checks, tries))
    if not contract.passed:
        raise CandidateLimit(f"step {n} contract failed: {mpmath.nstr(bound, 5)}")
    return state


def run(construction, r, alpha, steps, config=None):
    if steps < 0:
        raise InvalidParam("steps must be >= 0")
    state = init(construction, r, alpha, config)
    for i in range(steps):
        step(state, lookahead=i < steps - 1)
    return state


def rebuild(construction, r, alpha, indices, config=None):
    """Reconstruct a state from archived truncation indices without re-verifying."""
    state = ConstructionState(construction, int(r), alpha, config or Config())
    for k in indices:
        while k + 1 > len(state.alpha.a):
            state.alpha = state.alpha.extend()
        state.truncs.append(state.alpha.truncation(k))
    for n in range(1, len(indices)):
        state.links.append(build_link(construction, n, state.truncs[n - 1], state.links))
    return state


def total_bound(state):
    """Upper bound for d_r(f_n, R_alpha): |alpha - alpha_1| + sum of step bounds + tail."""
    t1 = state.truncs[0]
    s = 2 * mpf(10) ** (-t1.a_next)
    for lg in state.logs[1:]:
        s += lg["bound"]
    n = state.n
    return s + mpf(2) ** (-(n + state.r + 1))


def cauchy_bound(link):
    """sup |H_n^-1 - H_{n-1}^-1| = sup |h_n^-1 - Id| <= 1/q_n."""
    return mpf(10) ** (-link.q_log10)


# ---------------------------------------------------------------- logs ---
def _compact(v):
    if isinstance(v, Fraction):
        if v.numerator.bit_length() < 600 and v.denominator.bit_length() < 600:
            return f"{v.numerator}/{v.denominator}"
        return {"log10": mpmath.nstr(log10_of(v), 20)}
    if isinstance(v, Pow10):
        return {"pow10": str(v.exponent)}
    if isinstance(v, int):
        return v if v.bit_length() < 600 else {"log10": mpmath.nstr(log10_int(v), 20)}
    return v


def family_params(family):
    return {k: _compact(v) for k, v in family.params.items()}


def _log_init(state, t, checks, tries):
    return {
        "step": 0, "alpha_next": t.to_json(), "k_next": t.k, "checks": checks,
        "candidates_tried": tries[0], "rejected": tries[1], "method": state.method,
    }


def _log_step(state, n, link, t_next, delta, bound, thr, checks, tries):
    return {
        "step": n,
        "q_log10": link.q_log10,
        "cover_log10": mpmath.nstr(log10_int(link.cover), 20),
        "family": link.family.kind,
        "params": family_params(link.family),
        "alpha_next": t_next.to_json(),
        "k_next": t_next.k,
        "delta": delta,
        "bound": bound,
        "threshold": thr,
        "passed": bool(bound < as_mpf(thr)),
        "lipschitz": _lipschitz(link.family),
        "cauchy": cauchy_bound(link),
        "checks": checks,
        "candidates_tried": tries[0],
        "rejected": tries[1],
        "method": state.method,
    }


__all__ = [
    "Construction", "Config", "ConstructionState", "StepBoundCheck", "Link", "make_construction",
    "construction_from_json", "config_from_json", "init", "step", "run", "rebuild",
    "total_bound", "cauchy_bound", "build_link", "nested_component", "alpha_1_ok",
]
